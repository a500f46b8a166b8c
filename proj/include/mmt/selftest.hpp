#pragma once

#include <ostream>

namespace mmt {

// Built-in verification: gradient checks against central finite
// differences, FPS/KNN brute-force oracles, tokenizer shape laws, the
// freeze invariant, and a negative control proving the gradient checker
// can fail. Prints one line per suite; returns 0 when everything passes.
int run_selftest(std::ostream& out);

}  // namespace mmt
