#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmt/params.hpp"

namespace mmt {

std::string sha256_hex(const void* bytes, std::size_t length);
std::string sha256_hex(const std::string& bytes);

// Canonical digest over parameter values: entries sorted by name, each
// serialized as name, shape, and little-endian f64 payload. Storage
// precision of a checkpoint does not enter the digest; only the in-memory
// values do.
std::string digest_params(const std::vector<const Parameter*>& params);
std::string digest_params(const std::vector<Parameter*>& params);

// Digest restricted to names with the given prefix (e.g. "encoder.").
std::string digest_params_prefix(const std::vector<const Parameter*>& params,
                                 const std::string& prefix);
std::string digest_params_prefix(const std::vector<Parameter*>& params,
                                 const std::string& prefix);

}  // namespace mmt
