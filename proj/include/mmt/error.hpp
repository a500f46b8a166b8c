#pragma once

#include <stdexcept>
#include <string>

namespace mmt {

// Process exit codes used by the CLI: 0 success, 1 usage/config,
// 2 bad data, 3 invariant failure.
struct Error : std::runtime_error {
    int exit_code;
    Error(std::string msg, int code) : std::runtime_error(std::move(msg)), exit_code(code) {}
};

// Invalid configuration, flags, or file formats chosen by the user.
struct ConfigError : Error {
    explicit ConfigError(std::string msg) : Error(std::move(msg), 1) {}
};

// Malformed or out-of-contract input data (labels, waveforms, text, ...).
struct DataError : Error {
    explicit DataError(std::string msg) : Error(std::move(msg), 2) {}
};

// A character or string the vocabulary cannot segment.
struct TokenizeError : DataError {
    explicit TokenizeError(std::string msg) : DataError(std::move(msg)) {}
};

// Shape or dimension mismatch between tensors.
struct ShapeError : Error {
    explicit ShapeError(std::string msg) : Error(std::move(msg), 3) {}
};

// Token sequence exceeds the configured maximum length.
struct SequenceLengthError : ShapeError {
    explicit SequenceLengthError(std::string msg) : ShapeError(std::move(msg)) {}
};

// Out-of-range argument to an operation (FPS count, KNN k, ...).
struct ArgumentError : Error {
    explicit ArgumentError(std::string msg) : Error(std::move(msg), 3) {}
};

// Broken training-loop contract (e.g. missing gradient on a trainable parameter).
struct TrainingError : Error {
    explicit TrainingError(std::string msg) : Error(std::move(msg), 3) {}
};

// A self-check or internal invariant failed.
struct InvariantError : Error {
    explicit InvariantError(std::string msg) : Error(std::move(msg), 3) {}
};

}  // namespace mmt
