#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmt/encoder.hpp"
#include "mmt/optim.hpp"
#include "mmt/params.hpp"
#include "mmt/rng.hpp"

namespace mmt {

// Bespoke binary container, magic "MTFC", version 1, little-endian
// throughout. Tensor payloads are f64 or f32 per the precision flag;
// save -> load -> save is byte-identical either way.

struct NamedTensorEntry {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> values;
    bool trainable = true;
};

struct MomentEntry {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> m;
    std::vector<double> v;
};

struct CheckpointData {
    std::uint32_t version = 1;
    std::uint8_t precision = 64;  // bits per stored value
    EncoderConfig encoder;
    std::uint64_t seed = 0;
    std::string rng_state;
    std::vector<NamedTensorEntry> tensors;
    bool has_optimizer = false;
    std::uint64_t optimizer_step = 0;
    std::vector<MomentEntry> moments;
};

CheckpointData snapshot_checkpoint(const EncoderConfig& cfg,
                                   const std::vector<const Parameter*>& params, const Rng* rng,
                                   const AdamOptimizer* optimizer, std::uint8_t precision = 64);
CheckpointData snapshot_checkpoint(const EncoderConfig& cfg,
                                   const std::vector<Parameter*>& params, const Rng* rng,
                                   const AdamOptimizer* optimizer, std::uint8_t precision = 64);

// Writes via temp file + atomic rename; a failed save leaves no partial file.
void save_checkpoint(const std::string& path, const CheckpointData& data);
CheckpointData load_checkpoint(const std::string& path);

// Copies stored values (and trainable flags) into matching parameters.
// Every stored tensor must exist with the same shape; missing parameters
// are reported by name.
void restore_parameters(const CheckpointData& data, std::vector<Parameter*> params);

// Restore into an existing optimizer (parameters must be wired already).
void restore_optimizer(const CheckpointData& data, AdamOptimizer& optimizer);

}  // namespace mmt
