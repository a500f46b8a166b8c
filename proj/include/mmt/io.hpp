#pragma once

#include <string>
#include <vector>

#include "mmt/audio.hpp"
#include "mmt/heads.hpp"
#include "mmt/tensor.hpp"

namespace mmt {

// 16-bit PCM mono WAV.
AudioInput load_wav(const std::string& path);
void save_wav(const std::string& path, const AudioInput& input);

// ASCII point clouds: one "x y z [features...]" per line; '#' comments.
Tensor load_xyz(const std::string& path);
void save_xyz(const std::string& path, const Tensor& points);

// Raw tensor blob: magic "MTTB", u64 rank, u64 dims, f64 little-endian data.
Tensor load_tensor_blob(const std::string& path);
void save_tensor_blob(const std::string& path, const Tensor& tensor);

// Whole-file text helpers; writes go through temp + atomic rename.
std::string read_text_file(const std::string& path);
void write_text_file_atomic(const std::string& path, const std::string& content);

// Metrics CSV with the fixed "step,loss,accuracy" header. Numbers are
// printed with %.17g so identical runs produce identical bytes.
std::string metrics_csv(const std::vector<StepMetric>& history);
void write_metrics_csv(const std::string& path, const std::vector<StepMetric>& history);

std::string format_double(double v);

}  // namespace mmt
