#include "mmt/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mmt {

namespace {

std::uint32_t read_u32_le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16_le(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void append_u16_le(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void append_u32_le(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void write_binary_atomic(const std::string& path, const std::string& bytes) {
    const std::filesystem::path target(path);
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    const std::filesystem::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            out.close();
            std::filesystem::remove(tmp);
            throw ConfigError("write failed for '" + tmp.string() + "'");
        }
    }
    std::filesystem::rename(tmp, target);
}

}  // namespace

AudioInput load_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("wav: cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 44 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0) {
        throw DataError("wav: '" + path + "' is not a RIFF/WAVE file");
    }
    std::size_t pos = 12;
    AudioInput input;
    bool have_fmt = false;
    std::uint16_t channels = 0, bits = 0;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t chunk_size = read_u32_le(p + pos + 4);
        const bool is_fmt = std::memcmp(p + pos, "fmt ", 4) == 0;
        const bool is_data = std::memcmp(p + pos, "data", 4) == 0;
        const std::size_t body = pos + 8;
        if (body + chunk_size > bytes.size()) throw DataError("wav: truncated chunk in '" + path + "'");
        if (is_fmt) {
            if (chunk_size < 16) throw DataError("wav: malformed fmt chunk");
            const std::uint16_t format = read_u16_le(p + body);
            channels = read_u16_le(p + body + 2);
            input.sample_rate = read_u32_le(p + body + 4);
            bits = read_u16_le(p + body + 14);
            if (format != 1) throw DataError("wav: only PCM (format 1) is supported");
            if (channels != 1) throw DataError("wav: only mono files are supported");
            if (bits != 16) throw DataError("wav: only 16-bit samples are supported");
            have_fmt = true;
        } else if (is_data) {
            if (!have_fmt) throw DataError("wav: data chunk before fmt chunk");
            const std::size_t count = chunk_size / 2;
            input.samples.resize(count);
            for (std::size_t i = 0; i < count; ++i) {
                const auto raw = static_cast<std::int16_t>(read_u16_le(p + body + 2 * i));
                input.samples[i] = static_cast<double>(raw) / 32768.0;
            }
            return input;
        }
        pos = body + chunk_size + (chunk_size & 1);
    }
    throw DataError("wav: no data chunk in '" + path + "'");
}

void save_wav(const std::string& path, const AudioInput& input) {
    std::string pcm;
    pcm.reserve(input.samples.size() * 2);
    for (double v : input.samples) {
        const double clamped = std::max(-1.0, std::min(1.0, v));
        const auto raw = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
        append_u16_le(pcm, static_cast<std::uint16_t>(raw));
    }
    const auto rate = static_cast<std::uint32_t>(input.sample_rate);
    std::string out;
    out += "RIFF";
    append_u32_le(out, static_cast<std::uint32_t>(36 + pcm.size()));
    out += "WAVEfmt ";
    append_u32_le(out, 16);
    append_u16_le(out, 1);   // PCM
    append_u16_le(out, 1);   // mono
    append_u32_le(out, rate);
    append_u32_le(out, rate * 2);  // byte rate
    append_u16_le(out, 2);   // block align
    append_u16_le(out, 16);  // bits
    out += "data";
    append_u32_le(out, static_cast<std::uint32_t>(pcm.size()));
    out += pcm;
    write_binary_atomic(path, out);
}

Tensor load_xyz(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("xyz: cannot open '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::vector<double> row;
        double v;
        while (ls >> v) row.push_back(v);
        if (row.empty()) continue;
        if (row.size() < 3) {
            throw DataError("xyz: line " + std::to_string(line_no) + " has fewer than 3 values");
        }
        if (width == 0) width = row.size();
        if (row.size() != width) {
            throw DataError("xyz: line " + std::to_string(line_no) + " has " +
                            std::to_string(row.size()) + " values, expected " +
                            std::to_string(width));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("xyz: no points in '" + path + "'");
    Tensor points({rows.size(), width});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(rows[i].begin(), rows[i].end(), &points.data[i * width]);
    }
    return points;
}

void save_xyz(const std::string& path, const Tensor& points) {
    std::ostringstream out;
    const std::size_t w = points.cols();
    for (std::size_t i = 0; i < points.rows(); ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            if (j) out << ' ';
            out << format_double(points.data[i * w + j]);
        }
        out << '\n';
    }
    write_text_file_atomic(path, out.str());
}

Tensor load_tensor_blob(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("tensor blob: cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "MTTB", 4) != 0) {
        throw DataError("tensor blob: '" + path + "' has no MTTB magic");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    std::size_t pos = 4;
    auto next_u64 = [&]() {
        if (pos + 8 > bytes.size()) throw DataError("tensor blob: truncated '" + path + "'");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[pos + i]) << (8 * i);
        pos += 8;
        return v;
    };
    const std::uint64_t rank = next_u64();
    if (rank == 0 || rank > 8) throw DataError("tensor blob: bad rank");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = next_u64();
    const std::size_t count = shape_product(shape);
    if (pos + count * 8 != bytes.size()) throw DataError("tensor blob: size mismatch");
    std::vector<double> values(count);
    for (auto& v : values) {
        const std::uint64_t bits = next_u64();
        std::memcpy(&v, &bits, sizeof(v));
    }
    return Tensor(shape, std::move(values));
}

void save_tensor_blob(const std::string& path, const Tensor& tensor) {
    std::string out = "MTTB";
    append_u64_le(out, tensor.rank());
    for (std::size_t d : tensor.shape) append_u64_le(out, d);
    for (double v : tensor.data) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        append_u64_le(out, bits);
    }
    write_binary_atomic(path, out);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_text_file_atomic(const std::string& path, const std::string& content) {
    write_binary_atomic(path, content);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string metrics_csv(const std::vector<StepMetric>& history) {
    std::ostringstream out;
    out << "step,loss,accuracy\n";
    for (const StepMetric& m : history) {
        out << m.step << ',' << format_double(m.loss) << ',' << format_double(m.accuracy) << '\n';
    }
    return out.str();
}

void write_metrics_csv(const std::string& path, const std::vector<StepMetric>& history) {
    write_text_file_atomic(path, metrics_csv(history));
}

}  // namespace mmt
