#include "mmt/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <unordered_map>

namespace mmt {

namespace {

constexpr char kMagic[4] = {'M', 'T', 'F', 'C'};

class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        u64(bits);
    }
    void f32(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        u32(bits);
    }
    void str(const std::string& s) {
        u64(s.size());
        buf_.append(s);
    }
    const std::string& bytes() const { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    explicit Reader(std::string bytes) : buf_(std::move(bytes)) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf_[pos_++]);
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_++])) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_++])) << (8 * i);
        return v;
    }
    double f64() {
        const std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }
    std::string str() {
        const std::uint64_t len = u64();
        need(len);
        std::string s = buf_.substr(pos_, len);
        pos_ += len;
        return s;
    }
    bool done() const { return pos_ == buf_.size(); }

private:
    void need(std::uint64_t n) {
        if (pos_ + n > buf_.size()) throw ConfigError("checkpoint: truncated file");
    }
    std::string buf_;
    std::size_t pos_ = 0;
};

void write_values(Writer& w, const std::vector<double>& values, std::uint8_t precision) {
    if (precision == 64) {
        for (double v : values) w.f64(v);
    } else {
        for (double v : values) w.f32(static_cast<float>(v));
    }
}

std::vector<double> read_values(Reader& r, std::size_t count, std::uint8_t precision) {
    std::vector<double> out(count);
    if (precision == 64) {
        for (double& v : out) v = r.f64();
    } else {
        for (double& v : out) v = static_cast<double>(r.f32());
    }
    return out;
}

void write_shape(Writer& w, const std::vector<std::size_t>& shape) {
    w.u64(shape.size());
    for (std::size_t d : shape) w.u64(d);
}

std::vector<std::size_t> read_shape(Reader& r) {
    const std::uint64_t rank = r.u64();
    if (rank > 8) throw ConfigError("checkpoint: implausible tensor rank");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = r.u64();
    return shape;
}

}  // namespace

CheckpointData snapshot_checkpoint(const EncoderConfig& cfg,
                                   const std::vector<const Parameter*>& params, const Rng* rng,
                                   const AdamOptimizer* optimizer, std::uint8_t precision) {
    if (precision != 32 && precision != 64) {
        throw ConfigError("checkpoint: precision must be 32 or 64");
    }
    CheckpointData data;
    data.precision = precision;
    data.encoder = cfg;
    if (rng) {
        data.seed = rng->seed();
        data.rng_state = rng->serialize_state();
    }
    for (const Parameter* p : params) {
        data.tensors.push_back({p->name, p->value.shape, p->value.data, p->trainable});
    }
    if (optimizer) {
        data.has_optimizer = true;
        data.optimizer_step = optimizer->step_count();
        for (const auto& [name, moments] : optimizer->moments_by_name()) {
            data.moments.push_back({name, moments->m.shape, moments->m.data, moments->v.data});
        }
        std::sort(data.moments.begin(), data.moments.end(),
                  [](const MomentEntry& a, const MomentEntry& b) { return a.name < b.name; });
    }
    return data;
}

CheckpointData snapshot_checkpoint(const EncoderConfig& cfg,
                                   const std::vector<Parameter*>& params, const Rng* rng,
                                   const AdamOptimizer* optimizer, std::uint8_t precision) {
    const std::vector<const Parameter*> view(params.begin(), params.end());
    return snapshot_checkpoint(cfg, view, rng, optimizer, precision);
}

void save_checkpoint(const std::string& path, const CheckpointData& data) {
    if (data.precision != 32 && data.precision != 64) {
        throw ConfigError("checkpoint: precision must be 32 or 64");
    }
    Writer w;
    w.u32(data.version);
    w.u8(data.precision);
    w.u64(data.encoder.depth);
    w.u64(data.encoder.heads);
    w.u64(data.encoder.dim);
    w.u64(data.encoder.mlp_dim);
    w.u64(data.encoder.n_max);
    w.u64(data.seed);
    w.str(data.rng_state);
    w.u64(data.tensors.size());
    for (const auto& t : data.tensors) {
        w.str(t.name);
        write_shape(w, t.shape);
        w.u8(t.trainable ? 1 : 0);
        if (shape_product(t.shape) != t.values.size()) {
            throw ShapeError("checkpoint: tensor '" + t.name + "' shape does not match values");
        }
        write_values(w, t.values, data.precision);
    }
    w.u8(data.has_optimizer ? 1 : 0);
    if (data.has_optimizer) {
        w.u64(data.optimizer_step);
        w.u64(data.moments.size());
        for (const auto& m : data.moments) {
            w.str(m.name);
            write_shape(w, m.shape);
            write_values(w, m.m, data.precision);
            write_values(w, m.v, data.precision);
        }
    }

    const std::filesystem::path target(path);
    if (target.has_parent_path()) {
        std::filesystem::create_directories(target.parent_path());
    }
    const std::filesystem::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("checkpoint: cannot write '" + tmp.string() + "'");
        out.write(kMagic, 4);
        out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
        if (!out) {
            out.close();
            std::filesystem::remove(tmp);
            throw ConfigError("checkpoint: write failed for '" + tmp.string() + "'");
        }
    }
    std::filesystem::rename(tmp, target);
}

CheckpointData load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("checkpoint: cannot open '" + path + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw ConfigError("checkpoint: '" + path + "' is not an MTFC checkpoint (bad magic)");
    }
    Reader r(bytes.substr(4));
    CheckpointData data;
    data.version = r.u32();
    if (data.version != 1) {
        throw ConfigError("checkpoint: unsupported version " + std::to_string(data.version));
    }
    data.precision = r.u8();
    if (data.precision != 32 && data.precision != 64) {
        throw ConfigError("checkpoint: bad precision flag " + std::to_string(data.precision));
    }
    data.encoder.depth = r.u64();
    data.encoder.heads = r.u64();
    data.encoder.dim = r.u64();
    data.encoder.mlp_dim = r.u64();
    data.encoder.n_max = r.u64();
    data.seed = r.u64();
    data.rng_state = r.str();
    const std::uint64_t tensor_count = r.u64();
    for (std::uint64_t i = 0; i < tensor_count; ++i) {
        NamedTensorEntry t;
        t.name = r.str();
        t.shape = read_shape(r);
        t.trainable = r.u8() != 0;
        t.values = read_values(r, shape_product(t.shape), data.precision);
        data.tensors.push_back(std::move(t));
    }
    data.has_optimizer = r.u8() != 0;
    if (data.has_optimizer) {
        data.optimizer_step = r.u64();
        const std::uint64_t moment_count = r.u64();
        for (std::uint64_t i = 0; i < moment_count; ++i) {
            MomentEntry m;
            m.name = r.str();
            m.shape = read_shape(r);
            const std::size_t n = shape_product(m.shape);
            m.m = read_values(r, n, data.precision);
            m.v = read_values(r, n, data.precision);
            data.moments.push_back(std::move(m));
        }
    }
    if (!r.done()) throw ConfigError("checkpoint: trailing bytes in '" + path + "'");
    return data;
}

void restore_parameters(const CheckpointData& data, std::vector<Parameter*> params) {
    std::unordered_map<std::string, Parameter*> by_name;
    for (Parameter* p : params) by_name.emplace(p->name, p);
    for (const auto& t : data.tensors) {
        auto it = by_name.find(t.name);
        if (it == by_name.end()) {
            throw ConfigError("checkpoint: stored tensor '" + t.name +
                              "' has no matching parameter in this configuration");
        }
        Parameter* p = it->second;
        if (p->value.shape != t.shape) {
            throw ConfigError("checkpoint: tensor '" + t.name + "' has shape " +
                              shape_to_string(t.shape) + " but the configuration expects " +
                              p->value.shape_string());
        }
        p->value.data = t.values;
        p->value.drop_grad();
        p->trainable = t.trainable;
    }
}

void restore_optimizer(const CheckpointData& data, AdamOptimizer& optimizer) {
    if (!data.has_optimizer) return;
    std::unordered_map<std::string, AdamOptimizer::Moments> moments;
    for (const auto& m : data.moments) {
        AdamOptimizer::Moments entry;
        entry.m = Tensor(m.shape, m.m);
        entry.v = Tensor(m.shape, m.v);
        moments.emplace(m.name, std::move(entry));
    }
    optimizer.restore(data.optimizer_step, moments);
}

}  // namespace mmt
