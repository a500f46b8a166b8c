#include "mmt/tokens.hpp"

#include <algorithm>

namespace mmt {

const char* to_string(Modality m) {
    switch (m) {
        case Modality::text: return "text";
        case Modality::image: return "image";
        case Modality::point_cloud: return "point_cloud";
        case Modality::audio: return "audio";
        case Modality::video: return "video";
        case Modality::infrared: return "infrared";
        case Modality::xray: return "xray";
        case Modality::hyperspectral: return "hyperspectral";
        case Modality::fused: return "fused";
    }
    return "unknown";
}

Modality modality_from_string(const std::string& name) {
    static const std::pair<const char*, Modality> table[] = {
        {"text", Modality::text},
        {"image", Modality::image},
        {"point_cloud", Modality::point_cloud},
        {"audio", Modality::audio},
        {"video", Modality::video},
        {"infrared", Modality::infrared},
        {"xray", Modality::xray},
        {"hyperspectral", Modality::hyperspectral},
        {"fused", Modality::fused},
    };
    for (const auto& [key, value] : table) {
        if (name == key) return value;
    }
    throw ConfigError("unknown modality '" + name + "'");
}

void TokenSequence::validate() const {
    if (embeddings.rank() != 2 || embeddings.rows() < 1) {
        throw ShapeError("token sequence must be a non-empty n x D matrix, got " +
                         embeddings.shape_string());
    }
    if (!embeddings.all_finite()) {
        throw InvariantError("token sequence contains non-finite embeddings");
    }
}

TokenSequence concat_sequences(const TokenSequence& a, const TokenSequence& b) {
    a.validate();
    b.validate();
    if (a.dim() != b.dim()) {
        throw ShapeError("concat_sequences: embedding dims differ, " +
                         a.embeddings.shape_string() + " vs " + b.embeddings.shape_string());
    }
    TokenSequence out;
    out.embeddings = vstack(a.embeddings, b.embeddings);
    out.modality = Modality::fused;
    return out;
}

Tensor add_position_embeddings(const TokenSequence& seq, const Parameter& pos,
                               const Parameter& cls) {
    seq.validate();
    const std::size_t n = seq.count();
    const std::size_t d = seq.dim();
    if (cls.value.rows() != 1 || cls.value.cols() != d) {
        throw ShapeError("add_position_embeddings: cls shape " + cls.value.shape_string());
    }
    if (pos.value.cols() != d) {
        throw ShapeError("add_position_embeddings: pos width " + pos.value.shape_string() +
                         " vs token dim " + std::to_string(d));
    }
    if (n + 1 > pos.value.rows()) {
        throw SequenceLengthError("sequence of " + std::to_string(n) +
                                  " tokens exceeds n_max = " +
                                  std::to_string(pos.value.rows() - 1));
    }
    Tensor z0({n + 1, d});
    for (std::size_t j = 0; j < d; ++j) {
        z0.data[j] = cls.value.data[j] + pos.value.data[j];
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double* tok = &seq.embeddings.data[i * d];
        const double* p = &pos.value.data[(i + 1) * d];
        double* out = &z0.data[(i + 1) * d];
        for (std::size_t j = 0; j < d; ++j) out[j] = tok[j] + p[j];
    }
    return z0;
}

void add_position_embeddings_backward(const Tensor& d_z0, Parameter& pos, Parameter& cls,
                                      Tensor& d_tokens) {
    const std::size_t rows = d_z0.rows();
    const std::size_t d = d_z0.cols();
    const std::size_t n = rows - 1;
    if (d_tokens.rows() != n || d_tokens.cols() != d) {
        throw ShapeError("add_position_embeddings_backward: token grad shape " +
                         d_tokens.shape_string());
    }
    pos.value.ensure_grad();
    cls.value.ensure_grad();
    for (std::size_t j = 0; j < d; ++j) {
        cls.value.grad[j] += d_z0.data[j];
        pos.value.grad[j] += d_z0.data[j];
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double* src = &d_z0.data[(i + 1) * d];
        double* pg = &pos.value.grad[(i + 1) * d];
        double* tg = &d_tokens.data[i * d];
        for (std::size_t j = 0; j < d; ++j) {
            pg[j] += src[j];
            tg[j] += src[j];
        }
    }
}

}  // namespace mmt
