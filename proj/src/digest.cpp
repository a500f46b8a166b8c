#include "mmt/digest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstring>

#include "mmt/error.hpp"

namespace mmt {

namespace {

void append_u64_le(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_f64_le(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    append_u64_le(out, bits);
}

std::string serialize_sorted(std::vector<const Parameter*> params, const std::string& prefix) {
    std::sort(params.begin(), params.end(),
              [](const Parameter* a, const Parameter* b) { return a->name < b->name; });
    std::string buf;
    for (const Parameter* p : params) {
        if (!prefix.empty() && !p->name.starts_with(prefix)) continue;
        append_u64_le(buf, p->name.size());
        buf += p->name;
        append_u64_le(buf, p->value.rank());
        for (std::size_t d : p->value.shape) append_u64_le(buf, d);
        for (double v : p->value.data) append_f64_le(buf, v);
    }
    return buf;
}

}  // namespace

std::string sha256_hex(const void* bytes, std::size_t length) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int md_len = 0;
    if (!EVP_Digest(bytes, length, md, &md_len, EVP_sha256(), nullptr)) {
        throw InvariantError("sha256: EVP_Digest failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(md_len * 2);
    for (unsigned int i = 0; i < md_len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xf]);
    }
    return out;
}

std::string sha256_hex(const std::string& bytes) { return sha256_hex(bytes.data(), bytes.size()); }

std::string digest_params(const std::vector<const Parameter*>& params) {
    return sha256_hex(serialize_sorted(params, ""));
}

std::string digest_params(const std::vector<Parameter*>& params) {
    std::vector<const Parameter*> view(params.begin(), params.end());
    return digest_params(view);
}

std::string digest_params_prefix(const std::vector<const Parameter*>& params,
                                 const std::string& prefix) {
    return sha256_hex(serialize_sorted(params, prefix));
}

std::string digest_params_prefix(const std::vector<Parameter*>& params,
                                 const std::string& prefix) {
    std::vector<const Parameter*> view(params.begin(), params.end());
    return digest_params_prefix(view, prefix);
}

}  // namespace mmt
