#include "mmt/text_tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "mmt/init.hpp"

namespace mmt {

namespace {

std::vector<std::string> split_words(const std::string& normalized) {
    std::vector<std::string> words;
    std::istringstream in(normalized);
    std::string w;
    while (in >> w) words.push_back(w);
    return words;
}

// One UTF-8 codepoint starting at `pos`, for error messages.
std::string codepoint_at(const std::string& s, std::size_t pos) {
    const unsigned char lead = static_cast<unsigned char>(s[pos]);
    std::size_t len = 1;
    if ((lead & 0xe0) == 0xc0) len = 2;
    else if ((lead & 0xf0) == 0xe0) len = 3;
    else if ((lead & 0xf8) == 0xf0) len = 4;
    return s.substr(pos, std::min(len, s.size() - pos));
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> pieces, std::string marker)
    : pieces_(std::move(pieces)), marker_(std::move(marker)) {
    if (marker_.empty()) throw ConfigError("vocabulary: word-begin marker must be non-empty");
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
        if (pieces_[i].empty()) throw ConfigError("vocabulary: empty piece at line " + std::to_string(i + 1));
        auto [it, inserted] = ids_.emplace(pieces_[i], i);
        if (!inserted) throw ConfigError("vocabulary: duplicate piece '" + pieces_[i] + "'");
        max_piece_length_ = std::max(max_piece_length_, pieces_[i].size());
    }
    if (pieces_.empty()) throw ConfigError("vocabulary: no pieces");
}

Vocabulary Vocabulary::from_file(const std::string& path, std::string marker) {
    std::ifstream in(path);
    if (!in) throw ConfigError("vocabulary: cannot open '" + path + "'");
    std::vector<std::string> pieces;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        pieces.push_back(line);
    }
    return Vocabulary(std::move(pieces), std::move(marker));
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("vocabulary: cannot write '" + path + "'");
    for (const auto& p : pieces_) out << p << '\n';
}

Vocabulary Vocabulary::build(const std::vector<std::string>& corpus, std::size_t max_size,
                             std::string marker) {
    std::map<std::string, std::size_t> word_freq;  // ordered for determinism
    std::map<char, bool> alphabet;
    for (const std::string& text : corpus) {
        for (const std::string& word : split_words(normalize_whitespace(text))) {
            ++word_freq[word];
            for (char c : word) alphabet[c] = true;
        }
    }
    if (word_freq.empty()) throw DataError("vocabulary build: corpus has no words");

    // Fallback units first so any word remains segmentable.
    std::vector<std::string> pieces;
    for (const auto& [c, _] : alphabet) {
        pieces.push_back(marker + std::string(1, c));
        pieces.push_back(std::string(1, c));
    }
    // Then whole words, most frequent first (lexicographic tie-break).
    std::vector<std::pair<std::string, std::size_t>> by_freq(word_freq.begin(), word_freq.end());
    std::stable_sort(by_freq.begin(), by_freq.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::unordered_map<std::string, bool> seen;
    for (const auto& p : pieces) seen[p] = true;
    for (const auto& [word, _] : by_freq) {
        if (pieces.size() >= max_size) break;
        const std::string marked = marker + word;
        if (!seen.contains(marked)) {
            pieces.push_back(marked);
            seen[marked] = true;
        }
    }
    return Vocabulary(std::move(pieces), std::move(marker));
}

std::optional<std::size_t> Vocabulary::id_of(const std::string& piece) const {
    auto it = ids_.find(piece);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

const std::string& Vocabulary::piece(std::size_t id) const {
    if (id >= pieces_.size()) throw ArgumentError("vocabulary: id " + std::to_string(id) + " out of range");
    return pieces_[id];
}

std::string normalize_whitespace(const std::string& text) {
    std::string out;
    bool in_space = true;  // trims leading space
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!in_space) out.push_back(' ');
            in_space = true;
        } else {
            out.push_back(c);
            in_space = false;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

std::vector<std::string> wordpiece_segment(const std::string& text, const Vocabulary& vocab) {
    const std::string normalized = normalize_whitespace(text);
    const std::vector<std::string> words = split_words(normalized);
    if (words.empty()) throw TokenizeError("tokenize_text: input has no words");

    std::vector<std::string> pieces;
    for (const std::string& word : words) {
        const std::string target = vocab.marker() + word;
        std::size_t pos = 0;
        while (pos < target.size()) {
            const std::size_t longest = std::min(vocab.max_piece_length(), target.size() - pos);
            std::size_t match_len = 0;
            for (std::size_t len = longest; len >= 1; --len) {
                if (vocab.id_of(target.substr(pos, len))) {
                    match_len = len;
                    break;
                }
            }
            if (match_len == 0) {
                const std::size_t text_pos = pos < vocab.marker().size() ? 0 : pos - vocab.marker().size();
                throw TokenizeError("tokenize_text: no vocabulary unit covers '" +
                                    codepoint_at(word, std::min(text_pos, word.size() - 1)) +
                                    "' in word '" + word + "'");
            }
            pieces.push_back(target.substr(pos, match_len));
            pos += match_len;
        }
    }
    return pieces;
}

std::string wordpiece_join(const std::vector<std::string>& pieces, const std::string& marker) {
    std::string joined;
    for (const auto& p : pieces) joined += p;
    std::string out;
    std::size_t pos = 0;
    while (pos < joined.size()) {
        if (joined.compare(pos, marker.size(), marker) == 0) {
            if (!out.empty()) out.push_back(' ');
            pos += marker.size();
        } else {
            out.push_back(joined[pos]);
            ++pos;
        }
    }
    return out;
}

TextTokenizer::TextTokenizer(const Vocabulary& vocab, std::size_t dim, std::size_t n_max,
                             ParameterSet& params, Rng& rng)
    : vocab_(vocab), dim_(dim) {
    embed_ = &params.create("tok.text.embed", init_weight({vocab.size(), dim}, rng));
    pos_ = &params.create("tok.text.pos", init_weight({n_max + 1, dim}, rng));
    cls_ = &params.create("tok.text.cls", init_weight({1, dim}, rng));
}

std::vector<std::size_t> TextTokenizer::segment_to_ids(const std::string& text) const {
    std::vector<std::size_t> ids;
    for (const std::string& piece : wordpiece_segment(text, vocab_)) {
        ids.push_back(*vocab_.id_of(piece));
    }
    return ids;
}

TokenSequence TextTokenizer::tokenize(const std::string& text, TextTokenizerCtx* ctx) const {
    const std::vector<std::size_t> ids = segment_to_ids(text);
    TokenSequence seq;
    seq.modality = Modality::text;
    seq.embeddings = Tensor({ids.size(), dim_});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const double* row = &embed_->value.data[ids[i] * dim_];
        std::copy(row, row + dim_, &seq.embeddings.data[i * dim_]);
    }
    if (ctx) ctx->ids = ids;
    return seq;
}

void TextTokenizer::backward(const TextTokenizerCtx& ctx, const Tensor& d_tokens) {
    if (d_tokens.rows() != ctx.ids.size() || d_tokens.cols() != dim_) {
        throw ShapeError("text backward: gradient shape " + d_tokens.shape_string());
    }
    embed_->value.ensure_grad();
    for (std::size_t i = 0; i < ctx.ids.size(); ++i) {
        double* row = &embed_->value.grad[ctx.ids[i] * dim_];
        const double* src = &d_tokens.data[i * dim_];
        for (std::size_t j = 0; j < dim_; ++j) row[j] += src[j];
    }
}

}  // namespace mmt
