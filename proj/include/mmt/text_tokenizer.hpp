#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mmt/rng.hpp"
#include "mmt/tokens.hpp"

namespace mmt {

// Subword inventory: id = position in the piece list. Pieces that begin a
// word carry a marker prefix (default "_"), continuation pieces do not.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> pieces, std::string marker = "_");

    static Vocabulary from_file(const std::string& path, std::string marker = "_");
    void save(const std::string& path) const;

    // Frequency-based vocabulary from a corpus: single-character fallback
    // units (marked and unmarked) plus the most frequent whole words,
    // capped at max_size. Deterministic: ties resolve lexicographically.
    static Vocabulary build(const std::vector<std::string>& corpus, std::size_t max_size,
                            std::string marker = "_");

    std::size_t size() const { return pieces_.size(); }
    const std::string& marker() const { return marker_; }
    std::optional<std::size_t> id_of(const std::string& piece) const;
    const std::string& piece(std::size_t id) const;
    std::size_t max_piece_length() const { return max_piece_length_; }

private:
    std::vector<std::string> pieces_;
    std::unordered_map<std::string, std::size_t> ids_;
    std::string marker_ = "_";
    std::size_t max_piece_length_ = 0;
};

// Collapse whitespace runs to single spaces and trim the ends.
std::string normalize_whitespace(const std::string& text);

// Greedy longest-match segmentation; the first piece of each word is
// matched with the marker prefixed. Throws TokenizeError when no piece
// covers the next character, or when the input has no words.
std::vector<std::string> wordpiece_segment(const std::string& text, const Vocabulary& vocab);

// Inverse of segmentation up to whitespace normalization.
std::string wordpiece_join(const std::vector<std::string>& pieces, const std::string& marker);

struct TextTokenizerCtx {
    std::vector<std::size_t> ids;
};

// Embedding-table tokenizer over wordpiece ids.
class TextTokenizer {
public:
    TextTokenizer(const Vocabulary& vocab, std::size_t dim, std::size_t n_max,
                  ParameterSet& params, Rng& rng);

    TokenSequence tokenize(const std::string& text, TextTokenizerCtx* ctx = nullptr) const;
    void backward(const TextTokenizerCtx& ctx, const Tensor& d_tokens);

    std::vector<std::size_t> segment_to_ids(const std::string& text) const;
    const Vocabulary& vocab() const { return vocab_; }
    Parameter& embed_table() { return *embed_; }
    Parameter& pos() { return *pos_; }
    Parameter& cls() { return *cls_; }

private:
    Vocabulary vocab_;
    std::size_t dim_;
    Parameter* embed_;
    Parameter* pos_;
    Parameter* cls_;
};

}  // namespace mmt
