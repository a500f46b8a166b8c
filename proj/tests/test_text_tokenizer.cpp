#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "mmt/text_tokenizer.hpp"

using namespace mmt;

TEST_CASE("the worked segmentation example reproduces exactly") {
    const Vocabulary vocab(
        {"_The", "_super", "market", "_is", "_host", "ing", "_a", "_sale"});
    const std::vector<std::string> expect = {"_The", "_super", "market", "_is",
                                             "_host", "ing",   "_a",     "_sale"};
    CHECK(wordpiece_segment("The supermarket is hosting a sale", vocab) == expect);
}

TEST_CASE("greedy longest match over a single-character vocabulary") {
    const Vocabulary vocab({"_a", "a", "_b", "b"});
    const std::vector<std::string> expect = {"_a", "b"};
    CHECK(wordpiece_segment("ab", vocab) == expect);
}

TEST_CASE("longest match wins over shorter prefixes") {
    const Vocabulary vocab({"_ab", "_a", "b", "c"});
    CHECK(wordpiece_segment("abc", vocab) == std::vector<std::string>{"_ab", "c"});
}

TEST_CASE("empty and whitespace-only inputs are rejected") {
    const Vocabulary vocab({"_a", "a"});
    CHECK_THROWS_AS(wordpiece_segment("", vocab), TokenizeError);
    CHECK_THROWS_AS(wordpiece_segment("   \t\n", vocab), TokenizeError);
}

TEST_CASE("an uncoverable character is named in the error") {
    const Vocabulary vocab({"_a", "a"});
    CHECK_THROWS_WITH_AS(wordpiece_segment("aqa", vocab), doctest::Contains("q"), TokenizeError);
}

TEST_CASE("segmentation round-trips to the whitespace-normalized input") {
    const std::vector<std::string> corpus = {"the quick brown fox", "jumps over the lazy dog",
                                             "pack my box with five dozen jugs"};
    const Vocabulary vocab = Vocabulary::build(corpus, 512);
    for (const std::string& raw : {std::string("the  quick   brown fox"),
                                   std::string("  jumps over the lazy dog "),
                                   std::string("pack my box with five dozen jugs")}) {
        const auto pieces = wordpiece_segment(raw, vocab);
        CHECK(wordpiece_join(pieces, vocab.marker()) == normalize_whitespace(raw));
    }
}

TEST_CASE("built vocabulary covers its corpus with zero OOV") {
    const std::vector<std::string> corpus = {"alpha beta gamma", "beta gamma delta",
                                             "gamma delta alpha"};
    const Vocabulary vocab = Vocabulary::build(corpus, 64);
    for (const std::string& line : corpus) {
        CHECK_NOTHROW(wordpiece_segment(line, vocab));
    }
    // frequent whole words become single pieces
    CHECK(wordpiece_segment("gamma", vocab) == std::vector<std::string>{"_gamma"});
}

TEST_CASE("vocabulary file round-trip preserves ids") {
    const std::filesystem::path path =
        std::filesystem::temp_directory_path() / "mmt_vocab_test.txt";
    const Vocabulary vocab({"_the", "_cat", "s", "_a"});
    vocab.save(path.string());
    const Vocabulary loaded = Vocabulary::from_file(path.string());
    CHECK(loaded.size() == vocab.size());
    for (std::size_t i = 0; i < vocab.size(); ++i) CHECK(loaded.piece(i) == vocab.piece(i));
    std::filesystem::remove(path);
}

TEST_CASE("duplicate vocabulary lines are rejected") {
    CHECK_THROWS_AS(Vocabulary({"_a", "_a"}), ConfigError);
}

TEST_CASE("text tokenizer embeds one row per subword") {
    const Vocabulary vocab({"_ab", "_a", "b"});
    ParameterSet params;
    Rng rng(3);
    TextTokenizer tok(vocab, 8, 16, params, rng);

    TextTokenizerCtx ctx;
    const TokenSequence seq = tok.tokenize("ab ab", &ctx);
    CHECK(seq.count() == 2);
    CHECK(seq.dim() == 8);
    CHECK(seq.modality == Modality::text);
    CHECK(ctx.ids == std::vector<std::size_t>{0, 0});
    // both rows are the same embedding row
    for (std::size_t j = 0; j < 8; ++j) CHECK(seq.embeddings(0, j) == seq.embeddings(1, j));
}

TEST_CASE("text backward scatters gradients into the embedding table") {
    const Vocabulary vocab({"_x", "_y"});
    ParameterSet params;
    Rng rng(4);
    TextTokenizer tok(vocab, 4, 8, params, rng);

    TextTokenizerCtx ctx;
    tok.tokenize("x x y", &ctx);
    Tensor d_tokens({3, 4});
    for (double& v : d_tokens.data) v = 1.0;
    tok.backward(ctx, d_tokens);

    const Tensor& table = tok.embed_table().value;
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK(table.grad[0 * 4 + j] == doctest::Approx(2.0));  // "_x" hit twice
        CHECK(table.grad[1 * 4 + j] == doctest::Approx(1.0));
    }
}
