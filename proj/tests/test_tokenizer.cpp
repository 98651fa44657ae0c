#include <doctest.h>

#include <cstdio>

#include "typeforge/errors.hpp"
#include "typeforge/tokenizer.hpp"

using namespace typeforge;

namespace {

Vocabulary demo_vocab() {
    return Vocabulary::build({"the quick brown fox", "sports team", "person", "a b c", "fox"});
}

} // namespace

TEST_CASE("specials occupy fixed slots") {
    const Vocabulary v = demo_vocab();
    CHECK(v.token(special::kPad) == "[PAD]");
    CHECK(v.token(special::kUnk) == "[UNK]");
    CHECK(v.token(special::kMask) == "[MASK]");
    CHECK(v.token(special::kBos) == "[BOS]");
    CHECK(v.token(special::kEos) == "[EOS]");
    CHECK(v.token(special::kLBracket) == "[");
    CHECK(v.token(special::kRBracket) == "]");
}

TEST_CASE("template words are always present") {
    const Vocabulary v = Vocabulary::build({"nothing here"});
    CHECK(v.id_of("type") != special::kUnk);
    CHECK(v.id_of("left") != special::kUnk);
    CHECK(v.id_of("right") != special::kUnk);
    CHECK(v.id_of("(") != special::kUnk);
}

TEST_CASE("id assignment is frequency-major then lexicographic") {
    // "fox" occurs twice, everything else once
    const Vocabulary v = demo_vocab();
    const int first_corpus_id = special::kCount + static_cast<int>(template_words().size());
    CHECK(v.token(first_corpus_id) == "fox");
    CHECK(v.token(first_corpus_id + 1) == "a"); // then lexicographic among count-1 words
}

TEST_CASE("tokenize basics") {
    const Vocabulary v = demo_vocab();
    WordTokenizer tok(v);
    CHECK(tok.tokenize("").empty());
    const auto ids = tok.tokenize("sports team");
    REQUIRE(ids.size() == 2);
    CHECK(ids[0] != special::kPad);
    CHECK(ids[1] != special::kPad);
    CHECK(tok.tokenize("sports team") == ids); // deterministic
    CHECK(tok.tokenize("zzz")[0] == special::kUnk);
    CHECK(tok.tokenize("The QUICK") == tok.tokenize("the quick"));
}

TEST_CASE("detokenize round trip for in-vocabulary lowercase text") {
    const Vocabulary v = demo_vocab();
    WordTokenizer tok(v);
    const std::string text = "the quick  brown fox";
    CHECK(tok.detokenize(tok.tokenize(text)) == "the quick brown fox");
}

TEST_CASE("vocabulary file round trip") {
    const Vocabulary v = demo_vocab();
    const std::string path = "/tmp/typeforge_test_vocab.txt";
    v.save(path);
    const Vocabulary loaded = Vocabulary::load(path);
    CHECK(loaded == v);
    std::remove(path.c_str());
}

TEST_CASE("longest-match tokenizer segments into known prefixes") {
    const Vocabulary v = Vocabulary::from_tokens(
        {"[PAD]", "[UNK]", "[MASK]", "[BOS]", "[EOS]", "[", "]", "(", ")", ":", "type", "left",
         "right", "foot", "ball", "footballer"});
    LongestMatchTokenizer tok(v);
    CHECK(tok.tokenize("footballer") == std::vector<int>{v.id_of("footballer")});
    CHECK(tok.tokenize("football") == std::vector<int>{v.id_of("foot"), v.id_of("ball")});
    CHECK(tok.tokenize("xfoot")[0] == special::kUnk);
}

TEST_CASE("pad_type_batch shapes and masks") {
    const Vocabulary v = demo_vocab();
    WordTokenizer tok(v);

    SUBCASE("single phrase is fully valid") {
        const TypeTokenBatch batch = pad_type_batch({"person"}, tok);
        CHECK(batch.rows == 1);
        CHECK(batch.cols == 1);
        CHECK(batch.valid_at(0, 0));
        CHECK(batch.row_length(0) == 1);
    }

    SUBCASE("shorter rows get padded with PAD") {
        const TypeTokenBatch batch = pad_type_batch({"person", "sports team"}, tok);
        CHECK(batch.cols == 2);
        CHECK(batch.row_length(0) == 1);
        CHECK(batch.row_length(1) == 2);
        CHECK(batch.id_at(0, 1) == special::kPad);
        CHECK_FALSE(batch.valid_at(0, 1));
    }

    SUBCASE("empty phrase is rejected") {
        CHECK_THROWS_AS(pad_type_batch({""}, tok), InputError);
    }

    SUBCASE("empty list is rejected") {
        CHECK_THROWS_AS(pad_type_batch({}, tok), InputError);
    }
}

TEST_CASE("valid mask row sums equal unpadded lengths over random phrases") {
    const Vocabulary v = demo_vocab();
    WordTokenizer tok(v);
    const std::vector<std::string> phrases = {"person", "sports team", "a b c", "the quick brown fox"};
    const TypeTokenBatch batch = pad_type_batch(phrases, tok);
    for (int r = 0; r < batch.rows; ++r) {
        CHECK(batch.row_length(r) == static_cast<int>(tok.tokenize(phrases[r]).size()));
    }
}

TEST_CASE("padding further does not change the valid content") {
    const Vocabulary v = demo_vocab();
    WordTokenizer tok(v);
    const TypeTokenBatch small = pad_type_batch({"person", "sports team"}, tok);
    const TypeTokenBatch wide = pad_type_batch({"person", "sports team", "the quick brown fox"}, tok);
    for (int r = 0; r < small.rows; ++r) {
        REQUIRE(small.row_length(r) == wide.row_length(r));
        for (int c = 0; c < small.row_length(r); ++c) CHECK(small.id_at(r, c) == wide.id_at(r, c));
    }
}
