#include <doctest.h>

#include <set>

#include "typeforge/errors.hpp"
#include "typeforge/sequence.hpp"

using namespace typeforge;

namespace {

struct Fixture {
    Vocabulary vocab;
    WordTokenizer tok;
    SequenceBuilder builder;

    Fixture()
        : vocab(Vocabulary::build(
              {"fedex is a major player in the package delivery market .",
               "police said he had been kidnapped from his home on tuesday",
               "x y z w filler words one two three four five six seven eight nine ten"})),
          tok(vocab),
          builder(tok, 64) {}
};

MentionExample fedex_example() {
    MentionExample ex;
    ex.mention = {"FedEx"};
    ex.right_context = {"is", "a", "major", "player", "in", "the", "package",
                        "delivery", "market", "."};
    ex.labels = {};
    return ex;
}

} // namespace

TEST_CASE("typing input realizes the bracketed template") {
    Fixture f;
    const ModelInput input = f.builder.build_et_input(fedex_example());

    const std::string decoded = f.tok.detokenize(input.ids);
    CHECK(decoded ==
          "[BOS] [ fedex ] ( type : [MASK] ) is a major player in the package delivery market . "
          "[EOS]");
    CHECK(input.ids[input.slot_index] == special::kMask);
    CHECK(input.mention_begin == 2);
    CHECK(input.mention_end == 3);
    CHECK(f.tok.detokenize({input.ids.begin() + input.mention_begin,
                            input.ids.begin() + input.mention_end}) == "fedex");
}

TEST_CASE("typing input with empty contexts") {
    Fixture f;
    MentionExample ex;
    ex.mention = {"x"};
    const ModelInput input = f.builder.build_et_input(ex);
    CHECK(f.tok.detokenize(input.ids) == "[BOS] [ x ] ( type : [MASK] ) [EOS]");
}

TEST_CASE("truncation drops the farthest context tokens and keeps the template") {
    Fixture f;
    MentionExample ex;
    ex.mention = {"x"};
    for (int i = 0; i < 200; ++i) ex.left_context.push_back("filler");
    SequenceBuilder short_builder(f.tok, 24);
    const ModelInput input = short_builder.build_et_input(ex);
    CHECK(input.length() == 24);
    CHECK(input.ids[input.slot_index] == special::kMask);
    CHECK(input.ids[input.mention_begin - 1] == special::kLBracket);
    CHECK(input.ids[input.mention_end] == special::kRBracket);
    // BOS + 14 kept fillers, then "[ x ] ( type : [MASK] ) [EOS]"
    CHECK(input.mention_begin == 16);
}

TEST_CASE("a mention that cannot fit raises an input error") {
    Fixture f;
    MentionExample ex;
    for (int i = 0; i < 100; ++i) ex.mention.push_back("x");
    SequenceBuilder short_builder(f.tok, 32);
    CHECK_THROWS_AS(short_builder.build_et_input(ex), InputError);
}

TEST_CASE("neighbor-word inputs pick the nearest word and side-specific template") {
    Fixture f;
    MentionExample ex;
    ex.left_context = {"Police", "said"};
    ex.mention = {"he"};
    ex.right_context = {"had", "been", "kidnapped"};

    const auto left = f.builder.build_nwp_input(ex, NwpSide::left);
    REQUIRE(left.has_value());
    CHECK(left->target_id == f.tok.tokenize("said")[0]);
    CHECK(f.tok.detokenize(left->input.ids) ==
          "[BOS] police said [ he ] ( left : [MASK] ) had been kidnapped [EOS]");

    const auto right = f.builder.build_nwp_input(ex, NwpSide::right);
    REQUIRE(right.has_value());
    CHECK(right->target_id == f.tok.tokenize("had")[0]);
    CHECK(f.tok.detokenize(right->input.ids) ==
          "[BOS] police said [ he ] ( right : [MASK] ) had been kidnapped [EOS]");
}

TEST_CASE("neighbor-word input is absent when the side is empty") {
    Fixture f;
    MentionExample ex;
    ex.mention = {"he"};
    ex.right_context = {"ran"};
    CHECK_FALSE(f.builder.build_nwp_input(ex, NwpSide::left).has_value());
    CHECK(f.builder.build_nwp_input(ex, NwpSide::right).has_value());
}

TEST_CASE("corruption selects ceil(rate x eligible) positions and is deterministic") {
    Fixture f;
    MentionExample ex;
    ex.mention = {"he"};
    for (int i = 0; i < 12; ++i) ex.left_context.push_back("one");
    for (int i = 0; i < 8; ++i) ex.right_context.push_back("two");
    const ModelInput input = f.builder.build_et_input(ex);
    REQUIRE(f.builder.mlm_eligible_positions(input).size() == 21); // 12 + 8 + mention

    SUBCASE("eligible count drives the selection size") {
        // 21 eligible at rate 0.15 -> ceil(3.15) = 4
        const ModelInput corrupted = f.builder.apply_mlm_corruption(input, 0.15, 5);
        CHECK(corrupted.mlm_targets.size() == 4);
    }

    SUBCASE("exactly ceil at a round product") {
        MentionExample ex20;
        ex20.mention = {"he"};
        for (int i = 0; i < 12; ++i) ex20.left_context.push_back("one");
        for (int i = 0; i < 7; ++i) ex20.right_context.push_back("two");
        const ModelInput input20 = f.builder.build_et_input(ex20);
        REQUIRE(f.builder.mlm_eligible_positions(input20).size() == 20);
        const ModelInput corrupted = f.builder.apply_mlm_corruption(input20, 0.15, 5);
        CHECK(corrupted.mlm_targets.size() == 3); // ceil(0.15 * 20) = 3
    }

    SUBCASE("determinism in the seed") {
        const ModelInput c1 = f.builder.apply_mlm_corruption(input, 0.15, 123);
        const ModelInput c2 = f.builder.apply_mlm_corruption(input, 0.15, 123);
        const ModelInput c3 = f.builder.apply_mlm_corruption(input, 0.15, 124);
        CHECK(c1.ids == c2.ids);
        CHECK(c1.mlm_targets == c2.mlm_targets);
        CHECK((c1.ids != c3.ids || c1.mlm_targets != c3.mlm_targets));
    }

    SUBCASE("protected positions are never selected") {
        for (uint64_t seed = 0; seed < 32; ++seed) {
            const ModelInput corrupted = f.builder.apply_mlm_corruption(input, 0.35, seed);
            const std::set<int> eligible = [&] {
                const auto v = f.builder.mlm_eligible_positions(input);
                return std::set<int>(v.begin(), v.end());
            }();
            for (const auto& [pos, original] : corrupted.mlm_targets) {
                CHECK(eligible.count(pos) == 1);
                CHECK(pos != corrupted.slot_index);
                CHECK(original == input.ids[pos]);
            }
            // untouched protected region
            CHECK(corrupted.ids[0] == special::kBos);
            CHECK(corrupted.ids[corrupted.length() - 1] == special::kEos);
            CHECK(corrupted.ids[corrupted.mention_begin - 1] == special::kLBracket);
            CHECK(corrupted.ids[corrupted.mention_end] == special::kRBracket);
            CHECK(corrupted.ids[corrupted.slot_index] == special::kMask);
            // unselected positions are unchanged
            for (int p = 0; p < corrupted.length(); ++p) {
                if (!corrupted.mlm_targets.count(p)) CHECK(corrupted.ids[p] == input.ids[p]);
            }
        }
    }
}

TEST_CASE("template-only inputs have no eligible corruption slots") {
    Fixture f;
    MentionExample ex;
    ex.mention = {"x"};
    const ModelInput input = f.builder.build_et_input(ex);
    CHECK(f.builder.mlm_eligible_positions(input).size() == 1); // just the mention token
    MentionExample ex2;
    ex2.mention = {"x"};
    const ModelInput c = f.builder.apply_mlm_corruption(f.builder.build_et_input(ex2), 0.15, 3);
    CHECK(c.mlm_targets.size() == 1); // ceil(0.15 * 1) = 1, the mention itself is fair game
}

TEST_CASE("corruption of an input with no eligible positions is a no-op") {
    Fixture f;
    // hand-built degenerate input: brackets and template only, nothing between
    ModelInput input;
    input.ids = {special::kBos, special::kLBracket, special::kRBracket,
                 f.vocab.id_of("("), f.vocab.id_of("type"), f.vocab.id_of(":"),
                 special::kMask, f.vocab.id_of(")"), special::kEos};
    input.mention_begin = 2;
    input.mention_end = 2;
    input.slot_index = 6;
    CHECK(f.builder.mlm_eligible_positions(input).empty());
    const ModelInput out = f.builder.apply_mlm_corruption(input, 0.15, 9);
    CHECK(out.mlm_targets.empty());
    CHECK(out.ids == input.ids);
}

TEST_CASE("distinct example texts give distinct inputs") {
    Fixture f;
    MentionExample a, b;
    a.mention = {"x"};
    a.right_context = {"one"};
    b.mention = {"x"};
    b.right_context = {"two"};
    CHECK(f.builder.build_et_input(a).ids != f.builder.build_et_input(b).ids);
}
