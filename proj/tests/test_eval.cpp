#include <doctest.h>

#include <cmath>
#include <set>

#include "typeforge/errors.hpp"
#include "typeforge/eval.hpp"
#include "typeforge/rng.hpp"

using namespace typeforge;

namespace {

ScoreMatrix make_scores(int rows, int cols, std::vector<double> values) {
    ScoreMatrix s;
    s.scores = nn::Mat(rows, cols, std::move(values));
    return s;
}

using LabelSets = std::vector<std::vector<std::string>>;

// Direct transcriptions of the metric definitions, kept deliberately naive
// and separate from the library implementations.
struct BruteForce {
    static double set_intersection(const std::set<std::string>& a,
                                   const std::set<std::string>& b) {
        double n = 0;
        for (const auto& x : a) {
            if (b.count(x)) n += 1;
        }
        return n;
    }

    static PRF ufet(const LabelSets& preds, const LabelSets& golds) {
        double psum = 0, rsum = 0;
        int pcount = 0;
        for (size_t i = 0; i < preds.size(); ++i) {
            std::set<std::string> p(preds[i].begin(), preds[i].end());
            std::set<std::string> g(golds[i].begin(), golds[i].end());
            if (!p.empty()) {
                psum += set_intersection(p, g) / p.size();
                pcount += 1;
            }
            rsum += set_intersection(p, g) / g.size();
        }
        PRF out;
        out.precision = pcount ? psum / pcount : 0;
        out.recall = preds.empty() ? 0 : rsum / preds.size();
        out.f1 = out.precision + out.recall > 0
                     ? 2 * out.precision * out.recall / (out.precision + out.recall)
                     : 0;
        return out;
    }

    static FetMetrics fet(const LabelSets& preds, const LabelSets& golds) {
        FetMetrics out;
        double tp = 0, np = 0, ng = 0, f1sum = 0;
        int exact = 0;
        for (size_t i = 0; i < preds.size(); ++i) {
            std::set<std::string> p(preds[i].begin(), preds[i].end());
            std::set<std::string> g(golds[i].begin(), golds[i].end());
            if (p == g) exact += 1;
            const double hit = set_intersection(p, g);
            tp += hit;
            np += p.size();
            ng += g.size();
            f1sum += 2 * hit / (p.size() + g.size());
        }
        if (preds.empty()) return out;
        out.strict_acc = static_cast<double>(exact) / preds.size();
        const double mp = np > 0 ? tp / np : 0;
        const double mr = ng > 0 ? tp / ng : 0;
        out.micro_f1 = mp + mr > 0 ? 2 * mp * mr / (mp + mr) : 0;
        out.macro_f1 = f1sum / preds.size();
        return out;
    }
};

} // namespace

TEST_CASE("decode: thresholding on probability 0.5") {
    const TypeSchema schema =
        TypeSchema::from_labels(SchemaKind::free_form, {"person", "location"});
    DecodeConfig decode;
    const PredictionSet p = decode_scores(make_scores(1, 2, {3.0, -2.0}), schema, decode);
    CHECK(p.labels[0] == std::vector<std::string>{"person"});
}

TEST_CASE("decode: fallback emits the argmax when nothing clears the cutoff") {
    const TypeSchema schema =
        TypeSchema::from_labels(SchemaKind::free_form, {"person", "location", "event"});
    DecodeConfig decode;
    const PredictionSet p = decode_scores(make_scores(1, 3, {-3.0, -1.0, -2.0}), schema, decode);
    CHECK(p.labels[0] == std::vector<std::string>{"location"});

    DecodeConfig no_fallback = decode;
    no_fallback.nonempty_fallback = false;
    const PredictionSet q =
        decode_scores(make_scores(1, 3, {-3.0, -1.0, -2.0}), schema, no_fallback);
    CHECK(q.labels[0].empty());
}

TEST_CASE("decode: hierarchical closure adds ancestors") {
    const TypeSchema schema = TypeSchema::from_labels(
        SchemaKind::hierarchical, {"/organization", "/organization/company", "/person"});
    DecodeConfig decode;
    decode.mode = DecodeMode::fet_multilabel;
    const PredictionSet p = decode_scores(make_scores(1, 3, {-5.0, 2.0, -5.0}), schema, decode);
    CHECK(p.labels[0] == std::vector<std::string>{"/organization", "/organization/company"});

    decode.hierarchical_closure = false;
    const PredictionSet q = decode_scores(make_scores(1, 3, {-5.0, 2.0, -5.0}), schema, decode);
    CHECK(q.labels[0] == std::vector<std::string>{"/organization/company"});
}

TEST_CASE("decode: single-path mode emits one root-to-leaf path by leaf argmax") {
    const TypeSchema schema = TypeSchema::from_labels(
        SchemaKind::hierarchical,
        {"/organization", "/organization/company", "/person", "/person/athlete"}, false);
    DecodeConfig decode = DecodeConfig::for_schema(schema);
    CHECK(decode.mode == DecodeMode::fet_single_path);
    // the parent /person outscores every leaf; the leaf argmax still wins
    const PredictionSet p =
        decode_scores(make_scores(1, 4, {-1.0, 0.5, 9.0, 0.6}), schema, decode);
    CHECK(p.labels[0] == std::vector<std::string>{"/person", "/person/athlete"});
}

TEST_CASE("ufet macro PRF hand examples") {
    SUBCASE("perfect prediction") {
        const PRF m = ufet_macro_prf({{"person"}}, {{"person"}});
        CHECK(m.precision == doctest::Approx(1.0));
        CHECK(m.recall == doctest::Approx(1.0));
        CHECK(m.f1 == doctest::Approx(1.0));
    }
    SUBCASE("half recall") {
        const PRF m = ufet_macro_prf({{"person"}}, {{"person", "victim"}});
        CHECK(m.precision == doctest::Approx(1.0));
        CHECK(m.recall == doctest::Approx(0.5));
        CHECK(m.f1 == doctest::Approx(2.0 / 3.0));
    }
    SUBCASE("two examples averaged per example") {
        const PRF m = ufet_macro_prf({{"a"}, {"b"}}, {{"a"}, {"c"}});
        CHECK(m.precision == doctest::Approx(0.5));
        CHECK(m.recall == doctest::Approx(0.5));
        CHECK(m.f1 == doctest::Approx(0.5));
    }
}

TEST_CASE("fet metrics hand examples") {
    SUBCASE("perfect prediction") {
        const FetMetrics m = fet_metrics({{"a"}, {"b", "c"}}, {{"a"}, {"b", "c"}});
        CHECK(m.strict_acc == doctest::Approx(1.0));
        CHECK(m.micro_f1 == doctest::Approx(1.0));
        CHECK(m.macro_f1 == doctest::Approx(1.0));
    }
    SUBCASE("subset prediction") {
        const FetMetrics m = fet_metrics({{"a"}}, {{"a", "b"}});
        CHECK(m.strict_acc == doctest::Approx(0.0));
        CHECK(m.micro_f1 == doctest::Approx(2.0 / 3.0));
        CHECK(m.macro_f1 == doctest::Approx(2.0 / 3.0));
    }
    SUBCASE("exact match plus disjoint sets") {
        const FetMetrics m = fet_metrics({{"a"}, {"b"}}, {{"a"}, {"c"}});
        CHECK(m.strict_acc == doctest::Approx(0.5));
        CHECK(m.micro_f1 == doctest::Approx(0.5));
        CHECK(m.macro_f1 == doctest::Approx(0.5));
    }
}

TEST_CASE("metrics match brute-force definitions on random set pairs") {
    Rng rng(1234);
    const std::vector<std::string> universe = {"a", "b", "c", "d", "e", "f", "g", "h"};
    auto random_set = [&](bool allow_empty) {
        std::vector<std::string> out;
        for (const auto& label : universe) {
            if (rng.below(3) == 0) out.push_back(label);
        }
        if (out.empty() && !allow_empty) out.push_back(universe[rng.below(universe.size())]);
        return out;
    };

    for (int trial = 0; trial < 300; ++trial) {
        const size_t n = 1 + rng.below(12);
        LabelSets preds, golds;
        for (size_t i = 0; i < n; ++i) {
            preds.push_back(random_set(true));
            golds.push_back(random_set(false));
        }
        const PRF u = ufet_macro_prf(preds, golds);
        const PRF ub = BruteForce::ufet(preds, golds);
        CHECK(std::abs(u.precision - ub.precision) < 1e-9);
        CHECK(std::abs(u.recall - ub.recall) < 1e-9);
        CHECK(std::abs(u.f1 - ub.f1) < 1e-9);

        const FetMetrics f = fet_metrics(preds, golds);
        const FetMetrics fb = BruteForce::fet(preds, golds);
        CHECK(std::abs(f.strict_acc - fb.strict_acc) < 1e-9);
        CHECK(std::abs(f.micro_f1 - fb.micro_f1) < 1e-9);
        CHECK(std::abs(f.macro_f1 - fb.macro_f1) < 1e-9);

        // strictness ordering
        CHECK(f.strict_acc <= f.micro_f1 + 1e-12);
        CHECK(f.strict_acc <= f.macro_f1 + 1e-12);
    }
}

TEST_CASE("metrics reject misaligned or empty-gold inputs") {
    CHECK_THROWS_AS(ufet_macro_prf({{"a"}}, {}), std::invalid_argument);
    CHECK_THROWS_AS(fet_metrics({{"a"}}, {{}}), std::invalid_argument);
}

TEST_CASE("prediction is deterministic and closure-sound end to end") {
    const SyntheticSpec spec = SyntheticSpec::builtin("small");
    const SyntheticCorpus corpus = generate_synthetic_corpus(spec, 31);
    const LabelMapping mapping = build_phrase_table(corpus.fet_schema);
    const Vocabulary vocab = build_vocabulary(
        corpus.ufet_examples,
        build_phrase_table(corpus.ufet_schema).phrases_in_schema_order(corpus.ufet_schema));
    ModelConfig mcfg;
    mcfg.hidden_size = 16;
    mcfg.layers = 1;
    mcfg.heads = 2;
    mcfg.type_heads = 2;
    mcfg.max_len = 32;
    const Checkpoint ckpt =
        random_init_checkpoint(mcfg, vocab, corpus.fet_schema, mapping, 99);

    std::vector<MentionExample> sample(corpus.fet_examples.begin(),
                                       corpus.fet_examples.begin() + 12);
    DecodeConfig decode;
    decode.mode = DecodeMode::fet_multilabel;
    const PredictionSet p1 = predict(ckpt, sample, corpus.fet_schema, mapping, decode);
    const PredictionSet p2 = predict(ckpt, sample, corpus.fet_schema, mapping, decode);
    CHECK(p1.labels == p2.labels);
    for (const auto& labels : p1.labels) {
        CHECK_FALSE(labels.empty());
        for (const auto& label : labels) {
            for (const auto& anc : corpus.fet_schema.ancestors(label)) {
                CHECK(std::find(labels.begin(), labels.end(), anc) != labels.end());
            }
        }
    }

    SUBCASE("missing mapping entry fails before scoring") {
        LabelMapping partial = mapping;
        partial.entries.erase(partial.entries.begin());
        CHECK_THROWS_AS(predict(ckpt, sample, corpus.fet_schema, partial, decode), MappingError);
    }
}

TEST_CASE("few-shot protocol reports one row per seed plus their mean") {
    const SyntheticSpec spec = SyntheticSpec::builtin("small");
    const SyntheticCorpus corpus = generate_synthetic_corpus(spec, 41);
    const LabelMapping mapping = build_phrase_table(corpus.fet_schema);
    const Vocabulary vocab = build_vocabulary(
        corpus.ufet_examples,
        build_phrase_table(corpus.ufet_schema).phrases_in_schema_order(corpus.ufet_schema));
    ModelConfig mcfg;
    mcfg.hidden_size = 16;
    mcfg.layers = 1;
    mcfg.heads = 2;
    mcfg.type_heads = 2;
    mcfg.max_len = 32;
    const Checkpoint start =
        random_init_checkpoint(mcfg, vocab, corpus.fet_schema, mapping, 5);

    std::vector<MentionExample> pool(corpus.fet_examples.begin(), corpus.fet_examples.end() - 16);
    std::vector<MentionExample> test(corpus.fet_examples.end() - 16, corpus.fet_examples.end());

    TrainConfig ft;
    ft.stage = Stage::finetune_fet;
    ft.max_steps = 10;
    ft.batch_size = 8;
    ft.eval_every = 0;
    const DecodeConfig decode = DecodeConfig::for_schema(corpus.fet_schema);

    const ProtocolResult two = run_fewshot_protocol(start, pool, test, corpus.fet_schema, mapping,
                                                    2, {11, 22}, ft, decode);
    REQUIRE(two.runs.size() == 2);
    CHECK(two.mean.macro_f1 ==
          doctest::Approx((two.runs[0].metrics.macro_f1 + two.runs[1].metrics.macro_f1) / 2));

    const ProtocolResult one = run_fewshot_protocol(start, pool, test, corpus.fet_schema, mapping,
                                                    2, {11}, ft, decode);
    REQUIRE(one.runs.size() == 1);
    CHECK(one.mean.macro_f1 == doctest::Approx(one.runs[0].metrics.macro_f1));
    CHECK(one.runs[0].metrics.macro_f1 == doctest::Approx(two.runs[0].metrics.macro_f1));

    const std::string report = metrics_report_json(one);
    CHECK(report.find("per_seed") != std::string::npos);
    CHECK(report.find("macro_f1") != std::string::npos);
}
