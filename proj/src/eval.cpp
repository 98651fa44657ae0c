#include "typeforge/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "typeforge/errors.hpp"

namespace typeforge {

using nlohmann::json;

const char* to_string(DecodeMode mode) {
    switch (mode) {
        case DecodeMode::ufet_multilabel: return "ufet_multilabel";
        case DecodeMode::fet_multilabel: return "fet_multilabel";
        case DecodeMode::fet_single_path: return "fet_single_path";
    }
    return "ufet_multilabel";
}

DecodeMode decode_mode_from_string(const std::string& s) {
    if (s == "ufet_multilabel") return DecodeMode::ufet_multilabel;
    if (s == "fet_multilabel") return DecodeMode::fet_multilabel;
    if (s == "fet_single_path") return DecodeMode::fet_single_path;
    throw ConfigError("unknown decode mode: " + s);
}

void DecodeConfig::validate() const {
    if (threshold <= 0.0 || threshold >= 1.0) throw ConfigError("threshold must be in (0, 1)");
}

DecodeConfig DecodeConfig::for_schema(const TypeSchema& schema) {
    DecodeConfig decode;
    if (schema.kind() == SchemaKind::free_form) {
        decode.mode = DecodeMode::ufet_multilabel;
    } else {
        decode.mode = schema.multi_label() ? DecodeMode::fet_multilabel : DecodeMode::fet_single_path;
    }
    return decode;
}

namespace {

// p > threshold on the probability scale equals s > logit(threshold).
double logit(double p) { return std::log(p / (1.0 - p)); }

std::vector<std::string> closure_sorted(const std::set<int>& picked, const TypeSchema& schema,
                                        bool add_ancestors) {
    std::set<int> full = picked;
    if (add_ancestors) {
        for (int idx : picked) {
            for (const auto& anc : schema.ancestors(schema.labels()[idx])) {
                const int a = schema.index_of(anc);
                if (a >= 0) full.insert(a);
            }
        }
    }
    std::vector<std::string> out;
    for (int idx : full) out.push_back(schema.labels()[idx]);
    return out;
}

} // namespace

PredictionSet decode_scores(const ScoreMatrix& scores, const TypeSchema& schema,
                            const DecodeConfig& decode) {
    decode.validate();
    if (scores.scores.cols != schema.size()) {
        throw std::invalid_argument("decode_scores: score columns do not match the schema");
    }
    PredictionSet out;
    out.scores = scores.scores;
    const double cutoff = logit(decode.threshold);

    std::vector<int> leaves;
    if (decode.mode == DecodeMode::fet_single_path) {
        for (int t = 0; t < schema.size(); ++t) {
            if (schema.is_leaf(schema.labels()[t])) leaves.push_back(t);
        }
        if (leaves.empty()) throw ValidationError("schema has no leaf labels");
    }

    for (int r = 0; r < scores.scores.rows; ++r) {
        std::set<int> picked;
        if (decode.mode == DecodeMode::fet_single_path) {
            int best = leaves[0];
            for (int t : leaves) {
                if (scores.score(r, t) > scores.score(r, best)) best = t;
            }
            picked.insert(best);
            out.labels.push_back(closure_sorted(picked, schema, true));
            continue;
        }
        for (int t = 0; t < schema.size(); ++t) {
            if (scores.score(r, t) > cutoff) picked.insert(t);
        }
        if (picked.empty() && decode.nonempty_fallback) {
            int best = 0;
            for (int t = 1; t < schema.size(); ++t) {
                if (scores.score(r, t) > scores.score(r, best)) best = t;
            }
            picked.insert(best);
        }
        const bool closure =
            decode.mode == DecodeMode::fet_multilabel && decode.hierarchical_closure;
        out.labels.push_back(closure_sorted(picked, schema, closure));
    }
    return out;
}

PredictionSet predict(const Checkpoint& ckpt, const std::vector<MentionExample>& examples,
                      const TypeSchema& schema, const LabelMapping& mapping,
                      const DecodeConfig& decode) {
    decode.validate();
    if (!mapping.covers(schema)) {
        throw MappingError("mapping does not cover the schema; cannot score");
    }
    TypingModel model(ckpt.model, ckpt.vocab.size(), 0);
    load_parameters(model, ckpt);
    WordTokenizer tok(ckpt.vocab);
    SequenceBuilder builder(tok, ckpt.model.max_len);
    TypeTokenBatch batch = pad_type_batch(mapping.phrases_in_schema_order(schema), tok);
    batch.labels = schema.labels();
    const ScoreMatrix scores = score_examples(model, builder, examples, batch);
    return decode_scores(scores, schema, decode);
}

namespace {

size_t intersection_size(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    const std::set<std::string> sa(a.begin(), a.end());
    size_t n = 0;
    for (const auto& s : std::set<std::string>(b.begin(), b.end())) {
        if (sa.count(s)) ++n;
    }
    return n;
}

void check_aligned(const std::vector<std::vector<std::string>>& preds,
                   const std::vector<std::vector<std::string>>& golds) {
    if (preds.size() != golds.size()) {
        throw std::invalid_argument("metrics: prediction/gold counts differ");
    }
    for (const auto& g : golds) {
        if (g.empty()) throw std::invalid_argument("metrics: empty gold label set");
    }
}

} // namespace

PRF ufet_macro_prf(const std::vector<std::vector<std::string>>& preds,
                   const std::vector<std::vector<std::string>>& golds) {
    check_aligned(preds, golds);
    double p_sum = 0.0;
    size_t p_count = 0;
    double r_sum = 0.0;
    for (size_t i = 0; i < preds.size(); ++i) {
        const std::set<std::string> pred(preds[i].begin(), preds[i].end());
        const std::set<std::string> gold(golds[i].begin(), golds[i].end());
        const size_t hit = intersection_size(preds[i], golds[i]);
        if (!pred.empty()) {
            p_sum += static_cast<double>(hit) / pred.size();
            ++p_count;
        }
        r_sum += static_cast<double>(hit) / gold.size();
    }
    PRF out;
    out.precision = p_count ? p_sum / p_count : 0.0;
    out.recall = preds.empty() ? 0.0 : r_sum / preds.size();
    out.f1 = (out.precision + out.recall) > 0.0
                 ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;
    return out;
}

FetMetrics fet_metrics(const std::vector<std::vector<std::string>>& preds,
                       const std::vector<std::vector<std::string>>& golds) {
    check_aligned(preds, golds);
    size_t exact = 0;
    size_t tp = 0, pred_total = 0, gold_total = 0;
    double f1_sum = 0.0;
    for (size_t i = 0; i < preds.size(); ++i) {
        const std::set<std::string> pred(preds[i].begin(), preds[i].end());
        const std::set<std::string> gold(golds[i].begin(), golds[i].end());
        const size_t hit = intersection_size(preds[i], golds[i]);
        if (pred == gold) ++exact;
        tp += hit;
        pred_total += pred.size();
        gold_total += gold.size();
        f1_sum += 2.0 * static_cast<double>(hit) / (pred.size() + gold.size());
    }
    FetMetrics out;
    if (!preds.empty()) {
        out.strict_acc = static_cast<double>(exact) / preds.size();
        out.macro_f1 = f1_sum / preds.size();
        const double micro_p = pred_total ? static_cast<double>(tp) / pred_total : 0.0;
        const double micro_r = gold_total ? static_cast<double>(tp) / gold_total : 0.0;
        out.micro_f1 =
            (micro_p + micro_r) > 0.0 ? 2.0 * micro_p * micro_r / (micro_p + micro_r) : 0.0;
    }
    return out;
}

ProtocolResult run_fewshot_protocol(const Checkpoint& start,
                                    const std::vector<MentionExample>& pool,
                                    const std::vector<MentionExample>& test,
                                    const TypeSchema& schema, const LabelMapping& mapping, int k,
                                    const std::vector<uint64_t>& seeds,
                                    const TrainConfig& finetune_cfg, const DecodeConfig& decode) {
    if (seeds.empty()) throw ConfigError("run_fewshot_protocol: need at least one seed");
    std::vector<std::vector<std::string>> golds;
    golds.reserve(test.size());
    for (const auto& ex : test) golds.push_back(ex.labels);

    ProtocolResult result;
    for (uint64_t seed : seeds) {
        FewShotSplit split = sample_fewshot(pool, schema, k, seed);
        TrainConfig cfg = finetune_cfg;
        cfg.stage = Stage::finetune_fet;
        cfg.seed = seed;
        const TrainResult ft = finetune_fet(start, split, schema, mapping, cfg);
        const PredictionSet preds = predict(ft.checkpoint, test, schema, mapping, decode);
        result.runs.push_back(ProtocolRun{seed, fet_metrics(preds.labels, golds)});
    }
    FetMetrics mean;
    for (const auto& run : result.runs) {
        mean.strict_acc += run.metrics.strict_acc;
        mean.micro_f1 += run.metrics.micro_f1;
        mean.macro_f1 += run.metrics.macro_f1;
    }
    mean.strict_acc /= result.runs.size();
    mean.micro_f1 /= result.runs.size();
    mean.macro_f1 /= result.runs.size();
    result.mean = mean;
    return result;
}

std::string metrics_report_json(const ProtocolResult& result) {
    json j;
    j["per_seed"] = json::array();
    for (const auto& run : result.runs) {
        json r;
        r["seed"] = run.seed;
        r["strict_acc"] = run.metrics.strict_acc;
        r["micro_f1"] = run.metrics.micro_f1;
        r["macro_f1"] = run.metrics.macro_f1;
        j["per_seed"].push_back(r);
    }
    j["mean"]["strict_acc"] = result.mean.strict_acc;
    j["mean"]["micro_f1"] = result.mean.micro_f1;
    j["mean"]["macro_f1"] = result.mean.macro_f1;
    return j.dump(2);
}

} // namespace typeforge
