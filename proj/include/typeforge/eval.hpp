#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "typeforge/corpus.hpp"
#include "typeforge/model.hpp"
#include "typeforge/schema.hpp"
#include "typeforge/train.hpp"

namespace typeforge {

enum class DecodeMode { ufet_multilabel, fet_multilabel, fet_single_path };

const char* to_string(DecodeMode mode);
DecodeMode decode_mode_from_string(const std::string& s);

struct DecodeConfig {
    DecodeMode mode = DecodeMode::ufet_multilabel;
    double threshold = 0.5;          // probability cutoff; ignored by fet_single_path
    bool nonempty_fallback = true;   // emit the argmax label when nothing clears the cutoff
    bool hierarchical_closure = true; // fet_multilabel: add ancestors of emitted labels

    void validate() const;
    static DecodeConfig for_schema(const TypeSchema& schema);
};

struct PredictionSet {
    std::vector<std::vector<std::string>> labels; // per example, schema order
    nn::Mat scores;                               // B x |T| raw scores
};

PredictionSet decode_scores(const ScoreMatrix& scores, const TypeSchema& schema,
                            const DecodeConfig& decode);

PredictionSet predict(const Checkpoint& ckpt, const std::vector<MentionExample>& examples,
                      const TypeSchema& schema, const LabelMapping& mapping,
                      const DecodeConfig& decode);

struct PRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Per-example precision/recall averaged over examples; precision averages
// only examples with at least one prediction. F1 is the harmonic mean of
// the two averages.
PRF ufet_macro_prf(const std::vector<std::vector<std::string>>& preds,
                   const std::vector<std::vector<std::string>>& golds);

struct FetMetrics {
    double strict_acc = 0.0;
    double micro_f1 = 0.0;
    double macro_f1 = 0.0; // mean of per-example F1
};

FetMetrics fet_metrics(const std::vector<std::vector<std::string>>& preds,
                       const std::vector<std::vector<std::string>>& golds);

struct ProtocolRun {
    uint64_t seed = 0;
    FetMetrics metrics;
};

struct ProtocolResult {
    std::vector<ProtocolRun> runs;
    FetMetrics mean;
};

// For each seed: sample a k-shot split from `pool`, fine-tune from `start`,
// evaluate on the fixed `test` set. Reports per-seed and mean metrics.
ProtocolResult run_fewshot_protocol(const Checkpoint& start,
                                    const std::vector<MentionExample>& pool,
                                    const std::vector<MentionExample>& test,
                                    const TypeSchema& schema, const LabelMapping& mapping, int k,
                                    const std::vector<uint64_t>& seeds,
                                    const TrainConfig& finetune_cfg, const DecodeConfig& decode);

std::string metrics_report_json(const ProtocolResult& result);

} // namespace typeforge
