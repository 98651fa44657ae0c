#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "typeforge/corpus.hpp"
#include "typeforge/model.hpp"
#include "typeforge/objectives.hpp"
#include "typeforge/schema.hpp"
#include "typeforge/tokenizer.hpp"

namespace typeforge {

enum class Stage { pretrain_ufet, finetune_fet };

const char* to_string(Stage stage);
Stage stage_from_string(const std::string& s);

struct TrainConfig {
    Stage stage = Stage::pretrain_ufet;
    double lambda_mlm = 0.1;
    double lambda_nwp = 0.1;
    double learning_rate = 1e-3;
    int batch_size = 16;
    int max_steps = 1000;
    int eval_every = 100;
    int patience = 0; // early-stop patience in dev evaluations; 0 trains to max_steps
    uint64_t seed = 7;
    double prompt_label_weight = 0.5;
    double mlm_rate = 0.15;
    double grad_clip = 1.0;

    void validate() const;
    // Fine-tuning optimizes the typing loss alone; this zeroes the
    // auxiliary-loss weights for that stage.
    TrainConfig normalized() const;
    std::string to_json_text() const;
    static TrainConfig from_json_text(const std::string& text);
};

struct StepRecord {
    int step = 0;
    LossBundle losses;
};

// Everything needed to rebuild and rerun a trained model: configuration,
// vocabulary, the schema/mapping it was trained against, and all parameter
// tensors in registration order.
struct Checkpoint {
    ModelConfig model;
    TrainConfig train;
    Vocabulary vocab;
    TypeSchema schema;
    LabelMapping mapping;
    std::vector<std::pair<std::string, nn::Mat>> params;
};

struct TrainHooks {
    // Runs at every evaluation point; dev_f1 is -1 when no dev set was given.
    // Return false to stop training.
    std::function<bool(int step, double dev_f1, const TypingModel& model)> on_eval;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<StepRecord> log;
    double best_dev_f1 = -1.0;
    int best_step = -1;
};

// Vocabulary over the corpus text plus the type phrases, so type tokens are
// never unknown at pretraining time.
Vocabulary build_vocabulary(const std::vector<MentionExample>& examples,
                            const std::vector<std::string>& phrases);

// Multi-task pretraining on a free-form schema: typing loss plus weighted
// masked-token and neighbor-word objectives, Adam, deterministic batching,
// best-dev-macro-F1 model selection when a dev set is given.
TrainResult pretrain_ufet(const std::vector<MentionExample>& train,
                          const std::vector<MentionExample>* dev, const TypeSchema& schema,
                          const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                          const Vocabulary* vocab = nullptr,
                          const Checkpoint* warm_start = nullptr,
                          const TrainHooks* hooks = nullptr);

// Fine-tunes every parameter of `start` on a k-shot split of a hierarchical
// schema, scoring labels through their mapped phrases. Typing loss only.
TrainResult finetune_fet(const Checkpoint& start, const FewShotSplit& split,
                         const TypeSchema& schema, const LabelMapping& mapping,
                         const TrainConfig& train_cfg, const TrainHooks* hooks = nullptr);

Checkpoint make_checkpoint(const TypingModel& model, const TrainConfig& train_cfg,
                           const Vocabulary& vocab, const TypeSchema& schema,
                           const LabelMapping& mapping);
// Fresh random initialization packaged as a checkpoint (baselines, warm starts).
Checkpoint random_init_checkpoint(const ModelConfig& model_cfg, const Vocabulary& vocab,
                                  const TypeSchema& schema, const LabelMapping& mapping,
                                  uint64_t seed);
// Copies checkpoint tensors into a freshly constructed model. The name sets
// must match exactly and every shape must agree; offenders are listed.
void load_parameters(TypingModel& model, const Checkpoint& ckpt);

// Checkpoint directory layout: manifest.json + params.bin (little-endian
// f64) + config.json + vocab.txt + schema.txt + mapping.tsv. Round trips
// bit-exactly.
void save_checkpoint(const Checkpoint& ckpt, const std::string& dir);
Checkpoint load_checkpoint(const std::string& dir);

void write_train_log(const std::vector<StepRecord>& log, const std::string& path);

} // namespace typeforge
