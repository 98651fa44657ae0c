#include "typeforge/train.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "typeforge/errors.hpp"
#include "typeforge/eval.hpp"
#include "typeforge/rng.hpp"

namespace typeforge {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(Stage stage) {
    return stage == Stage::pretrain_ufet ? "pretrain_ufet" : "finetune_fet";
}

Stage stage_from_string(const std::string& s) {
    if (s == "pretrain_ufet") return Stage::pretrain_ufet;
    if (s == "finetune_fet") return Stage::finetune_fet;
    throw ConfigError("unknown stage: " + s);
}

void TrainConfig::validate() const {
    if (lambda_mlm < 0 || lambda_nwp < 0) throw ConfigError("loss weights must be >= 0");
    if (learning_rate <= 0) throw ConfigError("learning_rate must be positive");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
    if (eval_every < 0) throw ConfigError("eval_every must be >= 0");
    if (patience < 0) throw ConfigError("patience must be >= 0");
    if (mlm_rate <= 0 || mlm_rate >= 1) throw ConfigError("mlm_rate must be in (0, 1)");
    if (prompt_label_weight <= 0 || prompt_label_weight > 1) {
        throw ConfigError("prompt_label_weight must be in (0, 1]");
    }
    if (grad_clip <= 0) throw ConfigError("grad_clip must be positive");
}

TrainConfig TrainConfig::normalized() const {
    TrainConfig out = *this;
    if (out.stage == Stage::finetune_fet) {
        out.lambda_mlm = 0.0;
        out.lambda_nwp = 0.0;
    }
    return out;
}

std::string TrainConfig::to_json_text() const {
    json j;
    j["stage"] = to_string(stage);
    j["lambda_mlm"] = lambda_mlm;
    j["lambda_nwp"] = lambda_nwp;
    j["learning_rate"] = learning_rate;
    j["batch_size"] = batch_size;
    j["max_steps"] = max_steps;
    j["eval_every"] = eval_every;
    j["patience"] = patience;
    j["seed"] = seed;
    j["prompt_label_weight"] = prompt_label_weight;
    j["mlm_rate"] = mlm_rate;
    j["grad_clip"] = grad_clip;
    return j.dump(2);
}

TrainConfig TrainConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("train config: ") + e.what());
    }
    TrainConfig cfg;
    if (j.contains("stage")) cfg.stage = stage_from_string(j["stage"].get<std::string>());
    cfg.lambda_mlm = j.value("lambda_mlm", cfg.lambda_mlm);
    cfg.lambda_nwp = j.value("lambda_nwp", cfg.lambda_nwp);
    cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.max_steps = j.value("max_steps", cfg.max_steps);
    cfg.eval_every = j.value("eval_every", cfg.eval_every);
    cfg.patience = j.value("patience", cfg.patience);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.prompt_label_weight = j.value("prompt_label_weight", cfg.prompt_label_weight);
    cfg.mlm_rate = j.value("mlm_rate", cfg.mlm_rate);
    cfg.grad_clip = j.value("grad_clip", cfg.grad_clip);
    cfg.validate();
    return cfg;
}

Vocabulary build_vocabulary(const std::vector<MentionExample>& examples,
                            const std::vector<std::string>& phrases) {
    std::vector<std::string> texts;
    texts.reserve(examples.size() + phrases.size());
    for (const auto& ex : examples) {
        std::string text;
        auto append = [&text](const std::vector<std::string>& words) {
            for (const auto& w : words) {
                if (!text.empty()) text.push_back(' ');
                text += w;
            }
        };
        append(ex.left_context);
        append(ex.mention);
        append(ex.right_context);
        texts.push_back(std::move(text));
    }
    for (const auto& p : phrases) texts.push_back(p);
    return Vocabulary::build(texts);
}

Checkpoint make_checkpoint(const TypingModel& model, const TrainConfig& train_cfg,
                           const Vocabulary& vocab, const TypeSchema& schema,
                           const LabelMapping& mapping) {
    Checkpoint ckpt;
    ckpt.model = model.config();
    ckpt.train = train_cfg;
    ckpt.vocab = vocab;
    ckpt.schema = schema;
    ckpt.mapping = mapping;
    for (const auto& p : model.params().all()) {
        ckpt.params.emplace_back(p->name, p->value);
    }
    return ckpt;
}

Checkpoint random_init_checkpoint(const ModelConfig& model_cfg, const Vocabulary& vocab,
                                  const TypeSchema& schema, const LabelMapping& mapping,
                                  uint64_t seed) {
    TypingModel model(model_cfg, vocab.size(), seed);
    TrainConfig cfg;
    cfg.seed = seed;
    return make_checkpoint(model, cfg, vocab, schema, mapping);
}

void load_parameters(TypingModel& model, const Checkpoint& ckpt) {
    std::vector<std::string> missing, extra, mismatched;
    for (const auto& p : model.params().all()) {
        bool found = false;
        for (const auto& [name, value] : ckpt.params) {
            if (name != p->name) continue;
            found = true;
            if (!p->value.same_shape(value)) {
                mismatched.push_back(name + " expected " + std::to_string(p->value.rows) + "x" +
                                     std::to_string(p->value.cols) + " got " +
                                     std::to_string(value.rows) + "x" + std::to_string(value.cols));
            }
            break;
        }
        if (!found) missing.push_back(p->name);
    }
    for (const auto& [name, value] : ckpt.params) {
        if (!model.params().find(name)) extra.push_back(name);
    }
    if (!missing.empty() || !extra.empty() || !mismatched.empty()) {
        std::string msg = "checkpoint incompatible with model:";
        for (const auto& n : missing) msg += " missing " + n + ";";
        for (const auto& n : extra) msg += " unexpected " + n + ";";
        for (const auto& n : mismatched) msg += " shape " + n + ";";
        throw CheckpointError(msg);
    }
    for (const auto& [name, value] : ckpt.params) {
        model.params().find(name)->value = value;
    }
}

namespace {

double evaluate_dev_f1(const TypingModel& model, const SequenceBuilder& builder,
                       const std::vector<MentionExample>& dev, const TypeTokenBatch& batch,
                       const TypeSchema& schema) {
    const ScoreMatrix scores = score_examples(model, builder, dev, batch);
    const DecodeConfig decode = DecodeConfig::for_schema(schema);
    const PredictionSet preds = decode_scores(scores, schema, decode);
    std::vector<std::vector<std::string>> golds;
    golds.reserve(dev.size());
    for (const auto& ex : dev) golds.push_back(ex.labels);
    if (schema.kind() == SchemaKind::free_form) {
        return ufet_macro_prf(preds.labels, golds).f1;
    }
    return fet_metrics(preds.labels, golds).macro_f1;
}

std::vector<nn::Mat> snapshot_values(const nn::ParameterStore& store) {
    std::vector<nn::Mat> out;
    out.reserve(store.all().size());
    for (const auto& p : store.all()) out.push_back(p->value);
    return out;
}

void restore_values(nn::ParameterStore& store, const std::vector<nn::Mat>& values) {
    for (size_t i = 0; i < store.all().size(); ++i) store.all()[i]->value = values[i];
}

TrainResult run_training(TypingModel& model, const Vocabulary& vocab, const TypeSchema& schema,
                         const LabelMapping& mapping,
                         const std::vector<MentionExample>& train,
                         const std::vector<MentionExample>* dev, const TrainConfig& cfg,
                         const TrainHooks* hooks) {
    if (train.empty()) throw InputError("no training examples");
    if (!mapping.covers(schema)) throw MappingError("mapping does not cover the schema");
    const bool pretrain = cfg.stage == Stage::pretrain_ufet;

    WordTokenizer tok(vocab);
    SequenceBuilder builder(tok, model.config().max_len);
    TypeTokenBatch type_batch = pad_type_batch(mapping.phrases_in_schema_order(schema), tok);
    type_batch.labels = schema.labels();

    nn::Adam adam(model.params().all(), cfg.learning_rate);
    Rng order_rng(mix_seed(cfg.seed, 0x0DE4ull));
    const size_t n = train.size();
    std::vector<size_t> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = i;
    size_t cursor = n; // forces a shuffle on the first step

    TrainResult result;
    std::vector<nn::Mat> best_values;
    int rounds_since_best = 0;

    for (int step = 1; step <= cfg.max_steps; ++step) {
        if (cursor >= n) {
            order_rng.shuffle(perm);
            cursor = 0;
        }
        const size_t take = std::min(static_cast<size_t>(cfg.batch_size), n - cursor);
        std::vector<size_t> batch_idx(perm.begin() + cursor, perm.begin() + cursor + take);
        cursor += take;

        model.params().zero_grads();
        nn::Tape tape;
        std::vector<ModelInput> inputs;
        std::vector<const MentionExample*> batch_examples;
        inputs.reserve(take);
        batch_examples.reserve(take);
        for (size_t idx : batch_idx) {
            const MentionExample& ex = train[idx];
            batch_examples.push_back(&ex);
            ModelInput input = builder.build_et_input(ex);
            if (pretrain) {
                input = builder.apply_mlm_corruption(input, cfg.mlm_rate,
                                                     mix_seed(cfg.seed, step, idx));
            }
            inputs.push_back(std::move(input));
        }

        const auto fwd = model.forward(tape, inputs, type_batch);
        const LabelMatrix labels =
            LabelMatrix::build(batch_examples, schema, cfg.prompt_label_weight);
        const nn::Var l_et = et_loss(tape, fwd.scores, labels);

        nn::Var l_mlm, l_nwp;
        if (pretrain) {
            std::vector<const ModelInput*> input_ptrs;
            input_ptrs.reserve(inputs.size());
            for (const auto& input : inputs) input_ptrs.push_back(&input);
            l_mlm = mlm_loss(tape, model, fwd.hidden, input_ptrs);

            std::vector<nn::Var> nwp_hidden;
            std::vector<int> slots, targets;
            for (const MentionExample* ex : batch_examples) {
                for (NwpSide side : {NwpSide::left, NwpSide::right}) {
                    auto instance = builder.build_nwp_input(*ex, side);
                    if (!instance) continue;
                    nwp_hidden.push_back(model.encode(tape, instance->input));
                    slots.push_back(instance->input.slot_index);
                    targets.push_back(instance->target_id);
                }
            }
            l_nwp = nwp_loss(tape, model, nwp_hidden, slots, targets);
        }

        const double lambda_mlm = pretrain ? cfg.lambda_mlm : 0.0;
        const double lambda_nwp = pretrain ? cfg.lambda_nwp : 0.0;
        const nn::Var total = total_loss(tape, l_et, l_mlm, l_nwp, lambda_mlm, lambda_nwp);
        const LossBundle bundle =
            make_loss_bundle(tape.scalar(l_et), l_mlm.valid() ? tape.scalar(l_mlm) : 0.0,
                             l_nwp.valid() ? tape.scalar(l_nwp) : 0.0, lambda_mlm, lambda_nwp);
        if (!std::isfinite(bundle.total)) {
            std::string ids;
            for (size_t idx : batch_idx) ids += " " + std::to_string(idx);
            throw Error("non-finite loss at step " + std::to_string(step) +
                        ", batch example indices:" + ids);
        }
        result.log.push_back(StepRecord{step, bundle});

        tape.backward(total);
        nn::clip_global_grad_norm(model.params().all(), cfg.grad_clip);
        adam.step();

        if (cfg.eval_every > 0 && step % cfg.eval_every == 0) {
            double f1 = -1.0;
            bool stop = false;
            if (dev && !dev->empty()) {
                f1 = evaluate_dev_f1(model, builder, *dev, type_batch, schema);
                if (f1 > result.best_dev_f1) {
                    result.best_dev_f1 = f1;
                    result.best_step = step;
                    best_values = snapshot_values(model.params());
                    rounds_since_best = 0;
                } else if (cfg.patience > 0 && ++rounds_since_best >= cfg.patience) {
                    stop = true;
                }
            }
            if (hooks && hooks->on_eval && !hooks->on_eval(step, f1, model)) stop = true;
            if (stop) break;
        }
    }

    if (!best_values.empty()) restore_values(model.params(), best_values);
    result.checkpoint = make_checkpoint(model, cfg, vocab, schema, mapping);
    return result;
}

} // namespace

TrainResult pretrain_ufet(const std::vector<MentionExample>& train,
                          const std::vector<MentionExample>* dev, const TypeSchema& schema,
                          const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                          const Vocabulary* vocab, const Checkpoint* warm_start,
                          const TrainHooks* hooks) {
    TrainConfig cfg = train_cfg.normalized();
    cfg.validate();
    if (cfg.stage != Stage::pretrain_ufet) throw ConfigError("pretrain_ufet: wrong stage");
    if (schema.kind() != SchemaKind::free_form) {
        throw ValidationError("pretrain_ufet expects a free-form schema");
    }
    const LabelMapping mapping = build_phrase_table(schema);

    Vocabulary built;
    if (!vocab) {
        built = build_vocabulary(train, mapping.phrases_in_schema_order(schema));
        vocab = &built;
    }
    TypingModel model(model_cfg, vocab->size(), cfg.seed);
    if (warm_start) {
        if (!(warm_start->vocab == *vocab)) {
            throw CheckpointError("warm start vocabulary differs from the training vocabulary");
        }
        load_parameters(model, *warm_start);
    }
    return run_training(model, *vocab, schema, mapping, train, dev, cfg, hooks);
}

TrainResult finetune_fet(const Checkpoint& start, const FewShotSplit& split,
                         const TypeSchema& schema, const LabelMapping& mapping,
                         const TrainConfig& train_cfg, const TrainHooks* hooks) {
    TrainConfig cfg = train_cfg.normalized();
    cfg.validate();
    if (cfg.stage != Stage::finetune_fet) throw ConfigError("finetune_fet: wrong stage");
    if (schema.kind() != SchemaKind::hierarchical) {
        throw ValidationError("finetune_fet expects a hierarchical schema");
    }
    if (split.train.empty()) throw InputError("finetune_fet: empty training split");
    if (!mapping.covers(schema)) throw MappingError("mapping does not cover the schema");

    TypingModel model(start.model, start.vocab.size(), cfg.seed);
    load_parameters(model, start);
    return run_training(model, start.vocab, schema, mapping, split.train,
                        split.dev.empty() ? nullptr : &split.dev, cfg, hooks);
}

// ---------------------------------------------------------------------------
// Checkpoint serialization

namespace {

void write_f64_le(std::ostream& out, double v) {
    const uint64_t bits = std::bit_cast<uint64_t>(v);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    out.write(bytes, 8);
}

double read_f64_le(std::istream& in) {
    char bytes[8];
    in.read(bytes, 8);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
        bits |= static_cast<uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
    }
    return std::bit_cast<double>(bits);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& dir) {
    fs::create_directories(dir);
    const fs::path base(dir);

    json manifest;
    manifest["format"] = "typeforge-checkpoint-v1";
    manifest["params"] = json::array();
    size_t offset = 0;
    for (const auto& [name, value] : ckpt.params) {
        json p;
        p["name"] = name;
        p["rows"] = value.rows;
        p["cols"] = value.cols;
        p["dtype"] = "f64";
        p["offset"] = offset;
        manifest["params"].push_back(p);
        offset += value.size() * 8;
    }
    manifest["blob_bytes"] = offset;
    {
        std::ofstream out(base / "manifest.json");
        if (!out) throw CheckpointError("cannot write manifest.json in " + dir);
        out << manifest.dump(2) << "\n";
    }
    {
        std::ofstream out(base / "params.bin", std::ios::binary);
        if (!out) throw CheckpointError("cannot write params.bin in " + dir);
        for (const auto& [name, value] : ckpt.params) {
            for (double v : value.a) write_f64_le(out, v);
        }
    }
    {
        json cfg;
        cfg["model"] = json::parse(ckpt.model.to_json_text());
        cfg["train"] = json::parse(ckpt.train.to_json_text());
        cfg["schema_kind"] = to_string(ckpt.schema.kind());
        cfg["schema_multi_label"] = ckpt.schema.multi_label();
        std::ofstream out(base / "config.json");
        if (!out) throw CheckpointError("cannot write config.json in " + dir);
        out << cfg.dump(2) << "\n";
    }
    ckpt.vocab.save((base / "vocab.txt").string());
    save_schema(ckpt.schema, (base / "schema.txt").string());
    save_mapping_tsv(ckpt.mapping, ckpt.schema, (base / "mapping.tsv").string());
}

Checkpoint load_checkpoint(const std::string& dir) {
    const fs::path base(dir);
    json manifest, cfg;
    try {
        manifest = json::parse(slurp(base / "manifest.json"));
        cfg = json::parse(slurp(base / "config.json"));
    } catch (const json::parse_error& e) {
        throw CheckpointError(std::string("corrupt checkpoint metadata: ") + e.what());
    }
    if (manifest.value("format", "") != "typeforge-checkpoint-v1") {
        throw CheckpointError("unknown checkpoint format in " + dir);
    }

    Checkpoint ckpt;
    ckpt.model = ModelConfig::from_json_text(cfg["model"].dump());
    ckpt.train = TrainConfig::from_json_text(cfg["train"].dump());
    ckpt.vocab = Vocabulary::load((base / "vocab.txt").string());
    const SchemaKind kind = schema_kind_from_string(cfg.value("schema_kind", "free_form"));
    ckpt.schema = load_schema((base / "schema.txt").string(), kind);
    ckpt.schema.set_multi_label(cfg.value("schema_multi_label", true));
    ckpt.mapping = build_phrase_table(ckpt.schema, load_overrides_tsv((base / "mapping.tsv").string()));

    std::ifstream blob(base / "params.bin", std::ios::binary);
    if (!blob) throw CheckpointError("cannot open params.bin in " + dir);
    blob.seekg(0, std::ios::end);
    const size_t blob_bytes = static_cast<size_t>(blob.tellg());
    blob.seekg(0);
    if (blob_bytes != manifest.value("blob_bytes", size_t{0})) {
        throw CheckpointError("params.bin length does not match manifest in " + dir);
    }
    size_t expected_offset = 0;
    for (const auto& p : manifest["params"]) {
        const std::string name = p.value("name", "");
        const int rows = p.value("rows", 0);
        const int cols = p.value("cols", 0);
        if (p.value("dtype", "") != "f64") throw CheckpointError("unsupported dtype for " + name);
        if (p.value("offset", size_t{0}) != expected_offset) {
            throw CheckpointError("manifest offsets are inconsistent at " + name);
        }
        nn::Mat value(rows, cols);
        for (double& v : value.a) v = read_f64_le(blob);
        if (!blob) throw CheckpointError("params.bin truncated at " + name);
        expected_offset += value.size() * 8;
        ckpt.params.emplace_back(name, std::move(value));
    }
    if (expected_offset != blob_bytes) {
        throw CheckpointError("params.bin has trailing bytes beyond the manifest");
    }
    return ckpt;
}

void write_train_log(const std::vector<StepRecord>& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write training log: " + path);
    for (const auto& rec : log) {
        json j;
        j["step"] = rec.step;
        j["l_et"] = rec.losses.l_et;
        j["l_mlm"] = rec.losses.l_mlm;
        j["l_nwp"] = rec.losses.l_nwp;
        j["loss"] = rec.losses.total;
        out << j.dump() << "\n";
    }
}

} // namespace typeforge
