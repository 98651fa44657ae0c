// typeforge: pretrain an entity-typing model on free-form type supervision,
// then adapt it to hierarchical type schemas from a handful of examples.
//
// Commands: gen-synth, map-labels, pretrain-ufet, sample-fewshot,
// finetune-fet, predict, evaluate. Exit codes: 0 success, 1 domain error,
// 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "typeforge/corpus.hpp"
#include "typeforge/errors.hpp"
#include "typeforge/eval.hpp"
#include "typeforge/model.hpp"
#include "typeforge/schema.hpp"
#include "typeforge/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace typeforge;

namespace {

// Flat dotted-key configuration: "model.*" keys feed ModelConfig,
// "train.*" keys feed TrainConfig, "decode.*" keys feed DecodeConfig.
// --set overrides win over the config file; --seed wins over train.seed.
struct FlatConfig {
    std::map<std::string, json> entries;

    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open config file: " + path);
        json j;
        try {
            in >> j;
        } catch (const json::parse_error& e) {
            throw ParseError("config " + path + ": " + e.what());
        }
        if (!j.is_object()) throw ConfigError("config must be a JSON object of dotted keys");
        for (const auto& [key, value] : j.items()) entries[key] = value;
    }

    void apply_overrides(const std::vector<std::string>& overrides) {
        for (const auto& kv : overrides) {
            const size_t eq = kv.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("override must look like key=value: " + kv);
            }
            json value;
            try {
                value = json::parse(kv.substr(eq + 1));
            } catch (const json::parse_error&) {
                value = kv.substr(eq + 1); // plain string
            }
            entries[kv.substr(0, eq)] = value;
        }
    }

    void check_known_keys() const {
        static const std::vector<std::string> known = {
            "model.hidden_size", "model.layers", "model.heads", "model.type_heads",
            "model.max_len", "model.ffn_multiple", "model.scale_per_head",
            "model.mention_identity_act", "model.layer_norm_eps", "model.init_std",
            "train.stage", "train.lambda_mlm", "train.lambda_nwp", "train.learning_rate",
            "train.batch_size", "train.max_steps", "train.eval_every", "train.patience",
            "train.seed", "train.prompt_label_weight", "train.mlm_rate", "train.grad_clip",
            "decode.mode", "decode.threshold", "decode.nonempty_fallback",
            "decode.hierarchical_closure"};
        for (const auto& [key, value] : entries) {
            if (std::find(known.begin(), known.end(), key) == known.end()) {
                throw ConfigError("unknown config key: " + key);
            }
        }
    }

    json section(const std::string& prefix) const {
        json out = json::object();
        for (const auto& [key, value] : entries) {
            if (key.rfind(prefix + ".", 0) == 0) out[key.substr(prefix.size() + 1)] = value;
        }
        return out;
    }

    ModelConfig model_config() const {
        json merged = json::parse(ModelConfig{}.to_json_text());
        const json overlay = section("model");
        for (const auto& [key, value] : overlay.items()) merged[key] = value;
        return ModelConfig::from_json_text(merged.dump());
    }

    TrainConfig train_config() const {
        json merged = json::parse(TrainConfig{}.to_json_text());
        const json overlay = section("train");
        for (const auto& [key, value] : overlay.items()) merged[key] = value;
        return TrainConfig::from_json_text(merged.dump());
    }

    DecodeConfig decode_config(const TypeSchema& schema) const {
        DecodeConfig decode = DecodeConfig::for_schema(schema);
        const json d = section("decode");
        if (d.contains("mode")) decode.mode = decode_mode_from_string(d["mode"].get<std::string>());
        if (d.contains("threshold")) decode.threshold = d["threshold"].get<double>();
        if (d.contains("nonempty_fallback")) {
            decode.nonempty_fallback = d["nonempty_fallback"].get<bool>();
        }
        if (d.contains("hierarchical_closure")) {
            decode.hierarchical_closure = d["hierarchical_closure"].get<bool>();
        }
        decode.validate();
        return decode;
    }

    json resolved() const {
        json out = json::object();
        for (const auto& [key, value] : entries) out[key] = value;
        return out;
    }
};

void write_snapshot(const fs::path& dir, const std::string& command, const json& resolved,
                    const std::map<std::string, std::string>& inputs) {
    fs::create_directories(dir);
    json j;
    j["command"] = command;
    j["config"] = resolved;
    j["inputs"] = json::object();
    for (const auto& [key, value] : inputs) {
        if (!value.empty()) j["inputs"][key] = value;
    }
    std::ofstream out(dir / "resolved_config.json");
    out << j.dump(2) << "\n";
}

fs::path snapshot_dir_for(const std::string& out_path) {
    const fs::path parent = fs::path(out_path).parent_path();
    return parent.empty() ? fs::path(".") : parent;
}

SchemaKind detect_kind(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open schema file: " + path);
    std::string line;
    while (std::getline(in, line)) {
        const auto pos = line.find_first_not_of(" \t\r\n");
        if (pos == std::string::npos || line[pos] == '#') continue;
        return line[pos] == '/' ? SchemaKind::hierarchical : SchemaKind::free_form;
    }
    throw SchemaError("schema file has no labels: " + path);
}

// Vocabulary build with an optional on-disk cache keyed by the build inputs,
// controlled by the TYPEFORGE_CACHE directory.
Vocabulary cached_vocabulary(const std::vector<MentionExample>& examples,
                             const std::vector<std::string>& phrases) {
    const char* cache_dir = std::getenv("TYPEFORGE_CACHE");
    if (!cache_dir || !*cache_dir) return build_vocabulary(examples, phrases);

    uint64_t h = 1469598103934665603ull; // FNV-1a over the build inputs
    auto feed = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        h ^= 0xFF;
        h *= 1099511628211ull;
    };
    for (const auto& ex : examples) {
        for (const auto& w : ex.left_context) feed(w);
        for (const auto& w : ex.mention) feed(w);
        for (const auto& w : ex.right_context) feed(w);
    }
    for (const auto& p : phrases) feed(p);

    char name[40];
    std::snprintf(name, sizeof(name), "vocab-%016llx.txt", static_cast<unsigned long long>(h));
    const fs::path path = fs::path(cache_dir) / name;
    if (fs::exists(path)) return Vocabulary::load(path.string());
    const Vocabulary vocab = build_vocabulary(examples, phrases);
    fs::create_directories(cache_dir);
    vocab.save(path.string());
    return vocab;
}

int run(int argc, char** argv) {
    CLI::App app{"entity typing: free-form pretraining and few-shot schema transfer"};
    app.require_subcommand(1);

    std::string config_path, schema_path, mapping_path, from_dir, train_path, dev_path, on_path,
        out_path, builtin_name = "demo", spec_path;
    std::vector<std::string> overrides;
    std::optional<uint64_t> seed;
    int k = 5, repeats = 1;
    std::optional<double> threshold;
    double test_fraction = 0.25, dev_fraction = 0.1;
    bool allow_deficient = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON config with flat dotted keys");
        cmd->add_option("--set", overrides, "config override key=value (repeatable)");
        cmd->add_option("--seed", seed, "random seed (overrides train.seed)");
    };

    CLI::App* gen = app.add_subcommand("gen-synth", "generate a synthetic corpus pair");
    add_common(gen);
    gen->add_option("--spec", spec_path, "generator spec JSON (types/templates/mentions)");
    gen->add_option("--builtin", builtin_name, "builtin world: demo or small");
    gen->add_option("--test-fraction", test_fraction, "held-out share of the hierarchical corpus");
    gen->add_option("--dev-fraction", dev_fraction, "dev share of the free-form corpus");
    gen->add_option("--out", out_path, "output directory")->required();

    CLI::App* map_cmd = app.add_subcommand("map-labels", "write the label -> phrase table");
    add_common(map_cmd);
    map_cmd->add_option("--schema", schema_path, "schema file")->required();
    map_cmd->add_option("--overrides", mapping_path, "overrides TSV");
    map_cmd->add_option("--out", out_path, "output TSV path")->required();

    CLI::App* pre = app.add_subcommand("pretrain-ufet", "pretrain on a free-form schema");
    add_common(pre);
    pre->add_option("--train", train_path, "training corpus JSONL")->required();
    pre->add_option("--dev", dev_path, "dev corpus JSONL for model selection");
    pre->add_option("--schema", schema_path, "free-form schema file")->required();
    pre->add_option("--out", out_path, "checkpoint output directory")->required();

    CLI::App* shot = app.add_subcommand("sample-fewshot", "build a k-shot train/dev split");
    add_common(shot);
    shot->add_option("--train", train_path, "pool corpus JSONL")->required();
    shot->add_option("--schema", schema_path, "schema file")->required();
    shot->add_option("--k", k, "examples per type in each of train and dev");
    shot->add_flag("--allow-deficient", allow_deficient, "warn instead of failing on rare types");
    shot->add_option("--out", out_path, "output directory")->required();

    CLI::App* fine = app.add_subcommand("finetune-fet", "fine-tune onto a hierarchical schema");
    add_common(fine);
    fine->add_option("--from", from_dir, "starting checkpoint directory")->required();
    fine->add_option("--train", train_path, "k-shot train JSONL")->required();
    fine->add_option("--dev", dev_path, "k-shot dev JSONL");
    fine->add_option("--schema", schema_path, "hierarchical schema file")->required();
    fine->add_option("--mapping", mapping_path, "label phrase overrides TSV");
    fine->add_option("--out", out_path, "checkpoint output directory")->required();

    CLI::App* pred = app.add_subcommand("predict", "write per-example label predictions");
    add_common(pred);
    pred->add_option("--from", from_dir, "checkpoint directory")->required();
    pred->add_option("--on", on_path, "input corpus JSONL")->required();
    pred->add_option("--schema", schema_path, "schema file (defaults to the checkpoint's)");
    pred->add_option("--mapping", mapping_path, "label phrase overrides TSV");
    pred->add_option("--threshold", threshold, "decode probability threshold");
    pred->add_option("--out", out_path, "predictions JSONL path")->required();

    CLI::App* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint on a labeled corpus");
    add_common(eval_cmd);
    eval_cmd->add_option("--from", from_dir, "checkpoint directory")->required();
    eval_cmd->add_option("--on", on_path, "labeled test corpus JSONL")->required();
    eval_cmd->add_option("--schema", schema_path, "schema file (defaults to the checkpoint's)");
    eval_cmd->add_option("--mapping", mapping_path, "label phrase overrides TSV");
    eval_cmd->add_option("--threshold", threshold, "decode probability threshold");
    eval_cmd->add_option("--train", train_path,
                         "few-shot pool JSONL; enables the repeated sample+finetune protocol");
    eval_cmd->add_option("--k", k, "examples per type for protocol runs");
    eval_cmd->add_option("--repeats", repeats, "number of protocol repetitions");
    eval_cmd->add_option("--out", out_path, "metrics JSON path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    FlatConfig cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    cfg.apply_overrides(overrides);
    cfg.check_known_keys();
    if (seed) cfg.entries["train.seed"] = *seed;

    auto overrides_map = [&]() {
        return mapping_path.empty() ? std::map<std::string, std::string>{}
                                    : load_overrides_tsv(mapping_path);
    };

    if (*gen) {
        const SyntheticSpec spec = spec_path.empty() ? SyntheticSpec::builtin(builtin_name)
                                                     : SyntheticSpec::from_json_file(spec_path);
        const uint64_t gen_seed = seed.value_or(7);
        if (test_fraction <= 0.0 || test_fraction >= 1.0) {
            throw ConfigError("test-fraction must be in (0, 1)");
        }
        if (dev_fraction < 0.0 || dev_fraction >= 1.0) {
            throw ConfigError("dev-fraction must be in [0, 1)");
        }
        const SyntheticCorpus corpus = generate_synthetic_corpus(spec, gen_seed);
        const fs::path out_dir(out_path);
        fs::create_directories(out_dir);

        const size_t n = corpus.ufet_examples.size();
        const size_t n_dev = static_cast<size_t>(n * dev_fraction);
        const size_t n_test = static_cast<size_t>(n * test_fraction);
        const std::vector<MentionExample> ufet_train(corpus.ufet_examples.begin(),
                                                     corpus.ufet_examples.end() - n_dev);
        const std::vector<MentionExample> ufet_dev(corpus.ufet_examples.end() - n_dev,
                                                   corpus.ufet_examples.end());
        const std::vector<MentionExample> fet_pool(corpus.fet_examples.begin(),
                                                   corpus.fet_examples.end() - n_test);
        const std::vector<MentionExample> fet_test(corpus.fet_examples.end() - n_test,
                                                   corpus.fet_examples.end());

        write_examples((out_dir / "ufet_train.jsonl").string(), ufet_train);
        if (!ufet_dev.empty()) write_examples((out_dir / "ufet_dev.jsonl").string(), ufet_dev);
        save_schema(corpus.ufet_schema, (out_dir / "ufet_schema.txt").string());
        write_examples((out_dir / "fet_pool.jsonl").string(), fet_pool);
        write_examples((out_dir / "fet_test.jsonl").string(), fet_test);
        save_schema(corpus.fet_schema, (out_dir / "fet_schema.txt").string());
        {
            std::ofstream spec_out(out_dir / "genspec.json");
            spec_out << spec.to_json_text() << "\n";
        }
        json resolved = cfg.resolved();
        resolved["gen.seed"] = gen_seed;
        resolved["gen.test_fraction"] = test_fraction;
        resolved["gen.dev_fraction"] = dev_fraction;
        write_snapshot(out_dir, "gen-synth", resolved, {{"spec", spec_path}});
        std::cout << "wrote " << ufet_train.size() << " free-form train / " << ufet_dev.size()
                  << " dev examples, " << fet_pool.size() << " hierarchical pool / "
                  << fet_test.size() << " test examples to " << out_path << "\n";
        return 0;
    }

    if (*map_cmd) {
        const TypeSchema schema = load_schema(schema_path, detect_kind(schema_path));
        const LabelMapping mapping = build_phrase_table(schema, overrides_map());
        for (const auto& [phrase, labels] : mapping.collisions) {
            std::cerr << "warning: phrase \"" << phrase << "\" is shared by";
            for (const auto& label : labels) std::cerr << " " << label;
            std::cerr << "\n";
        }
        save_mapping_tsv(mapping, schema, out_path);
        write_snapshot(snapshot_dir_for(out_path), "map-labels", cfg.resolved(),
                       {{"schema", schema_path}, {"overrides", mapping_path}});
        std::cout << "wrote " << mapping.entries.size() << " rows to " << out_path << "\n";
        return 0;
    }

    if (*pre) {
        const TypeSchema schema = load_schema(schema_path, SchemaKind::free_form);
        const auto train = read_examples(train_path, schema);
        std::vector<MentionExample> dev;
        if (!dev_path.empty()) dev = read_examples(dev_path, schema);

        const ModelConfig model_cfg = cfg.model_config();
        TrainConfig train_cfg = cfg.train_config();
        train_cfg.stage = Stage::pretrain_ufet;

        const LabelMapping mapping = build_phrase_table(schema);
        const Vocabulary vocab = cached_vocabulary(train, mapping.phrases_in_schema_order(schema));

        const TrainResult result =
            pretrain_ufet(train, dev.empty() ? nullptr : &dev, schema, model_cfg, train_cfg, &vocab);
        save_checkpoint(result.checkpoint, out_path);
        write_train_log(result.log, (fs::path(out_path) / "trainlog.jsonl").string());
        write_snapshot(out_path, "pretrain-ufet", cfg.resolved(),
                       {{"train", train_path}, {"dev", dev_path}, {"schema", schema_path}});
        std::cout << "pretrained for " << result.log.size() << " steps";
        if (result.best_step >= 0) {
            std::cout << "; best dev macro-F1 " << result.best_dev_f1 << " at step "
                      << result.best_step;
        }
        std::cout << "; checkpoint in " << out_path << "\n";
        return 0;
    }

    if (*shot) {
        const TypeSchema schema = load_schema(schema_path, detect_kind(schema_path));
        const auto pool = read_examples(train_path, schema);
        std::vector<std::string> warnings;
        const FewShotSplit split =
            sample_fewshot(pool, schema, k, seed.value_or(7), allow_deficient, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
        const fs::path out_dir(out_path);
        fs::create_directories(out_dir);
        write_examples((out_dir / "train.jsonl").string(), split.train);
        write_examples((out_dir / "dev.jsonl").string(), split.dev);
        json resolved = cfg.resolved();
        resolved["fewshot.k"] = k;
        resolved["fewshot.seed"] = split.seed;
        write_snapshot(out_dir, "sample-fewshot", resolved,
                       {{"train", train_path}, {"schema", schema_path}});
        std::cout << "sampled " << split.train.size() << " train / " << split.dev.size()
                  << " dev examples into " << out_path << "\n";
        return 0;
    }

    if (*fine) {
        const Checkpoint start = load_checkpoint(from_dir);
        const TypeSchema schema = load_schema(schema_path, SchemaKind::hierarchical);
        FewShotSplit split;
        split.train = read_examples(train_path, schema);
        if (!dev_path.empty()) split.dev = read_examples(dev_path, schema);
        const LabelMapping mapping = build_phrase_table(schema, overrides_map());

        TrainConfig train_cfg = cfg.train_config();
        train_cfg.stage = Stage::finetune_fet;
        const TrainResult result = finetune_fet(start, split, schema, mapping, train_cfg);
        save_checkpoint(result.checkpoint, out_path);
        write_train_log(result.log, (fs::path(out_path) / "trainlog.jsonl").string());
        write_snapshot(out_path, "finetune-fet", cfg.resolved(),
                       {{"from", from_dir},
                        {"train", train_path},
                        {"dev", dev_path},
                        {"schema", schema_path},
                        {"mapping", mapping_path}});
        std::cout << "fine-tuned for " << result.log.size() << " steps";
        if (result.best_step >= 0) {
            std::cout << "; best dev macro-F1 " << result.best_dev_f1 << " at step "
                      << result.best_step;
        }
        std::cout << "; checkpoint in " << out_path << "\n";
        return 0;
    }

    // predict / evaluate
    const Checkpoint ckpt = load_checkpoint(from_dir);
    const TypeSchema schema =
        schema_path.empty() ? ckpt.schema : load_schema(schema_path, detect_kind(schema_path));
    const LabelMapping mapping = build_phrase_table(schema, overrides_map());
    DecodeConfig decode = cfg.decode_config(schema);
    if (threshold) {
        decode.threshold = *threshold;
        decode.validate();
    }
    const auto examples = read_examples(on_path, schema);

    if (*pred) {
        const PredictionSet preds = predict(ckpt, examples, schema, mapping, decode);
        std::ofstream out(out_path);
        if (!out) throw InputError("cannot write predictions: " + out_path);
        for (size_t i = 0; i < examples.size(); ++i) {
            json j;
            j["example_id"] = i;
            j["pred_labels"] = preds.labels[i];
            json scores = json::object();
            for (int t = 0; t < schema.size(); ++t) {
                scores[schema.labels()[t]] = preds.scores.at(static_cast<int>(i), t);
            }
            j["scores"] = scores;
            out << j.dump() << "\n";
        }
        write_snapshot(snapshot_dir_for(out_path), "predict", cfg.resolved(),
                       {{"from", from_dir}, {"on", on_path}});
        std::cout << "wrote predictions for " << examples.size() << " examples to " << out_path
                  << "\n";
        return 0;
    }

    // evaluate
    json report;
    std::vector<std::vector<std::string>> golds;
    golds.reserve(examples.size());
    for (const auto& ex : examples) golds.push_back(ex.labels);

    if (!train_path.empty()) {
        // repeated protocol: sample a fresh k-shot split per seed, fine-tune
        // from the checkpoint, score on the fixed test corpus
        const auto pool = read_examples(train_path, schema);
        TrainConfig ft_cfg = cfg.train_config();
        ft_cfg.stage = Stage::finetune_fet;
        if (repeats < 1) throw ConfigError("repeats must be >= 1");
        std::vector<uint64_t> seeds;
        for (int i = 0; i < repeats; ++i) seeds.push_back(seed.value_or(ft_cfg.seed) + i);
        const ProtocolResult protocol = run_fewshot_protocol(ckpt, pool, examples, schema,
                                                             mapping, k, seeds, ft_cfg, decode);
        report = json::parse(metrics_report_json(protocol));
    } else if (schema.kind() == SchemaKind::free_form) {
        const PredictionSet preds = predict(ckpt, examples, schema, mapping, decode);
        const PRF prf = ufet_macro_prf(preds.labels, golds);
        report["macro_precision"] = prf.precision;
        report["macro_recall"] = prf.recall;
        report["macro_f1"] = prf.f1;
    } else {
        const PredictionSet preds = predict(ckpt, examples, schema, mapping, decode);
        const FetMetrics m = fet_metrics(preds.labels, golds);
        report["strict_acc"] = m.strict_acc;
        report["micro_f1"] = m.micro_f1;
        report["macro_f1"] = m.macro_f1;
    }
    report["examples"] = examples.size();
    std::cout << report.dump(2) << "\n";
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw InputError("cannot write metrics: " + out_path);
        out << report.dump(2) << "\n";
        write_snapshot(snapshot_dir_for(out_path), "evaluate", cfg.resolved(),
                       {{"from", from_dir}, {"on", on_path}, {"train", train_path}});
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
