#include "typeforge/model.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "typeforge/errors.hpp"
#include "typeforge/rng.hpp"

namespace typeforge {

using nlohmann::json;

void ModelConfig::validate() const {
    if (hidden_size < 2) throw ConfigError("hidden_size must be >= 2");
    if (layers < 1) throw ConfigError("layers must be >= 1");
    if (heads < 1 || hidden_size % heads != 0) {
        throw ConfigError("heads must divide hidden_size");
    }
    if (type_heads < 1 || hidden_size % type_heads != 0) {
        throw ConfigError("type_heads must divide hidden_size");
    }
    if (max_len < 16) throw ConfigError("max_len must be >= 16");
    if (ffn_multiple < 1) throw ConfigError("ffn_multiple must be >= 1");
    if (layer_norm_eps <= 0) throw ConfigError("layer_norm_eps must be positive");
    if (init_std <= 0) throw ConfigError("init_std must be positive");
}

std::string ModelConfig::to_json_text() const {
    json j;
    j["hidden_size"] = hidden_size;
    j["layers"] = layers;
    j["heads"] = heads;
    j["type_heads"] = type_heads;
    j["max_len"] = max_len;
    j["ffn_multiple"] = ffn_multiple;
    j["scale_per_head"] = scale_per_head;
    j["mention_identity_act"] = mention_identity_act;
    j["layer_norm_eps"] = layer_norm_eps;
    j["init_std"] = init_std;
    return j.dump(2);
}

ModelConfig ModelConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model config: ") + e.what());
    }
    ModelConfig cfg;
    cfg.hidden_size = j.value("hidden_size", cfg.hidden_size);
    cfg.layers = j.value("layers", cfg.layers);
    cfg.heads = j.value("heads", cfg.heads);
    cfg.type_heads = j.value("type_heads", cfg.type_heads);
    cfg.max_len = j.value("max_len", cfg.max_len);
    cfg.ffn_multiple = j.value("ffn_multiple", cfg.ffn_multiple);
    cfg.scale_per_head = j.value("scale_per_head", cfg.scale_per_head);
    cfg.mention_identity_act = j.value("mention_identity_act", cfg.mention_identity_act);
    cfg.layer_norm_eps = j.value("layer_norm_eps", cfg.layer_norm_eps);
    cfg.init_std = j.value("init_std", cfg.init_std);
    cfg.validate();
    return cfg;
}

TransformerBackend::TransformerBackend(const ModelConfig& cfg, int vocab_size,
                                       nn::ParameterStore& store)
    : cfg_(cfg), vocab_size_(vocab_size) {
    const int d = cfg.hidden_size;
    const int f = d * cfg.ffn_multiple;
    tok_embed_ = store.create("embed.tok", vocab_size, d);
    pos_embed_ = store.create("embed.pos", cfg.max_len, d);
    emb_gain_ = store.create("embed.ln.gain", 1, d);
    emb_bias_ = store.create("embed.ln.bias", 1, d);
    for (int l = 0; l < cfg.layers; ++l) {
        const std::string p = "layer" + std::to_string(l) + ".";
        Layer layer;
        layer.wq = store.create(p + "attn.wq", d, d);
        layer.bq = store.create(p + "attn.bq", 1, d);
        layer.wk = store.create(p + "attn.wk", d, d);
        layer.bk = store.create(p + "attn.bk", 1, d);
        layer.wv = store.create(p + "attn.wv", d, d);
        layer.bv = store.create(p + "attn.bv", 1, d);
        layer.wo = store.create(p + "attn.wo", d, d);
        layer.bo = store.create(p + "attn.bo", 1, d);
        layer.ln1_gain = store.create(p + "ln1.gain", 1, d);
        layer.ln1_bias = store.create(p + "ln1.bias", 1, d);
        layer.w1 = store.create(p + "ffn.w1", d, f);
        layer.b1 = store.create(p + "ffn.b1", 1, f);
        layer.w2 = store.create(p + "ffn.w2", f, d);
        layer.b2 = store.create(p + "ffn.b2", 1, d);
        layer.ln2_gain = store.create(p + "ln2.gain", 1, d);
        layer.ln2_bias = store.create(p + "ln2.bias", 1, d);
        layers_.push_back(std::move(layer));
    }
    mlm_weight_ = store.create("mlm.weight", vocab_size, d);
    mlm_bias_ = store.create("mlm.bias", 1, vocab_size);
}

nn::Var TransformerBackend::encode(nn::Tape& tape, const std::vector<int>& ids) const {
    const int len = static_cast<int>(ids.size());
    if (len == 0) throw std::invalid_argument("encode: empty input");
    if (len > cfg_.max_len) {
        throw InputError("input length " + std::to_string(len) + " exceeds max_len " +
                         std::to_string(cfg_.max_len));
    }
    std::vector<int> positions(len);
    for (int i = 0; i < len; ++i) positions[i] = i;

    nn::Var x = tape.add(tape.param_rows(tok_embed_, ids), tape.param_rows(pos_embed_, positions));
    x = tape.layer_norm(x, tape.param(emb_gain_), tape.param(emb_bias_), cfg_.layer_norm_eps);

    const int d = cfg_.hidden_size;
    const int dh = d / cfg_.heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    for (const Layer& layer : layers_) {
        nn::Var q = tape.add_row_broadcast(tape.matmul(x, tape.param(layer.wq)), tape.param(layer.bq));
        nn::Var k = tape.add_row_broadcast(tape.matmul(x, tape.param(layer.wk)), tape.param(layer.bk));
        nn::Var v = tape.add_row_broadcast(tape.matmul(x, tape.param(layer.wv)), tape.param(layer.bv));
        std::vector<nn::Var> heads;
        heads.reserve(cfg_.heads);
        for (int h = 0; h < cfg_.heads; ++h) {
            nn::Var qh = tape.slice_cols(q, h * dh, (h + 1) * dh);
            nn::Var kh = tape.slice_cols(k, h * dh, (h + 1) * dh);
            nn::Var vh = tape.slice_cols(v, h * dh, (h + 1) * dh);
            nn::Var attn = tape.softmax_rows(tape.scale(tape.matmul_nt(qh, kh), scale));
            heads.push_back(tape.matmul(attn, vh));
        }
        nn::Var o = tape.add_row_broadcast(
            tape.matmul(tape.concat_cols(heads), tape.param(layer.wo)), tape.param(layer.bo));
        x = tape.layer_norm(tape.add(x, o), tape.param(layer.ln1_gain), tape.param(layer.ln1_bias),
                            cfg_.layer_norm_eps);
        nn::Var ff = tape.add_row_broadcast(
            tape.matmul(tape.gelu(tape.add_row_broadcast(tape.matmul(x, tape.param(layer.w1)),
                                                         tape.param(layer.b1))),
                        tape.param(layer.w2)),
            tape.param(layer.b2));
        x = tape.layer_norm(tape.add(x, ff), tape.param(layer.ln2_gain), tape.param(layer.ln2_bias),
                            cfg_.layer_norm_eps);
    }
    return x;
}

double ScoreMatrix::prob(int r, int c) const {
    const double s = scores.at(r, c);
    double p = s >= 0.0 ? 1.0 / (1.0 + std::exp(-s)) : std::exp(s) / (1.0 + std::exp(s));
    const double eps = 1e-15;
    if (p < eps) p = eps;
    if (p > 1.0 - eps) p = 1.0 - eps;
    return p;
}

TypingModel::TypingModel(ModelConfig cfg, int vocab_size, uint64_t init_seed) : cfg_(cfg) {
    cfg_.validate();
    if (vocab_size < special::kCount) throw ConfigError("vocabulary too small");
    const int d = cfg_.hidden_size;
    backend_ = std::make_unique<TransformerBackend>(cfg_, vocab_size, store_);
    mention_w_ = store_.create("mention.w", d, d);
    mention_gain_ = store_.create("mention.ln.gain", 1, d);
    mention_bias_ = store_.create("mention.ln.bias", 1, d);
    type_q_ = store_.create("type_enc.q", 1, d);
    type_wk_ = store_.create("type_enc.wk", d, d);
    type_wv_ = store_.create("type_enc.wv", d, d);
    nwp_weight_ = store_.create("nwp.weight", vocab_size, d);
    nwp_bias_ = store_.create("nwp.bias", 1, vocab_size);

    // Deterministic init in registration order: gaussian weights, unit
    // layer-norm gains, zero biases.
    Rng rng(mix_seed(init_seed, 0x1817ull));
    for (const auto& p : store_.all()) {
        const bool is_gain = p->name.size() >= 4 && p->name.ends_with("gain");
        const bool is_bias = p->name.ends_with("bias") || p->name.ends_with(".bq") ||
                             p->name.ends_with(".bk") || p->name.ends_with(".bv") ||
                             p->name.ends_with(".bo") || p->name.ends_with(".b1") ||
                             p->name.ends_with(".b2");
        if (is_gain) {
            std::fill(p->value.a.begin(), p->value.a.end(), 1.0);
        } else if (is_bias) {
            // zero-initialized already
        } else {
            for (double& v : p->value.a) v = rng.normal(0.0, cfg_.init_std);
        }
    }
}

nn::Var TypingModel::encode(nn::Tape& tape, const ModelInput& input) const {
    return backend_->encode(tape, input.ids);
}

nn::Var TypingModel::mention_vector(nn::Tape& tape, nn::Var hidden, int slot_index) const {
    const nn::Mat& h = tape.value(hidden);
    if (slot_index < 0 || slot_index >= h.rows) {
        throw std::invalid_argument("mention_vector: slot index out of range");
    }
    nn::Var slot = tape.rows(hidden, {slot_index});
    nn::Var projected = tape.matmul(slot, tape.param(mention_w_));
    if (!cfg_.mention_identity_act) projected = tape.gelu(projected);
    return tape.layer_norm(projected, tape.param(mention_gain_), tape.param(mention_bias_),
                           cfg_.layer_norm_eps);
}

nn::Var TypingModel::encode_mention(nn::Tape& tape, const ModelInput& input) const {
    return mention_vector(tape, encode(tape, input), input.slot_index);
}

nn::Var TypingModel::encode_type_batch(nn::Tape& tape, const TypeTokenBatch& batch) const {
    if (batch.rows == 0) throw std::invalid_argument("encode_type_batch: empty batch");
    const int d = cfg_.hidden_size;
    const int heads = cfg_.type_heads;
    const int dh = d / heads;
    const double scale =
        1.0 / std::sqrt(static_cast<double>(cfg_.scale_per_head ? dh : d));

    nn::Var wk = tape.param(type_wk_);
    nn::Var wv = tape.param(type_wv_);
    nn::Var q = tape.param(type_q_);
    std::vector<nn::Var> q_heads;
    q_heads.reserve(heads);
    for (int h = 0; h < heads; ++h) q_heads.push_back(tape.slice_cols(q, h * dh, (h + 1) * dh));

    std::vector<nn::Var> reprs;
    reprs.reserve(batch.rows);
    for (int r = 0; r < batch.rows; ++r) {
        if (batch.row_length(r) == 0) {
            throw std::invalid_argument("encode_type_batch: all-padding row " + std::to_string(r));
        }
        nn::Var x = tape.param_rows(type_token_embeddings(), batch.row_ids(r)); // n x d
        nn::Var k = tape.matmul(x, wk);
        nn::Var v = tape.matmul(x, wv);
        const std::vector<uint8_t> mask = batch.row_mask(r);
        std::vector<nn::Var> pooled;
        pooled.reserve(heads);
        for (int h = 0; h < heads; ++h) {
            nn::Var kh = tape.slice_cols(k, h * dh, (h + 1) * dh);
            nn::Var vh = tape.slice_cols(v, h * dh, (h + 1) * dh);
            nn::Var attn =
                tape.softmax_rows(tape.scale(tape.matmul_nt(q_heads[h], kh), scale), &mask);
            pooled.push_back(tape.matmul(attn, vh)); // 1 x dh
        }
        reprs.push_back(tape.concat_cols(pooled)); // 1 x d
    }
    return tape.concat_rows(reprs); // |T| x d
}

nn::Var TypingModel::score(nn::Tape& tape, nn::Var mention_rows, nn::Var type_rows) {
    return tape.matmul_nt(mention_rows, type_rows);
}

TypingModel::ForwardResult TypingModel::forward(nn::Tape& tape,
                                                const std::vector<ModelInput>& inputs,
                                                const TypeTokenBatch& batch) const {
    if (inputs.empty()) throw std::invalid_argument("forward: empty input batch");
    ForwardResult result;
    std::vector<nn::Var> mentions;
    mentions.reserve(inputs.size());
    for (const auto& input : inputs) {
        nn::Var hidden = encode(tape, input);
        result.hidden.push_back(hidden);
        mentions.push_back(mention_vector(tape, hidden, input.slot_index));
    }
    nn::Var mention_rows = tape.concat_rows(mentions);
    result.type_reprs = encode_type_batch(tape, batch);
    result.scores = score(tape, mention_rows, result.type_reprs);
    return result;
}

nn::Var TypingModel::mlm_logits(nn::Tape& tape, nn::Var hidden,
                                const std::vector<int>& positions) const {
    nn::Var h = tape.rows(hidden, positions);
    return tape.add_row_broadcast(tape.matmul_nt(h, tape.param(backend_->mlm_weight())),
                                  tape.param(backend_->mlm_bias()));
}

nn::Var TypingModel::nwp_logits(nn::Tape& tape, nn::Var hidden, int slot_index) const {
    nn::Var h = tape.rows(hidden, {slot_index});
    return tape.add_row_broadcast(tape.matmul_nt(h, tape.param(nwp_weight_)),
                                  tape.param(nwp_bias_));
}

ScoreMatrix score_examples(const TypingModel& model, const SequenceBuilder& builder,
                           const std::vector<MentionExample>& examples,
                           const TypeTokenBatch& batch, int chunk_size) {
    ScoreMatrix out;
    out.scores = nn::Mat(static_cast<int>(examples.size()), batch.rows);
    if (examples.empty()) return out;
    if (chunk_size < 1) chunk_size = 1;

    size_t done = 0;
    while (done < examples.size()) {
        const size_t count = std::min(static_cast<size_t>(chunk_size), examples.size() - done);
        nn::Tape tape;
        std::vector<ModelInput> inputs;
        inputs.reserve(count);
        for (size_t i = 0; i < count; ++i) {
            inputs.push_back(builder.build_et_input(examples[done + i]));
        }
        const auto fwd = model.forward(tape, inputs, batch);
        const nn::Mat& scores = tape.value(fwd.scores);
        for (size_t i = 0; i < count; ++i) {
            for (int t = 0; t < batch.rows; ++t) {
                out.scores.at(static_cast<int>(done + i), t) = scores.at(static_cast<int>(i), t);
            }
        }
        done += count;
    }
    if (!nn::all_finite(out.scores)) throw Error("score_examples: non-finite scores");
    return out;
}

} // namespace typeforge
