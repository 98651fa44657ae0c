#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "typeforge/nn/tape.hpp"
#include "typeforge/sequence.hpp"
#include "typeforge/tokenizer.hpp"

namespace typeforge {

struct ModelConfig {
    int hidden_size = 128; // d
    int layers = 4;
    int heads = 4;       // encoder attention heads
    int type_heads = 4;  // attention-pooling heads in the type encoder
    int max_len = 128;
    int ffn_multiple = 4;
    bool scale_per_head = false;       // type pooling scores: 1/sqrt(d) vs 1/sqrt(d_h)
    bool mention_identity_act = false; // identity instead of GELU in the mention head
    double layer_norm_eps = 1e-12;
    double init_std = 0.02;

    void validate() const;
    std::string to_json_text() const;
    static ModelConfig from_json_text(const std::string& text);
};

// Contract for the sequence encoder behind the typing model: token ids in,
// one hidden vector per position out, plus a token-prediction output head
// whose V x d weight matrix other modules may share.
class EncoderBackend {
public:
    virtual ~EncoderBackend() = default;
    virtual int hidden_size() const = 0;
    virtual int vocab_size() const = 0;
    virtual int max_len() const = 0;
    virtual nn::Var encode(nn::Tape& tape, const std::vector<int>& ids) const = 0;
    virtual const nn::ParamPtr& mlm_weight() const = 0; // V x d
    virtual const nn::ParamPtr& mlm_bias() const = 0;   // 1 x V
};

// Desk-scale trainable encoder: learned token + position embeddings with a
// post-norm transformer stack (full bidirectional attention, GELU FFN).
class TransformerBackend : public EncoderBackend {
public:
    TransformerBackend(const ModelConfig& cfg, int vocab_size, nn::ParameterStore& store);

    int hidden_size() const override { return cfg_.hidden_size; }
    int vocab_size() const override { return vocab_size_; }
    int max_len() const override { return cfg_.max_len; }
    nn::Var encode(nn::Tape& tape, const std::vector<int>& ids) const override;
    const nn::ParamPtr& mlm_weight() const override { return mlm_weight_; }
    const nn::ParamPtr& mlm_bias() const override { return mlm_bias_; }

private:
    struct Layer {
        nn::ParamPtr wq, bq, wk, bk, wv, bv, wo, bo;
        nn::ParamPtr ln1_gain, ln1_bias;
        nn::ParamPtr w1, b1, w2, b2;
        nn::ParamPtr ln2_gain, ln2_bias;
    };

    ModelConfig cfg_;
    int vocab_size_;
    nn::ParamPtr tok_embed_, pos_embed_, emb_gain_, emb_bias_;
    std::vector<Layer> layers_;
    nn::ParamPtr mlm_weight_, mlm_bias_;
};

// Raw per-(example, type) scores with sigmoid probabilities derived on read.
struct ScoreMatrix {
    nn::Mat scores; // B x |T|
    double score(int r, int c) const { return scores.at(r, c); }
    double prob(int r, int c) const;
};

// The full typing model: encoder backend, mention head (projection + GELU +
// LayerNorm on the slot hidden state), type encoder (attention pooling over
// type-token embeddings shared with the token-prediction head), dot-product
// scoring, and a separate neighbor-word head.
class TypingModel {
public:
    TypingModel(ModelConfig cfg, int vocab_size, uint64_t init_seed);

    const ModelConfig& config() const { return cfg_; }
    nn::ParameterStore& params() { return store_; }
    const nn::ParameterStore& params() const { return store_; }
    const EncoderBackend& backend() const { return *backend_; }
    const nn::ParamPtr& type_token_embeddings() const { return backend_->mlm_weight(); }

    nn::Var encode(nn::Tape& tape, const ModelInput& input) const;
    // Projection + nonlinearity + LayerNorm on one hidden row.
    nn::Var mention_vector(nn::Tape& tape, nn::Var hidden, int slot_index) const;
    nn::Var encode_mention(nn::Tape& tape, const ModelInput& input) const;

    // Attention-pooled representation per type row; padding never leaks into
    // the result. Returns |T| x d.
    nn::Var encode_type_batch(nn::Tape& tape, const TypeTokenBatch& batch) const;

    static nn::Var score(nn::Tape& tape, nn::Var mention_rows, nn::Var type_rows);

    struct ForwardResult {
        nn::Var scores;               // B x |T|
        std::vector<nn::Var> hidden;  // per input, L x d (for the auxiliary heads)
        nn::Var type_reprs;           // |T| x d
    };
    ForwardResult forward(nn::Tape& tape, const std::vector<ModelInput>& inputs,
                          const TypeTokenBatch& batch) const;

    // Token-prediction logits through the shared output head.
    nn::Var mlm_logits(nn::Tape& tape, nn::Var hidden, const std::vector<int>& positions) const;
    // Neighbor-word logits through the separate head.
    nn::Var nwp_logits(nn::Tape& tape, nn::Var hidden, int slot_index) const;

private:
    ModelConfig cfg_;
    nn::ParameterStore store_;
    std::unique_ptr<TransformerBackend> backend_;
    nn::ParamPtr mention_w_, mention_gain_, mention_bias_;
    nn::ParamPtr type_q_, type_wk_, type_wv_;
    nn::ParamPtr nwp_weight_, nwp_bias_;
};

// Batched scoring for evaluation; processes examples in chunks on a private
// tape and never touches gradients.
ScoreMatrix score_examples(const TypingModel& model, const SequenceBuilder& builder,
                           const std::vector<MentionExample>& examples,
                           const TypeTokenBatch& batch, int chunk_size = 32);

} // namespace typeforge
