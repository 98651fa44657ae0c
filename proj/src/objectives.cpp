#include "typeforge/objectives.hpp"

#include <cmath>
#include <stdexcept>

#include "typeforge/errors.hpp"

namespace typeforge {

LabelMatrix LabelMatrix::build(const std::vector<const MentionExample*>& batch,
                               const TypeSchema& schema, double prompt_label_weight) {
    if (prompt_label_weight <= 0.0 || prompt_label_weight > 1.0) {
        throw ConfigError("prompt_label_weight must be in (0, 1]");
    }
    LabelMatrix m;
    m.y = nn::Mat(static_cast<int>(batch.size()), schema.size());
    m.w = nn::Mat(static_cast<int>(batch.size()), schema.size());
    for (auto& v : m.w.a) v = 1.0;
    for (size_t i = 0; i < batch.size(); ++i) {
        for (const auto& label : batch[i]->labels) {
            const int t = schema.index_of(label);
            if (t < 0) throw ValidationError("label not in schema: " + label);
            m.y.at(static_cast<int>(i), t) = 1.0;
            auto it = batch[i]->label_sources.find(label);
            if (it != batch[i]->label_sources.end() && it->second == LabelSource::prompt) {
                m.w.at(static_cast<int>(i), t) = prompt_label_weight;
            }
        }
    }
    return m;
}

LossBundle make_loss_bundle(double l_et, double l_mlm, double l_nwp, double lambda_mlm,
                            double lambda_nwp) {
    if (lambda_mlm < 0.0 || lambda_nwp < 0.0) throw ConfigError("loss weights must be >= 0");
    LossBundle b;
    b.l_et = l_et;
    b.l_mlm = l_mlm;
    b.l_nwp = l_nwp;
    b.lambda_mlm = lambda_mlm;
    b.lambda_nwp = lambda_nwp;
    b.total = l_et + lambda_mlm * l_mlm + lambda_nwp * l_nwp;
    return b;
}

namespace {

double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double denom_for(const nn::Mat& scores, bool per_type_norm) {
    return per_type_norm ? static_cast<double>(scores.rows) * scores.cols
                         : static_cast<double>(scores.rows);
}

} // namespace

nn::Var et_loss(nn::Tape& tape, nn::Var scores, const LabelMatrix& labels, bool per_type_norm) {
    const nn::Mat& s = tape.value(scores);
    if (!s.same_shape(labels.y) || !s.same_shape(labels.w)) {
        throw std::invalid_argument("et_loss: score/label shape mismatch");
    }
    return tape.bce_with_logits(scores, labels.y, labels.w, denom_for(s, per_type_norm));
}

double et_loss_value(const nn::Mat& scores, const LabelMatrix& labels, bool per_type_norm) {
    if (!scores.same_shape(labels.y) || !scores.same_shape(labels.w)) {
        throw std::invalid_argument("et_loss_value: score/label shape mismatch");
    }
    double total = 0.0;
    for (size_t i = 0; i < scores.size(); ++i) {
        total += labels.w.a[i] * (softplus(scores.a[i]) - scores.a[i] * labels.y.a[i]);
    }
    return total / denom_for(scores, per_type_norm);
}

nn::Mat et_loss_grad(const nn::Mat& scores, const LabelMatrix& labels, bool per_type_norm) {
    nn::Mat g(scores.rows, scores.cols);
    const double denom = denom_for(scores, per_type_norm);
    for (size_t i = 0; i < scores.size(); ++i) {
        g.a[i] = labels.w.a[i] * (sigmoid(scores.a[i]) - labels.y.a[i]) / denom;
    }
    return g;
}

nn::Var mlm_loss(nn::Tape& tape, const TypingModel& model, const std::vector<nn::Var>& hidden,
                 const std::vector<const ModelInput*>& inputs) {
    if (hidden.size() != inputs.size()) {
        throw std::invalid_argument("mlm_loss: hidden/input count mismatch");
    }
    std::vector<nn::Var> logit_blocks;
    std::vector<int> targets;
    for (size_t i = 0; i < inputs.size(); ++i) {
        if (inputs[i]->mlm_targets.empty()) continue;
        std::vector<int> positions;
        for (const auto& [pos, original] : inputs[i]->mlm_targets) {
            positions.push_back(pos);
            targets.push_back(original);
        }
        logit_blocks.push_back(model.mlm_logits(tape, hidden[i], positions));
    }
    if (logit_blocks.empty()) return tape.zero_scalar();
    return tape.cross_entropy_rows(tape.concat_rows(logit_blocks), std::move(targets));
}

nn::Var nwp_loss(nn::Tape& tape, const TypingModel& model, const std::vector<nn::Var>& nwp_hidden,
                 const std::vector<int>& slots, const std::vector<int>& targets) {
    if (nwp_hidden.size() != slots.size() || slots.size() != targets.size()) {
        throw std::invalid_argument("nwp_loss: instance count mismatch");
    }
    if (nwp_hidden.empty()) return tape.zero_scalar();
    std::vector<nn::Var> logit_blocks;
    logit_blocks.reserve(nwp_hidden.size());
    for (size_t i = 0; i < nwp_hidden.size(); ++i) {
        logit_blocks.push_back(model.nwp_logits(tape, nwp_hidden[i], slots[i]));
    }
    return tape.cross_entropy_rows(tape.concat_rows(logit_blocks), targets);
}

nn::Var total_loss(nn::Tape& tape, nn::Var et, nn::Var mlm, nn::Var nwp, double lambda_mlm,
                   double lambda_nwp) {
    if (lambda_mlm < 0.0 || lambda_nwp < 0.0) throw ConfigError("loss weights must be >= 0");
    nn::Var total = et;
    if (mlm.valid()) total = tape.axpy(total, mlm, lambda_mlm);
    if (nwp.valid()) total = tape.axpy(total, nwp, lambda_nwp);
    return total;
}

} // namespace typeforge
