#pragma once

#include <vector>

#include "typeforge/corpus.hpp"
#include "typeforge/model.hpp"
#include "typeforge/nn/tape.hpp"
#include "typeforge/schema.hpp"

namespace typeforge {

// Gold indicators and per-label weights for one batch. Weights default to 1;
// labels produced by prompting get `prompt_label_weight` so their noisier
// supervision counts less.
struct LabelMatrix {
    nn::Mat y; // B x |T|, entries in {0, 1}
    nn::Mat w; // B x |T|, entries in (0, 1]

    static LabelMatrix build(const std::vector<const MentionExample*>& batch,
                             const TypeSchema& schema, double prompt_label_weight);
};

struct LossBundle {
    double l_et = 0.0;
    double l_mlm = 0.0;
    double l_nwp = 0.0;
    double lambda_mlm = 0.0;
    double lambda_nwp = 0.0;
    double total = 0.0; // l_et + lambda_mlm * l_mlm + lambda_nwp * l_nwp, exactly
};

LossBundle make_loss_bundle(double l_et, double l_mlm, double l_nwp, double lambda_mlm,
                            double lambda_nwp);

// Weighted binary cross-entropy over scores, computed from logits via
// softplus. Normalized by the number of examples; `per_type_norm` divides by
// the type count as well.
nn::Var et_loss(nn::Tape& tape, nn::Var scores, const LabelMatrix& labels,
                bool per_type_norm = false);
double et_loss_value(const nn::Mat& scores, const LabelMatrix& labels,
                     bool per_type_norm = false);
// d et_loss / d scores in closed form (for gradient cross-checks).
nn::Mat et_loss_grad(const nn::Mat& scores, const LabelMatrix& labels,
                     bool per_type_norm = false);

// Mean cross-entropy over all corrupted positions in the batch, through the
// shared output head. Zero when nothing was corrupted.
nn::Var mlm_loss(nn::Tape& tape, const TypingModel& model,
                 const std::vector<nn::Var>& hidden, const std::vector<const ModelInput*>& inputs);

// Mean cross-entropy over the available neighbor-word instances (both sides
// when present). Zero when the batch has none.
nn::Var nwp_loss(nn::Tape& tape, const TypingModel& model,
                 const std::vector<nn::Var>& nwp_hidden, const std::vector<int>& slots,
                 const std::vector<int>& targets);

// total = et + lambda_mlm * mlm + lambda_nwp * nwp on the tape; lambdas must
// be nonnegative. Pass invalid Vars for absent auxiliary losses.
nn::Var total_loss(nn::Tape& tape, nn::Var et, nn::Var mlm, nn::Var nwp, double lambda_mlm,
                   double lambda_nwp);

} // namespace typeforge
