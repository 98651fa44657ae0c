#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "typeforge/corpus.hpp"
#include "typeforge/tokenizer.hpp"

namespace typeforge {

// One encoder input: token ids with a prediction slot holding [MASK], the
// mention span inside its brackets, and (after corruption) the original ids
// of positions selected for masked-token prediction.
struct ModelInput {
    std::vector<int> ids;
    int slot_index = -1;
    int mention_begin = 0; // [begin, end) token positions of the mention
    int mention_end = 0;
    std::map<int, int> mlm_targets; // position -> original token id

    int length() const { return static_cast<int>(ids.size()); }
};

enum class NwpSide { left, right };

struct NwpInstance {
    ModelInput input;
    int target_id = -1; // first token of the nearest word on the chosen side
};

// Builds encoder inputs of the shape
//   [BOS] <lcxt> [ <mstr> ] ( <task> : [MASK] ) <rcxt> [EOS]
// where <task> is "type" for entity typing and "left"/"right" for neighbor
// word prediction. Inputs longer than max_len lose context tokens farthest
// from the mention; the mention and the template always survive.
class SequenceBuilder {
public:
    SequenceBuilder(const Tokenizer& tok, int max_len);

    ModelInput build_et_input(const MentionExample& example) const;
    std::optional<NwpInstance> build_nwp_input(const MentionExample& example, NwpSide side) const;

    // Selects ceil(rate * eligible) positions, 80/10/10 mask/random/keep.
    // Eligible positions are the context and mention tokens: never the
    // prediction slot, BOS/EOS, brackets, or template tokens.
    ModelInput apply_mlm_corruption(const ModelInput& input, double rate, uint64_t seed) const;
    std::vector<int> mlm_eligible_positions(const ModelInput& input) const;

    const Tokenizer& tokenizer() const { return *tok_; }
    int max_len() const { return max_len_; }

private:
    ModelInput build_with_task_(const MentionExample& example, int task_word_id) const;

    const Tokenizer* tok_;
    int max_len_;
    int lparen_id_, rparen_id_, colon_id_;
    int type_word_id_, left_word_id_, right_word_id_;
};

} // namespace typeforge
