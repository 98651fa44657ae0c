#include "typeforge/sequence.hpp"

#include <algorithm>
#include <cmath>

#include "typeforge/errors.hpp"
#include "typeforge/rng.hpp"

namespace typeforge {

namespace {

void append_word_ids(std::vector<int>& out, const Tokenizer& tok,
                     const std::vector<std::string>& words) {
    for (const auto& w : words) {
        const auto ids = tok.tokenize(w);
        out.insert(out.end(), ids.begin(), ids.end());
    }
}

} // namespace

SequenceBuilder::SequenceBuilder(const Tokenizer& tok, int max_len)
    : tok_(&tok), max_len_(max_len) {
    if (max_len < 16) throw ConfigError("SequenceBuilder: max_len must be at least 16");
    const Vocabulary& v = tok.vocab();
    lparen_id_ = v.id_of("(");
    rparen_id_ = v.id_of(")");
    colon_id_ = v.id_of(":");
    type_word_id_ = v.id_of("type");
    left_word_id_ = v.id_of("left");
    right_word_id_ = v.id_of("right");
    if (type_word_id_ == special::kUnk || left_word_id_ == special::kUnk ||
        right_word_id_ == special::kUnk || type_word_id_ == left_word_id_ ||
        type_word_id_ == right_word_id_ || left_word_id_ == right_word_id_) {
        throw ConfigError("vocabulary lacks distinct template words type/left/right");
    }
}

ModelInput SequenceBuilder::build_with_task_(const MentionExample& example, int task_word_id) const {
    if (example.mention.empty()) throw InputError("example has empty mention");

    std::vector<int> left_ids, mention_ids, right_ids;
    append_word_ids(left_ids, *tok_, example.left_context);
    append_word_ids(mention_ids, *tok_, example.mention);
    append_word_ids(right_ids, *tok_, example.right_context);
    if (mention_ids.empty()) throw InputError("mention tokenizes to nothing");

    // BOS + EOS + brackets + "( task : [MASK] )"
    const int fixed = 2 + 2 + 5 + static_cast<int>(mention_ids.size());
    const int budget = max_len_ - fixed;
    if (budget < 0) {
        throw InputError("mention and template exceed max length " + std::to_string(max_len_));
    }
    int keep_left = static_cast<int>(left_ids.size());
    int keep_right = static_cast<int>(right_ids.size());
    while (keep_left + keep_right > budget) {
        if (keep_left >= keep_right) {
            --keep_left; // drops the leftmost remaining token
        } else {
            --keep_right; // drops the rightmost remaining token
        }
    }

    ModelInput input;
    input.ids.push_back(special::kBos);
    input.ids.insert(input.ids.end(), left_ids.end() - keep_left, left_ids.end());
    input.ids.push_back(special::kLBracket);
    input.mention_begin = static_cast<int>(input.ids.size());
    input.ids.insert(input.ids.end(), mention_ids.begin(), mention_ids.end());
    input.mention_end = static_cast<int>(input.ids.size());
    input.ids.push_back(special::kRBracket);
    input.ids.push_back(lparen_id_);
    input.ids.push_back(task_word_id);
    input.ids.push_back(colon_id_);
    input.slot_index = static_cast<int>(input.ids.size());
    input.ids.push_back(special::kMask);
    input.ids.push_back(rparen_id_);
    input.ids.insert(input.ids.end(), right_ids.begin(), right_ids.begin() + keep_right);
    input.ids.push_back(special::kEos);
    return input;
}

ModelInput SequenceBuilder::build_et_input(const MentionExample& example) const {
    return build_with_task_(example, type_word_id_);
}

std::optional<NwpInstance> SequenceBuilder::build_nwp_input(const MentionExample& example,
                                                            NwpSide side) const {
    const std::vector<std::string>& context =
        side == NwpSide::left ? example.left_context : example.right_context;
    if (context.empty()) return std::nullopt;

    const std::string& neighbor =
        side == NwpSide::left ? context.back() : context.front();
    const auto neighbor_ids = tok_->tokenize(neighbor);
    if (neighbor_ids.empty()) return std::nullopt;

    NwpInstance instance;
    instance.input = build_with_task_(
        example, side == NwpSide::left ? left_word_id_ : right_word_id_);
    instance.target_id = neighbor_ids.front();
    return instance;
}

std::vector<int> SequenceBuilder::mlm_eligible_positions(const ModelInput& input) const {
    std::vector<int> eligible;
    const int len = input.length();
    for (int p = 1; p + 1 < len; ++p) {
        if (p == input.mention_begin - 1) continue;                      // [
        if (p >= input.mention_end && p <= input.mention_end + 5) continue; // ] ( task : [MASK] )
        eligible.push_back(p);
    }
    return eligible;
}

ModelInput SequenceBuilder::apply_mlm_corruption(const ModelInput& input, double rate,
                                                 uint64_t seed) const {
    if (rate <= 0.0 || rate >= 1.0) throw ConfigError("mlm rate must be in (0, 1)");
    std::vector<int> eligible = mlm_eligible_positions(input);
    // ceil with a small slack against representation error in rate * n
    const int count =
        static_cast<int>(std::ceil(rate * static_cast<double>(eligible.size()) - 1e-9));
    ModelInput out = input;
    out.mlm_targets.clear();
    if (count <= 0 || eligible.empty()) return out;

    Rng rng(mix_seed(seed, 0xC0881711ull));
    rng.shuffle(eligible);
    const int vocab_size = tok_->vocab().size();
    for (int i = 0; i < count; ++i) {
        const int pos = eligible[i];
        out.mlm_targets[pos] = input.ids[pos];
        const double u = rng.uniform01();
        if (u < 0.8) {
            out.ids[pos] = special::kMask;
        } else if (u < 0.9 && vocab_size > special::kCount) {
            out.ids[pos] = special::kCount +
                           static_cast<int>(rng.below(vocab_size - special::kCount));
        } // else keep the original token
    }
    return out;
}

} // namespace typeforge
