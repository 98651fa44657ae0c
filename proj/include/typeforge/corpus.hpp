#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "typeforge/schema.hpp"

namespace typeforge {

enum class LabelSource { kb, head, prompt };

const char* to_string(LabelSource src);
LabelSource label_source_from_string(const std::string& s);

// One annotated mention: token contexts, the mention itself, and its gold
// labels. `label_sources` optionally records how each weak label was
// produced, which drives per-label loss weighting.
struct MentionExample {
    std::vector<std::string> left_context;
    std::vector<std::string> mention; // non-empty
    std::vector<std::string> right_context;
    std::vector<std::string> labels; // unique, subset of the schema
    std::map<std::string, LabelSource> label_sources;

    bool has_label(const std::string& label) const;
    std::string mention_text() const;
};

// JSONL corpus: one object per line with keys left_context_token, word,
// right_context_token, y_str, and optional label_src parallel to y_str.
std::vector<MentionExample> read_examples(const std::string& path, const TypeSchema& schema);
void write_examples(const std::string& path, const std::vector<MentionExample>& examples);

struct FewShotSplit {
    std::vector<MentionExample> train;
    std::vector<MentionExample> dev;
    int k = 0;
    uint64_t seed = 0;
};

// Greedy k-shot coverage sampler. Labels are visited rarest first; each
// label's train quota is filled before its dev quota so both draws come out
// of that label's own pool. An example counts toward every label it carries.
// Labels with fewer than 2k examples raise CoverageError unless
// allow_deficient is set, in which case they are reported via `warnings`.
FewShotSplit sample_fewshot(const std::vector<MentionExample>& examples, const TypeSchema& schema,
                            int k, uint64_t seed, bool allow_deficient = false,
                            std::vector<std::string>* warnings = nullptr);

// Violations of the k-shot contract, empty when the split is sound.
// Checks train/dev disjointness and per-label coverage for labels with at
// least 2k examples available in `examples`.
std::vector<std::string> verify_fewshot(const FewShotSplit& split, const TypeSchema& schema,
                                        const std::vector<MentionExample>& examples);

// Keep only examples whose labels lie on one root-to-node path.
std::vector<MentionExample> filter_single_path(const std::vector<MentionExample>& examples,
                                               const TypeSchema& schema);

// ---------------------------------------------------------------------------
// Synthetic corpus generation.
//
// Each type is a free-form phrase plus context templates containing a
// "<mention>" slot. Every template must contain at least one word unique to
// its type across the whole spec, so gold labels stay recoverable from the
// context alone. A hierarchical schema is derived from the phrase words:
// "animal dog" yields /animal and /animal/dog.

struct SyntheticType {
    std::string name; // free-form phrase, e.g. "animal dog"
    std::vector<std::string> mentions;
    std::vector<std::string> templates; // each contains "<mention>"
};

struct SyntheticSpec {
    std::vector<SyntheticType> types;
    int examples_per_type = 8;
    bool prefix_labels = true; // also label examples with word-prefixes of the name

    static SyntheticSpec from_json_file(const std::string& path);
    static SyntheticSpec from_json_text(const std::string& text);
    std::string to_json_text() const;

    // Built-in worlds: "demo" has 16 two-word types in 4 groups,
    // "small" has 8 single-word, single-label types.
    static SyntheticSpec builtin(const std::string& name);

    void validate() const; // ConfigError on violations
};

struct SyntheticCorpus {
    std::vector<MentionExample> ufet_examples;
    TypeSchema ufet_schema;
    std::vector<MentionExample> fet_examples; // parallel to ufet_examples
    TypeSchema fet_schema;
};

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec, uint64_t seed);

// Rule-based reference labeler: reads only the context words and returns
// the free-form gold label set. Used to check label recoverability.
std::vector<std::string> synthetic_oracle_labels(const SyntheticSpec& spec,
                                                 const MentionExample& example);

} // namespace typeforge
