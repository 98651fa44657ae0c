#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace typeforge {

// Fixed special-token ids. These always occupy the first vocabulary slots,
// in this order, and the vocabulary file layout depends on it.
namespace special {
constexpr int kPad = 0;
constexpr int kUnk = 1;
constexpr int kMask = 2;
constexpr int kBos = 3;
constexpr int kEos = 4;
constexpr int kLBracket = 5;
constexpr int kRBracket = 6;
constexpr int kCount = 7;
} // namespace special

extern const char* const kSpecialTokenStrings[special::kCount];

// Words needed by the input templates. Always injected right after the
// specials when a vocabulary is built, so the task templates stay
// distinguishable even when these words never occur in the corpus.
extern const std::vector<std::string>& template_words();

class Vocabulary {
public:
    Vocabulary() = default;

    // Build from whitespace-split, lowercased text. Min frequency 1; ids
    // assigned by (frequency desc, lexicographic asc) after the specials
    // and template words.
    static Vocabulary build(const std::vector<std::string>& texts);
    // From an explicit token list whose first entries must be the specials.
    static Vocabulary from_tokens(std::vector<std::string> tokens);

    static Vocabulary load(const std::string& path);
    void save(const std::string& path) const;

    int id_of(const std::string& token) const; // kUnk if absent
    const std::string& token(int id) const;
    int size() const { return static_cast<int>(tokens_.size()); }
    const std::vector<std::string>& tokens() const { return tokens_; }
    bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

// Text -> token ids over a fixed vocabulary. Implementations must be pure:
// the same text always yields the same ids. Plugging in an external subword
// tokenizer means implementing this interface over its inventory.
class Tokenizer {
public:
    virtual ~Tokenizer() = default;
    virtual std::vector<int> tokenize(const std::string& text) const = 0;
    virtual const Vocabulary& vocab() const = 0;

    std::string detokenize(const std::vector<int>& ids) const;
};

// Whitespace-split, lowercased word-level tokenizer. The default backend
// tokenizer; round-trips lowercased in-vocabulary text up to whitespace
// normalization.
class WordTokenizer : public Tokenizer {
public:
    explicit WordTokenizer(const Vocabulary& vocab) : vocab_(&vocab) {}
    std::vector<int> tokenize(const std::string& text) const override;
    const Vocabulary& vocab() const override { return *vocab_; }

private:
    const Vocabulary* vocab_;
};

// Greedy longest-match subword tokenizer over the same vocabulary format.
// Splits on whitespace first, then segments each word into the longest
// in-vocabulary prefixes; a character with no match becomes UNK.
class LongestMatchTokenizer : public Tokenizer {
public:
    explicit LongestMatchTokenizer(const Vocabulary& vocab) : vocab_(&vocab) {}
    std::vector<int> tokenize(const std::string& text) const override;
    const Vocabulary& vocab() const override { return *vocab_; }

private:
    const Vocabulary* vocab_;
};

// Tokenized type phrases padded to a common length. Row order follows the
// input phrase order; `labels` carries the schema labels the rows stand for.
struct TypeTokenBatch {
    int rows = 0;
    int cols = 0;
    std::vector<int> ids;        // row-major, rows x cols
    std::vector<uint8_t> valid;  // row-major mask; false = padding
    std::vector<std::string> labels;

    int id_at(int r, int c) const { return ids[static_cast<size_t>(r) * cols + c]; }
    bool valid_at(int r, int c) const { return valid[static_cast<size_t>(r) * cols + c] != 0; }
    int row_length(int r) const;
    std::vector<int> row_ids(int r) const; // all cols, padding included
    std::vector<uint8_t> row_mask(int r) const;
};

TypeTokenBatch pad_type_batch(const std::vector<std::string>& phrases, const Tokenizer& tok);

} // namespace typeforge
