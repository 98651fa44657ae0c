#include "typeforge/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "typeforge/errors.hpp"

namespace typeforge {

const char* const kSpecialTokenStrings[special::kCount] = {
    "[PAD]", "[UNK]", "[MASK]", "[BOS]", "[EOS]", "[", "]"};

const std::vector<std::string>& template_words() {
    static const std::vector<std::string> words = {"(", ")", ":", "type", "left", "right"};
    return words;
}

namespace {

std::vector<std::string> split_lower(const std::string& text) {
    std::vector<std::string> words;
    std::string cur;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!cur.empty()) {
                words.push_back(cur);
                cur.clear();
            }
            continue;
        }
        cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
    if (!cur.empty()) words.push_back(cur);
    return words;
}

} // namespace

Vocabulary Vocabulary::build(const std::vector<std::string>& texts) {
    std::map<std::string, long long> freq;
    for (const auto& text : texts) {
        for (const auto& word : split_lower(text)) ++freq[word];
    }
    std::vector<std::string> tokens;
    for (int i = 0; i < special::kCount; ++i) tokens.push_back(kSpecialTokenStrings[i]);
    for (const auto& word : template_words()) {
        if (std::find(tokens.begin(), tokens.end(), word) == tokens.end()) tokens.push_back(word);
        freq.erase(word);
    }
    for (int i = 0; i < special::kCount; ++i) freq.erase(kSpecialTokenStrings[i]);

    std::vector<std::pair<std::string, long long>> ordered(freq.begin(), freq.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    for (auto& [word, count] : ordered) tokens.push_back(word);
    return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
    if (tokens.size() < special::kCount) {
        throw ConfigError("vocabulary must start with the " + std::to_string(special::kCount) +
                          " special tokens");
    }
    for (int i = 0; i < special::kCount; ++i) {
        if (tokens[i] != kSpecialTokenStrings[i]) {
            throw ConfigError("vocabulary slot " + std::to_string(i) + " must be " +
                              kSpecialTokenStrings[i] + ", found " + tokens[i]);
        }
    }
    Vocabulary vocab;
    vocab.tokens_ = std::move(tokens);
    for (size_t i = 0; i < vocab.tokens_.size(); ++i) {
        if (!vocab.index_.emplace(vocab.tokens_[i], static_cast<int>(i)).second) {
            throw ConfigError("duplicate vocabulary token: " + vocab.tokens_[i]);
        }
    }
    return vocab;
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open vocabulary file: " + path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        tokens.push_back(line);
    }
    return from_tokens(std::move(tokens));
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write vocabulary file: " + path);
    for (const auto& token : tokens_) out << token << "\n";
}

int Vocabulary::id_of(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? special::kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
    if (id < 0 || id >= size()) throw std::invalid_argument("token id out of range");
    return tokens_[static_cast<size_t>(id)];
}

std::string Tokenizer::detokenize(const std::vector<int>& ids) const {
    std::string out;
    for (int id : ids) {
        if (!out.empty()) out.push_back(' ');
        out += vocab().token(id);
    }
    return out;
}

std::vector<int> WordTokenizer::tokenize(const std::string& text) const {
    std::vector<int> ids;
    for (const auto& word : split_lower(text)) ids.push_back(vocab_->id_of(word));
    return ids;
}

std::vector<int> LongestMatchTokenizer::tokenize(const std::string& text) const {
    std::vector<int> ids;
    for (const auto& word : split_lower(text)) {
        size_t pos = 0;
        while (pos < word.size()) {
            size_t len = word.size() - pos;
            int match = -1;
            while (len > 0) {
                const int id = vocab_->id_of(word.substr(pos, len));
                if (id != special::kUnk) {
                    match = id;
                    break;
                }
                --len;
            }
            if (match < 0) {
                ids.push_back(special::kUnk);
                ++pos;
            } else {
                ids.push_back(match);
                pos += len;
            }
        }
    }
    return ids;
}

int TypeTokenBatch::row_length(int r) const {
    int n = 0;
    for (int c = 0; c < cols; ++c) {
        if (valid_at(r, c)) ++n;
    }
    return n;
}

std::vector<int> TypeTokenBatch::row_ids(int r) const {
    return std::vector<int>(ids.begin() + static_cast<size_t>(r) * cols,
                            ids.begin() + static_cast<size_t>(r + 1) * cols);
}

std::vector<uint8_t> TypeTokenBatch::row_mask(int r) const {
    return std::vector<uint8_t>(valid.begin() + static_cast<size_t>(r) * cols,
                                valid.begin() + static_cast<size_t>(r + 1) * cols);
}

TypeTokenBatch pad_type_batch(const std::vector<std::string>& phrases, const Tokenizer& tok) {
    if (phrases.empty()) throw InputError("pad_type_batch: need at least one phrase");
    std::vector<std::vector<int>> rows;
    rows.reserve(phrases.size());
    int max_len = 0;
    for (const auto& phrase : phrases) {
        std::vector<int> ids = tok.tokenize(phrase);
        if (ids.empty()) throw InputError("pad_type_batch: empty phrase \"" + phrase + "\"");
        max_len = std::max(max_len, static_cast<int>(ids.size()));
        rows.push_back(std::move(ids));
    }
    TypeTokenBatch batch;
    batch.rows = static_cast<int>(rows.size());
    batch.cols = max_len;
    batch.labels = phrases;
    batch.ids.assign(static_cast<size_t>(batch.rows) * max_len, special::kPad);
    batch.valid.assign(static_cast<size_t>(batch.rows) * max_len, 0);
    for (int r = 0; r < batch.rows; ++r) {
        for (size_t c = 0; c < rows[r].size(); ++c) {
            batch.ids[static_cast<size_t>(r) * max_len + c] = rows[r][c];
            batch.valid[static_cast<size_t>(r) * max_len + c] = 1;
        }
    }
    return batch;
}

} // namespace typeforge
