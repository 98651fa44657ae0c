#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace typeforge {

enum class SchemaKind { free_form, hierarchical };

const char* to_string(SchemaKind kind);
SchemaKind schema_kind_from_string(const std::string& s);

// A target label set. Free-form schemas hold type words/phrases directly;
// hierarchical schemas hold slash-separated paths whose parent paths must
// also be present.
class TypeSchema {
public:
    static TypeSchema from_labels(SchemaKind kind, std::vector<std::string> labels,
                                  bool multi_label = true);

    SchemaKind kind() const { return kind_; }
    bool multi_label() const { return multi_label_; }
    void set_multi_label(bool v) { multi_label_ = v; }

    const std::vector<std::string>& labels() const { return labels_; }
    int size() const { return static_cast<int>(labels_.size()); }
    bool contains(const std::string& label) const;
    int index_of(const std::string& label) const; // -1 if absent

    // Proper ancestors of a hierarchical label, nearest last.
    std::vector<std::string> ancestors(const std::string& label) const;
    bool is_leaf(const std::string& label) const;

private:
    SchemaKind kind_ = SchemaKind::free_form;
    bool multi_label_ = true;
    std::vector<std::string> labels_;
    std::unordered_map<std::string, int> index_;
};

// Schema file: one label per line, UTF-8, '#' comment lines and blank lines
// ignored. Label order follows file order.
TypeSchema load_schema(const std::string& path, SchemaKind kind);
void save_schema(const TypeSchema& schema, const std::string& path);

// Lowercase and collapse runs of whitespace to single spaces.
std::string normalize_phrase(const std::string& s);

// Map one label to its type word/phrase. Overrides win; otherwise a
// hierarchical label uses its last path segment with underscores turned
// into spaces, and a free-form label is just normalized.
std::string map_label_to_phrase(const std::string& label, SchemaKind kind,
                                const std::map<std::string, std::string>& overrides = {});

// Complete label -> phrase table for a schema, plus collision warnings
// (distinct labels mapping to the same phrase).
struct LabelMapping {
    std::map<std::string, std::string> entries;
    std::vector<std::pair<std::string, std::vector<std::string>>> collisions;

    const std::string& phrase_for(const std::string& label) const;
    bool covers(const TypeSchema& schema) const;
    std::vector<std::string> phrases_in_schema_order(const TypeSchema& schema) const;
};

LabelMapping build_phrase_table(const TypeSchema& schema,
                                const std::map<std::string, std::string>& overrides = {});

// Overrides file: two-column TSV, label <TAB> phrase.
std::map<std::string, std::string> load_overrides_tsv(const std::string& path);
void save_mapping_tsv(const LabelMapping& mapping, const TypeSchema& schema,
                      const std::string& path);

} // namespace typeforge
