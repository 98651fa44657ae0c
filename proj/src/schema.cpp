#include "typeforge/schema.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "typeforge/errors.hpp"

namespace typeforge {

const char* to_string(SchemaKind kind) {
    return kind == SchemaKind::free_form ? "free_form" : "hierarchical";
}

SchemaKind schema_kind_from_string(const std::string& s) {
    if (s == "free_form") return SchemaKind::free_form;
    if (s == "hierarchical") return SchemaKind::hierarchical;
    throw ConfigError("unknown schema kind: " + s);
}

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string parent_path(const std::string& label) {
    const size_t pos = label.rfind('/');
    if (pos == std::string::npos || pos == 0) return "";
    return label.substr(0, pos);
}

} // namespace

TypeSchema TypeSchema::from_labels(SchemaKind kind, std::vector<std::string> labels,
                                   bool multi_label) {
    TypeSchema schema;
    schema.kind_ = kind;
    schema.multi_label_ = multi_label;
    schema.labels_ = std::move(labels);
    for (size_t i = 0; i < schema.labels_.size(); ++i) {
        const std::string& label = schema.labels_[i];
        if (label.empty()) throw SchemaError("empty label at position " + std::to_string(i));
        if (!schema.index_.emplace(label, static_cast<int>(i)).second) {
            throw SchemaError("duplicate label: " + label);
        }
        if (kind == SchemaKind::hierarchical) {
            if (label.front() != '/') throw SchemaError("hierarchical label must start with '/': " + label);
            if (label.size() == 1) throw SchemaError("bare '/' is not a valid label");
        } else {
            if (label.front() == '/') throw SchemaError("free-form label must not start with '/': " + label);
        }
    }
    if (kind == SchemaKind::hierarchical) {
        for (const std::string& label : schema.labels_) {
            const std::string parent = parent_path(label);
            if (!parent.empty() && !schema.index_.count(parent)) {
                throw SchemaError("orphan label " + label + " (missing parent " + parent + ")");
            }
        }
    }
    return schema;
}

bool TypeSchema::contains(const std::string& label) const { return index_.count(label) > 0; }

int TypeSchema::index_of(const std::string& label) const {
    auto it = index_.find(label);
    return it == index_.end() ? -1 : it->second;
}

std::vector<std::string> TypeSchema::ancestors(const std::string& label) const {
    std::vector<std::string> out;
    if (kind_ != SchemaKind::hierarchical) return out;
    std::string cur = parent_path(label);
    while (!cur.empty()) {
        out.push_back(cur);
        cur = parent_path(cur);
    }
    std::reverse(out.begin(), out.end());
    return out;
}

bool TypeSchema::is_leaf(const std::string& label) const {
    if (kind_ != SchemaKind::hierarchical) return true;
    const std::string prefix = label + "/";
    for (const auto& other : labels_) {
        if (other.size() > prefix.size() && other.compare(0, prefix.size(), prefix) == 0) return false;
    }
    return true;
}

TypeSchema load_schema(const std::string& path, SchemaKind kind) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open schema file: " + path);
    std::vector<std::string> labels;
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        labels.push_back(t);
    }
    return TypeSchema::from_labels(kind, std::move(labels));
}

void save_schema(const TypeSchema& schema, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write schema file: " + path);
    for (const auto& label : schema.labels()) out << label << "\n";
}

std::string normalize_phrase(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = true; // strips leading whitespace
    for (char ch : s) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out.push_back(' ');
        in_space = false;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
    return out;
}

std::string map_label_to_phrase(const std::string& label, SchemaKind kind,
                                const std::map<std::string, std::string>& overrides) {
    auto it = overrides.find(label);
    if (it != overrides.end()) {
        const std::string phrase = normalize_phrase(it->second);
        if (phrase.empty()) throw MappingError("override for " + label + " is empty");
        return phrase;
    }
    if (kind == SchemaKind::free_form) {
        const std::string phrase = normalize_phrase(label);
        if (phrase.empty()) throw MappingError("label normalizes to empty phrase: " + label);
        return phrase;
    }
    const size_t pos = label.rfind('/');
    std::string segment = pos == std::string::npos ? label : label.substr(pos + 1);
    if (segment.empty()) throw MappingError("label has empty final segment: " + label);
    for (char& ch : segment) {
        if (ch == '_') ch = ' ';
    }
    const std::string phrase = normalize_phrase(segment);
    if (phrase.empty()) throw MappingError("label maps to empty phrase: " + label);
    return phrase;
}

const std::string& LabelMapping::phrase_for(const std::string& label) const {
    auto it = entries.find(label);
    if (it == entries.end()) throw MappingError("no phrase for label: " + label);
    return it->second;
}

bool LabelMapping::covers(const TypeSchema& schema) const {
    for (const auto& label : schema.labels()) {
        if (!entries.count(label)) return false;
    }
    return true;
}

std::vector<std::string> LabelMapping::phrases_in_schema_order(const TypeSchema& schema) const {
    std::vector<std::string> out;
    out.reserve(schema.labels().size());
    for (const auto& label : schema.labels()) out.push_back(phrase_for(label));
    return out;
}

LabelMapping build_phrase_table(const TypeSchema& schema,
                                const std::map<std::string, std::string>& overrides) {
    LabelMapping mapping;
    std::map<std::string, std::vector<std::string>> by_phrase;
    for (const auto& label : schema.labels()) {
        const std::string phrase = map_label_to_phrase(label, schema.kind(), overrides);
        mapping.entries[label] = phrase;
        by_phrase[phrase].push_back(label);
    }
    for (auto& [phrase, labels] : by_phrase) {
        if (labels.size() > 1) mapping.collisions.emplace_back(phrase, labels);
    }
    return mapping;
}

std::map<std::string, std::string> load_overrides_tsv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open overrides file: " + path);
    std::map<std::string, std::string> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty() || trim(line).front() == '#') continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw ParseError("overrides line " + std::to_string(line_no) + ": expected label<TAB>phrase");
        }
        const std::string label = trim(line.substr(0, tab));
        const std::string phrase = trim(line.substr(tab + 1));
        if (label.empty() || phrase.empty()) {
            throw ParseError("overrides line " + std::to_string(line_no) + ": empty label or phrase");
        }
        out[label] = phrase;
    }
    return out;
}

void save_mapping_tsv(const LabelMapping& mapping, const TypeSchema& schema,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write mapping file: " + path);
    for (const auto& label : schema.labels()) {
        out << label << "\t" << mapping.phrase_for(label) << "\n";
    }
}

} // namespace typeforge
