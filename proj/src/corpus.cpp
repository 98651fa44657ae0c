#include "typeforge/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "typeforge/errors.hpp"
#include "typeforge/rng.hpp"

namespace typeforge {

using nlohmann::json;

const char* to_string(LabelSource src) {
    switch (src) {
        case LabelSource::kb: return "kb";
        case LabelSource::head: return "head";
        case LabelSource::prompt: return "prompt";
    }
    return "kb";
}

LabelSource label_source_from_string(const std::string& s) {
    if (s == "kb") return LabelSource::kb;
    if (s == "head") return LabelSource::head;
    if (s == "prompt") return LabelSource::prompt;
    throw ParseError("unknown label source: " + s);
}

bool MentionExample::has_label(const std::string& label) const {
    return std::find(labels.begin(), labels.end(), label) != labels.end();
}

std::string MentionExample::mention_text() const {
    std::string out;
    for (const auto& w : mention) {
        if (!out.empty()) out.push_back(' ');
        out += w;
    }
    return out;
}

namespace {

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::istringstream ss(text);
    std::string w;
    while (ss >> w) words.push_back(w);
    return words;
}

std::vector<std::string> string_list(const json& j, const std::string& key, int line_no) {
    if (!j.contains(key) || !j[key].is_array()) {
        throw ParseError("line " + std::to_string(line_no) + ": missing array field " + key);
    }
    std::vector<std::string> out;
    for (const auto& item : j[key]) {
        if (!item.is_string()) {
            throw ParseError("line " + std::to_string(line_no) + ": " + key + " must hold strings");
        }
        out.push_back(item.get<std::string>());
    }
    return out;
}

// a strictly contains b as a path prefix
bool is_path_ancestor(const std::string& a, const std::string& b) {
    return b.size() > a.size() + 1 && b.compare(0, a.size(), a) == 0 && b[a.size()] == '/';
}

} // namespace

std::vector<MentionExample> read_examples(const std::string& path, const TypeSchema& schema) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open corpus file: " + path);
    std::vector<MentionExample> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        MentionExample ex;
        ex.left_context = string_list(j, "left_context_token", line_no);
        ex.right_context = string_list(j, "right_context_token", line_no);
        if (!j.contains("word") || !j["word"].is_string()) {
            throw ParseError("line " + std::to_string(line_no) + ": missing string field word");
        }
        ex.mention = split_words(j["word"].get<std::string>());
        if (ex.mention.empty()) {
            throw ValidationError("line " + std::to_string(line_no) + ": empty mention");
        }
        ex.labels = string_list(j, "y_str", line_no);
        std::unordered_set<std::string> seen;
        for (const auto& label : ex.labels) {
            if (!schema.contains(label)) {
                throw ValidationError("line " + std::to_string(line_no) +
                                      ": label not in schema: " + label);
            }
            if (!seen.insert(label).second) {
                throw ValidationError("line " + std::to_string(line_no) +
                                      ": duplicate label: " + label);
            }
        }
        if (j.contains("label_src")) {
            const auto sources = string_list(j, "label_src", line_no);
            if (sources.size() != ex.labels.size()) {
                throw ParseError("line " + std::to_string(line_no) +
                                 ": label_src length does not match y_str");
            }
            for (size_t i = 0; i < sources.size(); ++i) {
                if (sources[i].empty()) continue; // unknown provenance
                ex.label_sources[ex.labels[i]] = label_source_from_string(sources[i]);
            }
        }
        out.push_back(std::move(ex));
    }
    return out;
}

void write_examples(const std::string& path, const std::vector<MentionExample>& examples) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write corpus file: " + path);
    for (const auto& ex : examples) {
        json j;
        j["left_context_token"] = ex.left_context;
        j["right_context_token"] = ex.right_context;
        j["word"] = ex.mention_text();
        j["y_str"] = ex.labels;
        if (!ex.label_sources.empty()) {
            std::vector<std::string> sources;
            for (const auto& label : ex.labels) {
                auto it = ex.label_sources.find(label);
                sources.push_back(it == ex.label_sources.end() ? "" : to_string(it->second));
            }
            j["label_src"] = sources;
        }
        out << j.dump() << "\n";
    }
}

FewShotSplit sample_fewshot(const std::vector<MentionExample>& examples, const TypeSchema& schema,
                            int k, uint64_t seed, bool allow_deficient,
                            std::vector<std::string>* warnings) {
    if (k < 1) throw ConfigError("sample_fewshot: k must be >= 1");
    const int n = static_cast<int>(examples.size());
    const int num_labels = schema.size();

    std::vector<std::vector<int>> by_label(num_labels);
    for (int i = 0; i < n; ++i) {
        for (const auto& label : examples[i].labels) {
            const int idx = schema.index_of(label);
            if (idx < 0) throw ValidationError("sample_fewshot: label not in schema: " + label);
            by_label[idx].push_back(i);
        }
    }

    std::vector<int> deficient;
    for (int l = 0; l < num_labels; ++l) {
        if (static_cast<int>(by_label[l].size()) < 2 * k) deficient.push_back(l);
    }
    if (!deficient.empty()) {
        std::string msg = "labels with fewer than " + std::to_string(2 * k) + " examples:";
        for (int l : deficient) {
            msg += " " + schema.labels()[l] + "(" + std::to_string(by_label[l].size()) + ")";
        }
        if (!allow_deficient) throw CoverageError(msg);
        if (warnings) warnings->push_back(msg);
    }

    std::vector<int> order(num_labels);
    for (int l = 0; l < num_labels; ++l) order[l] = l;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return by_label[a].size() < by_label[b].size();
    });

    std::vector<char> in_train(n, 0), in_dev(n, 0);
    std::vector<int> cov_train(num_labels, 0), cov_dev(num_labels, 0);
    Rng rng(mix_seed(seed, 0xFE5407ull));

    auto admit = [&](int ex_idx, std::vector<char>& member, std::vector<int>& cov) {
        member[ex_idx] = 1;
        for (const auto& label : examples[ex_idx].labels) ++cov[schema.index_of(label)];
    };
    auto fill = [&](int label_idx, std::vector<char>& member, std::vector<int>& cov) {
        while (cov[label_idx] < k) {
            std::vector<int> candidates;
            for (int i : by_label[label_idx]) {
                if (!in_train[i] && !in_dev[i]) candidates.push_back(i);
            }
            if (candidates.empty()) break;
            admit(candidates[rng.below(candidates.size())], member, cov);
        }
    };

    for (int label_idx : order) {
        fill(label_idx, in_train, cov_train);
        fill(label_idx, in_dev, cov_dev);
    }

    // Repair: multi-label overlap can leave one side of a label short even
    // though 2k examples exist. Move examples across the split when doing so
    // keeps every other satisfiable label covered.
    auto movable = [&](int ex_idx, const std::vector<int>& cov_from) {
        for (const auto& label : examples[ex_idx].labels) {
            const int l = schema.index_of(label);
            if (static_cast<int>(by_label[l].size()) >= 2 * k && cov_from[l] - 1 < k) return false;
        }
        return true;
    };
    for (int round = 0; round < num_labels + 1; ++round) {
        bool changed = false;
        for (int l = 0; l < num_labels; ++l) {
            if (static_cast<int>(by_label[l].size()) < 2 * k) continue;
            while (cov_dev[l] < k) {
                int pick = -1;
                for (int i : by_label[l]) {
                    if (in_train[i] && movable(i, cov_train)) {
                        pick = i;
                        break;
                    }
                }
                if (pick < 0) break;
                in_train[pick] = 0;
                for (const auto& lab : examples[pick].labels) --cov_train[schema.index_of(lab)];
                admit(pick, in_dev, cov_dev);
                changed = true;
            }
            while (cov_train[l] < k) {
                int pick = -1;
                for (int i : by_label[l]) {
                    if (in_dev[i] && movable(i, cov_dev)) {
                        pick = i;
                        break;
                    }
                }
                if (pick < 0) break;
                in_dev[pick] = 0;
                for (const auto& lab : examples[pick].labels) --cov_dev[schema.index_of(lab)];
                admit(pick, in_train, cov_train);
                changed = true;
            }
        }
        if (!changed) break;
    }

    for (int l = 0; l < num_labels; ++l) {
        if (static_cast<int>(by_label[l].size()) < 2 * k) continue;
        if (cov_train[l] < k || cov_dev[l] < k) {
            throw CoverageError("could not reach " + std::to_string(k) +
                                "-shot coverage for label " + schema.labels()[l]);
        }
    }

    FewShotSplit split;
    split.k = k;
    split.seed = seed;
    for (int i = 0; i < n; ++i) {
        if (in_train[i]) split.train.push_back(examples[i]);
        if (in_dev[i]) split.dev.push_back(examples[i]);
    }
    return split;
}

namespace {

std::string example_key(const MentionExample& ex) {
    json j;
    j["l"] = ex.left_context;
    j["m"] = ex.mention;
    j["r"] = ex.right_context;
    j["y"] = ex.labels;
    return j.dump();
}

} // namespace

std::vector<std::string> verify_fewshot(const FewShotSplit& split, const TypeSchema& schema,
                                        const std::vector<MentionExample>& examples) {
    std::vector<std::string> violations;
    std::set<std::string> train_keys;
    for (const auto& ex : split.train) train_keys.insert(example_key(ex));
    for (const auto& ex : split.dev) {
        if (train_keys.count(example_key(ex))) {
            violations.push_back("example in both train and dev: " + ex.mention_text());
        }
    }
    for (const auto& label : schema.labels()) {
        int total = 0;
        for (const auto& ex : examples) {
            if (ex.has_label(label)) ++total;
        }
        if (total < 2 * split.k) continue;
        int tr = 0, dv = 0;
        for (const auto& ex : split.train) {
            if (ex.has_label(label)) ++tr;
        }
        for (const auto& ex : split.dev) {
            if (ex.has_label(label)) ++dv;
        }
        if (tr < split.k) violations.push_back("train coverage " + std::to_string(tr) + " < k for " + label);
        if (dv < split.k) violations.push_back("dev coverage " + std::to_string(dv) + " < k for " + label);
    }
    return violations;
}

std::vector<MentionExample> filter_single_path(const std::vector<MentionExample>& examples,
                                               const TypeSchema& schema) {
    if (schema.kind() != SchemaKind::hierarchical) {
        throw ValidationError("filter_single_path requires a hierarchical schema");
    }
    std::vector<MentionExample> out;
    for (const auto& ex : examples) {
        bool single_path = true;
        for (size_t i = 0; i < ex.labels.size() && single_path; ++i) {
            for (size_t j = i + 1; j < ex.labels.size(); ++j) {
                const auto& a = ex.labels[i];
                const auto& b = ex.labels[j];
                if (!is_path_ancestor(a, b) && !is_path_ancestor(b, a)) {
                    single_path = false;
                    break;
                }
            }
        }
        if (single_path) out.push_back(ex);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

namespace {

constexpr const char* kMentionSlot = "<mention>";

std::vector<std::string> template_context_words(const std::string& tmpl) {
    std::vector<std::string> words;
    for (const auto& w : split_words(tmpl)) {
        if (w != kMentionSlot) words.push_back(w);
    }
    return words;
}

// Words of each type's templates that appear in no other type's templates.
std::vector<std::set<std::string>> unique_words_per_type(const SyntheticSpec& spec) {
    std::vector<std::set<std::string>> all(spec.types.size());
    for (size_t t = 0; t < spec.types.size(); ++t) {
        for (const auto& tmpl : spec.types[t].templates) {
            for (const auto& w : template_context_words(tmpl)) all[t].insert(w);
        }
    }
    std::vector<std::set<std::string>> unique(spec.types.size());
    for (size_t t = 0; t < spec.types.size(); ++t) {
        for (const auto& w : all[t]) {
            bool elsewhere = false;
            for (size_t o = 0; o < spec.types.size() && !elsewhere; ++o) {
                if (o != t && all[o].count(w)) elsewhere = true;
            }
            if (!elsewhere) unique[t].insert(w);
        }
    }
    return unique;
}

std::vector<std::string> ufet_labels_for(const SyntheticType& type, bool prefix_labels) {
    const auto words = split_words(type.name);
    std::vector<std::string> labels;
    if (prefix_labels) {
        std::string prefix;
        for (size_t i = 0; i + 1 < words.size(); ++i) {
            if (!prefix.empty()) prefix.push_back(' ');
            prefix += words[i];
            labels.push_back(prefix);
        }
    }
    labels.push_back(type.name);
    return labels;
}

std::vector<std::string> fet_labels_for(const SyntheticType& type) {
    const auto words = split_words(type.name);
    std::vector<std::string> labels;
    std::string path;
    for (const auto& w : words) {
        path += "/" + w;
        labels.push_back(path);
    }
    return labels;
}

void append_unique(std::vector<std::string>& dst, const std::vector<std::string>& src) {
    for (const auto& s : src) {
        if (std::find(dst.begin(), dst.end(), s) == dst.end()) dst.push_back(s);
    }
}

} // namespace

void SyntheticSpec::validate() const {
    if (types.size() < 2) throw ConfigError("synthetic spec needs at least 2 types");
    if (examples_per_type < 1) throw ConfigError("examples_per_type must be >= 1");
    std::set<std::string> names;
    for (const auto& type : types) {
        if (type.name.empty() || type.name != normalize_phrase(type.name)) {
            throw ConfigError("type name must be non-empty, lowercase, single-spaced: \"" +
                              type.name + "\"");
        }
        if (!names.insert(type.name).second) throw ConfigError("duplicate type name: " + type.name);
        if (type.mentions.empty()) throw ConfigError("type " + type.name + " has no mentions");
        if (type.templates.empty()) throw ConfigError("type " + type.name + " has no templates");
        for (const auto& m : type.mentions) {
            if (split_words(m).empty()) throw ConfigError("type " + type.name + " has an empty mention");
        }
        for (const auto& tmpl : type.templates) {
            int slots = 0;
            for (const auto& w : split_words(tmpl)) {
                if (w == kMentionSlot) ++slots;
            }
            if (slots != 1) {
                throw ConfigError("template must contain exactly one " + std::string(kMentionSlot) +
                                  ": \"" + tmpl + "\"");
            }
        }
    }
    const auto unique = unique_words_per_type(*this);
    for (size_t t = 0; t < types.size(); ++t) {
        for (const auto& tmpl : types[t].templates) {
            bool has_indicator = false;
            for (const auto& w : template_context_words(tmpl)) {
                if (unique[t].count(w)) {
                    has_indicator = true;
                    break;
                }
            }
            if (!has_indicator) {
                throw ConfigError("template of type " + types[t].name +
                                  " has no type-unique context word: \"" + tmpl + "\"");
            }
        }
    }
}

SyntheticCorpus generate_synthetic_corpus(const SyntheticSpec& spec, uint64_t seed) {
    spec.validate();

    std::vector<std::string> ufet_labels, fet_labels;
    for (const auto& type : spec.types) {
        append_unique(ufet_labels, ufet_labels_for(type, spec.prefix_labels));
        append_unique(fet_labels, fet_labels_for(type));
    }

    SyntheticCorpus corpus;
    corpus.ufet_schema = TypeSchema::from_labels(SchemaKind::free_form, ufet_labels);
    corpus.fet_schema = TypeSchema::from_labels(SchemaKind::hierarchical, fet_labels);

    Rng rng(mix_seed(seed, 0x5E6C0125ull));
    std::vector<MentionExample> ufet, fet;
    for (const auto& type : spec.types) {
        const auto u_labels = ufet_labels_for(type, spec.prefix_labels);
        const auto f_labels = fet_labels_for(type);
        for (int i = 0; i < spec.examples_per_type; ++i) {
            const std::string& tmpl = type.templates[rng.below(type.templates.size())];
            const std::string& mention = type.mentions[rng.below(type.mentions.size())];
            MentionExample ex;
            bool before_slot = true;
            for (const auto& w : split_words(tmpl)) {
                if (w == kMentionSlot) {
                    before_slot = false;
                    continue;
                }
                (before_slot ? ex.left_context : ex.right_context).push_back(w);
            }
            ex.mention = split_words(mention);
            ex.labels = u_labels;
            ufet.push_back(ex);
            ex.labels = f_labels;
            fet.push_back(std::move(ex));
        }
    }

    std::vector<size_t> perm(ufet.size());
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    rng.shuffle(perm);
    for (size_t i : perm) {
        corpus.ufet_examples.push_back(std::move(ufet[i]));
        corpus.fet_examples.push_back(std::move(fet[i]));
    }
    return corpus;
}

std::vector<std::string> synthetic_oracle_labels(const SyntheticSpec& spec,
                                                 const MentionExample& example) {
    const auto unique = unique_words_per_type(spec);
    std::set<std::string> context(example.left_context.begin(), example.left_context.end());
    context.insert(example.right_context.begin(), example.right_context.end());
    int match = -1;
    for (size_t t = 0; t < spec.types.size(); ++t) {
        for (const auto& w : unique[t]) {
            if (context.count(w)) {
                if (match >= 0 && match != static_cast<int>(t)) return {};
                match = static_cast<int>(t);
                break;
            }
        }
    }
    if (match < 0) return {};
    return ufet_labels_for(spec.types[match], spec.prefix_labels);
}

// ---------------------------------------------------------------------------
// Spec (de)serialization and built-in worlds

SyntheticSpec SyntheticSpec::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("synthetic spec: ") + e.what());
    }
    SyntheticSpec spec;
    if (j.contains("examples_per_type")) spec.examples_per_type = j["examples_per_type"].get<int>();
    if (j.contains("prefix_labels")) spec.prefix_labels = j["prefix_labels"].get<bool>();
    if (!j.contains("types") || !j["types"].is_array()) {
        throw ConfigError("synthetic spec: missing types array");
    }
    for (const auto& tj : j["types"]) {
        SyntheticType type;
        type.name = tj.value("name", "");
        if (tj.contains("mentions")) type.mentions = tj["mentions"].get<std::vector<std::string>>();
        if (tj.contains("templates")) type.templates = tj["templates"].get<std::vector<std::string>>();
        spec.types.push_back(std::move(type));
    }
    spec.validate();
    return spec;
}

SyntheticSpec SyntheticSpec::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open synthetic spec: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string SyntheticSpec::to_json_text() const {
    json j;
    j["examples_per_type"] = examples_per_type;
    j["prefix_labels"] = prefix_labels;
    j["types"] = json::array();
    for (const auto& type : types) {
        json tj;
        tj["name"] = type.name;
        tj["mentions"] = type.mentions;
        tj["templates"] = type.templates;
        j["types"].push_back(tj);
    }
    return j.dump(2);
}

namespace {

SyntheticType make_type(std::string name, std::vector<std::string> mentions,
                        std::vector<std::string> templates) {
    return SyntheticType{std::move(name), std::move(mentions), std::move(templates)};
}

std::vector<SyntheticType> demo_types() {
    return {
        make_type("animal dog", {"rex", "fido", "buddy", "the old hound"},
                  {"everyone heard <mention> barking at the mail van",
                   "<mention> wagged its tail and fetched the stick",
                   "the vet said <mention> buried a bone in the yard"}),
        make_type("animal cat", {"whiskers", "mittens", "tom", "the grey tabby"},
                  {"<mention> purred on the warm windowsill all day",
                   "they watched <mention> chase the laser dot upstairs",
                   "<mention> meowed until the tin of tuna was opened"}),
        make_type("animal bird", {"polly", "the parrot", "tweety", "our canary"},
                  {"<mention> chirped from the nest at dawn",
                   "the feathers of <mention> shimmered as it flew south",
                   "<mention> pecked seeds scattered on the balcony"}),
        make_type("animal fish", {"nemo", "the goldfish", "bubbles", "the trout"},
                  {"<mention> swam circles in the glass aquarium",
                   "the fins of <mention> flashed under the reef",
                   "<mention> nibbled the bait and darted below the weeds"}),
        make_type("vehicle car", {"the sedan", "her convertible", "the taxi", "a rental"},
                  {"<mention> honked twice in the rush hour jam",
                   "he parked <mention> in the narrow garage overnight",
                   "<mention> needed new tires after the long motorway drive"}),
        make_type("vehicle truck", {"the lorry", "big rig", "the hauler", "an eighteen wheeler"},
                  {"<mention> hauled gravel up the quarry road",
                   "the diesel engine of <mention> rumbled at the depot",
                   "<mention> backed into the loading bay with pallets"}),
        make_type("vehicle boat", {"the sloop", "our dinghy", "the ferry", "a yacht"},
                  {"<mention> sailed across the inlet before the storm",
                   "they anchored <mention> near the lighthouse pier",
                   "the hull of <mention> creaked against the waves"}),
        make_type("vehicle bike", {"the tandem", "his bmx", "the fixie", "a cruiser"},
                  {"<mention> pedaled uphill past the vineyard",
                   "she rang the bell on <mention> and gripped the handlebars",
                   "the spokes of <mention> clicked along the towpath"}),
        make_type("food bread", {"the baguette", "a sourdough loaf", "the ciabatta", "rye slices"},
                  {"<mention> came out of the oven with a golden crust",
                   "she sliced <mention> for toast at breakfast",
                   "the dough for <mention> rose under a damp cloth"}),
        make_type("food cheese", {"the cheddar", "a brie wheel", "the gouda", "blue stilton"},
                  {"<mention> was grated over the steaming pasta",
                   "the dairy aged <mention> in a cool cellar",
                   "<mention> melted between the crackers at the picnic"}),
        make_type("food soup", {"the chowder", "a minestrone", "the bisque", "lentil stew"},
                  {"<mention> simmered in the copper pot for hours",
                   "he ladled <mention> into the bowls at supper",
                   "the broth of <mention> smelled of thyme and garlic"}),
        make_type("food salad", {"the coleslaw", "a caesar", "the tabbouleh", "garden greens"},
                  {"<mention> was tossed with vinaigrette dressing",
                   "the lettuce in <mention> stayed crisp and cold",
                   "she sprinkled croutons over <mention> before serving"}),
        make_type("place school", {"the academy", "our kindergarten", "the lyceum", "a boarding campus"},
                  {"pupils filled the classroom of <mention> at nine",
                   "teachers graded essays inside <mention> until dusk",
                   "<mention> scheduled recess and algebra lessons"}),
        make_type("place harbor", {"the marina", "port azura", "the quay", "an old seaport"},
                  {"<mention> sheltered trawlers from the gale",
                   "cranes unloaded cargo containers at <mention>",
                   "the tide lapped the seawall around <mention>"}),
        make_type("place bakery", {"the patisserie", "crumb corner", "the bakehouse", "a pastry shop"},
                  {"<mention> sold croissants and glazed buns at sunrise",
                   "the smell of warm pastry drifted from <mention>",
                   "flour dusted every counter inside <mention>"}),
        make_type("place stadium", {"the arena", "memorial grounds", "the velodrome", "a coliseum"},
                  {"fans roared in the bleachers of <mention>",
                   "<mention> hosted the championship final under floodlights",
                   "vendors sold popcorn along the concourse of <mention>"}),
    };
}

std::vector<SyntheticType> small_types() {
    auto demo = demo_types();
    const std::vector<std::string> picks = {"animal dog", "animal cat", "vehicle car",
                                            "vehicle boat", "food bread", "food soup",
                                            "place school", "place harbor"};
    std::vector<SyntheticType> out;
    for (const auto& pick : picks) {
        for (auto& type : demo) {
            if (type.name == pick) {
                SyntheticType t = type;
                t.name = split_words(type.name).back(); // single-word name
                out.push_back(std::move(t));
            }
        }
    }
    return out;
}

} // namespace

SyntheticSpec SyntheticSpec::builtin(const std::string& name) {
    SyntheticSpec spec;
    if (name == "demo") {
        spec.types = demo_types();
        spec.examples_per_type = 72;
        spec.prefix_labels = true;
    } else if (name == "small") {
        spec.types = small_types();
        spec.examples_per_type = 8;
        spec.prefix_labels = false;
    } else {
        throw ConfigError("unknown builtin synthetic spec: " + name);
    }
    spec.validate();
    return spec;
}

} // namespace typeforge
