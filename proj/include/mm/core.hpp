#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace mm {

struct Utterance {
    std::string id;
    std::string text;
    std::size_t index = 0;  // position within the owning instance
};

// A labeled set of utterances; the unit of task-specific training.
struct Instance {
    std::string id;
    std::vector<Utterance> utterances;
    std::optional<std::string> label;

    std::size_t size() const { return utterances.size(); }
};

// A flat utterance collection (example corpora, retrieval backgrounds).
struct Corpus {
    std::string id;
    std::vector<Utterance> utterances;

    bool empty() const { return utterances.empty(); }
    std::size_t size() const { return utterances.size(); }
};

// Category -> entries. An entry is a lowercase literal token, or a token
// prefix marked by a trailing '*'.
struct Lexicon {
    std::string name;
    std::map<std::string, std::set<std::string>> categories;

    bool has_category(const std::string& category) const {
        return categories.count(category) != 0;
    }
};

// One JSON object per line: {"id": string, "text": string}.
Corpus load_corpus(const std::string& path);
void save_corpus(const Corpus& corpus, const std::string& path);

// One JSON object per line: {"id", "label"?, "utterances": [{"id","text"}]}.
std::vector<Instance> load_instances(const std::string& path);
void save_instances(const std::vector<Instance>& instances, const std::string& path);

// {"name": string, "categories": {name: [entry, ...]}}.
Lexicon load_lexicon(const std::string& path);

// True when `token` matches `entry` (literal equality, or prefix match for
// entries ending in '*').
bool lexicon_entry_matches(const std::string& entry, const std::string& token);

}  // namespace mm
