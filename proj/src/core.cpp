#include "mm/core.hpp"

#include <fstream>
#include <unordered_set>

#include <json.hpp>

#include "mm/errors.hpp"

namespace mm {

using nlohmann::json;

namespace {

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path);
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open file for writing: " + path);
    return out;
}

json parse_line(const std::string& line, const std::string& path, int lineno) {
    json doc = json::parse(line, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ParseError(path + ": malformed record", lineno, 1);
    }
    return doc;
}

std::string require_string(const json& doc, const char* field, const std::string& path, int lineno) {
    if (!doc.contains(field) || !doc[field].is_string()) {
        throw ParseError(path + ": missing or non-string \"" + field + "\"", lineno, 1);
    }
    return doc[field].get<std::string>();
}

}  // namespace

Corpus load_corpus(const std::string& path) {
    auto in = open_input(path);
    Corpus corpus;
    corpus.id = path;
    std::unordered_set<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const json doc = parse_line(line, path, lineno);
        Utterance utt;
        utt.id = require_string(doc, "id", path, lineno);
        utt.text = require_string(doc, "text", path, lineno);
        utt.index = corpus.utterances.size();
        if (!seen.insert(utt.id).second) {
            throw ValidationError(path + ": duplicate utterance id \"" + utt.id + "\"");
        }
        corpus.utterances.push_back(std::move(utt));
    }
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    auto out = open_output(path);
    for (const auto& utt : corpus.utterances) {
        out << json{{"id", utt.id}, {"text", utt.text}}.dump() << '\n';
    }
}

std::vector<Instance> load_instances(const std::string& path) {
    auto in = open_input(path);
    std::vector<Instance> instances;
    std::unordered_set<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const json doc = parse_line(line, path, lineno);
        Instance inst;
        inst.id = require_string(doc, "id", path, lineno);
        if (!seen.insert(inst.id).second) {
            throw ValidationError(path + ": duplicate instance id \"" + inst.id + "\"");
        }
        if (doc.contains("label") && !doc["label"].is_null()) {
            if (!doc["label"].is_string()) {
                throw ParseError(path + ": \"label\" must be a string", lineno, 1);
            }
            inst.label = doc["label"].get<std::string>();
        }
        if (!doc.contains("utterances") || !doc["utterances"].is_array()) {
            throw ParseError(path + ": missing \"utterances\" array", lineno, 1);
        }
        std::unordered_set<std::string> utt_ids;
        for (const auto& u : doc["utterances"]) {
            if (!u.is_object()) throw ParseError(path + ": utterance must be an object", lineno, 1);
            Utterance utt;
            utt.id = require_string(u, "id", path, lineno);
            utt.text = require_string(u, "text", path, lineno);
            utt.index = inst.utterances.size();
            if (!utt_ids.insert(utt.id).second) {
                throw ValidationError(path + ": duplicate utterance id \"" + utt.id +
                                      "\" in instance \"" + inst.id + "\"");
            }
            inst.utterances.push_back(std::move(utt));
        }
        if (inst.utterances.empty()) {
            throw ValidationError(path + ": instance \"" + inst.id + "\" has no utterances");
        }
        instances.push_back(std::move(inst));
    }
    return instances;
}

void save_instances(const std::vector<Instance>& instances, const std::string& path) {
    auto out = open_output(path);
    for (const auto& inst : instances) {
        json utts = json::array();
        for (const auto& utt : inst.utterances) {
            utts.push_back({{"id", utt.id}, {"text", utt.text}});
        }
        json doc{{"id", inst.id}, {"utterances", std::move(utts)}};
        if (inst.label) doc["label"] = *inst.label;
        out << doc.dump() << '\n';
    }
}

Lexicon load_lexicon(const std::string& path) {
    auto in = open_input(path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("name") || !doc.contains("categories") ||
        !doc["categories"].is_object()) {
        throw ParseError(path + ": lexicon must be {\"name\", \"categories\": {...}}");
    }
    Lexicon lex;
    lex.name = doc["name"].get<std::string>();
    for (const auto& [category, entries] : doc["categories"].items()) {
        if (!entries.is_array() || entries.empty()) {
            throw ValidationError(path + ": category \"" + category + "\" must be a non-empty array");
        }
        auto& set = lex.categories[category];
        for (const auto& e : entries) {
            if (!e.is_string()) throw ParseError(path + ": entries must be strings");
            set.insert(e.get<std::string>());
        }
    }
    return lex;
}

bool lexicon_entry_matches(const std::string& entry, const std::string& token) {
    if (!entry.empty() && entry.back() == '*') {
        return token.compare(0, entry.size() - 1, entry, 0, entry.size() - 1) == 0;
    }
    return token == entry;
}

}  // namespace mm
