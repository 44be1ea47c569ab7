#include "mm/micromodel.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "mm/errors.hpp"
#include "mm/text.hpp"

namespace mm {

using nlohmann::json;
namespace fs = std::filesystem;

std::string HitVector::bits_string() const {
    std::string s;
    s.reserve(bits.size());
    for (auto b : bits) s.push_back(b ? '1' : '0');
    return s;
}

HitVector Micromodel::run(const Instance& instance) const {
    HitVector hv;
    hv.micromodel = name_;
    hv.instance = instance.id;
    hv.bits.reserve(instance.size());
    if (scored()) hv.scores.reserve(instance.size());
    for (const auto& utt : instance.utterances) {
        if (scored()) {
            const auto [bit, score] = hit_scored(utt.text);
            hv.bits.push_back(static_cast<std::uint8_t>(bit));
            hv.scores.push_back(score);
        } else {
            hv.bits.push_back(static_cast<std::uint8_t>(hit(utt.text)));
        }
    }
    return hv;
}

json Micromodel::to_json() const {
    json doc{{"name", name_}, {"kind", kind()}, {"version", 1}};
    payload_to(doc);
    return doc;
}

// ---------------------------------------------------------------------------
// keyword-logic

KeywordLogicModel::KeywordLogicModel(std::string name, const std::vector<std::string>& keywords)
    : Micromodel(std::move(name)) {
    for (const auto& kw : keywords) {
        auto tokens = tokenize(kw);
        if (tokens.empty()) {
            throw ConfigError("keyword-logic \"" + this->name() + "\": keyword \"" + kw +
                              "\" has no tokens");
        }
        keywords_.push_back(std::move(tokens));
    }
    if (keywords_.empty()) {
        throw ConfigError("keyword-logic \"" + this->name() + "\": empty keyword list");
    }
}

KeywordLogicModel::KeywordLogicModel(std::string name,
                                     std::vector<std::vector<std::string>> keyword_tokens)
    : Micromodel(std::move(name)), keywords_(std::move(keyword_tokens)) {
    if (keywords_.empty()) {
        throw ConfigError("keyword-logic \"" + this->name() + "\": empty keyword list");
    }
    for (const auto& kw : keywords_) {
        if (kw.empty()) throw ConfigError("keyword-logic \"" + this->name() + "\": empty n-gram");
    }
}

namespace {

bool contains_ngram(const std::vector<std::string>& tokens, const std::vector<std::string>& ngram) {
    if (ngram.size() > tokens.size()) return false;
    for (std::size_t start = 0; start + ngram.size() <= tokens.size(); ++start) {
        bool match = true;
        for (std::size_t j = 0; j < ngram.size(); ++j) {
            if (tokens[start + j] != ngram[j]) {
                match = false;
                break;
            }
        }
        if (match) return true;
    }
    return false;
}

}  // namespace

int KeywordLogicModel::hit(const std::string& text) const {
    const auto tokens = tokenize(text);
    for (const auto& ngram : keywords_) {
        if (contains_ngram(tokens, ngram)) return 1;
    }
    return 0;
}

void KeywordLogicModel::payload_to(json& doc) const { doc["keywords"] = keywords_; }

// ---------------------------------------------------------------------------
// lexicon-logic

LexiconLogicModel::LexiconLogicModel(std::string name, const Lexicon& lexicon,
                                     const std::string& category)
    : Micromodel(std::move(name)), lexicon_name_(lexicon.name), category_(category) {
    auto it = lexicon.categories.find(category);
    if (it == lexicon.categories.end()) {
        throw ConfigError("lexicon \"" + lexicon.name + "\" has no category \"" + category + "\"");
    }
    entries_.assign(it->second.begin(), it->second.end());
}

LexiconLogicModel::LexiconLogicModel(std::string name, std::string lexicon_name,
                                     std::string category, std::vector<std::string> entries)
    : Micromodel(std::move(name)),
      lexicon_name_(std::move(lexicon_name)),
      category_(std::move(category)),
      entries_(std::move(entries)) {
    if (entries_.empty()) {
        throw ConfigError("lexicon-logic \"" + this->name() + "\": empty entry set");
    }
    std::sort(entries_.begin(), entries_.end());
}

int LexiconLogicModel::hit(const std::string& text) const {
    for (const auto& token : tokenize(text)) {
        for (const auto& entry : entries_) {
            if (lexicon_entry_matches(entry, token)) return 1;
        }
    }
    return 0;
}

void LexiconLogicModel::payload_to(json& doc) const {
    doc["lexicon"] = lexicon_name_;
    doc["category"] = category_;
    doc["entries"] = entries_;
}

// ---------------------------------------------------------------------------
// linear-svm

LinearSvmModel::LinearSvmModel(std::string name, LinearSvm svm)
    : Micromodel(std::move(name)), svm_(std::move(svm)) {}

int LinearSvmModel::hit(const std::string& text) const { return svm_.predict(text); }

std::pair<int, double> LinearSvmModel::hit_scored(const std::string& text) const {
    const double margin = svm_.margin(text);
    return {margin > 0.0 ? 1 : 0, margin};
}

void LinearSvmModel::payload_to(json& doc) const {
    doc["vocabulary"] = svm_.vocabulary;
    doc["weights"] = svm_.weights;
    doc["bias"] = svm_.bias;
    doc["lambda"] = svm_.params.lambda;
    doc["epochs"] = svm_.params.epochs;
    doc["seed"] = svm_.params.seed;
}

// ---------------------------------------------------------------------------
// similarity-query

SimilarityQueryModel::SimilarityQueryModel(std::string name, const Corpus& examples,
                                           double threshold,
                                           std::shared_ptr<const EmbeddingProvider> provider)
    : Micromodel(std::move(name)),
      examples_(examples),
      threshold_(threshold),
      provider_(std::move(provider)) {
    if (examples_.empty()) {
        throw ConfigError("similarity-query \"" + this->name() + "\": empty example corpus");
    }
    if (!(threshold_ > 0.0 && threshold_ <= 1.0)) {
        throw ConfigError("similarity-query \"" + this->name() + "\": threshold must be in (0, 1]");
    }
    std::vector<std::string> texts;
    texts.reserve(examples_.size());
    for (const auto& utt : examples_.utterances) texts.push_back(utt.text);
    embeddings_ = provider_->embed_batch(texts);
    provider_fingerprint_ = provider_->fingerprint();
}

SimilarityQueryModel::SimilarityQueryModel(std::string name, Corpus examples,
                                           std::vector<std::vector<double>> embeddings,
                                           double threshold, std::string provider_fingerprint,
                                           std::shared_ptr<const EmbeddingProvider> provider)
    : Micromodel(std::move(name)),
      examples_(std::move(examples)),
      embeddings_(std::move(embeddings)),
      threshold_(threshold),
      provider_fingerprint_(std::move(provider_fingerprint)),
      provider_(std::move(provider)) {
    if (examples_.empty()) {
        throw ConfigError("similarity-query \"" + this->name() + "\": empty example corpus");
    }
    if (embeddings_.size() != examples_.size()) {
        throw ValidationError("similarity-query \"" + this->name() +
                              "\": embedding count does not match example count");
    }
}

std::pair<double, std::string> SimilarityQueryModel::max_similarity(
    const std::vector<double>& embedding) const {
    if (!embeddings_.empty() && embedding.size() != embeddings_[0].size()) {
        throw ProviderError("similarity-query \"" + name() + "\": query embedding dimension " +
                            std::to_string(embedding.size()) + " does not match cached dimension " +
                            std::to_string(embeddings_[0].size()));
    }
    double best = -2.0;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < embeddings_.size(); ++i) {
        const double sim = unit_cosine(embedding, embeddings_[i]);
        if (sim > best) {
            best = sim;
            best_i = i;
        }
    }
    return {best, examples_.utterances[best_i].id};
}

int SimilarityQueryModel::hit(const std::string& text) const { return hit_scored(text).first; }

std::pair<int, double> SimilarityQueryModel::hit_scored(const std::string& text) const {
    const auto [sim, id] = max_similarity(provider_->embed(text));
    (void)id;
    return {sim >= threshold_ ? 1 : 0, sim};
}

void SimilarityQueryModel::payload_to(json& doc) const {
    json examples = json::array();
    for (const auto& utt : examples_.utterances) {
        examples.push_back({{"id", utt.id}, {"text", utt.text}});
    }
    doc["examples"] = std::move(examples);
    doc["embeddings"] = embeddings_;
    doc["threshold"] = threshold_;
    doc["provider"] = provider_fingerprint_;
}

// ---------------------------------------------------------------------------

std::unique_ptr<Micromodel> micromodel_from_json(
    const json& doc, std::shared_ptr<const EmbeddingProvider> provider) {
    if (!doc.is_object() || !doc.contains("name") || !doc.contains("kind")) {
        throw ParseError("micromodel document must carry \"name\" and \"kind\"");
    }
    if (doc.value("version", 0) != 1) {
        throw ParseError("unsupported micromodel version");
    }
    const auto name = doc["name"].get<std::string>();
    const auto kind = doc["kind"].get<std::string>();

    if (kind == "keyword-logic") {
        return std::make_unique<KeywordLogicModel>(
            name, doc.at("keywords").get<std::vector<std::vector<std::string>>>());
    }
    if (kind == "lexicon-logic") {
        return std::make_unique<LexiconLogicModel>(name, doc.at("lexicon").get<std::string>(),
                                                   doc.at("category").get<std::string>(),
                                                   doc.at("entries").get<std::vector<std::string>>());
    }
    if (kind == "linear-svm") {
        LinearSvm svm;
        svm.vocabulary = doc.at("vocabulary").get<std::vector<std::string>>();
        svm.weights = doc.at("weights").get<std::vector<double>>();
        svm.bias = doc.at("bias").get<double>();
        svm.params.lambda = doc.value("lambda", 1e-2);
        svm.params.epochs = doc.value("epochs", 50);
        svm.params.seed = doc.value("seed", std::uint64_t{1});
        if (svm.weights.size() != svm.vocabulary.size()) {
            throw ValidationError("svm \"" + name + "\": weights do not match vocabulary");
        }
        return std::make_unique<LinearSvmModel>(name, std::move(svm));
    }
    if (kind == "similarity-query") {
        Corpus examples;
        examples.id = name;
        for (const auto& e : doc.at("examples")) {
            Utterance utt;
            utt.id = e.at("id").get<std::string>();
            utt.text = e.at("text").get<std::string>();
            utt.index = examples.utterances.size();
            examples.utterances.push_back(std::move(utt));
        }
        return std::make_unique<SimilarityQueryModel>(
            name, std::move(examples),
            doc.at("embeddings").get<std::vector<std::vector<double>>>(),
            doc.at("threshold").get<double>(), doc.at("provider").get<std::string>(),
            std::move(provider));
    }
    throw ParseError("unknown micromodel kind \"" + kind + "\"");
}

// ---------------------------------------------------------------------------
// registry

void MicromodelRegistry::add(std::unique_ptr<Micromodel> model) {
    if (find(model->name()) != nullptr) {
        throw ConfigError("duplicate micromodel name \"" + model->name() + "\"");
    }
    models_.push_back(std::move(model));
}

const Micromodel* MicromodelRegistry::find(const std::string& name) const {
    for (const auto& m : models_) {
        if (m->name() == name) return m.get();
    }
    return nullptr;
}

namespace {

std::string hex64(std::uint64_t h) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

std::string serialized_doc(const Micromodel& model) { return model.to_json().dump(2) + "\n"; }

}  // namespace

std::string MicromodelRegistry::fingerprint() const {
    std::uint64_t h = 14695981039346656037ULL;
    for (const auto& m : models_) {
        const std::string doc = serialized_doc(*m);
        for (unsigned char c : doc) {
            h ^= c;
            h *= 1099511628211ULL;
        }
    }
    return hex64(h);
}

void MicromodelRegistry::save(const std::string& dir) const {
    fs::create_directories(dir);
    json manifest{{"version", 1}, {"fingerprint", fingerprint()}, {"models", json::array()}};
    for (const auto& m : models_) {
        std::ofstream out(fs::path(dir) / (m->name() + ".json"), std::ios::binary);
        if (!out) throw ValidationError("cannot write micromodel file in " + dir);
        out << serialized_doc(*m);
        manifest["models"].push_back(m->name());
    }
    std::ofstream out(fs::path(dir) / "registry.json", std::ios::binary);
    out << manifest.dump(2) << '\n';
}

MicromodelRegistry MicromodelRegistry::load(const std::string& dir,
                                            std::shared_ptr<const EmbeddingProvider> provider) {
    const auto manifest_path = fs::path(dir) / "registry.json";
    std::ifstream in(manifest_path);
    if (!in) throw MissingArtifactError("missing registry manifest: " + manifest_path.string());
    json manifest;
    in >> manifest;

    MicromodelRegistry registry;
    for (const auto& name : manifest.at("models")) {
        const auto path = fs::path(dir) / (name.get<std::string>() + ".json");
        std::ifstream min(path);
        if (!min) throw MissingArtifactError("missing micromodel file: " + path.string());
        json doc;
        min >> doc;
        registry.add(micromodel_from_json(doc, provider));
    }
    const auto recorded = manifest.at("fingerprint").get<std::string>();
    if (registry.fingerprint() != recorded) {
        throw IntegrityError("registry fingerprint mismatch in " + dir + ": manifest " + recorded +
                             ", computed " + registry.fingerprint());
    }
    return registry;
}

std::string MicromodelRegistry::fingerprint_on_disk(const std::string& dir) {
    const auto manifest_path = fs::path(dir) / "registry.json";
    std::ifstream in(manifest_path);
    if (!in) throw MissingArtifactError("missing registry manifest: " + manifest_path.string());
    json manifest;
    in >> manifest;

    std::uint64_t h = 14695981039346656037ULL;
    for (const auto& name : manifest.at("models")) {
        const auto path = fs::path(dir) / (name.get<std::string>() + ".json");
        std::ifstream min(path, std::ios::binary);
        if (!min) throw MissingArtifactError("missing micromodel file: " + path.string());
        char c;
        while (min.get(c)) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ULL;
        }
    }
    return hex64(h);
}

}  // namespace mm
