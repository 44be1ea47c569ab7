#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "mm/core.hpp"
#include "mm/embedding.hpp"
#include "mm/svm.hpp"

namespace mm {

// One micromodel's binary outputs over an instance's utterances. bits[j] = 1
// claims utterance j as evidence. scores carry raw margins/similarities for
// the scored kinds and are empty otherwise.
struct HitVector {
    std::string micromodel;
    std::string instance;
    std::vector<std::uint8_t> bits;
    std::vector<double> scores;

    bool has_scores() const { return !scores.empty(); }
    std::string bits_string() const;
};

// A frozen, task-agnostic binary classifier for one linguistic behavior.
// Built once; never modified by task-specific training.
class Micromodel {
public:
    explicit Micromodel(std::string name) : name_(std::move(name)) {}
    virtual ~Micromodel() = default;

    const std::string& name() const { return name_; }
    virtual std::string kind() const = 0;

    // Hit bit for one utterance; pure.
    virtual int hit(const std::string& text) const = 0;

    // (bit, raw score) for kinds that expose scores; default has no score.
    virtual std::pair<int, double> hit_scored(const std::string& text) const {
        return {hit(text), 0.0};
    }
    virtual bool scored() const { return false; }

    HitVector run(const Instance& instance) const;

    nlohmann::json to_json() const;

protected:
    virtual void payload_to(nlohmann::json& doc) const = 0;

private:
    std::string name_;
};

// Hit iff the tokenized utterance contains any keyword n-gram as a contiguous
// token subsequence.
class KeywordLogicModel final : public Micromodel {
public:
    KeywordLogicModel(std::string name, const std::vector<std::string>& keywords);
    KeywordLogicModel(std::string name, std::vector<std::vector<std::string>> keyword_tokens);

    std::string kind() const override { return "keyword-logic"; }
    int hit(const std::string& text) const override;

    const std::vector<std::vector<std::string>>& keywords() const { return keywords_; }

protected:
    void payload_to(nlohmann::json& doc) const override;

private:
    std::vector<std::vector<std::string>> keywords_;
};

// Hit iff any token matches any entry of one lexicon category.
class LexiconLogicModel final : public Micromodel {
public:
    LexiconLogicModel(std::string name, const Lexicon& lexicon, const std::string& category);
    LexiconLogicModel(std::string name, std::string lexicon_name, std::string category,
                      std::vector<std::string> entries);

    std::string kind() const override { return "lexicon-logic"; }
    int hit(const std::string& text) const override;

protected:
    void payload_to(nlohmann::json& doc) const override;

private:
    std::string lexicon_name_;
    std::string category_;
    std::vector<std::string> entries_;  // sorted
};

// Wraps a trained LinearSvm; score is the signed margin.
class LinearSvmModel final : public Micromodel {
public:
    LinearSvmModel(std::string name, LinearSvm svm);

    std::string kind() const override { return "linear-svm"; }
    int hit(const std::string& text) const override;
    std::pair<int, double> hit_scored(const std::string& text) const override;
    bool scored() const override { return true; }

    const LinearSvm& svm() const { return svm_; }

protected:
    void payload_to(nlohmann::json& doc) const override;

private:
    LinearSvm svm_;
};

// Hit iff the utterance embedding's max cosine similarity against the example
// corpus reaches the threshold. Example embeddings are cached at build time.
class SimilarityQueryModel final : public Micromodel {
public:
    SimilarityQueryModel(std::string name, const Corpus& examples, double threshold,
                         std::shared_ptr<const EmbeddingProvider> provider);
    SimilarityQueryModel(std::string name, Corpus examples,
                         std::vector<std::vector<double>> embeddings, double threshold,
                         std::string provider_fingerprint,
                         std::shared_ptr<const EmbeddingProvider> provider);

    std::string kind() const override { return "similarity-query"; }
    int hit(const std::string& text) const override;
    std::pair<int, double> hit_scored(const std::string& text) const override;
    bool scored() const override { return true; }

    double threshold() const { return threshold_; }
    const Corpus& examples() const { return examples_; }

    // (max similarity, nearest example id); similarity of an empty corpus is
    // impossible by construction.
    std::pair<double, std::string> max_similarity(const std::vector<double>& embedding) const;

protected:
    void payload_to(nlohmann::json& doc) const override;

private:
    Corpus examples_;
    std::vector<std::vector<double>> embeddings_;
    double threshold_;
    std::string provider_fingerprint_;
    std::shared_ptr<const EmbeddingProvider> provider_;
};

std::unique_ptr<Micromodel> micromodel_from_json(const nlohmann::json& doc,
                                                 std::shared_ptr<const EmbeddingProvider> provider);

// Fixed-order collection of built micromodels. The order defines downstream
// feature ordering; the fingerprint hashes every model's serialized form and
// must be unchanged by any task-specific training run.
class MicromodelRegistry {
public:
    void add(std::unique_ptr<Micromodel> model);

    std::size_t size() const { return models_.size(); }
    const Micromodel& at(std::size_t i) const { return *models_[i]; }
    const Micromodel* find(const std::string& name) const;

    std::string fingerprint() const;

    // One JSON file per model under dir/, plus a registry.json manifest.
    void save(const std::string& dir) const;
    static MicromodelRegistry load(const std::string& dir,
                                   std::shared_ptr<const EmbeddingProvider> provider);

    // Recomputes the fingerprint from the files on disk (freeze audit).
    static std::string fingerprint_on_disk(const std::string& dir);

private:
    std::vector<std::unique_ptr<Micromodel>> models_;
};

}  // namespace mm
