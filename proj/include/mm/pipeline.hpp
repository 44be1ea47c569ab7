#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mm/aggregate.hpp"
#include "mm/ebm.hpp"
#include "mm/micromodel.hpp"

namespace mm {

// Retains every HitVector and the utterance texts behind it so each feature
// value stays traceable back to the exact evidence utterances.
class ProvenanceStore {
public:
    ProvenanceStore() : mutex_(std::make_unique<std::mutex>()) {}

    void insert(const Instance& instance, const std::vector<HitVector>& hits);

    bool has(const std::string& instance_id) const;
    const HitVector* find(const std::string& instance_id, const std::string& micromodel) const;
    const std::vector<HitVector>* hits_of(const std::string& instance_id) const;
    const std::vector<std::pair<std::string, std::string>>* texts_of(
        const std::string& instance_id) const;  // (utterance id, text) by index

    std::vector<std::string> instance_ids() const;  // insertion order

private:
    std::unique_ptr<std::mutex> mutex_;
    std::vector<std::string> order_;
    std::unordered_map<std::string, std::vector<HitVector>> hits_;
    std::unordered_map<std::string, std::vector<std::pair<std::string, std::string>>> texts_;
};

struct TrainOptions {
    EbmParams ebm;
    std::uint64_t seed = 0;
    std::string positive_label;
    std::string run_dir;          // when set, features.csv / model.json / provenance.jsonl are written
    std::string micromodels_dir;  // when set, the freeze audit re-hashes the files on disk
};

// One task-specific training run over a frozen registry.
struct TaskRun {
    const MicromodelRegistry* registry = nullptr;
    std::string registry_fingerprint;
    std::vector<AggregatorSpec> aggregators;
    EbmModel model;
    FeatureMatrix train_matrix;
    ProvenanceStore provenance;
    std::optional<double> train_auc;
};

// Featurizes every instance, spills the matrix through the CSV wire format
// (the classifier sees only what the export contains), trains the EBM, and
// audits that the registry fingerprint did not move.
TaskRun run_training(const std::vector<Instance>& instances, const MicromodelRegistry& registry,
                     const std::vector<AggregatorSpec>& aggregators, const TrainOptions& options);

struct ClassifyOutcome {
    std::string label;
    double probability = 0.0;
    FeatureVector features;
};

// Probability > threshold maps to the positive label (0.5 exactly stays
// negative). Provenance is retained for the classified instance.
ClassifyOutcome classify(TaskRun& run, const Instance& instance, double threshold = 0.5);

struct EvidenceItem {
    std::size_t index = 0;
    std::string utterance_id;
    std::string text;
};

struct ExplanationBundle {
    std::string instance_id;
    double probability = 0.0;
    double intercept = 0.0;
    double score = 0.0;
    std::vector<std::string> features;
    std::vector<double> values;         // feature values, aligned
    std::vector<double> contributions;  // f_i(x_i), aligned
    std::map<std::string, double> global_importance;
    std::map<std::string, std::vector<EvidenceItem>> evidence;  // micromodels with >= 1 hit
};

// Full bundle for an instance previously seen by this run (training or
// classification); LookupError otherwise.
ExplanationBundle explain(const TaskRun& run, const std::string& instance_id);

// Features by global importance descending, ties by name ascending, clamped
// to at most m entries.
std::vector<std::pair<std::string, double>> top_features_report(const TaskRun& run, std::size_t m);

// Rebuilds the feature vector of a recorded instance from its stored hit
// vectors; identical to what featurize produced.
FeatureVector features_from_hits(const std::vector<HitVector>& hits,
                                 const std::vector<AggregatorSpec>& aggregators,
                                 const std::string& instance_id);

// provenance.jsonl lines: {"instance","micromodel","bits":"0101..."}.
void write_provenance(const ProvenanceStore& store, const std::string& path);
void append_provenance(const std::string& path, const std::vector<HitVector>& hits);

nlohmann::json explanation_to_json(const ExplanationBundle& bundle);

}  // namespace mm
