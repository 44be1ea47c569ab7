#include "mm/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mm/errors.hpp"
#include "mm/evalharness.hpp"
#include "mm/parallel.hpp"

namespace mm {

namespace fs = std::filesystem;
using nlohmann::json;

void ProvenanceStore::insert(const Instance& instance, const std::vector<HitVector>& hits) {
    std::vector<std::pair<std::string, std::string>> texts;
    texts.reserve(instance.size());
    for (const auto& utt : instance.utterances) texts.emplace_back(utt.id, utt.text);

    std::lock_guard<std::mutex> lock(*mutex_);
    if (hits_.count(instance.id) == 0) order_.push_back(instance.id);
    hits_[instance.id] = hits;
    texts_[instance.id] = std::move(texts);
}

bool ProvenanceStore::has(const std::string& instance_id) const {
    std::lock_guard<std::mutex> lock(*mutex_);
    return hits_.count(instance_id) != 0;
}

const HitVector* ProvenanceStore::find(const std::string& instance_id,
                                       const std::string& micromodel) const {
    std::lock_guard<std::mutex> lock(*mutex_);
    auto it = hits_.find(instance_id);
    if (it == hits_.end()) return nullptr;
    for (const auto& hv : it->second) {
        if (hv.micromodel == micromodel) return &hv;
    }
    return nullptr;
}

const std::vector<HitVector>* ProvenanceStore::hits_of(const std::string& instance_id) const {
    std::lock_guard<std::mutex> lock(*mutex_);
    auto it = hits_.find(instance_id);
    return it == hits_.end() ? nullptr : &it->second;
}

const std::vector<std::pair<std::string, std::string>>* ProvenanceStore::texts_of(
    const std::string& instance_id) const {
    std::lock_guard<std::mutex> lock(*mutex_);
    auto it = texts_.find(instance_id);
    return it == texts_.end() ? nullptr : &it->second;
}

std::vector<std::string> ProvenanceStore::instance_ids() const {
    std::lock_guard<std::mutex> lock(*mutex_);
    return order_;
}

FeatureVector features_from_hits(const std::vector<HitVector>& hits,
                                 const std::vector<AggregatorSpec>& aggregators,
                                 const std::string& instance_id) {
    FeatureVector fv;
    fv.instance_id = instance_id;
    for (const auto& hv : hits) {
        for (const auto& agg : aggregators) {
            fv.names.push_back(hv.micromodel + agg.suffix());
            fv.values.push_back(apply_aggregator(agg, hv));
        }
    }
    return fv;
}

TaskRun run_training(const std::vector<Instance>& instances, const MicromodelRegistry& registry,
                     const std::vector<AggregatorSpec>& aggregators, const TrainOptions& options) {
    if (instances.empty()) throw ValidationError("training requires instances");
    for (const auto& inst : instances) {
        if (!inst.label) {
            throw ValidationError("training instance \"" + inst.id + "\" has no label");
        }
    }
    if (options.positive_label.empty()) throw ConfigError("positive label is not configured");

    TaskRun run;
    run.registry = &registry;
    run.aggregators = aggregators;
    run.registry_fingerprint = registry.fingerprint();
    const std::string disk_fingerprint_before =
        options.micromodels_dir.empty()
            ? std::string()
            : MicromodelRegistry::fingerprint_on_disk(options.micromodels_dir);

    FeatureMatrix matrix;
    matrix.feature_names = feature_names(registry, aggregators);
    matrix.instance_ids.resize(instances.size());
    matrix.labels.resize(instances.size());
    matrix.rows.resize(instances.size());
    std::vector<std::vector<HitVector>> all_hits(instances.size());
    parallel_for(instances.size(), [&](std::size_t i) {
        auto featurized = featurize(registry, aggregators, instances[i]);
        matrix.instance_ids[i] = instances[i].id;
        matrix.labels[i] = *instances[i].label;
        matrix.rows[i] = std::move(featurized.features.values);
        all_hits[i] = std::move(featurized.hits);
    });
    for (std::size_t i = 0; i < instances.size(); ++i) {
        run.provenance.insert(instances[i], all_hits[i]);
    }

    // Information barrier: the classifier trains on exactly what the CSV
    // export contains, never on the in-memory doubles.
    FeatureMatrix exported;
    if (!options.run_dir.empty()) {
        fs::create_directories(options.run_dir);
        const auto csv_path = (fs::path(options.run_dir) / "features.csv").string();
        write_feature_csv(matrix, csv_path);
        exported = read_feature_csv(csv_path);
    } else {
        std::stringstream buffer;
        write_feature_csv(matrix, buffer);
        exported = read_feature_csv(buffer);
    }

    run.model = train_ebm(exported, options.positive_label, options.ebm, options.seed);
    run.train_matrix = std::move(exported);

    // freeze audit
    if (registry.fingerprint() != run.registry_fingerprint) {
        throw IntegrityError("micromodel registry changed during training");
    }
    if (!options.micromodels_dir.empty()) {
        const auto after = MicromodelRegistry::fingerprint_on_disk(options.micromodels_dir);
        if (after != disk_fingerprint_before) {
            throw IntegrityError("micromodel files changed during training: " +
                                 disk_fingerprint_before + " -> " + after);
        }
    }

    {
        std::vector<double> probs;
        std::vector<int> labels;
        probs.reserve(run.train_matrix.rows.size());
        for (std::size_t i = 0; i < run.train_matrix.rows.size(); ++i) {
            probs.push_back(run.model.predict_row(run.train_matrix.rows[i]));
            labels.push_back(run.train_matrix.labels[i] == options.positive_label ? 1 : 0);
        }
        try {
            run.train_auc = roc_auc(probs, labels);
        } catch (const MetricError&) {
            run.train_auc.reset();
        }
    }

    if (!options.run_dir.empty()) {
        run.model.save((fs::path(options.run_dir) / "model.json").string());
        write_provenance(run.provenance, (fs::path(options.run_dir) / "provenance.jsonl").string());
    }
    return run;
}

ClassifyOutcome classify(TaskRun& run, const Instance& instance, double threshold) {
    if (!run.registry) throw StateError("task run has no registry");
    auto featurized = featurize(*run.registry, run.aggregators, instance);
    run.provenance.insert(instance, featurized.hits);

    ClassifyOutcome outcome;
    outcome.probability = run.model.predict(featurized.features);
    outcome.label =
        outcome.probability > threshold ? run.model.positive_label : run.model.negative_label;
    outcome.features = std::move(featurized.features);
    return outcome;
}

ExplanationBundle explain(const TaskRun& run, const std::string& instance_id) {
    const auto* hits = run.provenance.hits_of(instance_id);
    if (!hits) {
        throw LookupError("instance \"" + instance_id + "\" was not featurized in this run");
    }
    const auto* texts = run.provenance.texts_of(instance_id);

    ExplanationBundle bundle;
    bundle.instance_id = instance_id;

    const FeatureVector features = features_from_hits(*hits, run.aggregators, instance_id);
    const LocalExplanation local = local_explanation(run.model, features);
    bundle.features = local.features;
    bundle.contributions = local.contributions;
    bundle.intercept = local.intercept;
    bundle.score = local.score;
    bundle.probability = local.probability;
    bundle.values.reserve(local.features.size());
    for (const auto& name : local.features) bundle.values.push_back(features.value_of(name));

    bundle.global_importance = global_importance(run.model, run.train_matrix.rows);

    for (const auto& hv : *hits) {
        std::vector<EvidenceItem> items;
        for (std::size_t j = 0; j < hv.bits.size(); ++j) {
            if (!hv.bits[j]) continue;
            EvidenceItem item;
            item.index = j;
            if (texts && j < texts->size()) {
                item.utterance_id = (*texts)[j].first;
                item.text = (*texts)[j].second;
            }
            items.push_back(std::move(item));
        }
        if (!items.empty()) bundle.evidence[hv.micromodel] = std::move(items);
    }
    return bundle;
}

std::vector<std::pair<std::string, double>> top_features_report(const TaskRun& run, std::size_t m) {
    const auto importance = global_importance(run.model, run.train_matrix.rows);
    std::vector<std::pair<std::string, double>> ranked(importance.begin(), importance.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (ranked.size() > m) ranked.resize(m);
    return ranked;
}

void write_provenance(const ProvenanceStore& store, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    for (const auto& id : store.instance_ids()) {
        for (const auto& hv : *store.hits_of(id)) {
            out << json{{"instance", id},
                        {"micromodel", hv.micromodel},
                        {"bits", hv.bits_string()}}
                       .dump()
                << '\n';
        }
    }
}

void append_provenance(const std::string& path, const std::vector<HitVector>& hits) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw ValidationError("cannot write " + path);
    for (const auto& hv : hits) {
        out << json{{"instance", hv.instance},
                    {"micromodel", hv.micromodel},
                    {"bits", hv.bits_string()}}
                   .dump()
            << '\n';
    }
}

json explanation_to_json(const ExplanationBundle& bundle) {
    json contributions = json::object();
    json values = json::object();
    for (std::size_t i = 0; i < bundle.features.size(); ++i) {
        contributions[bundle.features[i]] = bundle.contributions[i];
        values[bundle.features[i]] = bundle.values[i];
    }
    json evidence = json::object();
    for (const auto& [micromodel, items] : bundle.evidence) {
        json list = json::array();
        for (const auto& item : items) {
            list.push_back(
                {{"index", item.index}, {"utterance_id", item.utterance_id}, {"text", item.text}});
        }
        evidence[micromodel] = std::move(list);
    }
    return json{{"instance", bundle.instance_id},
                {"probability", bundle.probability},
                {"intercept", bundle.intercept},
                {"score", bundle.score},
                {"feature_values", std::move(values)},
                {"contributions", std::move(contributions)},
                {"global_importance", bundle.global_importance},
                {"evidence", std::move(evidence)}};
}

}  // namespace mm
