#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mm/aggregate.hpp"
#include "mm/collection.hpp"
#include "mm/ebm.hpp"
#include "mm/evalharness.hpp"
#include "mm/micromodel.hpp"
#include "mm/svm.hpp"

namespace mm {

struct MicromodelSpec {
    std::string name;
    std::string kind;  // keyword-logic | lexicon-logic | linear-svm | similarity-query

    std::vector<std::string> keywords;                 // keyword-logic
    std::string lexicon, category;                     // lexicon-logic
    std::string positives_path, negatives_path;        // linear-svm
    SvmParams svm;                                     // linear-svm
    std::string example_corpus_path;                   // similarity-query
    double threshold = 0.85;                           // similarity-query
};

struct ProviderConfig {
    std::string kind = "fallback";  // fallback | remote
    std::string endpoint;
    int timeout_ms = 10000;
};

// One declarative document drives every command, so a run is reproducible
// from (config, data, seed).
struct PipelineConfig {
    std::uint64_t seed = 0;
    std::string run_dir = "run";
    std::string positive_label;
    double decision_threshold = 0.5;
    std::size_t threads = 0;  // 0 = machine parallelism

    ProviderConfig provider;
    std::optional<ProviderConfig> outlier_provider;

    std::map<std::string, std::string> lexicon_paths;
    std::vector<MicromodelSpec> micromodels;
    std::vector<AggregatorSpec> aggregators;
    EbmParams ebm;

    std::string train_instances_path;
    std::string eval_instances_path;

    CurveConfig curve;
    std::optional<CollectionConfig> collection;

    std::string micromodels_dir() const;
};

// Parses and validates; every referenced path must resolve and names must be
// unique before any work starts.
PipelineConfig load_pipeline_config(const std::string& path);

// {"kind", "max_gap", "min_hits"}, the same schema the config uses.
nlohmann::json aggregator_to_json(const AggregatorSpec& spec);
AggregatorSpec aggregator_from_json(const nlohmann::json& doc);

// MM_EMBED_ENDPOINT overrides the configured remote endpoint (and switches a
// fallback provider to remote when set).
std::shared_ptr<const EmbeddingProvider> make_provider(const ProviderConfig& config);
std::shared_ptr<const EmbeddingProvider> make_provider_with_env(const ProviderConfig& config);

LexiconMap load_lexicons(const PipelineConfig& config);

std::unique_ptr<Micromodel> build_micromodel(const MicromodelSpec& spec, const LexiconMap& lexicons,
                                             std::shared_ptr<const EmbeddingProvider> provider);

MicromodelRegistry build_registry(const PipelineConfig& config, const LexiconMap& lexicons,
                                  std::shared_ptr<const EmbeddingProvider> provider);

}  // namespace mm
