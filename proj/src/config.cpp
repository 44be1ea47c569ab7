#include "mm/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "mm/errors.hpp"

namespace mm {

namespace fs = std::filesystem;
using nlohmann::json;

std::string PipelineConfig::micromodels_dir() const {
    return (fs::path(run_dir) / "micromodels").string();
}

nlohmann::json aggregator_to_json(const AggregatorSpec& spec) {
    return json{{"kind", to_string(spec.kind)},
                {"max_gap", spec.max_gap},
                {"min_hits", spec.min_hits}};
}

AggregatorSpec aggregator_from_json(const json& doc) {
    AggregatorSpec spec;
    spec.kind = aggregator_kind_from_string(doc.at("kind").get<std::string>());
    spec.max_gap = doc.value("max_gap", 5);
    spec.min_hits = doc.value("min_hits", 3);
    if (spec.max_gap < 0) throw ConfigError("aggregator max_gap must be >= 0");
    if (spec.min_hits < 1) throw ConfigError("aggregator min_hits must be >= 1");
    return spec;
}

namespace {

void require_path(const std::string& path, const std::string& what) {
    if (path.empty()) throw ConfigError(what + " path is empty");
    if (!fs::exists(path)) throw ConfigError(what + " path does not exist: " + path);
}

ProviderConfig parse_provider(const json& doc) {
    ProviderConfig provider;
    provider.kind = doc.value("kind", "fallback");
    if (provider.kind != "fallback" && provider.kind != "remote") {
        throw ConfigError("provider kind must be \"fallback\" or \"remote\"");
    }
    provider.endpoint = doc.value("endpoint", "");
    provider.timeout_ms = doc.value("timeout_ms", 10000);
    if (provider.kind == "remote" && provider.endpoint.empty()) {
        throw ConfigError("remote provider requires \"endpoint\"");
    }
    return provider;
}


MicromodelSpec parse_micromodel(const json& doc) {
    MicromodelSpec spec;
    spec.name = doc.at("name").get<std::string>();
    spec.kind = doc.at("kind").get<std::string>();
    if (spec.name.empty()) throw ConfigError("micromodel name must be non-empty");
    // names become file names under micromodels/
    if (spec.name[0] == '.' ||
        spec.name.find_first_not_of(
            "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789._-") !=
            std::string::npos) {
        throw ConfigError("micromodel name \"" + spec.name +
                          "\" may only use letters, digits, '.', '_', '-'");
    }

    if (spec.kind == "keyword-logic") {
        spec.keywords = doc.at("keywords").get<std::vector<std::string>>();
        if (spec.keywords.empty()) {
            throw ConfigError("micromodel \"" + spec.name + "\": keywords must be non-empty");
        }
    } else if (spec.kind == "lexicon-logic") {
        spec.lexicon = doc.at("lexicon").get<std::string>();
        spec.category = doc.at("category").get<std::string>();
    } else if (spec.kind == "linear-svm") {
        spec.positives_path = doc.at("positives").get<std::string>();
        spec.negatives_path = doc.at("negatives").get<std::string>();
        spec.svm.lambda = doc.value("lambda", 1e-2);
        spec.svm.epochs = doc.value("epochs", 50);
        spec.svm.seed = doc.value("svm_seed", std::uint64_t{1});
        if (spec.svm.lambda <= 0.0 || spec.svm.epochs < 1) {
            throw ConfigError("micromodel \"" + spec.name + "\": invalid svm hyperparameters");
        }
    } else if (spec.kind == "similarity-query") {
        spec.example_corpus_path = doc.at("example_corpus").get<std::string>();
        spec.threshold = doc.value("threshold", 0.85);
        if (!(spec.threshold > 0.0 && spec.threshold <= 1.0)) {
            throw ConfigError("micromodel \"" + spec.name + "\": threshold must be in (0, 1]");
        }
    } else {
        throw ConfigError("unknown micromodel kind \"" + spec.kind + "\"");
    }
    return spec;
}

CollectionConfig parse_collection(const json& doc) {
    CollectionConfig collection;
    collection.seed_query = doc.value("seed_query", "");
    collection.seed_corpus_path = doc.value("seed_corpus", "");
    collection.background_path = doc.at("background").get<std::string>();
    collection.threshold = doc.value("threshold", 0.85);
    collection.iterations = doc.value("iterations", 3);
    collection.mode = doc.value("mode", "auto");
    collection.accept_per_iteration = doc.value("q", 10);
    collection.negation_query = doc.value("negation_query", "");

    if (collection.seed_query.empty() == collection.seed_corpus_path.empty()) {
        throw ConfigError("collection needs exactly one of \"seed_query\" or \"seed_corpus\"");
    }
    if (collection.mode != "auto" && collection.mode != "interactive") {
        throw ConfigError("collection mode must be \"auto\" or \"interactive\"");
    }
    if (!(collection.threshold > 0.0 && collection.threshold <= 1.0)) {
        throw ConfigError("collection threshold must be in (0, 1]");
    }
    if (collection.iterations < 0) throw ConfigError("collection iterations must be >= 0");
    if (collection.accept_per_iteration < 0) throw ConfigError("collection q must be >= 0");
    return collection;
}

}  // namespace

namespace {

PipelineConfig parse_config_doc(const json& doc);

}  // namespace

PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
    try {
        return parse_config_doc(doc);
    } catch (const json::exception& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

namespace {

PipelineConfig parse_config_doc(const json& doc) {
    PipelineConfig config;
    config.seed = doc.value("seed", std::uint64_t{0});
    config.run_dir = doc.value("run_dir", "run");
    config.positive_label = doc.value("positive_label", "");
    config.decision_threshold = doc.value("decision_threshold", 0.5);
    config.threads = doc.value("threads", std::size_t{0});

    if (doc.contains("provider")) config.provider = parse_provider(doc["provider"]);
    if (doc.contains("outlier_provider")) {
        config.outlier_provider = parse_provider(doc["outlier_provider"]);
    }

    if (doc.contains("lexicons")) {
        for (const auto& [name, lex_path] : doc["lexicons"].items()) {
            config.lexicon_paths[name] = lex_path.get<std::string>();
        }
    }

    if (doc.contains("micromodels")) {
        std::set<std::string> names;
        for (const auto& m : doc["micromodels"]) {
            auto spec = parse_micromodel(m);
            if (!names.insert(spec.name).second) {
                throw ConfigError("duplicate micromodel name \"" + spec.name + "\"");
            }
            config.micromodels.push_back(std::move(spec));
        }
    }

    if (doc.contains("aggregators")) {
        config.aggregators.clear();
        for (const auto& a : doc["aggregators"]) {
            config.aggregators.push_back(aggregator_from_json(a));
        }
    } else {
        config.aggregators = {AggregatorSpec{AggregatorKind::Ratio, 5, 3},
                              AggregatorSpec{AggregatorKind::Window, 5, 3}};
    }
    if (config.aggregators.empty()) throw ConfigError("at least one aggregator is required");

    if (doc.contains("ebm")) {
        const auto& e = doc["ebm"];
        config.ebm.bins = e.value("bins", 32);
        config.ebm.bags = e.value("bags", 8);
        config.ebm.rounds = e.value("rounds", 200);
        config.ebm.learning_rate = e.value("learning_rate", 0.05);
    }

    config.train_instances_path = doc.value("train_instances", "");
    config.eval_instances_path = doc.value("eval_instances", "");

    if (doc.contains("curve")) {
        const auto& c = doc["curve"];
        if (c.contains("fractions")) config.curve.fractions = c["fractions"].get<std::vector<double>>();
        config.curve.runs = c.value("runs", 5);
    }
    config.curve.seed = config.seed;

    if (doc.contains("collection")) config.collection = parse_collection(doc["collection"]);

    // every referenced path must resolve before any work starts
    for (const auto& [name, lex_path] : config.lexicon_paths) {
        require_path(lex_path, "lexicon \"" + name + "\"");
    }
    for (const auto& spec : config.micromodels) {
        if (spec.kind == "linear-svm") {
            require_path(spec.positives_path, "micromodel \"" + spec.name + "\" positives");
            require_path(spec.negatives_path, "micromodel \"" + spec.name + "\" negatives");
        } else if (spec.kind == "similarity-query") {
            require_path(spec.example_corpus_path,
                         "micromodel \"" + spec.name + "\" example corpus");
        } else if (spec.kind == "lexicon-logic" && !config.lexicon_paths.count(spec.lexicon)) {
            throw ConfigError("micromodel \"" + spec.name + "\" references unknown lexicon \"" +
                              spec.lexicon + "\"");
        }
    }
    if (!config.train_instances_path.empty()) {
        require_path(config.train_instances_path, "train_instances");
    }
    if (!config.eval_instances_path.empty()) {
        require_path(config.eval_instances_path, "eval_instances");
    }
    if (config.collection) {
        require_path(config.collection->background_path, "collection background");
        if (!config.collection->seed_corpus_path.empty()) {
            require_path(config.collection->seed_corpus_path, "collection seed corpus");
        }
        if (!config.collection->seed_query.empty()) {
            parse_query(config.collection->seed_query);  // surface syntax errors now
        }
        if (!config.collection->negation_query.empty()) {
            parse_query(config.collection->negation_query);
        }
    }
    return config;
}

}  // namespace

std::shared_ptr<const EmbeddingProvider> make_provider(const ProviderConfig& config) {
    if (config.kind == "remote") {
        RemoteEmbedderConfig remote;
        remote.endpoint = config.endpoint;
        remote.timeout_ms = config.timeout_ms;
        return std::make_shared<RemoteEmbedder>(remote);
    }
    return std::make_shared<FallbackEmbedder>();
}

std::shared_ptr<const EmbeddingProvider> make_provider_with_env(const ProviderConfig& config) {
    ProviderConfig effective = config;
    if (const char* endpoint = std::getenv("MM_EMBED_ENDPOINT"); endpoint && *endpoint) {
        effective.kind = "remote";
        effective.endpoint = endpoint;
    }
    return make_provider(effective);
}

LexiconMap load_lexicons(const PipelineConfig& config) {
    LexiconMap lexicons;
    for (const auto& [name, path] : config.lexicon_paths) {
        Lexicon lex = load_lexicon(path);
        lex.name = name;  // config name wins so queries and specs resolve consistently
        lexicons.emplace(name, std::move(lex));
    }
    return lexicons;
}

std::unique_ptr<Micromodel> build_micromodel(const MicromodelSpec& spec, const LexiconMap& lexicons,
                                             std::shared_ptr<const EmbeddingProvider> provider) {
    if (spec.kind == "keyword-logic") {
        return std::make_unique<KeywordLogicModel>(spec.name, spec.keywords);
    }
    if (spec.kind == "lexicon-logic") {
        auto it = lexicons.find(spec.lexicon);
        if (it == lexicons.end()) {
            throw ConfigError("micromodel \"" + spec.name + "\" references unknown lexicon \"" +
                              spec.lexicon + "\"");
        }
        return std::make_unique<LexiconLogicModel>(spec.name, it->second, spec.category);
    }
    if (spec.kind == "linear-svm") {
        const Corpus positives = load_corpus(spec.positives_path);
        const Corpus negatives = load_corpus(spec.negatives_path);
        return std::make_unique<LinearSvmModel>(spec.name,
                                                train_linear_svm(positives, negatives, spec.svm));
    }
    if (spec.kind == "similarity-query") {
        const Corpus examples = load_corpus(spec.example_corpus_path);
        return std::make_unique<SimilarityQueryModel>(spec.name, examples, spec.threshold,
                                                      std::move(provider));
    }
    throw ConfigError("unknown micromodel kind \"" + spec.kind + "\"");
}

MicromodelRegistry build_registry(const PipelineConfig& config, const LexiconMap& lexicons,
                                  std::shared_ptr<const EmbeddingProvider> provider) {
    if (config.micromodels.empty()) throw ConfigError("no micromodels configured");
    MicromodelRegistry registry;
    for (const auto& spec : config.micromodels) {
        registry.add(build_micromodel(spec, lexicons, provider));
    }
    return registry;
}

}  // namespace mm
