#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "mm/collection.hpp"
#include "mm/config.hpp"
#include "mm/ebm.hpp"
#include "mm/errors.hpp"
#include "mm/evalharness.hpp"
#include "mm/parallel.hpp"
#include "mm/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::string run_dir_override;
    std::optional<std::uint64_t> seed_override;
    std::size_t threads = 0;
    bool interactive = false;
    std::string input_path;
    std::string instance_id;
};

mm::PipelineConfig load_config(const GlobalArgs& args) {
    auto config = mm::load_pipeline_config(args.config_path);
    if (!args.run_dir_override.empty()) config.run_dir = args.run_dir_override;
    if (args.seed_override) {
        config.seed = *args.seed_override;
        config.curve.seed = *args.seed_override;
    }
    if (args.threads > 0) config.threads = args.threads;
    mm::set_max_threads(config.threads);
    return config;
}

mm::MicromodelRegistry load_registry(const mm::PipelineConfig& config) {
    return mm::MicromodelRegistry::load(config.micromodels_dir(),
                                        mm::make_provider_with_env(config.provider));
}

std::vector<mm::Instance> load_train_instances(const mm::PipelineConfig& config) {
    if (config.train_instances_path.empty()) {
        throw mm::ConfigError("config has no \"train_instances\"");
    }
    return mm::load_instances(config.train_instances_path);
}

void write_predictions_csv(const std::string& path,
                           const std::vector<std::pair<std::string, mm::ClassifyOutcome>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw mm::ValidationError("cannot write " + path);
    out << "instance_id,predicted_label,probability\n";
    char buf[64];
    for (const auto& [id, outcome] : rows) {
        std::snprintf(buf, sizeof(buf), "%.9g", outcome.probability);
        out << id << ',' << outcome.label << ',' << buf << '\n';
    }
}

// Append only hit vectors not present yet so reruns leave identical artifacts.
void append_provenance_unique(const std::string& path, const std::vector<mm::HitVector>& hits) {
    std::set<std::pair<std::string, std::string>> seen;
    {
        std::ifstream in(path);
        std::string line;
        while (in && std::getline(in, line)) {
            if (line.empty()) continue;
            json doc = json::parse(line, nullptr, false);
            if (doc.is_discarded()) continue;
            seen.emplace(doc.value("instance", ""), doc.value("micromodel", ""));
        }
    }
    std::vector<mm::HitVector> fresh;
    for (const auto& hv : hits) {
        if (!seen.count({hv.instance, hv.micromodel})) fresh.push_back(hv);
    }
    if (!fresh.empty()) mm::append_provenance(path, fresh);
}

// run.json records what the model was trained with; later commands refuse to
// apply it under a drifted config.
json run_manifest(const mm::PipelineConfig& config, const std::string& registry_fingerprint) {
    json aggregators = json::array();
    for (const auto& agg : config.aggregators) aggregators.push_back(mm::aggregator_to_json(agg));
    return json{{"version", 1},
                {"aggregators", std::move(aggregators)},
                {"positive_label", config.positive_label},
                {"seed", config.seed},
                {"registry_fingerprint", registry_fingerprint}};
}

void write_run_manifest(const mm::PipelineConfig& config, const std::string& registry_fingerprint) {
    std::ofstream out(fs::path(config.run_dir) / "run.json", std::ios::binary);
    out << run_manifest(config, registry_fingerprint).dump(2) << '\n';
}

void check_run_manifest(const mm::PipelineConfig& config, const std::string& registry_fingerprint) {
    const auto path = fs::path(config.run_dir) / "run.json";
    std::ifstream in(path);
    if (!in) return;  // older run dirs carry no manifest
    json recorded = json::parse(in, nullptr, false);
    if (recorded.is_discarded()) return;
    const json current = run_manifest(config, registry_fingerprint);
    for (const char* key : {"aggregators", "positive_label", "registry_fingerprint"}) {
        if (recorded.contains(key) && recorded[key] != current[key]) {
            throw mm::ConfigError(std::string("run dir was trained with a different ") + key +
                                  "; retrain or restore the config");
        }
    }
}

void merge_classified(const std::string& path, const std::vector<mm::Instance>& instances) {
    std::vector<mm::Instance> merged;
    std::set<std::string> ids;
    if (fs::exists(path)) {
        merged = mm::load_instances(path);
        for (const auto& inst : merged) ids.insert(inst.id);
    }
    for (const auto& inst : instances) {
        if (ids.insert(inst.id).second) merged.push_back(inst);
    }
    mm::save_instances(merged, path);
}

// ---------------------------------------------------------------------------

int cmd_collect(const GlobalArgs& args) {
    auto config = load_config(args);
    if (!config.collection) throw mm::ConfigError("config has no \"collection\" section");
    auto collection = *config.collection;
    if (args.interactive) collection.mode = "interactive";

    const auto lexicons = mm::load_lexicons(config);
    const auto background = mm::load_corpus(collection.background_path);

    mm::Corpus seed;
    if (!collection.seed_query.empty()) {
        seed = mm::seed_examples(mm::parse_query(collection.seed_query), background, lexicons);
        if (seed.empty()) {
            std::cerr << "warning: seed query matched nothing in "
                      << collection.background_path << "\n";
        }
    } else {
        seed = mm::load_corpus(collection.seed_corpus_path);
    }

    auto retrieval = mm::make_provider_with_env(config.provider);
    auto outlier = config.outlier_provider ? mm::make_provider_with_env(*config.outlier_provider)
                                           : retrieval;

    const bool interactive = collection.mode == "interactive";
    auto result = mm::run_iterations(collection, std::move(seed), background, lexicons, retrieval,
                                     outlier, interactive ? &std::cin : nullptr,
                                     interactive ? &std::cout : nullptr);

    fs::create_directories(config.run_dir);
    const auto corpus_path = (fs::path(config.run_dir) / "example_corpus.jsonl").string();
    const auto audit_path = (fs::path(config.run_dir) / "collect_audit.jsonl").string();
    mm::save_corpus(result.state.examples, corpus_path);
    mm::write_audit_log(result.state.audit, audit_path);

    std::size_t accepted = 0;
    for (const auto& e : result.state.audit) accepted += e.action == "accept" ? 1 : 0;
    std::cout << "collected " << result.state.examples.size() << " examples (" << accepted
              << " accepted over " << result.state.iteration << " iterations) -> " << corpus_path
              << (result.quit_requested ? " [quit]" : "") << "\n";
    return 0;
}

int cmd_build(const GlobalArgs& args) {
    auto config = load_config(args);
    const auto lexicons = mm::load_lexicons(config);
    auto provider = mm::make_provider_with_env(config.provider);
    auto registry = mm::build_registry(config, lexicons, provider);
    registry.save(config.micromodels_dir());
    std::cout << "built " << registry.size() << " micromodels (fingerprint "
              << registry.fingerprint() << ") -> " << config.micromodels_dir() << "\n";
    return 0;
}

int cmd_train(const GlobalArgs& args) {
    auto config = load_config(args);
    const auto registry = load_registry(config);
    const auto instances = load_train_instances(config);

    mm::TrainOptions options;
    options.ebm = config.ebm;
    options.seed = config.seed;
    options.positive_label = config.positive_label;
    options.run_dir = config.run_dir;
    options.micromodels_dir = config.micromodels_dir();

    const auto run = mm::run_training(instances, registry, config.aggregators, options);
    write_run_manifest(config, run.registry_fingerprint);
    mm::write_shape_csv(run.model, (fs::path(config.run_dir) / "shapes.csv").string());
    std::cout << "trained on " << instances.size() << " instances, "
              << run.train_matrix.feature_names.size() << " features";
    if (run.train_auc) std::cout << "; train AUC " << *run.train_auc;
    std::cout << " -> " << (fs::path(config.run_dir) / "model.json").string() << "\n";
    return 0;
}

int cmd_classify(const GlobalArgs& args) {
    auto config = load_config(args);
    if (args.input_path.empty()) throw mm::ConfigError("classify requires --input");
    const auto registry = load_registry(config);
    check_run_manifest(config, registry.fingerprint());

    mm::TaskRun run;
    run.registry = &registry;
    run.registry_fingerprint = registry.fingerprint();
    run.aggregators = config.aggregators;
    run.model = mm::EbmModel::load((fs::path(config.run_dir) / "model.json").string());

    const auto instances = mm::load_instances(args.input_path);
    std::vector<std::pair<std::string, mm::ClassifyOutcome>> rows;
    std::vector<mm::HitVector> all_hits;
    for (const auto& inst : instances) {
        rows.emplace_back(inst.id, mm::classify(run, inst, config.decision_threshold));
        const auto* hits = run.provenance.hits_of(inst.id);
        all_hits.insert(all_hits.end(), hits->begin(), hits->end());
    }

    fs::create_directories(config.run_dir);
    const auto predictions_path = (fs::path(config.run_dir) / "predictions.csv").string();
    write_predictions_csv(predictions_path, rows);
    merge_classified((fs::path(config.run_dir) / "classified.jsonl").string(), instances);
    append_provenance_unique((fs::path(config.run_dir) / "provenance.jsonl").string(), all_hits);

    std::cout << "classified " << instances.size() << " instances -> " << predictions_path << "\n";
    return 0;
}

int cmd_explain(const GlobalArgs& args) {
    auto config = load_config(args);
    if (args.instance_id.empty()) throw mm::ConfigError("explain requires --instance");
    const auto registry = load_registry(config);
    check_run_manifest(config, registry.fingerprint());

    mm::TaskRun run;
    run.registry = &registry;
    run.registry_fingerprint = registry.fingerprint();
    run.aggregators = config.aggregators;
    run.model = mm::EbmModel::load((fs::path(config.run_dir) / "model.json").string());
    run.train_matrix = mm::read_feature_csv((fs::path(config.run_dir) / "features.csv").string());

    // the instance must have been featurized in this run
    const auto provenance_path = (fs::path(config.run_dir) / "provenance.jsonl").string();
    std::ifstream prov(provenance_path);
    if (!prov) throw mm::MissingArtifactError("missing provenance log: " + provenance_path);
    std::map<std::string, std::string> recorded_bits;  // micromodel -> bits
    {
        std::string line;
        while (std::getline(prov, line)) {
            if (line.empty()) continue;
            json doc = json::parse(line, nullptr, false);
            if (doc.is_discarded()) continue;
            if (doc.value("instance", "") == args.instance_id) {
                recorded_bits[doc.value("micromodel", "")] = doc.value("bits", "");
            }
        }
    }
    if (recorded_bits.empty()) {
        throw mm::MissingArtifactError("instance \"" + args.instance_id +
                                       "\" has no recorded run; train or classify it first");
    }

    // find the utterance texts: training file first, then classified batches
    std::optional<mm::Instance> instance;
    auto scan = [&](const std::string& path) {
        if (instance || path.empty() || !fs::exists(path)) return;
        for (auto& inst : mm::load_instances(path)) {
            if (inst.id == args.instance_id) {
                instance = std::move(inst);
                return;
            }
        }
    };
    scan(config.train_instances_path);
    scan((fs::path(config.run_dir) / "classified.jsonl").string());
    if (!instance) {
        throw mm::MissingArtifactError("instance \"" + args.instance_id +
                                       "\" not found in train or classified inputs");
    }

    // purity: re-featurizing reproduces the recorded run; cross-check the bits
    auto featurized = mm::featurize(registry, config.aggregators, *instance);
    for (const auto& hv : featurized.hits) {
        auto it = recorded_bits.find(hv.micromodel);
        if (it != recorded_bits.end() && it->second != hv.bits_string()) {
            throw mm::IntegrityError("recorded bits for \"" + hv.micromodel +
                                     "\" do not match the frozen registry output");
        }
    }
    run.provenance.insert(*instance, featurized.hits);

    const auto bundle = mm::explain(run, args.instance_id);
    const auto dir = fs::path(config.run_dir) / "explanations";
    fs::create_directories(dir);
    const auto out_path = (dir / (args.instance_id + ".json")).string();
    std::ofstream out(out_path, std::ios::binary);
    out << mm::explanation_to_json(bundle).dump(2) << '\n';

    std::cout << "explained " << args.instance_id << " (p=" << bundle.probability << ") -> "
              << out_path << "\n";
    return 0;
}

int cmd_eval(const GlobalArgs& args) {
    auto config = load_config(args);
    if (config.eval_instances_path.empty()) throw mm::ConfigError("config has no \"eval_instances\"");
    const auto registry = load_registry(config);
    check_run_manifest(config, registry.fingerprint());

    mm::TaskRun run;
    run.registry = &registry;
    run.registry_fingerprint = registry.fingerprint();
    run.aggregators = config.aggregators;
    run.model = mm::EbmModel::load((fs::path(config.run_dir) / "model.json").string());

    const auto instances = mm::load_instances(config.eval_instances_path);
    std::vector<double> probs;
    std::vector<int> labels;
    std::vector<std::string> predicted, actual;
    for (const auto& inst : instances) {
        if (!inst.label) {
            throw mm::ValidationError("eval instance \"" + inst.id + "\" has no label");
        }
        auto outcome = mm::classify(run, inst, config.decision_threshold);
        probs.push_back(outcome.probability);
        labels.push_back(*inst.label == config.positive_label ? 1 : 0);
        predicted.push_back(outcome.label);
        actual.push_back(*inst.label);
    }
    const double auc = mm::roc_auc(probs, labels);
    const double f1 = mm::macro_f1(predicted, actual,
                                   {run.model.negative_label, run.model.positive_label});

    fs::create_directories(config.run_dir);
    const auto metrics_path = (fs::path(config.run_dir) / "metrics.json").string();
    std::ofstream out(metrics_path, std::ios::binary);
    out << json{{"auc", auc},
                {"macro_f1", f1},
                {"n", instances.size()},
                {"positive_label", config.positive_label}}
               .dump(2)
        << '\n';

    std::cout << "eval AUC " << auc << ", macro-F1 " << f1 << " on " << instances.size()
              << " instances -> " << metrics_path << "\n";
    return 0;
}

int cmd_curve(const GlobalArgs& args) {
    auto config = load_config(args);
    const auto registry = load_registry(config);
    const auto train_all = load_train_instances(config);

    std::vector<mm::Instance> train, test;
    if (!config.eval_instances_path.empty()) {
        train = train_all;
        test = mm::load_instances(config.eval_instances_path);
    } else {
        std::tie(train, test) = mm::stratified_split(train_all, 0.2, config.seed);
    }

    const auto report = mm::learning_curve(train, test, registry, config.aggregators, config.ebm,
                                           config.positive_label, config.curve);

    fs::create_directories(config.run_dir);
    const auto curve_path = (fs::path(config.run_dir) / "curve.csv").string();
    mm::write_curve_csv(report, curve_path);
    std::cout << "curve: " << report.fractions.size() << " fractions x " << report.runs
              << " runs -> " << curve_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"micromodel pipeline: frozen micromodels, interpretable features, EBM classifier"};
    app.require_subcommand(1);

    GlobalArgs args;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", args.config_path, "pipeline config (JSON)")->required();
        cmd->add_option("--run-dir", args.run_dir_override, "override the config run_dir");
        cmd->add_option("--seed", args.seed_override, "override the config seed");
        cmd->add_option("--threads", args.threads, "cap worker threads (default: machine)");
        return cmd;
    };

    auto* collect = add_common(app.add_subcommand("collect", "build an example corpus iteratively"));
    collect->add_flag("--interactive", args.interactive, "review candidates on the terminal");
    add_common(app.add_subcommand("build", "build and freeze the micromodel registry"));
    add_common(app.add_subcommand("train", "train the task classifier on frozen micromodels"));
    auto* classify = add_common(app.add_subcommand("classify", "classify instances with a trained run"));
    classify->add_option("--input", args.input_path, "instances to classify (JSONL)")->required();
    auto* explain = add_common(app.add_subcommand("explain", "explain one instance end to end"));
    explain->add_option("--instance", args.instance_id, "instance id")->required();
    add_common(app.add_subcommand("eval", "compute AUC / macro-F1 on eval instances"));
    add_common(app.add_subcommand("curve", "run the low-resource learning-curve protocol"));

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("collect")) return cmd_collect(args);
        if (app.got_subcommand("build")) return cmd_build(args);
        if (app.got_subcommand("train")) return cmd_train(args);
        if (app.got_subcommand("classify")) return cmd_classify(args);
        if (app.got_subcommand("explain")) return cmd_explain(args);
        if (app.got_subcommand("eval")) return cmd_eval(args);
        if (app.got_subcommand("curve")) return cmd_curve(args);
    } catch (const mm::MissingArtifactError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const mm::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const mm::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const mm::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
