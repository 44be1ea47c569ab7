#pragma once

// Synthetic fixtures shared by the unit, CLI, and acceptance suites.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

#include <json.hpp>

#include "mm/core.hpp"
#include "mm/ebm.hpp"
#include "mm/rng.hpp"

namespace fixtures {

inline double uniform01(std::mt19937_64& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Unique scratch directory under the process temp dir; removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        static std::atomic<unsigned> counter{0};
        path = std::filesystem::temp_directory_path() /
               ("mm_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

// ---------------------------------------------------------------------------
// lexicon used across query/micromodel tests

inline std::string lexicon_json() {
    return R"({
  "name": "emolex",
  "categories": {
    "sadness": ["sad", "hopeless*", "worthless", "miserable", "empty"],
    "joy": ["happy", "joy*", "delight*"],
    "neg": ["worthless", "hopeless*", "failure", "useless"],
    "neutral": ["the"]
  }
})";
}

inline mm::Lexicon fixture_lexicon(const TempDir& dir) {
    const auto path = dir.file("emolex.json");
    write_text(path, lexicon_json());
    return mm::load_lexicon(path);
}

// ---------------------------------------------------------------------------
// planted-paraphrase cluster for the collection pipeline: 30 near-duplicates
// of one template (pairwise fallback-cosine well above 0.85) plus distractors
// with disjoint content words.

struct ClusterFixture {
    mm::Corpus background;             // cluster + distractors, interleaved ids
    std::vector<std::string> cluster_ids;
    std::vector<std::string> distractor_ids;
    mm::Corpus seed;                   // first 3 cluster members
};

inline ClusterFixture planted_cluster(std::size_t cluster_size = 30,
                                      std::size_t distractors = 500) {
    static const char* suffixes[] = {
        "",        "today",    "tonight",  "again",   "lately",  "honestly", "anymore",
        "somehow", "recently", "these days", "at work", "at home", "every day", "all week",
        "since monday", "this month", "right now", "once more", "as always", "like before",
        "without fail", "this evening", "by now", "in class", "after lunch", "most days",
        "on weekends", "every night", "this week", "for months", "for weeks", "in general"};
    static const char* cities[] = {"arbor",  "brookfield", "claremont", "derwent", "eastvale",
                                   "fairmont", "glenview", "harborton", "inverness", "jasper"};
    static const char* cargo[] = {"timber",  "gravel", "barley", "copper", "cement",
                                  "textiles", "grain",  "steel",  "paper",  "fruit"};
    static const char* verbs[] = {"arrived", "departed", "unloaded", "waited", "rolled"};

    ClusterFixture fx;
    fx.background.id = "background";
    const std::string base = "i really cannot focus on anything at all right now and it wears me down";

    std::size_t uid = 0;
    for (std::size_t c = 0; c < cluster_size; ++c) {
        mm::Utterance utt;
        utt.id = "u" + std::to_string(uid++);
        utt.text = base;
        const std::string suffix = suffixes[c % (sizeof(suffixes) / sizeof(suffixes[0]))];
        if (!suffix.empty()) utt.text += " " + suffix;
        utt.index = fx.background.utterances.size();
        fx.cluster_ids.push_back(utt.id);
        fx.background.utterances.push_back(std::move(utt));
    }
    for (std::size_t d = 0; d < distractors; ++d) {
        mm::Utterance utt;
        utt.id = "u" + std::to_string(uid++);
        utt.text = "the " + std::string(cargo[d % 10]) + " wagon from " + cities[(d / 10) % 10] +
                   " " + verbs[(d / 100) % 5] + " near platform " + std::to_string(d % 17) +
                   " while porters counted crates of " + cargo[(d + 3) % 10];
        utt.index = fx.background.utterances.size();
        fx.distractor_ids.push_back(utt.id);
        fx.background.utterances.push_back(std::move(utt));
    }

    fx.seed.id = "seed";
    for (std::size_t i = 0; i < 3; ++i) {
        mm::Utterance utt = fx.background.utterances[i];
        utt.index = i;
        fx.seed.utterances.push_back(std::move(utt));
    }
    return fx;
}

// ---------------------------------------------------------------------------
// additive-logistic training data: labels ~ Bernoulli(sigmoid(2*x1 - 1*x2))
// on two uniform features.

struct AdditiveLogisticFixture {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::vector<std::string> feature_names{"x1", "x2"};

    std::vector<double> partial1() const {  // generating partial 2*x1
        std::vector<double> out;
        for (const auto& row : rows) out.push_back(2.0 * row[0]);
        return out;
    }
    std::vector<double> partial2() const {  // generating partial -1*x2
        std::vector<double> out;
        for (const auto& row : rows) out.push_back(-1.0 * row[1]);
        return out;
    }
};

inline AdditiveLogisticFixture additive_logistic(std::size_t n = 2000, std::uint64_t seed = 99) {
    AdditiveLogisticFixture fx;
    std::mt19937_64 eng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double x1 = uniform01(eng);
        const double x2 = uniform01(eng);
        const double p = mm::sigmoid(2.0 * x1 - 1.0 * x2);
        fx.rows.push_back({x1, x2});
        fx.labels.push_back(uniform01(eng) < p ? 1 : 0);
    }
    return fx;
}

// Random small models with bounded scores, for explanation identity checks.
inline mm::EbmModel random_model(std::mt19937_64& eng, std::size_t max_features = 8) {
    mm::EbmModel model;
    const std::size_t n_features = 1 + eng() % max_features;
    model.intercept = 2.0 * uniform01(eng) - 1.0;
    for (std::size_t f = 0; f < n_features; ++f) {
        mm::ShapeFunction shape;
        shape.feature = "f" + std::to_string(f);
        const std::size_t n_edges = eng() % 6;
        double edge = uniform01(eng) * 0.2;
        for (std::size_t e = 0; e < n_edges; ++e) {
            shape.edges.push_back(edge);
            edge += 0.05 + uniform01(eng) * 0.2;
        }
        for (std::size_t b = 0; b <= n_edges; ++b) {
            shape.values.push_back(2.0 * uniform01(eng) - 1.0);
        }
        model.shapes.push_back(std::move(shape));
    }
    return model;
}

// ---------------------------------------------------------------------------
// separable end-to-end task: positives carry planted keyword / lexicon /
// similarity signals, negatives are neutral filler. A "neutral" decoy
// micromodel fires on every instance of both classes.

struct SeparableTask {
    std::vector<mm::Instance> train;
    std::vector<mm::Instance> eval;
    mm::Corpus similarity_examples;  // plant for the similarity-query micromodel
    mm::Corpus svm_positives;
    mm::Corpus svm_negatives;
    std::vector<std::string> signal_features;  // base names of planted micromodels
};

inline std::string filler_sentence(std::mt19937_64& eng) {
    static const char* subjects[] = {"the garden",  "the kitchen", "the report",
                                     "the weather", "the meeting", "the commute"};
    static const char* verbs[] = {"went fine", "took a while", "was ordinary",
                                  "stayed calm", "ran long",   "felt routine"};
    static const char* tails[] = {"this morning", "yesterday", "on tuesday",
                                  "before dinner", "last week", "around noon"};
    return std::string(subjects[eng() % 6]) + " " + verbs[eng() % 6] + " " + tails[eng() % 6];
}

inline std::string signal_sentence(std::mt19937_64& eng) {
    static const char* signals[] = {
        "i had a panic attack on the bus",
        "everything feels hopeless and the days blur",
        "i feel worthless after the smallest mistake",
        "i cannot concentrate on the simplest page",
        "my mind will not focus on anything lately",
        "i am so sad about the state of things",
        "these panic attack episodes keep returning",
        "the emptiness makes me feel miserable and empty",
    };
    return signals[eng() % 8];
}

inline SeparableTask separable_task(std::size_t n_train = 120, std::size_t n_eval = 40,
                                    std::uint64_t seed = 1234) {
    SeparableTask task;
    std::mt19937_64 eng(seed);

    task.similarity_examples.id = "planted-similarity-examples";
    const char* paraphrases[] = {
        "i cannot concentrate on the simplest page",
        "i can not concentrate on the simplest pages",
        "my mind will not focus on anything lately",
        "my mind just will not focus on anything lately",
        "i cannot concentrate on even the simplest page",
        "my mind will not focus on any thing lately",
    };
    for (std::size_t i = 0; i < 6; ++i) {
        mm::Utterance utt;
        utt.id = "ex" + std::to_string(i);
        utt.text = paraphrases[i];
        utt.index = i;
        task.similarity_examples.utterances.push_back(std::move(utt));
    }

    task.svm_positives.id = "svm-pos";
    task.svm_negatives.id = "svm-neg";
    for (std::size_t i = 0; i < 24; ++i) {
        mm::Utterance pos;
        pos.id = "sp" + std::to_string(i);
        pos.text = signal_sentence(eng);
        pos.index = i;
        task.svm_positives.utterances.push_back(std::move(pos));
        mm::Utterance neg;
        neg.id = "sn" + std::to_string(i);
        neg.text = filler_sentence(eng);
        neg.index = i;
        task.svm_negatives.utterances.push_back(std::move(neg));
    }

    auto make_instances = [&](std::size_t n, const std::string& prefix) {
        std::vector<mm::Instance> instances;
        for (std::size_t i = 0; i < n; ++i) {
            const bool positive = i % 2 == 0;
            mm::Instance inst;
            inst.id = prefix + std::to_string(i);
            inst.label = positive ? "case" : "control";
            const std::size_t k = 8 + eng() % 5;
            for (std::size_t j = 0; j < k; ++j) {
                mm::Utterance utt;
                utt.id = inst.id + "_s" + std::to_string(j);
                const bool plant = positive && (j % 3 != 2);  // ~2/3 of a case's utterances
                utt.text = plant ? signal_sentence(eng) : filler_sentence(eng);
                utt.index = j;
                inst.utterances.push_back(std::move(utt));
            }
            instances.push_back(std::move(inst));
        }
        return instances;
    };
    task.train = make_instances(n_train, "tr");
    task.eval = make_instances(n_eval, "ev");
    task.signal_features = {"planted-keywords", "lex-sadness", "planted-similarity", "svm-signal"};
    return task;
}

// Writes the separable task plus a full pipeline config into dir; returns the
// config path. Extra config fields can be layered via `overrides`.
inline std::string write_separable_config(const TempDir& dir, const SeparableTask& task,
                                          nlohmann::json overrides = {}) {
    using nlohmann::json;
    mm::save_instances(task.train, dir.file("train.jsonl"));
    mm::save_instances(task.eval, dir.file("eval.jsonl"));
    mm::save_corpus(task.similarity_examples, dir.file("similarity_examples.jsonl"));
    mm::save_corpus(task.svm_positives, dir.file("svm_pos.jsonl"));
    mm::save_corpus(task.svm_negatives, dir.file("svm_neg.jsonl"));
    write_text(dir.file("emolex.json"), lexicon_json());

    json config{
        {"seed", 7},
        {"run_dir", dir.file("run")},
        {"positive_label", "case"},
        {"provider", {{"kind", "fallback"}}},
        {"lexicons", {{"emolex", dir.file("emolex.json")}}},
        {"micromodels",
         json::array(
             {{{"name", "planted-keywords"},
               {"kind", "keyword-logic"},
               {"keywords", json::array({"panic attack", "hopeless"})}},
              {{"name", "lex-sadness"},
               {"kind", "lexicon-logic"},
               {"lexicon", "emolex"},
               {"category", "sadness"}},
              {{"name", "neutral-decoy"},
               {"kind", "lexicon-logic"},
               {"lexicon", "emolex"},
               {"category", "neutral"}},
              {{"name", "svm-signal"},
               {"kind", "linear-svm"},
               {"positives", dir.file("svm_pos.jsonl")},
               {"negatives", dir.file("svm_neg.jsonl")}},
              {{"name", "planted-similarity"},
               {"kind", "similarity-query"},
               {"example_corpus", dir.file("similarity_examples.jsonl")},
               {"threshold", 0.85}}})},
        {"aggregators",
         json::array({{{"kind", "ratio"}}, {{"kind", "window"}, {"max_gap", 2}, {"min_hits", 2}}})},
        {"ebm", {{"bins", 16}, {"bags", 4}, {"rounds", 60}, {"learning_rate", 0.05}}},
        {"train_instances", dir.file("train.jsonl")},
        {"eval_instances", dir.file("eval.jsonl")},
        {"curve", {{"runs", 5}}},
    };
    for (auto& [key, value] : overrides.items()) config[key] = value;
    const auto path = dir.file("config.json");
    write_text(path, config.dump(2));
    return path;
}

}  // namespace fixtures
