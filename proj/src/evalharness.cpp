#include "mm/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "mm/errors.hpp"
#include "mm/parallel.hpp"
#include "mm/rng.hpp"
#include "mm/text.hpp"

namespace mm {

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw ValidationError("scores and labels differ in length");
    std::size_t n_pos = 0, n_neg = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw ValidationError("labels must be 0/1");
        (y ? n_pos : n_neg) += 1;
    }
    if (n_pos == 0 || n_neg == 0) {
        throw MetricError("roc_auc requires at least one positive and one negative");
    }

    // ranks over the pooled scores; midranks doubled so everything stays integral
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    std::vector<std::uint64_t> rank2(n);  // 2x the 1-based midrank
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const std::uint64_t two_midrank = static_cast<std::uint64_t>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = two_midrank;
        i = j + 1;
    }

    std::uint64_t rank2_pos_sum = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (labels[k]) rank2_pos_sum += rank2[k];
    }
    // 2U = sum of doubled positive ranks - n_pos*(n_pos+1)
    const std::uint64_t numer = rank2_pos_sum - static_cast<std::uint64_t>(n_pos) * (n_pos + 1);
    const std::uint64_t denom = 2ULL * n_pos * n_neg;

    // Divide on the smaller side so complementary label flips sum to exactly 1.
    if (2 * numer == denom) return 0.5;
    if (2 * numer < denom) return static_cast<double>(numer) / static_cast<double>(denom);
    return 1.0 - static_cast<double>(denom - numer) / static_cast<double>(denom);
}

double macro_f1(const std::vector<std::string>& predictions,
                const std::vector<std::string>& labels, const std::vector<std::string>& classes) {
    if (predictions.size() != labels.size()) {
        throw ValidationError("predictions and labels differ in length");
    }
    if (classes.empty()) throw ValidationError("class set must be non-empty");

    double total = 0.0;
    for (const auto& cls : classes) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const bool actual = labels[i] == cls;
            const bool predicted = predictions[i] == cls;
            if (actual && predicted) ++tp;
            if (!actual && predicted) ++fp;
            if (actual && !predicted) ++fn;
        }
        const double precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
        const double recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
        const double f1 =
            precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
        total += f1;
    }
    return total / static_cast<double>(classes.size());
}

std::pair<std::vector<Instance>, std::vector<Instance>> stratified_split(
    const std::vector<Instance>& instances, double test_fraction, std::uint64_t seed) {
    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (!instances[i].label) {
            throw ValidationError("stratified split requires labeled instances");
        }
        by_class[*instances[i].label].push_back(i);
    }

    std::vector<bool> in_test(instances.size(), false);
    for (auto& [cls, idx] : by_class) {
        std::mt19937_64 eng(mix_seed(seed, fnv1a64(cls)));
        deterministic_shuffle(idx, eng);
        std::size_t n_test = static_cast<std::size_t>(
            std::floor(test_fraction * static_cast<double>(idx.size()) + 0.5));
        if (n_test == 0 && idx.size() >= 2) n_test = 1;
        if (n_test >= idx.size()) n_test = idx.size() - 1;
        for (std::size_t k = 0; k < n_test; ++k) in_test[idx[k]] = true;
    }

    std::pair<std::vector<Instance>, std::vector<Instance>> split;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        (in_test[i] ? split.second : split.first).push_back(instances[i]);
    }
    return split;
}

namespace {

FeatureMatrix featurize_all(const std::vector<Instance>& instances,
                            const MicromodelRegistry& registry,
                            const std::vector<AggregatorSpec>& aggregators) {
    FeatureMatrix matrix;
    matrix.feature_names = feature_names(registry, aggregators);
    matrix.instance_ids.resize(instances.size());
    matrix.labels.resize(instances.size());
    matrix.rows.resize(instances.size());
    parallel_for(instances.size(), [&](std::size_t i) {
        auto featurized = featurize(registry, aggregators, instances[i]);
        matrix.instance_ids[i] = instances[i].id;
        matrix.labels[i] = instances[i].label.value_or("");
        matrix.rows[i] = std::move(featurized.features.values);
    });
    return matrix;
}

}  // namespace

CurveReport learning_curve(const std::vector<Instance>& train, const std::vector<Instance>& test,
                           const MicromodelRegistry& registry,
                           const std::vector<AggregatorSpec>& aggregators, const EbmParams& params,
                           const std::string& positive_label, const CurveConfig& config) {
    if (config.runs < 1) throw ConfigError("curve runs must be >= 1");
    for (std::size_t i = 0; i < config.fractions.size(); ++i) {
        if (!(config.fractions[i] > 0.0 && config.fractions[i] <= 1.0)) {
            throw ConfigError("curve fractions must lie in (0, 1]");
        }
        if (i > 0 && config.fractions[i] <= config.fractions[i - 1]) {
            throw ConfigError("curve fractions must be strictly increasing");
        }
    }

    // micromodels are frozen: featurize once, subsample rows per run
    const FeatureMatrix train_matrix = featurize_all(train, registry, aggregators);
    const FeatureMatrix test_matrix = featurize_all(test, registry, aggregators);

    std::vector<int> test_labels;
    test_labels.reserve(test.size());
    for (const auto& inst : test) {
        test_labels.push_back(inst.label.value_or("") == positive_label ? 1 : 0);
    }

    std::map<std::string, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < train_matrix.labels.size(); ++i) {
        by_class[train_matrix.labels[i]].push_back(i);
    }

    CurveReport report;
    report.fractions = config.fractions;
    report.runs = config.runs;
    report.cells.assign(config.fractions.size(),
                        std::vector<CurveCell>(static_cast<std::size_t>(config.runs)));

    struct Job {
        std::size_t f;
        std::size_t r;
    };
    std::vector<Job> jobs;
    for (std::size_t f = 0; f < config.fractions.size(); ++f) {
        for (std::size_t r = 0; r < static_cast<std::size_t>(config.runs); ++r) {
            jobs.push_back({f, r});
        }
    }

    parallel_for(jobs.size(), [&](std::size_t j) {
        const auto [f, r] = jobs[j];
        const double fraction = config.fractions[f];

        std::vector<std::size_t> chosen;
        bool degenerate = false;
        for (const auto& [cls, idx] : by_class) {
            std::size_t m = static_cast<std::size_t>(
                std::floor(fraction * static_cast<double>(idx.size()) + 0.5));
            if (m > idx.size()) m = idx.size();
            if (m < 1) {
                degenerate = true;
                break;
            }
            auto shuffled = idx;
            std::mt19937_64 eng(mix_seed(config.seed, f + 1, r + 1) ^ fnv1a64(cls));
            deterministic_shuffle(shuffled, eng);
            chosen.insert(chosen.end(), shuffled.begin(), shuffled.begin() + m);
        }
        auto& cell = report.cells[f][r];
        if (degenerate) {
            cell.available = false;
            return;
        }
        std::sort(chosen.begin(), chosen.end());

        FeatureMatrix sub;
        sub.feature_names = train_matrix.feature_names;
        for (std::size_t i : chosen) {
            sub.instance_ids.push_back(train_matrix.instance_ids[i]);
            sub.labels.push_back(train_matrix.labels[i]);
            sub.rows.push_back(train_matrix.rows[i]);
        }
        try {
            // classifier seed is the config seed: only the subsample varies per run
            const EbmModel model = train_ebm(sub, positive_label, params, config.seed);
            std::vector<double> probs(test_matrix.rows.size());
            for (std::size_t i = 0; i < test_matrix.rows.size(); ++i) {
                probs[i] = model.predict_row(test_matrix.rows[i]);
            }
            cell.auc = roc_auc(probs, test_labels);
            cell.available = true;
        } catch (const TrainingError&) {
            cell.available = false;  // recorded, not silently skipped
        }
    });

    report.means.resize(config.fractions.size());
    for (std::size_t f = 0; f < config.fractions.size(); ++f) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& cell : report.cells[f]) {
            if (cell.available) {
                sum += cell.auc;
                ++count;
            }
        }
        report.means[f].available = count > 0;
        report.means[f].auc = count > 0 ? sum / static_cast<double>(count) : 0.0;
    }
    return report;
}

namespace {

std::string format_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

void write_curve_csv(const CurveReport& report, std::ostream& out) {
    out << "fraction,run,auc\n";
    for (std::size_t f = 0; f < report.fractions.size(); ++f) {
        for (std::size_t r = 0; r < report.cells[f].size(); ++r) {
            out << format_g(report.fractions[f]) << ',' << (r + 1) << ','
                << (report.cells[f][r].available ? format_g(report.cells[f][r].auc)
                                                 : std::string("unavailable"))
                << '\n';
        }
        out << format_g(report.fractions[f]) << ",mean,"
            << (report.means[f].available ? format_g(report.means[f].auc)
                                          : std::string("unavailable"))
            << '\n';
    }
}

void write_curve_csv(const CurveReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    write_curve_csv(report, out);
}

}  // namespace mm
