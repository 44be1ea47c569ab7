#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mm/aggregate.hpp"
#include "mm/ebm.hpp"

namespace mm {

// Mann-Whitney ROC AUC: over all (positive, negative) pairs, 1 per correctly
// ordered pair and 0.5 per tie, divided by the pair count. Requires both
// classes. The final division is arranged so that
// roc_auc(s, y) + roc_auc(s, flipped y) == 1 holds exactly.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Unweighted mean of per-class F1 over the class set; a class with no
// predicted and no actual positives contributes 0.
double macro_f1(const std::vector<std::string>& predictions,
                const std::vector<std::string>& labels, const std::vector<std::string>& classes);

struct CurveConfig {
    std::vector<double> fractions = {1.0 / 16, 1.0 / 8, 1.0 / 4, 1.0 / 2, 1.0};
    int runs = 5;
    std::uint64_t seed = 0;
};

struct CurveCell {
    double auc = 0.0;
    bool available = false;  // false when a draw had < 1 instance per class
};

struct CurveReport {
    std::vector<double> fractions;
    int runs = 0;
    std::vector<std::vector<CurveCell>> cells;  // [fraction][run]
    std::vector<CurveCell> means;               // per fraction, over available runs
};

// Seeded stratified split; test_fraction of each class (at least one when the
// class has >= 2 members) goes to the test side.
std::pair<std::vector<Instance>, std::vector<Instance>> stratified_split(
    const std::vector<Instance>& instances, double test_fraction, std::uint64_t seed);

// Low-resource protocol: for each fraction, `runs` independent stratified
// subsamples of the training set train the task classifier (micromodels
// frozen; the EBM always uses the config seed so fraction 1 is run-invariant)
// and are scored by AUC on the fixed test set.
CurveReport learning_curve(const std::vector<Instance>& train, const std::vector<Instance>& test,
                           const MicromodelRegistry& registry,
                           const std::vector<AggregatorSpec>& aggregators, const EbmParams& params,
                           const std::string& positive_label, const CurveConfig& config);

// CSV "fraction,run,auc" rows (runs are 1-based; unavailable cells print
// "unavailable") plus one "fraction,mean,auc" summary row per fraction.
void write_curve_csv(const CurveReport& report, std::ostream& out);
void write_curve_csv(const CurveReport& report, const std::string& path);

}  // namespace mm
