#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mm/aggregate.hpp"

namespace mm {

// Learned per-feature contribution, a step function over quantile bins.
// edges are strictly increasing interior cut points; values has edges.size()+1
// entries. bin(x) counts edges <= x, so out-of-range inputs land in the first
// or last bin.
struct ShapeFunction {
    std::string feature;
    std::vector<double> edges;
    std::vector<double> values;

    std::size_t bin_of(double x) const;
    double eval(double x) const { return values[bin_of(x)]; }
};

struct EbmParams {
    int bins = 32;             // max quantile bins per feature
    int bags = 8;              // bootstrap bags
    int rounds = 200;          // boosting rounds per bag
    double learning_rate = 0.05;
};

// Additive logistic model: P(y=1|x) = sigmoid(intercept + sum_i f_i(x_i)).
// Immutable after training.
struct EbmModel {
    std::vector<ShapeFunction> shapes;  // feature order
    double intercept = 0.0;
    EbmParams params;
    std::uint64_t seed = 0;
    std::string negative_label = "0";
    std::string positive_label = "1";

    // Training log-loss per bag per completed round; in-memory diagnostics,
    // not serialized.
    std::vector<std::vector<double>> bag_loss_curves;

    double score_row(const std::vector<double>& row) const;
    double predict_row(const std::vector<double>& row) const;

    // Feature-vector entry points validate that every model feature is present.
    double score(const FeatureVector& features) const;
    double predict(const FeatureVector& features) const;

    std::vector<std::string> feature_order() const;

    nlohmann::json to_json() const;
    static EbmModel from_json(const nlohmann::json& doc);
    void save(const std::string& path) const;
    static EbmModel load(const std::string& path);
};

// Bagged cyclic gradient boosting on binned features; see module tests for
// the exact procedure contract. labels are 0/1 aligned to rows.
EbmModel train_ebm(const std::vector<std::vector<double>>& rows,
                   const std::vector<std::string>& feature_names,
                   const std::vector<int>& labels, const EbmParams& params, std::uint64_t seed,
                   const std::string& negative_label = "0",
                   const std::string& positive_label = "1");

EbmModel train_ebm(const FeatureMatrix& matrix, const std::string& positive_label,
                   const EbmParams& params, std::uint64_t seed);

// Mean |f_i(t)| over the reference matrix rows, per feature.
std::map<std::string, double> global_importance(const EbmModel& model,
                                                const std::vector<std::vector<double>>& rows);

struct LocalExplanation {
    std::vector<std::string> features;
    std::vector<double> contributions;  // f_i(x_i), aligned to features
    double intercept = 0.0;
    double score = 0.0;        // intercept + sum of contributions
    double probability = 0.0;  // sigmoid(score)
};

LocalExplanation local_explanation(const EbmModel& model, const FeatureVector& features);

struct ShapeSegment {
    double lo;  // -inf for the first bin
    double hi;  // +inf for the last bin
    double value;
};

std::vector<ShapeSegment> export_shape(const EbmModel& model, const std::string& feature);

// CSV "feature,bin_lo,bin_hi,value" with infinities encoded as -inf/inf.
void write_shape_csv(const EbmModel& model, std::ostream& out);
void write_shape_csv(const EbmModel& model, const std::string& path);

// One-vs-rest composition for multiclass tasks: one EBM per class, argmax of
// class probabilities (ties broken by class order).
struct OneVsRestEbm {
    std::vector<std::string> classes;
    std::vector<EbmModel> models;

    std::string predict_label(const FeatureVector& features) const;
    std::vector<double> probabilities(const FeatureVector& features) const;
};

OneVsRestEbm train_one_vs_rest(const FeatureMatrix& matrix,
                               const std::vector<std::string>& classes, const EbmParams& params,
                               std::uint64_t seed);

double sigmoid(double z);

}  // namespace mm
