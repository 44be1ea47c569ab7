#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mm/micromodel.hpp"

namespace mm {

enum class AggregatorKind { Ratio, Window, MaxPool };

struct AggregatorSpec {
    AggregatorKind kind = AggregatorKind::Ratio;
    int max_gap = 5;   // window: max zeros between consecutive hits in a group
    int min_hits = 3;  // window: hits required for a group to count

    // Feature-name suffix: "" ratio, "w" window, "m" maxpool.
    std::string suffix() const;
};

AggregatorKind aggregator_kind_from_string(const std::string& s);
std::string to_string(AggregatorKind kind);

// Fraction of hits.
double aggregate_ratio(const std::vector<std::uint8_t>& bits);

// Number of maximal hit groups (consecutive hits separated by <= max_gap
// zeros) holding >= min_hits hits, normalized by k and clamped to [0, 1].
double aggregate_window(const std::vector<std::uint8_t>& bits, int max_gap, int min_hits);

// Max of scores; every score must lie in [0, 1].
double aggregate_maxpool(const std::vector<double>& scores);

// Applies one aggregator to one hit vector; maxpool consumes scores when the
// kind provides them, bits otherwise.
double apply_aggregator(const AggregatorSpec& spec, const HitVector& hits);

// Named aggregator outputs in the fixed global order (registry x aggregator);
// the classifier's only input.
struct FeatureVector {
    std::string instance_id;
    std::vector<std::string> names;
    std::vector<double> values;

    double value_of(const std::string& name) const;  // ValidationError when absent
};

struct Featurized {
    FeatureVector features;
    std::vector<HitVector> hits;  // registry order, for provenance
};

std::vector<std::string> feature_names(const MicromodelRegistry& registry,
                                       const std::vector<AggregatorSpec>& aggregators);

Featurized featurize(const MicromodelRegistry& registry,
                     const std::vector<AggregatorSpec>& aggregators, const Instance& instance);

struct FeatureMatrix {
    std::vector<std::string> feature_names;
    std::vector<std::string> instance_ids;
    std::vector<std::string> labels;  // "" when absent
    std::vector<std::vector<double>> rows;

    std::size_t feature_index(const std::string& name) const;  // LookupError when absent
};

// CSV wire format: header "instance_id,label,<feature names...>", floats with
// 9 significant digits.
void write_feature_csv(const FeatureMatrix& matrix, std::ostream& out);
void write_feature_csv(const FeatureMatrix& matrix, const std::string& path);
FeatureMatrix read_feature_csv(std::istream& in);
FeatureMatrix read_feature_csv(const std::string& path);

}  // namespace mm
