#include "mm/aggregate.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mm/errors.hpp"
#include "mm/parallel.hpp"

namespace mm {

std::string AggregatorSpec::suffix() const {
    switch (kind) {
        case AggregatorKind::Ratio: return "";
        case AggregatorKind::Window: return "w";
        case AggregatorKind::MaxPool: return "m";
    }
    return "";
}

AggregatorKind aggregator_kind_from_string(const std::string& s) {
    if (s == "ratio") return AggregatorKind::Ratio;
    if (s == "window") return AggregatorKind::Window;
    if (s == "maxpool") return AggregatorKind::MaxPool;
    throw ConfigError("unknown aggregator kind \"" + s + "\"");
}

std::string to_string(AggregatorKind kind) {
    switch (kind) {
        case AggregatorKind::Ratio: return "ratio";
        case AggregatorKind::Window: return "window";
        case AggregatorKind::MaxPool: return "maxpool";
    }
    return "?";
}

double aggregate_ratio(const std::vector<std::uint8_t>& bits) {
    if (bits.empty()) throw ValidationError("ratio aggregator requires k >= 1");
    std::size_t ones = 0;
    for (auto b : bits) ones += b ? 1 : 0;
    return static_cast<double>(ones) / static_cast<double>(bits.size());
}

double aggregate_window(const std::vector<std::uint8_t>& bits, int max_gap, int min_hits) {
    if (bits.empty()) throw ValidationError("window aggregator requires k >= 1");
    if (max_gap < 0 || min_hits < 1) {
        throw ValidationError("window aggregator requires max_gap >= 0 and min_hits >= 1");
    }
    std::size_t windows = 0;
    int group_hits = 0;
    long last_hit = -1;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (!bits[i]) continue;
        const long gap = last_hit < 0 ? 0 : static_cast<long>(i) - last_hit - 1;
        if (last_hit >= 0 && gap > max_gap) {
            if (group_hits >= min_hits) ++windows;
            group_hits = 0;
        }
        ++group_hits;
        last_hit = static_cast<long>(i);
    }
    if (group_hits >= min_hits) ++windows;
    const double value = static_cast<double>(windows) / static_cast<double>(bits.size());
    return std::clamp(value, 0.0, 1.0);
}

double aggregate_maxpool(const std::vector<double>& scores) {
    if (scores.empty()) throw ValidationError("maxpool aggregator requires k >= 1");
    double best = 0.0;
    for (double s : scores) {
        if (!(s >= 0.0 && s <= 1.0)) {
            throw ValidationError("maxpool score outside [0, 1]");
        }
        best = std::max(best, s);
    }
    return best;
}

double apply_aggregator(const AggregatorSpec& spec, const HitVector& hits) {
    switch (spec.kind) {
        case AggregatorKind::Ratio:
            return aggregate_ratio(hits.bits);
        case AggregatorKind::Window:
            return aggregate_window(hits.bits, spec.max_gap, spec.min_hits);
        case AggregatorKind::MaxPool: {
            if (hits.has_scores()) return aggregate_maxpool(hits.scores);
            std::vector<double> scores(hits.bits.begin(), hits.bits.end());
            return aggregate_maxpool(scores);
        }
    }
    throw ValidationError("unknown aggregator kind");
}

double FeatureVector::value_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return values[i];
    }
    throw ValidationError("feature \"" + name + "\" not present");
}

std::vector<std::string> feature_names(const MicromodelRegistry& registry,
                                       const std::vector<AggregatorSpec>& aggregators) {
    std::vector<std::string> names;
    names.reserve(registry.size() * aggregators.size());
    for (std::size_t m = 0; m < registry.size(); ++m) {
        for (const auto& agg : aggregators) {
            names.push_back(registry.at(m).name() + agg.suffix());
        }
    }
    return names;
}

Featurized featurize(const MicromodelRegistry& registry,
                     const std::vector<AggregatorSpec>& aggregators, const Instance& instance) {
    if (aggregators.empty()) throw ConfigError("featurize requires at least one aggregator");
    if (instance.utterances.empty()) {
        throw ValidationError("instance \"" + instance.id + "\" has no utterances");
    }

    Featurized out;
    out.hits.resize(registry.size());
    parallel_for(registry.size(),
                 [&](std::size_t m) { out.hits[m] = registry.at(m).run(instance); });

    out.features.instance_id = instance.id;
    out.features.names.reserve(registry.size() * aggregators.size());
    out.features.values.reserve(registry.size() * aggregators.size());
    for (std::size_t m = 0; m < registry.size(); ++m) {
        for (const auto& agg : aggregators) {
            out.features.names.push_back(registry.at(m).name() + agg.suffix());
            out.features.values.push_back(apply_aggregator(agg, out.hits[m]));
        }
    }
    return out;
}

std::size_t FeatureMatrix::feature_index(const std::string& name) const {
    for (std::size_t i = 0; i < feature_names.size(); ++i) {
        if (feature_names[i] == name) return i;
    }
    throw LookupError("feature \"" + name + "\" not in matrix");
}

namespace {

std::string format_g9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    fields.push_back(field);
    return fields;
}

}  // namespace

void write_feature_csv(const FeatureMatrix& matrix, std::ostream& out) {
    out << "instance_id,label";
    for (const auto& name : matrix.feature_names) out << ',' << name;
    out << '\n';
    for (std::size_t r = 0; r < matrix.rows.size(); ++r) {
        out << matrix.instance_ids[r] << ',' << matrix.labels[r];
        for (double v : matrix.rows[r]) out << ',' << format_g9(v);
        out << '\n';
    }
}

void write_feature_csv(const FeatureMatrix& matrix, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    write_feature_csv(matrix, out);
}

FeatureMatrix read_feature_csv(std::istream& in) {
    FeatureMatrix matrix;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("feature CSV is empty");
    auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "instance_id" || header[1] != "label") {
        throw ParseError("feature CSV header must start with instance_id,label");
    }
    matrix.feature_names.assign(header.begin() + 2, header.end());

    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw ParseError("feature CSV row has wrong field count", lineno, 1);
        }
        matrix.instance_ids.push_back(fields[0]);
        matrix.labels.push_back(fields[1]);
        std::vector<double> row;
        row.reserve(matrix.feature_names.size());
        for (std::size_t i = 2; i < fields.size(); ++i) {
            try {
                row.push_back(std::stod(fields[i]));
            } catch (const std::exception&) {
                throw ParseError("feature CSV has non-numeric value \"" + fields[i] + "\"", lineno, 1);
            }
        }
        matrix.rows.push_back(std::move(row));
    }
    return matrix;
}

FeatureMatrix read_feature_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("missing feature matrix: " + path);
    return read_feature_csv(in);
}

}  // namespace mm
