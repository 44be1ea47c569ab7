#include "mm/ebm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "mm/errors.hpp"
#include "mm/parallel.hpp"
#include "mm/rng.hpp"

namespace mm {

using nlohmann::json;

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

std::size_t ShapeFunction::bin_of(double x) const {
    // count of edges <= x
    return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) -
                                    edges.begin());
}

double EbmModel::score_row(const std::vector<double>& row) const {
    double s = intercept;
    for (std::size_t i = 0; i < shapes.size(); ++i) s += shapes[i].eval(row[i]);
    return s;
}

double EbmModel::predict_row(const std::vector<double>& row) const {
    return sigmoid(score_row(row));
}

double EbmModel::score(const FeatureVector& features) const {
    double s = intercept;
    for (const auto& shape : shapes) s += shape.eval(features.value_of(shape.feature));
    return s;
}

double EbmModel::predict(const FeatureVector& features) const { return sigmoid(score(features)); }

std::vector<std::string> EbmModel::feature_order() const {
    std::vector<std::string> names;
    names.reserve(shapes.size());
    for (const auto& s : shapes) names.push_back(s.feature);
    return names;
}

// ---------------------------------------------------------------------------
// training

namespace {

// Distinct training values at quantile positions j*n/bins, excluding anything
// <= min so the leading bin is never empty. A constant feature ends up with
// no edges at all: a single bin.
std::vector<double> quantile_edges(std::vector<double> values, int bins) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    std::vector<double> edges;
    for (int j = 1; j < bins; ++j) {
        const std::size_t idx = (static_cast<std::size_t>(j) * n) / static_cast<std::size_t>(bins);
        const double v = values[std::min(idx, n - 1)];
        if (v <= values.front()) continue;
        if (edges.empty() || v > edges.back()) edges.push_back(v);
    }
    return edges;
}

double clamped_log_odds(double p) {
    const double eps = 1e-6;
    p = std::clamp(p, eps, 1.0 - eps);
    return std::log(p / (1.0 - p));
}

struct BagResult {
    std::vector<std::vector<double>> bin_values;  // per feature
    double intercept = 0.0;
    std::vector<double> loss_curve;  // per completed round
};

BagResult train_bag(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels,
                    const std::vector<std::vector<double>>& edges,
                    const std::vector<std::vector<std::size_t>>& bin_index, const EbmParams& params,
                    std::uint64_t bag_seed) {
    const std::size_t n = rows.size();
    const std::size_t n_features = edges.size();

    std::mt19937_64 eng(bag_seed);
    std::vector<std::size_t> sample(n);
    for (std::size_t i = 0; i < n; ++i) sample[i] = draw_index(eng, n);

    std::size_t positives = 0;
    for (std::size_t i : sample) positives += static_cast<std::size_t>(labels[i]);

    BagResult bag;
    bag.bin_values.resize(n_features);
    for (std::size_t f = 0; f < n_features; ++f) bag.bin_values[f].assign(edges[f].size() + 1, 0.0);
    bag.intercept = clamped_log_odds(static_cast<double>(positives) / static_cast<double>(n));

    // current additive score per bag sample
    std::vector<double> score(n, bag.intercept);

    std::vector<double> residual_sum;
    std::vector<double> delta;
    std::vector<std::size_t> bin_count;
    bag.loss_curve.reserve(params.rounds);

    for (int round = 0; round < params.rounds; ++round) {
        for (std::size_t f = 0; f < n_features; ++f) {
            auto& bins = bag.bin_values[f];
            residual_sum.assign(bins.size(), 0.0);
            bin_count.assign(bins.size(), 0);
            for (std::size_t s = 0; s < n; ++s) {
                const std::size_t i = sample[s];
                const std::size_t b = bin_index[f][i];
                residual_sum[b] += static_cast<double>(labels[i]) - sigmoid(score[s]);
                bin_count[b] += 1;
            }
            delta.assign(bins.size(), 0.0);
            for (std::size_t b = 0; b < bins.size(); ++b) {
                if (bin_count[b] == 0) continue;  // empty bins receive no update
                delta[b] = params.learning_rate * residual_sum[b] / static_cast<double>(bin_count[b]);
                bins[b] += delta[b];
            }
            for (std::size_t s = 0; s < n; ++s) {
                score[s] += delta[bin_index[f][sample[s]]];
            }
        }
        double loss = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            const std::size_t i = sample[s];
            const double p = sigmoid(score[s]);
            loss += labels[i] ? -std::log(std::max(p, 1e-300))
                              : -std::log(std::max(1.0 - p, 1e-300));
        }
        bag.loss_curve.push_back(loss / static_cast<double>(n));
    }
    return bag;
}

}  // namespace

EbmModel train_ebm(const std::vector<std::vector<double>>& rows,
                   const std::vector<std::string>& feature_names, const std::vector<int>& labels,
                   const EbmParams& params, std::uint64_t seed, const std::string& negative_label,
                   const std::string& positive_label) {
    const std::size_t n = rows.size();
    if (n != labels.size()) throw ValidationError("rows and labels differ in length");
    if (params.bins < 2 || params.bags < 1 || params.rounds < 0 || params.learning_rate <= 0.0) {
        throw ConfigError("invalid ebm hyperparameters");
    }
    std::size_t positives = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw ValidationError("labels must be 0/1");
        positives += static_cast<std::size_t>(y);
    }
    if (positives < 2 || n - positives < 2) {
        throw TrainingError("ebm training requires at least 2 instances per class");
    }

    const std::size_t n_features = feature_names.size();
    for (const auto& row : rows) {
        if (row.size() != n_features) throw ValidationError("row width does not match features");
        for (double v : row) {
            if (!std::isfinite(v)) throw ValidationError("non-finite feature value");
        }
    }

    // binning
    std::vector<std::vector<double>> edges(n_features);
    std::vector<std::vector<std::size_t>> bin_index(n_features,
                                                    std::vector<std::size_t>(n, 0));
    for (std::size_t f = 0; f < n_features; ++f) {
        std::vector<double> column(n);
        for (std::size_t i = 0; i < n; ++i) column[i] = rows[i][f];
        edges[f] = quantile_edges(column, params.bins);
        for (std::size_t i = 0; i < n; ++i) {
            bin_index[f][i] = static_cast<std::size_t>(
                std::upper_bound(edges[f].begin(), edges[f].end(), rows[i][f]) -
                edges[f].begin());
        }
    }

    // bags are independent; reduction below iterates in bag order
    std::vector<BagResult> bags(static_cast<std::size_t>(params.bags));
    parallel_for(bags.size(), [&](std::size_t b) {
        bags[b] = train_bag(rows, labels, edges, bin_index, params,
                            seed + static_cast<std::uint64_t>(b));
    });

    EbmModel model;
    model.params = params;
    model.seed = seed;
    model.negative_label = negative_label;
    model.positive_label = positive_label;
    model.shapes.resize(n_features);

    double intercept = 0.0;
    for (const auto& bag : bags) intercept += bag.intercept;
    intercept /= static_cast<double>(params.bags);

    for (std::size_t f = 0; f < n_features; ++f) {
        auto& shape = model.shapes[f];
        shape.feature = feature_names[f];
        shape.edges = edges[f];
        shape.values.assign(edges[f].size() + 1, 0.0);
        for (const auto& bag : bags) {
            for (std::size_t b = 0; b < shape.values.size(); ++b) {
                shape.values[b] += bag.bin_values[f][b];
            }
        }
        for (double& v : shape.values) v /= static_cast<double>(params.bags);

        // center over the full training set (count-weighted, so a single-bin
        // shape centers to exactly 0); fold the mean into the intercept
        std::vector<std::size_t> counts(shape.values.size(), 0);
        for (std::size_t i = 0; i < n; ++i) counts[bin_index[f][i]] += 1;
        double mean = 0.0;
        for (std::size_t b = 0; b < shape.values.size(); ++b) {
            mean += shape.values[b] * (static_cast<double>(counts[b]) / static_cast<double>(n));
        }
        for (double& v : shape.values) v -= mean;
        intercept += mean;
    }
    model.intercept = intercept;

    model.bag_loss_curves.reserve(bags.size());
    for (auto& bag : bags) model.bag_loss_curves.push_back(std::move(bag.loss_curve));
    return model;
}

EbmModel train_ebm(const FeatureMatrix& matrix, const std::string& positive_label,
                   const EbmParams& params, std::uint64_t seed) {
    std::vector<int> labels;
    labels.reserve(matrix.labels.size());
    std::string negative_label;
    for (const auto& label : matrix.labels) {
        if (label.empty()) throw ValidationError("training matrix has unlabeled rows");
        if (label == positive_label) {
            labels.push_back(1);
        } else {
            if (negative_label.empty()) {
                negative_label = label;
            } else if (label != negative_label) {
                throw TrainingError("binary training saw a third label \"" + label +
                                    "\"; expected {" + negative_label + ", " + positive_label + "}");
            }
            labels.push_back(0);
        }
    }
    return train_ebm(matrix.rows, matrix.feature_names, labels, params, seed, negative_label,
                     positive_label);
}

// ---------------------------------------------------------------------------
// explanations

std::map<std::string, double> global_importance(const EbmModel& model,
                                                const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw ValidationError("global importance requires a non-empty matrix");
    std::map<std::string, double> importance;
    for (std::size_t f = 0; f < model.shapes.size(); ++f) {
        double acc = 0.0;
        for (const auto& row : rows) acc += std::abs(model.shapes[f].eval(row[f]));
        importance[model.shapes[f].feature] = acc / static_cast<double>(rows.size());
    }
    return importance;
}

LocalExplanation local_explanation(const EbmModel& model, const FeatureVector& features) {
    LocalExplanation ex;
    ex.intercept = model.intercept;
    ex.score = model.intercept;
    for (const auto& shape : model.shapes) {
        const double contribution = shape.eval(features.value_of(shape.feature));
        ex.features.push_back(shape.feature);
        ex.contributions.push_back(contribution);
        ex.score += contribution;
    }
    ex.probability = sigmoid(ex.score);
    return ex;
}

std::vector<ShapeSegment> export_shape(const EbmModel& model, const std::string& feature) {
    const ShapeFunction* shape = nullptr;
    for (const auto& s : model.shapes) {
        if (s.feature == feature) {
            shape = &s;
            break;
        }
    }
    if (!shape) throw ValidationError("unknown feature \"" + feature + "\"");

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<ShapeSegment> segments;
    segments.reserve(shape->values.size());
    for (std::size_t b = 0; b < shape->values.size(); ++b) {
        ShapeSegment seg;
        seg.lo = b == 0 ? -inf : shape->edges[b - 1];
        seg.hi = b == shape->edges.size() ? inf : shape->edges[b];
        seg.value = shape->values[b];
        segments.push_back(seg);
    }
    return segments;
}

namespace {

std::string bound_repr(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void write_shape_csv(const EbmModel& model, std::ostream& out) {
    out << "feature,bin_lo,bin_hi,value\n";
    for (const auto& shape : model.shapes) {
        for (const auto& seg : export_shape(model, shape.feature)) {
            out << shape.feature << ',' << bound_repr(seg.lo) << ',' << bound_repr(seg.hi) << ','
                << bound_repr(seg.value) << '\n';
        }
    }
}

void write_shape_csv(const EbmModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    write_shape_csv(model, out);
}

// ---------------------------------------------------------------------------
// serialization

json EbmModel::to_json() const {
    json features = json::array();
    for (const auto& shape : shapes) {
        features.push_back({{"name", shape.feature}, {"edges", shape.edges}, {"values", shape.values}});
    }
    return json{{"version", 1},
                {"intercept", intercept},
                {"features", std::move(features)},
                {"meta",
                 {{"bins", params.bins},
                  {"bags", params.bags},
                  {"rounds", params.rounds},
                  {"learning_rate", params.learning_rate},
                  {"seed", seed},
                  {"negative_label", negative_label},
                  {"positive_label", positive_label}}}};
}

EbmModel EbmModel::from_json(const json& doc) {
    if (doc.value("version", 0) != 1) throw ParseError("unsupported model version");
    EbmModel model;
    model.intercept = doc.at("intercept").get<double>();
    for (const auto& f : doc.at("features")) {
        ShapeFunction shape;
        shape.feature = f.at("name").get<std::string>();
        shape.edges = f.at("edges").get<std::vector<double>>();
        shape.values = f.at("values").get<std::vector<double>>();
        if (shape.values.size() != shape.edges.size() + 1) {
            throw ValidationError("shape \"" + shape.feature + "\" has inconsistent bins");
        }
        model.shapes.push_back(std::move(shape));
    }
    const auto& meta = doc.at("meta");
    model.params.bins = meta.value("bins", 32);
    model.params.bags = meta.value("bags", 8);
    model.params.rounds = meta.value("rounds", 200);
    model.params.learning_rate = meta.value("learning_rate", 0.05);
    model.seed = meta.value("seed", std::uint64_t{0});
    model.negative_label = meta.value("negative_label", "0");
    model.positive_label = meta.value("positive_label", "1");
    return model;
}

void EbmModel::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path);
    out << to_json().dump(2) << '\n';
}

EbmModel EbmModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("missing model file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return from_json(doc);
}

// ---------------------------------------------------------------------------
// one-vs-rest

std::vector<double> OneVsRestEbm::probabilities(const FeatureVector& features) const {
    std::vector<double> probs;
    probs.reserve(models.size());
    for (const auto& model : models) probs.push_back(model.predict(features));
    return probs;
}

std::string OneVsRestEbm::predict_label(const FeatureVector& features) const {
    const auto probs = probabilities(features);
    std::size_t best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[best]) best = i;
    }
    return classes[best];
}

OneVsRestEbm train_one_vs_rest(const FeatureMatrix& matrix, const std::vector<std::string>& classes,
                               const EbmParams& params, std::uint64_t seed) {
    if (classes.size() < 2) throw ConfigError("one-vs-rest requires at least 2 classes");
    OneVsRestEbm ovr;
    ovr.classes = classes;
    for (const auto& cls : classes) {
        std::vector<int> labels;
        labels.reserve(matrix.labels.size());
        for (const auto& label : matrix.labels) labels.push_back(label == cls ? 1 : 0);
        auto model = train_ebm(matrix.rows, matrix.feature_names, labels, params, seed, "<rest>", cls);
        ovr.models.push_back(std::move(model));
    }
    return ovr;
}

}  // namespace mm
