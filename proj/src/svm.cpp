#include "mm/svm.hpp"

#include <algorithm>
#include <map>

#include "mm/core.hpp"
#include "mm/errors.hpp"
#include "mm/rng.hpp"
#include "mm/text.hpp"

namespace mm {

namespace {

// token index -> count, sorted by index
using SparseCounts = std::vector<std::pair<std::size_t, double>>;

SparseCounts count_tokens(const std::string& text,
                          const std::unordered_map<std::string, std::size_t>& index) {
    std::map<std::size_t, double> counts;
    for (const auto& token : tokenize(text)) {
        auto it = index.find(token);
        if (it != index.end()) counts[it->second] += 1.0;
    }
    return {counts.begin(), counts.end()};
}

}  // namespace

double LinearSvm::margin(const std::string& text) const {
    double m = bias;
    for (const auto& token : tokenize(text)) {
        const auto it = std::lower_bound(vocabulary.begin(), vocabulary.end(), token);
        if (it != vocabulary.end() && *it == token) {
            m += weights[static_cast<std::size_t>(it - vocabulary.begin())];
        }
    }
    return m;
}

LinearSvm train_linear_svm(const Corpus& positives, const Corpus& negatives,
                           const SvmParams& params) {
    if (positives.empty() || negatives.empty()) {
        throw ConfigError("svm training requires non-empty positive and negative corpora");
    }

    LinearSvm model;
    model.params = params;
    {
        std::set<std::string> vocab;
        for (const Corpus* corpus : {&positives, &negatives}) {
            for (const auto& utt : corpus->utterances) {
                for (auto& token : tokenize(utt.text)) vocab.insert(std::move(token));
            }
        }
        model.vocabulary.assign(vocab.begin(), vocab.end());
    }
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < model.vocabulary.size(); ++i) index[model.vocabulary[i]] = i;

    struct Sample {
        SparseCounts x;
        double y;
    };
    std::vector<Sample> samples;
    samples.reserve(positives.size() + negatives.size());
    for (const auto& utt : positives.utterances) samples.push_back({count_tokens(utt.text, index), 1.0});
    for (const auto& utt : negatives.utterances) samples.push_back({count_tokens(utt.text, index), -1.0});

    std::vector<double> w(model.vocabulary.size(), 0.0);
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::mt19937_64 eng(params.seed);
    std::uint64_t t = 0;
    for (int epoch = 0; epoch < params.epochs; ++epoch) {
        deterministic_shuffle(order, eng);
        for (const std::size_t si : order) {
            const auto& s = samples[si];
            ++t;
            const double eta = 1.0 / (params.lambda * static_cast<double>(t));
            double margin = 0.0;
            for (const auto& [idx, count] : s.x) margin += w[idx] * count;

            const double shrink = 1.0 - eta * params.lambda;  // = 1 - 1/t
            for (double& wi : w) wi *= shrink;
            if (s.y * margin < 1.0) {
                for (const auto& [idx, count] : s.x) w[idx] += eta * s.y * count;
            }
        }
    }

    model.weights = std::move(w);
    return model;
}

}  // namespace mm
