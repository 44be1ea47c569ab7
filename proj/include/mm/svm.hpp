#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mm {

struct Corpus;

struct SvmParams {
    double lambda = 1e-2;  // L2 regularization strength
    int epochs = 50;
    std::uint64_t seed = 1;
};

// Linear SVM over bag-of-words counts, trained by epoch-based subgradient
// descent on the L2-regularized hinge loss with step size 1/(lambda*t).
// There is no bias term: an utterance with no in-vocabulary tokens scores
// margin 0, which predicts 0.
struct LinearSvm {
    std::vector<std::string> vocabulary;  // sorted; looked up by binary search
    std::vector<double> weights;          // aligned to vocabulary
    double bias = 0.0;                    // kept for the wire format; trainer leaves it 0
    SvmParams params;

    // Stateless and safe to call concurrently.
    double margin(const std::string& text) const;
    int predict(const std::string& text) const { return margin(text) > 0.0 ? 1 : 0; }
};

LinearSvm train_linear_svm(const Corpus& positives, const Corpus& negatives,
                           const SvmParams& params = {});

}  // namespace mm
