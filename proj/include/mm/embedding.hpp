#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

namespace mm {

// Text -> unit-L2 vector. Implementations must be deterministic: equal texts
// yield equal vectors, and zero-signal texts map to the basis vector e_0.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    virtual std::size_t dimension() const = 0;
    virtual std::vector<double> embed(const std::string& text) const = 0;
    virtual std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts) const;

    // Stable identity string, recorded next to cached embeddings.
    virtual std::string fingerprint() const = 0;
};

// Offline embedder: counts character 3-grams of the space-joined token string
// (one '#' boundary pad at each end), hashes each gram into 1024 buckets with
// 64-bit FNV-1a, then L2-normalizes. Texts shorter than one gram map to e_0.
class FallbackEmbedder final : public EmbeddingProvider {
public:
    static constexpr std::size_t kDim = 1024;

    std::size_t dimension() const override { return kDim; }
    std::vector<double> embed(const std::string& text) const override;
    std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts) const override;
    std::string fingerprint() const override { return "fnv1a-3gram:dim=1024:v1"; }
};

struct RemoteEmbedderConfig {
    std::string endpoint;   // e.g. http://127.0.0.1:8089/embed
    int timeout_ms = 10000;
    std::size_t batch_size = 256;
};

// HTTP client for the embedding wire protocol:
//   POST body {"texts": [...]} -> {"dim": d, "vectors": [[...], ...]}.
// Vectors are renormalized to unit L2; the dimension is pinned by the first
// successful response and later mismatches are provider errors.
class RemoteEmbedder final : public EmbeddingProvider {
public:
    explicit RemoteEmbedder(RemoteEmbedderConfig config);

    std::size_t dimension() const override;  // probes the endpoint when unknown
    std::vector<double> embed(const std::string& text) const override;
    std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts) const override;
    std::string fingerprint() const override;

private:
    std::vector<std::vector<double>> request(const std::vector<std::string>& texts) const;

    RemoteEmbedderConfig config_;
    mutable std::mutex mutex_;
    mutable std::size_t dim_ = 0;  // 0 until first response
};

// Memoizes embed() by exact text; thread-safe. Used where the same utterances
// are embedded across iterations (collection) or micromodels.
class CachingProvider final : public EmbeddingProvider {
public:
    explicit CachingProvider(std::shared_ptr<const EmbeddingProvider> inner)
        : inner_(std::move(inner)) {}

    std::size_t dimension() const override { return inner_->dimension(); }
    std::vector<double> embed(const std::string& text) const override;
    std::vector<std::vector<double>> embed_batch(const std::vector<std::string>& texts) const override;
    std::string fingerprint() const override { return inner_->fingerprint(); }

private:
    std::shared_ptr<const EmbeddingProvider> inner_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<std::string, std::vector<double>> cache_;
};

// In-place L2 normalization; vectors with norm < 1e-12 become e_0.
void normalize_or_e0(std::vector<double>& v);

// Dot product of unit vectors, snapped to 1.0 above 1 - 1e-12: identical
// embeddings compare as exactly similar despite rounding.
double unit_cosine(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace mm
