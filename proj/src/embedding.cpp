#include "mm/embedding.hpp"

#include <cmath>

#include <httplib.h>
#include <json.hpp>

#include "mm/errors.hpp"
#include "mm/parallel.hpp"
#include "mm/text.hpp"

namespace mm {

using nlohmann::json;

std::vector<std::vector<double>> EmbeddingProvider::embed_batch(
    const std::vector<std::string>& texts) const {
    std::vector<std::vector<double>> out(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) out[i] = embed(texts[i]);
    return out;
}

void normalize_or_e0(std::vector<double>& v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double norm = std::sqrt(sq);
    if (norm < 1e-12) {
        std::fill(v.begin(), v.end(), 0.0);
        if (!v.empty()) v[0] = 1.0;
        return;
    }
    for (double& x : v) x /= norm;
}

double unit_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += a[i] * b[i];
    if (d > 1.0 - 1e-12) return 1.0;
    if (d < -1.0) return -1.0;
    return d;
}

std::vector<double> FallbackEmbedder::embed(const std::string& text) const {
    std::vector<double> v(kDim, 0.0);
    const std::string processed = "#" + join_tokens(tokenize(text)) + "#";
    if (processed.size() < 3) {
        v[0] = 1.0;
        return v;
    }
    for (std::size_t i = 0; i + 3 <= processed.size(); ++i) {
        v[fnv1a64(processed.data() + i, 3) % kDim] += 1.0;
    }
    normalize_or_e0(v);
    return v;
}

std::vector<std::vector<double>> FallbackEmbedder::embed_batch(
    const std::vector<std::string>& texts) const {
    std::vector<std::vector<double>> out(texts.size());
    parallel_for(texts.size(), [&](std::size_t i) { out[i] = embed(texts[i]); });
    return out;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) throw ConfigError("remote embedder requires an endpoint");
}

namespace {

// Splits "http://host:port/path" into client base and request path.
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    auto scheme_end = endpoint.find("://");
    const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    const auto path_start = endpoint.find('/', host_start);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

}  // namespace

std::vector<std::vector<double>> RemoteEmbedder::request(
    const std::vector<std::string>& texts) const {
    const auto [base, path] = split_endpoint(config_.endpoint);
    httplib::Client client(base);
    client.set_connection_timeout(0, config_.timeout_ms * 1000LL);
    client.set_read_timeout(config_.timeout_ms / 1000, (config_.timeout_ms % 1000) * 1000);

    const std::string body = json{{"texts", texts}}.dump();
    auto res = client.Post(path, body, "application/json");
    if (!res) {
        throw ProviderError("embedding request to " + config_.endpoint + " failed: " +
                            httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw ProviderError("embedding endpoint returned status " + std::to_string(res->status));
    }
    json doc = json::parse(res->body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("dim") || !doc.contains("vectors") ||
        !doc["vectors"].is_array()) {
        throw ProviderError("embedding response is not {\"dim\", \"vectors\"}");
    }
    const auto dim = doc["dim"].get<std::size_t>();
    if (dim == 0) throw ProviderError("embedding response declares dim 0");
    if (doc["vectors"].size() != texts.size()) {
        throw ProviderError("embedding response has " + std::to_string(doc["vectors"].size()) +
                                " vectors for " + std::to_string(texts.size()) + " texts",
                            static_cast<int>(std::min(doc["vectors"].size(), texts.size())));
    }

    {
        std::lock_guard<std::mutex> lock(mutex_);
        if (dim_ == 0) dim_ = dim;
        if (dim != dim_) {
            throw ProviderError("embedding dimension changed from " + std::to_string(dim_) +
                                " to " + std::to_string(dim));
        }
    }

    std::vector<std::vector<double>> out(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
        const auto& vec = doc["vectors"][i];
        if (!vec.is_array() || vec.size() != dim) {
            throw ProviderError("embedding vector has wrong dimension", static_cast<int>(i));
        }
        out[i] = vec.get<std::vector<double>>();
        for (double x : out[i]) {
            if (!std::isfinite(x)) {
                throw ProviderError("embedding vector has non-finite value", static_cast<int>(i));
            }
        }
        normalize_or_e0(out[i]);
    }
    return out;
}

std::size_t RemoteEmbedder::dimension() const {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        if (dim_ > 0) return dim_;
    }
    request({std::string()});
    std::lock_guard<std::mutex> lock(mutex_);
    return dim_;
}

std::vector<double> RemoteEmbedder::embed(const std::string& text) const {
    return request({text})[0];
}

std::vector<std::vector<double>> RemoteEmbedder::embed_batch(
    const std::vector<std::string>& texts) const {
    if (texts.empty()) return {};
    std::vector<std::vector<double>> out(texts.size());
    for (std::size_t start = 0; start < texts.size(); start += config_.batch_size) {
        const std::size_t end = std::min(texts.size(), start + config_.batch_size);
        auto chunk = request({texts.begin() + start, texts.begin() + end});
        for (std::size_t i = 0; i < chunk.size(); ++i) out[start + i] = std::move(chunk[i]);
    }
    return out;
}

std::string RemoteEmbedder::fingerprint() const {
    std::size_t dim;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        dim = dim_;
    }
    return "remote:dim=" + (dim > 0 ? std::to_string(dim) : std::string("?"));
}

std::vector<double> CachingProvider::embed(const std::string& text) const {
    {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(text);
        if (it != cache_.end()) return it->second;
    }
    auto vec = inner_->embed(text);
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.emplace(text, std::move(vec)).first->second;
}

std::vector<std::vector<double>> CachingProvider::embed_batch(
    const std::vector<std::string>& texts) const {
    std::vector<std::vector<double>> out(texts.size());
    std::vector<std::size_t> missing;
    {
        std::lock_guard<std::mutex> lock(mutex_);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            auto it = cache_.find(texts[i]);
            if (it != cache_.end()) {
                out[i] = it->second;
            } else {
                missing.push_back(i);
            }
        }
    }
    if (!missing.empty()) {
        std::vector<std::string> batch;
        batch.reserve(missing.size());
        for (std::size_t i : missing) batch.push_back(texts[i]);
        auto vecs = inner_->embed_batch(batch);
        std::lock_guard<std::mutex> lock(mutex_);
        for (std::size_t j = 0; j < missing.size(); ++j) {
            cache_[texts[missing[j]]] = vecs[j];
            out[missing[j]] = std::move(vecs[j]);
        }
    }
    return out;
}

}  // namespace mm
