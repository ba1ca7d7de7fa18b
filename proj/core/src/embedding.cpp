#include "finder/embedding.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

#include "finder/errors.hpp"
#include "finder/hashing.hpp"
#include "finder/text.hpp"

namespace finder::vec {

using hashing::fnv1a64;
using hashing::sha256_hex;

using text::tokenize;

double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) {
        throw DimensionMismatch("dot: " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double l2_norm(const Vector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double cosine_distance(const Vector& a, const Vector& b) {
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 && nb == 0.0) return 0.0;
    if (na == 0.0 || nb == 0.0) return 1.0;
    const double d = 1.0 - dot(a, b) / (na * nb);
    return std::clamp(d, 0.0, 2.0);
}

std::size_t hash_bucket(std::string_view token, std::size_t dim) {
    return static_cast<std::size_t>(fnv1a64(token) % dim);
}

Vector HashedBagProvider::embed(std::string_view text) {
    if (text.empty()) throw EmptyText("cannot embed empty text");
    Vector v(dim_, 0.0);
    for (const auto& token : tokenize(text)) {
        v[hash_bucket(token, dim_)] += 1.0;
    }
    const double norm = l2_norm(v);
    if (norm > 0.0) {
        for (double& x : v) x /= norm;
    }
    return v;
}

namespace {

// Splits "http(s)://host[:port]/path" into the client base and the request
// path. httplib wants them separate.
std::pair<std::string, std::string> split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ProviderError("endpoint is not a URL: " + url);
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

RemoteEmbeddingProvider::RemoteEmbeddingProvider(RemoteEmbeddingConfig config)
    : config_(std::move(config)) {
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw ProviderError("credential env var " + config_.api_key_env +
                                " is not set");
        }
        api_key_ = key;
    }
}

Vector RemoteEmbeddingProvider::embed(std::string_view text) {
    if (text.empty()) throw EmptyText("cannot embed empty text");

    const auto [base, path] = split_url(config_.endpoint);
    nlohmann::json body = {
        {"input", nlohmann::json::array({std::string(text)})},
        {"model", config_.model},
    };
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100 * attempt));
        }
        httplib::Client client(base);
        client.set_connection_timeout(config_.timeout_s);
        client.set_read_timeout(config_.timeout_s);
        httplib::Headers headers;
        if (!api_key_.empty()) {
            headers.emplace("Authorization", "Bearer " + api_key_);
        }
        auto res = client.Post(path, headers, payload, "application/json");
        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw ProviderError("embedding endpoint returned HTTP " +
                                std::to_string(res->status));
        }
        nlohmann::json parsed =
            nlohmann::json::parse(res->body, nullptr, /*allow_exceptions=*/false);
        if (parsed.is_discarded() || !parsed.contains("data") ||
            !parsed["data"].is_array() || parsed["data"].empty() ||
            !parsed["data"][0].contains("embedding")) {
            throw ProviderError("embedding response has unexpected shape");
        }
        Vector v = parsed["data"][0]["embedding"].get<Vector>();
        if (v.size() != config_.dim) {
            throw DimensionMismatch("provider returned dim " +
                                    std::to_string(v.size()) + ", expected " +
                                    std::to_string(config_.dim));
        }
        return v;
    }
    throw ProviderError("embedding request failed after " +
                        std::to_string(config_.retries + 1) + " attempts: " +
                        last_error);
}

}  // namespace finder::vec
