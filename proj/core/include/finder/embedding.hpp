#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace finder::vec {

using Vector = std::vector<double>;

double dot(const Vector& a, const Vector& b);
double l2_norm(const Vector& v);

/// Cosine distance 1 - cos(a, b), clamped to [0, 2]. A zero-norm side yields
/// distance 1 (0 when both sides are zero).
double cosine_distance(const Vector& a, const Vector& b);

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    /// Embeds one text. Throws EmptyText on empty input, ProviderError when
    /// a remote provider fails after its bounded retries.
    virtual Vector embed(std::string_view text) = 0;

    virtual std::size_t dim() const = 0;
    virtual std::string name() const = 0;
};

/// Bucket a token lands in under the hashed bag-of-words scheme. Exposed so
/// tests can construct collision-free fixtures.
std::size_t hash_bucket(std::string_view token, std::size_t dim);

/// Deterministic local provider: lowercased tokens hashed into `dim` buckets,
/// counts accumulated, L2-normalized. Never touches the network, so any test
/// or offline run can use it.
class HashedBagProvider final : public EmbeddingProvider {
public:
    explicit HashedBagProvider(std::size_t dim = 256) : dim_(dim) {}

    Vector embed(std::string_view text) override;
    std::size_t dim() const override { return dim_; }
    std::string name() const override { return "deterministic-local"; }

private:
    std::size_t dim_;
};

struct RemoteEmbeddingConfig {
    std::string endpoint;       // full URL of the embeddings endpoint
    std::string model;
    std::string api_key_env;    // name of the env var holding the credential
    std::size_t dim = 1536;
    int timeout_s = 30;
    int retries = 3;
};

/// POSTs {"input": [text], "model": ...} and reads data[0].embedding.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit RemoteEmbeddingProvider(RemoteEmbeddingConfig config);

    Vector embed(std::string_view text) override;
    std::size_t dim() const override { return config_.dim; }
    std::string name() const override { return "remote:" + config_.model; }

private:
    RemoteEmbeddingConfig config_;
    std::string api_key_;
};

}  // namespace finder::vec
