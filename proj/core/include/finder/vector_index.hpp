#pragma once

#include <cstddef>
#include <filesystem>
#include <shared_mutex>
#include <string>
#include <vector>

#include "finder/corpus.hpp"
#include "finder/embedding.hpp"

namespace finder::vec {

struct ChunkRef {
    std::string chunk_id;
    std::string doc_id;

    bool operator==(const ChunkRef&) const = default;
};

struct RetrievalHit {
    ChunkRef ref;
    double distance = 0.0;
    std::size_t rank = 0;
};

enum class Metric { cosine_distance };

struct IndexConfig {
    std::size_t dim = 256;
    Metric metric = Metric::cosine_distance;
    std::size_t k_default = 20;
};

struct IndexStats {
    std::size_t count = 0;
    std::size_t dim = 0;
};

/// Exact flat index: every query scans all entries and sorts by
/// (distance, chunk_id), so results are deterministic and ties break
/// lexicographically. Good up to the corpus sizes this pipeline sees;
/// anything beyond that should swap in an ANN structure behind the same
/// interface.
class VectorIndex {
public:
    explicit VectorIndex(IndexConfig config = {});

    VectorIndex(VectorIndex&& other) noexcept;
    VectorIndex& operator=(VectorIndex&& other) noexcept;
    VectorIndex(const VectorIndex&) = delete;
    VectorIndex& operator=(const VectorIndex&) = delete;

    /// Inserts or replaces (by chunk_id) one entry. Throws DimensionMismatch
    /// when the vector has the wrong length.
    void add(ChunkRef ref, Vector vector);

    /// Embeds and adds every chunk in the corpus. Returns the resulting size.
    IndexStats index_chunks(const corpus::Corpus& corpus,
                            EmbeddingProvider& provider);

    /// Embeds the query text and returns the k nearest entries (fewer when
    /// the index is smaller), ranked 0..m-1. Throws EmptyIndex when empty.
    std::vector<RetrievalHit> knn_query(std::string_view query_text,
                                        std::size_t k,
                                        EmbeddingProvider& provider) const;

    std::vector<RetrievalHit> knn_query_vector(const Vector& query,
                                               std::size_t k) const;

    IndexStats stats() const;
    std::size_t size() const;
    const IndexConfig& config() const { return config_; }

    /// JSON snapshot with a format version and content checksum. load()
    /// throws CorruptIndex on unparseable or checksum-mismatched files and
    /// VersionMismatch on an unknown format version.
    void save(const std::filesystem::path& path) const;
    static VectorIndex load(const std::filesystem::path& path);

private:
    struct Entry {
        ChunkRef ref;
        Vector vector;
    };

    IndexConfig config_;
    std::vector<Entry> entries_;
    mutable std::shared_mutex mutex_;
};

}  // namespace finder::vec
