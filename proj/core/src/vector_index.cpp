#include "finder/vector_index.hpp"

#include <algorithm>
#include <mutex>
#include <utility>

#include "json.hpp"

#include "finder/errors.hpp"
#include "finder/hashing.hpp"
#include "finder/io.hpp"

namespace finder::vec {

using hashing::fnv1a64;
using hashing::sha256_hex;

namespace {

constexpr int kFormatVersion = 1;

std::string metric_name(Metric m) {
    switch (m) {
        case Metric::cosine_distance: return "cosine_distance";
    }
    return "cosine_distance";
}

Metric metric_from_name(const std::string& name) {
    if (name == "cosine_distance") return Metric::cosine_distance;
    throw CorruptIndex("unknown metric: " + name);
}

}  // namespace

VectorIndex::VectorIndex(IndexConfig config) : config_(config) {}

VectorIndex::VectorIndex(VectorIndex&& other) noexcept {
    std::unique_lock lock(other.mutex_);
    config_ = other.config_;
    entries_ = std::move(other.entries_);
}

VectorIndex& VectorIndex::operator=(VectorIndex&& other) noexcept {
    if (this != &other) {
        std::scoped_lock lock(mutex_, other.mutex_);
        config_ = other.config_;
        entries_ = std::move(other.entries_);
    }
    return *this;
}

void VectorIndex::add(ChunkRef ref, Vector vector) {
    if (vector.size() != config_.dim) {
        throw DimensionMismatch("entry dim " + std::to_string(vector.size()) +
                                ", index dim " + std::to_string(config_.dim));
    }
    std::unique_lock lock(mutex_);
    for (auto& entry : entries_) {
        if (entry.ref.chunk_id == ref.chunk_id) {
            entry.ref = std::move(ref);
            entry.vector = std::move(vector);
            return;
        }
    }
    entries_.push_back({std::move(ref), std::move(vector)});
}

IndexStats VectorIndex::index_chunks(const corpus::Corpus& corpus,
                                     EmbeddingProvider& provider) {
    if (corpus.empty()) throw EmptyCorpus("nothing to index");
    for (const auto& chunk : corpus.chunks()) {
        add(ChunkRef{chunk.chunk_id, chunk.doc_id}, provider.embed(chunk.text));
    }
    return stats();
}

std::vector<RetrievalHit> VectorIndex::knn_query(std::string_view query_text,
                                                 std::size_t k,
                                                 EmbeddingProvider& provider) const {
    return knn_query_vector(provider.embed(query_text), k);
}

std::vector<RetrievalHit> VectorIndex::knn_query_vector(const Vector& query,
                                                        std::size_t k) const {
    if (query.size() != config_.dim) {
        throw DimensionMismatch("query dim " + std::to_string(query.size()) +
                                ", index dim " + std::to_string(config_.dim));
    }
    std::shared_lock lock(mutex_);
    if (entries_.empty()) throw EmptyIndex("query against empty index");

    std::vector<RetrievalHit> hits;
    hits.reserve(entries_.size());
    for (const auto& entry : entries_) {
        hits.push_back({entry.ref, cosine_distance(query, entry.vector), 0});
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.ref.chunk_id < b.ref.chunk_id;
    });
    if (hits.size() > k) hits.resize(k);
    for (std::size_t i = 0; i < hits.size(); ++i) hits[i].rank = i;
    return hits;
}

IndexStats VectorIndex::stats() const {
    std::shared_lock lock(mutex_);
    return {entries_.size(), config_.dim};
}

std::size_t VectorIndex::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

void VectorIndex::save(const std::filesystem::path& path) const {
    nlohmann::ordered_json doc;
    doc["format_version"] = kFormatVersion;
    doc["dim"] = config_.dim;
    doc["metric"] = metric_name(config_.metric);
    doc["k_default"] = config_.k_default;
    {
        std::shared_lock lock(mutex_);
        std::vector<const Entry*> ordered;
        ordered.reserve(entries_.size());
        for (const auto& entry : entries_) ordered.push_back(&entry);
        std::sort(ordered.begin(), ordered.end(), [](const Entry* a, const Entry* b) {
            return a->ref.chunk_id < b->ref.chunk_id;
        });
        auto entries = nlohmann::ordered_json::array();
        for (const Entry* entry : ordered) {
            entries.push_back({{"chunk_id", entry->ref.chunk_id},
                               {"doc_id", entry->ref.doc_id},
                               {"vector", entry->vector}});
        }
        doc["entries"] = std::move(entries);
    }
    doc["checksum"] = sha256_hex(doc.dump(2));
    write_file_atomic(path, doc.dump(2) + "\n");
}

VectorIndex VectorIndex::load(const std::filesystem::path& path) {
    const std::string raw = read_file(path);
    nlohmann::ordered_json doc =
        nlohmann::ordered_json::parse(raw, nullptr, /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw CorruptIndex("unparseable index file " + path.string());
    }
    if (!doc.contains("format_version") || !doc["format_version"].is_number_integer()) {
        throw CorruptIndex("missing format_version in " + path.string());
    }
    if (doc["format_version"].get<int>() != kFormatVersion) {
        throw VersionMismatch("index format " +
                              doc["format_version"].dump() + ", expected " +
                              std::to_string(kFormatVersion));
    }
    if (!doc.contains("checksum") || !doc["checksum"].is_string()) {
        throw CorruptIndex("missing checksum in " + path.string());
    }
    const std::string stored = doc["checksum"].get<std::string>();
    doc.erase("checksum");
    if (sha256_hex(doc.dump(2)) != stored) {
        throw CorruptIndex("checksum mismatch in " + path.string());
    }

    try {
        IndexConfig config;
        config.dim = doc.at("dim").get<std::size_t>();
        config.metric = metric_from_name(doc.at("metric").get<std::string>());
        config.k_default = doc.at("k_default").get<std::size_t>();
        VectorIndex index(config);
        for (const auto& entry : doc.at("entries")) {
            index.add(ChunkRef{entry.at("chunk_id").get<std::string>(),
                               entry.at("doc_id").get<std::string>()},
                      entry.at("vector").get<Vector>());
        }
        return index;
    } catch (const Error&) {
        throw;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptIndex("malformed index field in " + path.string() + ": " +
                           e.what());
    }
}

}  // namespace finder::vec
