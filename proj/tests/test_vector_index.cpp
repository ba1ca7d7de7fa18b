#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "finder/corpus.hpp"
#include "finder/embedding.hpp"
#include "finder/errors.hpp"
#include "finder/io.hpp"
#include "finder/vector_index.hpp"

#include "fixtures.hpp"

using namespace finder;
using namespace finder::vec;

namespace {

Vector random_vector(std::mt19937& rng, std::size_t dim) {
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    Vector v(dim);
    for (auto& x : v) x = coord(rng);
    return v;
}

// The straightforward O(n·d) scan the index must agree with exactly.
std::vector<RetrievalHit> brute_force(const std::vector<ChunkRef>& refs,
                                      const std::vector<Vector>& vectors,
                                      const Vector& query, std::size_t k) {
    std::vector<RetrievalHit> hits;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        hits.push_back({refs[i], cosine_distance(vectors[i], query), 0});
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.ref.chunk_id < b.ref.chunk_id;
    });
    if (hits.size() > k) hits.resize(k);
    for (std::size_t i = 0; i < hits.size(); ++i) hits[i].rank = i;
    return hits;
}

}  // namespace

TEST_CASE("add validates dimensions and replaces by chunk_id") {
    VectorIndex index({2, Metric::cosine_distance, 10});
    index.add({"c1", "d1"}, {1.0, 0.0});
    CHECK_THROWS_AS(index.add({"c2", "d1"}, {1.0, 0.0, 0.0}),
                    DimensionMismatch);
    CHECK(index.size() == 1);

    index.add({"c1", "d1"}, {0.0, 1.0});  // replacement, not a second entry
    CHECK(index.size() == 1);
    auto hits = index.knn_query_vector({0.0, 1.0}, 1);
    CHECK(hits[0].distance == doctest::Approx(0.0));
}

TEST_CASE("knn_query_vector guards its inputs") {
    VectorIndex index({2, Metric::cosine_distance, 10});
    CHECK_THROWS_AS(index.knn_query_vector({1.0, 0.0}, 3), EmptyIndex);
    index.add({"c1", "d1"}, {1.0, 0.0});
    CHECK_THROWS_AS(index.knn_query_vector({1.0}, 3), DimensionMismatch);
}

TEST_CASE("knn results are ranked, capped at k and tie-broken by chunk_id") {
    VectorIndex index({2, Metric::cosine_distance, 10});
    index.add({"b", "d"}, {1.0, 0.0});
    index.add({"a", "d"}, {1.0, 0.0});
    index.add({"c", "d"}, {0.0, 1.0});

    auto hits = index.knn_query_vector({1.0, 0.0}, 10);
    REQUIRE(hits.size() == 3);
    CHECK(hits[0].ref.chunk_id == "a");  // tie with "b" broken lexically
    CHECK(hits[1].ref.chunk_id == "b");
    CHECK(hits[2].ref.chunk_id == "c");
    CHECK(hits[0].rank == 0);
    CHECK(hits[2].rank == 2);

    CHECK(index.knn_query_vector({1.0, 0.0}, 2).size() == 2);
}

TEST_CASE("knn agrees with the brute-force oracle on random corpora") {
    std::mt19937 rng(23);
    std::uniform_int_distribution<std::size_t> n_dist(1, 64);
    std::uniform_int_distribution<std::size_t> k_dist(1, 80);
    const std::size_t dim = 32;

    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = n_dist(rng);
        VectorIndex index({dim, Metric::cosine_distance, 10});
        std::vector<ChunkRef> refs;
        std::vector<Vector> vectors;
        for (std::size_t i = 0; i < n; ++i) {
            ChunkRef ref{"c" + std::to_string(i), "d0"};
            Vector v = random_vector(rng, dim);
            index.add(ref, v);
            refs.push_back(ref);
            vectors.push_back(std::move(v));
        }
        const Vector query = random_vector(rng, dim);
        const std::size_t k = k_dist(rng);

        auto got = index.knn_query_vector(query, k);
        auto expected = brute_force(refs, vectors, query, k);
        REQUIRE(got.size() == expected.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].ref == expected[i].ref);
            CHECK(got[i].rank == expected[i].rank);
            CHECK(got[i].distance == doctest::Approx(expected[i].distance));
        }
    }
}

TEST_CASE("index_chunks embeds a corpus and refuses an empty one") {
    corpus::Corpus corpus;
    HashedBagProvider provider(64);
    VectorIndex index({64, Metric::cosine_distance, 10});
    CHECK_THROWS_AS(index.index_chunks(corpus, provider), EmptyCorpus);

    corpus.add(corpus::ingest_document("Adults are small. They jump.", "a.txt"),
               {2000, 200});
    corpus.add(corpus::ingest_document("Funding for margins.", "b.txt"),
               {2000, 200});
    auto stats = index.index_chunks(corpus, provider);
    CHECK(stats.count == 2);
    CHECK(stats.dim == 64);

    auto hits = index.knn_query("adults jump", 5, provider);
    REQUIRE(hits.size() == 2);
    CHECK(corpus.find_chunk(hits[0].ref.chunk_id)->text ==
          "Adults are small. They jump.");
}

TEST_CASE("save and load round-trip the index exactly") {
    fixtures::TempDir dir;
    const auto path = dir.path() / "index.json";

    std::mt19937 rng(5);
    VectorIndex index({8, Metric::cosine_distance, 4});
    for (int i = 0; i < 12; ++i) {
        index.add({"c" + std::to_string(i), "d"}, random_vector(rng, 8));
    }
    index.save(path);

    auto loaded = VectorIndex::load(path);
    CHECK(loaded.size() == index.size());
    CHECK(loaded.config().dim == 8);
    CHECK(loaded.config().k_default == 4);

    const Vector query = random_vector(rng, 8);
    auto before = index.knn_query_vector(query, 12);
    auto after = loaded.knn_query_vector(query, 12);
    REQUIRE(before.size() == after.size());
    for (std::size_t i = 0; i < before.size(); ++i) {
        CHECK(before[i].ref == after[i].ref);
        CHECK(before[i].distance == doctest::Approx(after[i].distance));
    }
}

TEST_CASE("load rejects corruption, tampering and unknown versions") {
    fixtures::TempDir dir;
    const auto path = dir.path() / "index.json";
    VectorIndex index({2, Metric::cosine_distance, 4});
    index.add({"c0", "d"}, {1.0, 0.0});
    index.save(path);

    CHECK_THROWS_AS(VectorIndex::load(dir.path() / "missing.json"), IoError);

    write_file_atomic(path, "not json at all");
    CHECK_THROWS_AS(VectorIndex::load(path), CorruptIndex);

    index.save(path);
    auto doc = nlohmann::json::parse(read_file(path));

    auto tampered = doc;
    tampered["entries"][0]["vector"][0] = 0.25;  // checksum now stale
    write_file_atomic(path, tampered.dump(2) + "\n");
    CHECK_THROWS_AS(VectorIndex::load(path), CorruptIndex);

    auto future = doc;
    future["format_version"] = 999;
    write_file_atomic(path, future.dump(2) + "\n");
    CHECK_THROWS_AS(VectorIndex::load(path), VersionMismatch);

    auto gutted = doc;
    gutted.erase("entries");
    write_file_atomic(path, gutted.dump(2) + "\n");
    CHECK_THROWS_AS(VectorIndex::load(path), CorruptIndex);
}
