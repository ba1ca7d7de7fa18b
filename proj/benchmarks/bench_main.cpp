#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "finder/corpus.hpp"
#include "finder/ebr_filter.hpp"
#include "finder/embedding.hpp"
#include "finder/llm_gateway.hpp"
#include "finder/vector_index.hpp"

using namespace finder;

namespace {

// A few paragraphs of plain prose, repeated until `chars` bytes are reached.
std::string synthetic_prose(std::size_t chars) {
    static const std::string paragraph =
        "Adults are metallic blue-black beetles around four millimetres long "
        "that jump when disturbed and feed on the foliage of young plants. "
        "Larvae are light brown with darker heads and develop inside leaf "
        "stalks through the colder months.\n\n";
    std::string out;
    out.reserve(chars + paragraph.size());
    while (out.size() < chars) out += paragraph;
    out.resize(chars);
    return out;
}

std::vector<vec::RetrievalHit> ranked_hits(std::size_t n) {
    std::vector<vec::RetrievalHit> hits(n);
    for (std::size_t i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "c%05zu", i);
        hits[i] = {{id, "d0"}, static_cast<double>(i) * 1e-4, i};
    }
    return hits;
}

void BM_hashed_embedding(benchmark::State& state) {
    vec::HashedBagProvider provider(256);
    const std::string text =
        synthetic_prose(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(provider.embed(text));
    }
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                            static_cast<int64_t>(text.size()));
}

void BM_knn_query(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const std::size_t dim = 256;
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);

    vec::VectorIndex index({dim, vec::Metric::cosine_distance, 20});
    for (std::size_t i = 0; i < n; ++i) {
        vec::Vector v(dim);
        for (auto& x : v) x = coord(rng);
        char id[16];
        std::snprintf(id, sizeof(id), "c%05zu", i);
        index.add({id, "d0"}, std::move(v));
    }
    vec::Vector query(dim);
    for (auto& x : query) x = coord(rng);

    for (auto _ : state) {
        benchmark::DoNotOptimize(index.knn_query_vector(query, 20));
    }
}

void BM_filter_binary_search(benchmark::State& state) {
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    const auto hits = ranked_hits(n);
    const std::size_t boundary = n / 3;
    for (auto _ : state) {
        auto outcome = ebr::ebr_filter(
            hits,
            [&](const vec::RetrievalHit& hit) { return hit.rank < boundary; },
            64);
        benchmark::DoNotOptimize(outcome);
    }
}

void BM_chunk_document(benchmark::State& state) {
    corpus::Document doc;
    doc.doc_id = "bench";
    doc.body = synthetic_prose(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(corpus::chunk_document(doc, {2000, 200}));
    }
    state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                            static_cast<int64_t>(doc.body.size()));
}

void BM_parse_list(benchmark::State& state) {
    std::string answer = "The descriptive phrases are:\n";
    for (int i = 0; i < 20; ++i) {
        answer += "- phrase number " + std::to_string(i) + "\n";
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(llm::parse_list(answer));
    }
}

}  // namespace

BENCHMARK(BM_hashed_embedding)->Arg(2000)->Arg(20000);
BENCHMARK(BM_knn_query)->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK(BM_filter_binary_search)->Arg(64)->Arg(1024)->Arg(16384);
BENCHMARK(BM_chunk_document)->Arg(20000)->Arg(200000);
BENCHMARK(BM_parse_list);

BENCHMARK_MAIN();
