#pragma once

#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "finder/corpus.hpp"
#include "finder/ebr_filter.hpp"
#include "finder/embedding.hpp"
#include "finder/errors.hpp"
#include "finder/llm_gateway.hpp"
#include "finder/vector_index.hpp"

namespace finder::pipeline {

struct DescriptorSpan {
    std::string text;
    vec::ChunkRef chunk_ref;
    std::string evidence;      // the sentence containing the phrase
    std::string evidence_sent_id;
    bool unverified = false;   // phrase not found verbatim in any sentence
};

struct AttributeCandidate {
    std::string name;  // lowercased
    std::vector<DescriptorSpan> supporting;

    std::size_t frequency() const { return supporting.size(); }
};

struct CanonicalAttribute {
    std::string name;  // lowercased, unique case-insensitively
    std::vector<std::string> merged_from;
};

struct Entity {
    std::string name;
    std::string doc_id;
    std::vector<std::string> mention_sentences;  // sent_ids, document order
};

struct EntityRecord {
    std::string entity;
    std::string doc_id;
    // Ordered like the canonical attribute set; absent attributes omitted.
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<std::pair<std::string, std::vector<std::string>>> provenance;
};

struct RunCounters {
    std::size_t gateway_calls = 0;
    std::size_t retries = 0;
    std::size_t parse_failures = 0;
    std::size_t filter_probes = 0;
    std::size_t accepted_chunks = 0;
    std::size_t descriptors = 0;
    std::size_t entities = 0;
    std::size_t records = 0;
};

struct RunMetadata {
    std::string config_digest;
    std::string backend;
    std::chrono::system_clock::time_point started;
    std::chrono::system_clock::time_point finished;
    RunCounters counters;
    bool dedup_fallback = false;
    std::vector<std::string> notes;
    std::vector<llm::ParseFailure> failures;
};

struct ExtractionResult {
    std::vector<EntityRecord> records;
    std::vector<CanonicalAttribute> canonical_attributes;
    RunMetadata metadata;
};

/// Fatal mid-run failure. Carries whatever was extracted before the abort so
/// callers can persist partial artifacts and a failure report.
class RunAborted : public Error {
public:
    enum class Kind { gateway, parse };

    RunAborted(Kind kind, const std::string& message, ExtractionResult partial)
        : Error("RunAborted", message),
          kind_(kind),
          partial_(std::move(partial)) {}

    Kind kind() const { return kind_; }
    const ExtractionResult& partial() const { return partial_; }

private:
    Kind kind_;
    ExtractionResult partial_;
};

struct PipelineOptions {
    std::string retrieval_query = "appearance, identification";
    std::size_t k = 20;
    std::size_t max_probes = 3;
    std::size_t batch_size = 50;
    std::size_t max_in_flight = 4;
    bool stage4_use_ebr = false;
    bool per_document_attributes = false;
    std::string config_digest;
    std::ostream* probe_stream = nullptr;  // verbose probe log, JSONL
};

struct CanonicalizeOutcome {
    std::vector<CanonicalAttribute> attributes;
    bool used_fallback = false;  // dedup answer unparseable twice
};

/// One list round per chunk; each returned phrase is anchored to the first
/// sentence that contains it case-insensitively (chunk-overlapping sentences
/// first, then the whole document). Chunks whose answer stays unparseable
/// after the retry are skipped with a note.
std::vector<DescriptorSpan> stage1_extract_descriptors(
    const std::vector<corpus::Chunk>& chunks, const corpus::Corpus& corpus,
    llm::Gateway& gateway, std::size_t max_in_flight,
    std::vector<std::string>& notes);

/// Batched descriptor -> attribute-name mapping, aggregated case-insensitively
/// into candidates with frequencies. Descriptors the answer does not cover
/// are excluded and noted.
std::vector<AttributeCandidate> stage2_derive_attributes(
    const std::vector<DescriptorSpan>& descriptors, llm::Gateway& gateway,
    std::size_t batch_size, std::vector<std::string>& notes);

/// One dedup round grouping synonymous names; each group keeps its
/// highest-frequency name (ties: lexicographic, then first occurrence).
/// A double parse failure falls back to exact-name dedup.
CanonicalizeOutcome canonicalize_attributes(
    const std::vector<AttributeCandidate>& candidates, llm::Gateway& gateway,
    std::vector<std::string>& notes);

/// Per-chunk entity listing with the stage-1 evidence sentences as hints;
/// names deduplicated per document keeping the first casing; mentions are
/// case-insensitive matches over the document's sentences. Entities with no
/// mention sentence are dropped with a note.
std::vector<Entity> stage3_extract_entities(
    const std::vector<corpus::Chunk>& chunks,
    const std::vector<DescriptorSpan>& descriptors,
    const corpus::Corpus& corpus, llm::Gateway& gateway,
    std::size_t max_in_flight, std::vector<std::string>& notes);

/// Binds attribute values for one entity from its mention sentences. Unknown
/// keys are dropped and noted; a double parse failure yields a record with
/// empty attributes.
EntityRecord stage4_bind(const Entity& entity,
                         const std::vector<CanonicalAttribute>& canonical,
                         const std::vector<corpus::Sentence>& sentences,
                         llm::Gateway& gateway,
                         std::vector<std::string>& notes);

/// Full run: retrieve, filter, extract, canonicalize, bind.
ExtractionResult run_pipeline(const corpus::Corpus& corpus,
                              const vec::VectorIndex& index,
                              vec::EmbeddingProvider& provider,
                              llm::Gateway& gateway,
                              ebr::RelevanceOracle& oracle,
                              const PipelineOptions& options);

/// Writes one {doc_id}.json per corpus document plus run.json. File bytes
/// depend only on the result and corpus, never on wall-clock time.
void write_outputs(const ExtractionResult& result, const corpus::Corpus& corpus,
                   const std::filesystem::path& out_dir);

}  // namespace finder::pipeline
