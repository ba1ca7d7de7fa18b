#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "finder/text.hpp"

namespace finder::corpus {

using text::CharRange;

struct Document {
    std::string doc_id;       // stable: derived from source path + content digest
    std::string source_path;
    std::optional<std::string> title;
    std::string body;         // normalized, non-empty
};

struct Chunk {
    std::string chunk_id;
    std::string doc_id;
    std::string text;         // equals body.substr(char_range)
    CharRange char_range;
    std::size_t seq = 0;
};

struct Sentence {
    std::string sent_id;
    std::string doc_id;
    std::string text;
    CharRange char_range;
};

struct ChunkPolicy {
    std::size_t max_chunk_chars = 2000;
    std::size_t overlap_chars = 200;
};

/// Deterministic document id from the source path and a digest of the raw
/// bytes: `<stem>-<8 hex chars>`.
std::string make_doc_id(std::string_view source_path, std::string_view raw_bytes);

/// Decodes and normalizes one raw document. HTML input (by extension or an
/// obvious preamble) is reduced to text first.
/// Throws DecodeError on invalid UTF-8, EmptyDocument if nothing remains.
Document ingest_document(std::string_view raw_bytes, std::string_view source_path);

/// Splits a document body into covering, possibly overlapping chunks of at
/// most `max_chunk_chars` bytes. Cut points prefer paragraph boundaries,
/// then sentence boundaries, then hard cuts at UTF-8 boundaries.
/// Throws InvalidPolicy if the policy violates its preconditions.
std::vector<Chunk> chunk_document(const Document& doc, const ChunkPolicy& policy);

/// Rule-based sentence segmentation over the normalized body.
std::vector<Sentence> split_sentences(const Document& doc);

/// An ingested corpus with derived chunks and sentences, as consumed by the
/// pipeline. Lookups are by the opaque ids.
class Corpus {
public:
    void add(Document doc, const ChunkPolicy& policy);

    const std::vector<Document>& documents() const { return documents_; }
    const std::vector<Chunk>& chunks() const { return chunks_; }

    const Document* find_document(const std::string& doc_id) const;
    const Chunk* find_chunk(const std::string& chunk_id) const;
    const Sentence* find_sentence(const std::string& sent_id) const;
    const std::vector<Sentence>& sentences(const std::string& doc_id) const;

    bool empty() const { return documents_.empty(); }

private:
    std::vector<Document> documents_;
    std::vector<Chunk> chunks_;
    std::map<std::string, std::vector<Sentence>> sentences_by_doc_;
    std::unordered_map<std::string, std::size_t> doc_index_;
    std::unordered_map<std::string, std::size_t> chunk_index_;
    std::unordered_map<std::string, std::pair<std::string, std::size_t>> sentence_index_;
};

}  // namespace finder::corpus
