#include "finder/corpus.hpp"

#include <algorithm>
#include <cstdio>

#include "finder/errors.hpp"
#include "finder/hashing.hpp"

namespace finder::corpus {

namespace {

std::string path_stem(std::string_view path) {
    std::size_t slash = path.find_last_of("/\\");
    std::string_view name = (slash == std::string_view::npos) ? path : path.substr(slash + 1);
    std::size_t dot = name.find_last_of('.');
    if (dot != std::string_view::npos && dot > 0) name = name.substr(0, dot);
    std::string stem;
    for (char c : name) {
        if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_') {
            stem.push_back(c);
        } else if (c >= 'A' && c <= 'Z') {
            stem.push_back(static_cast<char>(c - 'A' + 'a'));
        } else {
            stem.push_back('-');
        }
    }
    if (stem.empty()) stem = "doc";
    return stem;
}

std::optional<std::string> extract_title(std::string_view raw, std::string_view source_path,
                                         bool html) {
    if (html) {
        std::string lower = text::lowercase_ascii(raw);
        std::size_t open = lower.find("<title");
        if (open != std::string::npos) {
            std::size_t gt = lower.find('>', open);
            std::size_t close = lower.find("</title", open);
            if (gt != std::string::npos && close != std::string::npos && gt + 1 < close) {
                std::string title = text::collapse_whitespace(raw.substr(gt + 1, close - gt - 1));
                if (!title.empty()) return title;
            }
        }
        return std::nullopt;
    }
    auto ends_with = [](std::string_view s, std::string_view suffix) {
        return s.size() >= suffix.size() &&
               text::lowercase_ascii(s.substr(s.size() - suffix.size())) == suffix;
    };
    if (ends_with(source_path, ".md")) {
        std::size_t pos = 0;
        while (pos < raw.size()) {
            std::size_t nl = raw.find('\n', pos);
            std::string_view line = raw.substr(pos, nl == std::string_view::npos ? raw.size() - pos
                                                                                 : nl - pos);
            std::string trimmed = text::collapse_whitespace(line);
            if (!trimmed.empty()) {
                if (trimmed.rfind("# ", 0) == 0) {
                    std::string title = text::collapse_whitespace(trimmed.substr(2));
                    if (!title.empty()) return title;
                }
                return std::nullopt;  // first non-blank line is not a heading
            }
            if (nl == std::string_view::npos) break;
            pos = nl + 1;
        }
    }
    return std::nullopt;
}

}  // namespace

std::string make_doc_id(std::string_view source_path, std::string_view raw_bytes) {
    std::string content_digest = hashing::sha256_hex(raw_bytes);
    std::string combined = hashing::sha256_hex(std::string(source_path) + ":" + content_digest);
    return path_stem(source_path) + "-" + combined.substr(0, 8);
}

Document ingest_document(std::string_view raw_bytes, std::string_view source_path) {
    if (!text::utf8_valid(raw_bytes)) {
        throw DecodeError("not valid UTF-8: " + std::string(source_path));
    }
    bool html = text::looks_like_html(raw_bytes, source_path);
    std::string content = html ? text::strip_html(raw_bytes) : std::string(raw_bytes);
    std::string body = text::normalize_body(content);
    if (body.empty()) {
        throw EmptyDocument("document empty after normalization: " + std::string(source_path));
    }
    Document doc;
    doc.doc_id = make_doc_id(source_path, raw_bytes);
    doc.source_path = std::string(source_path);
    doc.title = extract_title(raw_bytes, source_path, html);
    doc.body = std::move(body);
    return doc;
}

std::vector<Chunk> chunk_document(const Document& doc, const ChunkPolicy& policy) {
    if (policy.max_chunk_chars < 200 || policy.overlap_chars >= policy.max_chunk_chars) {
        throw InvalidPolicy("require max_chunk_chars >= 200 and 0 <= overlap < max");
    }
    const std::string& body = doc.body;
    const std::size_t n = body.size();

    // Candidate cut points: paragraph starts (position after each '\n') and
    // sentence starts. Both lists are ascending.
    std::vector<std::size_t> para_starts;
    for (std::size_t i = 0; i < n; ++i) {
        if (body[i] == '\n' && i + 1 < n) para_starts.push_back(i + 1);
    }
    std::vector<std::size_t> sent_starts = text::sentence_starts(body);

    auto last_at_most = [](const std::vector<std::size_t>& xs, std::size_t lo,
                           std::size_t hi) -> std::size_t {
        // largest x with lo < x <= hi, or 0 if none
        auto it = std::upper_bound(xs.begin(), xs.end(), hi);
        if (it == xs.begin()) return 0;
        --it;
        return (*it > lo) ? *it : 0;
    };

    std::vector<Chunk> chunks;
    std::size_t pos = 0;
    std::size_t seq = 0;
    while (true) {
        if (n - pos <= policy.max_chunk_chars) {
            Chunk last;
            last.char_range = {pos, n};
            last.seq = seq;
            chunks.push_back(std::move(last));
            break;
        }
        std::size_t limit = pos + policy.max_chunk_chars;
        std::size_t cut = last_at_most(para_starts, pos, limit);
        if (cut == 0) cut = last_at_most(sent_starts, pos, limit);
        if (cut == 0) {
            cut = text::utf8_floor(body, limit);
            if (cut <= pos) cut = text::utf8_ceil(body, pos + 1);  // forced progress
        }
        Chunk c;
        c.char_range = {pos, cut};
        c.seq = seq;
        chunks.push_back(std::move(c));
        ++seq;

        std::size_t next = (cut > policy.overlap_chars) ? cut - policy.overlap_chars : 0;
        next = text::utf8_ceil(body, std::max(next, pos + 1));
        pos = next;
    }

    for (auto& c : chunks) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "c%04zu", c.seq);
        c.chunk_id = doc.doc_id + "-" + buf;
        c.doc_id = doc.doc_id;
        c.text = body.substr(c.char_range.begin, c.char_range.end - c.char_range.begin);
    }
    return chunks;
}

std::vector<Sentence> split_sentences(const Document& doc) {
    std::vector<Sentence> sentences;
    std::size_t i = 0;
    for (const auto& range : text::sentence_ranges(doc.body)) {
        Sentence s;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "s%04zu", i);
        s.sent_id = doc.doc_id + "-" + buf;
        s.doc_id = doc.doc_id;
        s.char_range = range;
        s.text = doc.body.substr(range.begin, range.end - range.begin);
        sentences.push_back(std::move(s));
        ++i;
    }
    return sentences;
}

void Corpus::add(Document doc, const ChunkPolicy& policy) {
    const std::string doc_id = doc.doc_id;
    auto doc_chunks = chunk_document(doc, policy);
    auto doc_sentences = split_sentences(doc);

    doc_index_[doc_id] = documents_.size();
    documents_.push_back(std::move(doc));

    for (auto& c : doc_chunks) {
        chunk_index_[c.chunk_id] = chunks_.size();
        chunks_.push_back(std::move(c));
    }
    auto& sentence_slot = sentences_by_doc_[doc_id];
    sentence_slot = std::move(doc_sentences);
    for (std::size_t i = 0; i < sentence_slot.size(); ++i) {
        sentence_index_[sentence_slot[i].sent_id] = {doc_id, i};
    }
}

const Document* Corpus::find_document(const std::string& doc_id) const {
    auto it = doc_index_.find(doc_id);
    return it == doc_index_.end() ? nullptr : &documents_[it->second];
}

const Chunk* Corpus::find_chunk(const std::string& chunk_id) const {
    auto it = chunk_index_.find(chunk_id);
    return it == chunk_index_.end() ? nullptr : &chunks_[it->second];
}

const Sentence* Corpus::find_sentence(const std::string& sent_id) const {
    auto it = sentence_index_.find(sent_id);
    if (it == sentence_index_.end()) return nullptr;
    return &sentences_by_doc_.at(it->second.first)[it->second.second];
}

const std::vector<Sentence>& Corpus::sentences(const std::string& doc_id) const {
    static const std::vector<Sentence> kEmpty;
    auto it = sentences_by_doc_.find(doc_id);
    return it == sentences_by_doc_.end() ? kEmpty : it->second;
}

}  // namespace finder::corpus
