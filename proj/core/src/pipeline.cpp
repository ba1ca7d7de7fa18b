#include "finder/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <map>
#include <ostream>
#include <set>
#include <thread>

#include "json.hpp"

#include "finder/io.hpp"
#include "finder/text.hpp"

namespace finder::pipeline {

using text::contains_ci;
using text::lowercase_ascii;
using text::normalize_for_match;

namespace {

// Runs fn over items with at most max_in_flight worker threads. Results are
// merged by index, so concurrency never changes output order. If any call
// throws, every item still finishes or fails, then the lowest-index
// exception is rethrown (the same one sequential execution would surface).
template <typename In, typename Fn>
auto parallel_map(const std::vector<In>& items, std::size_t max_in_flight,
                  Fn&& fn) {
    using Out = std::invoke_result_t<Fn&, const In&>;
    std::vector<Out> results(items.size());
    if (items.empty()) return results;
    const std::size_t workers =
        std::min(std::max<std::size_t>(max_in_flight, 1), items.size());
    if (workers == 1) {
        for (std::size_t i = 0; i < items.size(); ++i) results[i] = fn(items[i]);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(items.size());
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= items.size()) return;
                try {
                    results[i] = fn(items[i]);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& error : errors) {
        if (error) std::rethrow_exception(error);
    }
    return results;
}

std::string_view trim_view(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

bool ranges_intersect(const corpus::CharRange& a, const corpus::CharRange& b) {
    return a.begin < b.end && b.begin < a.end;
}

// Attribute-value JSON from the model can be a string, a list, or a scalar;
// flatten to the value text the record stores.
std::string value_to_text(const nlohmann::ordered_json& value) {
    if (value.is_null()) return "";
    if (value.is_string()) return std::string(trim_view(value.get<std::string>()));
    if (value.is_array()) {
        std::string out;
        for (const auto& item : value) {
            const std::string part =
                item.is_string() ? item.get<std::string>() : item.dump();
            const auto trimmed = trim_view(part);
            if (trimmed.empty()) continue;
            if (!out.empty()) out += ", ";
            out += trimmed;
        }
        return out;
    }
    return value.dump();
}

}  // namespace

std::vector<DescriptorSpan> stage1_extract_descriptors(
    const std::vector<corpus::Chunk>& chunks, const corpus::Corpus& corpus,
    llm::Gateway& gateway, std::size_t max_in_flight,
    std::vector<std::string>& notes) {
    struct ChunkSpans {
        std::vector<DescriptorSpan> spans;
        std::vector<std::string> notes;
    };

    auto results = parallel_map(chunks, max_in_flight, [&](const corpus::Chunk& chunk) {
        ChunkSpans out;
        std::vector<std::string> phrases;
        try {
            phrases = gateway.ask_list(llm::TemplateId::stage1_descriptors,
                                       {{"context", chunk.text}});
        } catch (const GatewayError&) {
            throw;
        } catch (const Error& e) {
            out.notes.push_back("stage1: skipped chunk " + chunk.chunk_id + ": " +
                                e.what());
            return out;
        }
        const auto& sentences = corpus.sentences(chunk.doc_id);
        for (const auto& raw_phrase : phrases) {
            const std::string phrase{trim_view(raw_phrase)};
            if (phrase.empty()) continue;
            DescriptorSpan span;
            span.text = phrase;
            span.chunk_ref = {chunk.chunk_id, chunk.doc_id};
            // Prefer a sentence overlapping this chunk; fall back to the
            // whole document; flag the span when the phrase is a paraphrase
            // found nowhere.
            const corpus::Sentence* hit = nullptr;
            for (const auto& sentence : sentences) {
                if (ranges_intersect(sentence.char_range, chunk.char_range) &&
                    contains_ci(sentence.text, phrase)) {
                    hit = &sentence;
                    break;
                }
            }
            if (hit == nullptr) {
                for (const auto& sentence : sentences) {
                    if (contains_ci(sentence.text, phrase)) {
                        hit = &sentence;
                        break;
                    }
                }
            }
            if (hit != nullptr) {
                span.evidence = hit->text;
                span.evidence_sent_id = hit->sent_id;
            } else {
                span.unverified = true;
            }
            out.spans.push_back(std::move(span));
        }
        return out;
    });

    std::vector<DescriptorSpan> spans;
    for (auto& result : results) {
        std::move(result.spans.begin(), result.spans.end(),
                  std::back_inserter(spans));
        std::move(result.notes.begin(), result.notes.end(),
                  std::back_inserter(notes));
    }
    return spans;
}

std::vector<AttributeCandidate> stage2_derive_attributes(
    const std::vector<DescriptorSpan>& descriptors, llm::Gateway& gateway,
    std::size_t batch_size, std::vector<std::string>& notes) {
    std::vector<AttributeCandidate> candidates;
    std::map<std::string, std::size_t> by_name;
    if (descriptors.empty()) return candidates;
    batch_size = std::max<std::size_t>(batch_size, 1);

    for (std::size_t start = 0; start < descriptors.size(); start += batch_size) {
        const std::size_t stop = std::min(start + batch_size, descriptors.size());

        // One line per distinct phrase in this batch; the answer maps phrases,
        // so duplicates share the mapping.
        std::vector<std::string> batch_texts;
        std::string listing;
        for (std::size_t i = start; i < stop; ++i) {
            const std::string& text = descriptors[i].text;
            if (std::find(batch_texts.begin(), batch_texts.end(), text) !=
                batch_texts.end()) {
                continue;
            }
            batch_texts.push_back(text);
            listing += "- " + text + "\n";
        }

        nlohmann::ordered_json answer;
        try {
            answer = gateway.ask_json(llm::TemplateId::stage2_attributes,
                                      {{"descriptors", listing}});
        } catch (const GatewayError&) {
            throw;
        } catch (const Error& e) {
            notes.push_back("stage2: batch of " +
                            std::to_string(batch_texts.size()) +
                            " descriptors skipped: " + e.what());
            continue;
        }

        std::map<std::string, std::string> mapping;
        for (const auto& [key, value] : answer.items()) {
            const std::string attr = lowercase_ascii(std::string(trim_view(
                value.is_string() ? value.get<std::string>() : value.dump())));
            if (attr.empty()) continue;
            mapping.emplace(normalize_for_match(key), attr);
        }

        for (std::size_t i = start; i < stop; ++i) {
            const auto& span = descriptors[i];
            auto found = mapping.find(normalize_for_match(span.text));
            if (found == mapping.end()) {
                notes.push_back("stage2: descriptor not mapped: \"" + span.text +
                                "\"");
                continue;
            }
            const std::string& name = found->second;
            auto [it, inserted] = by_name.emplace(name, candidates.size());
            if (inserted) candidates.push_back({name, {}});
            candidates[it->second].supporting.push_back(span);
        }
    }
    return candidates;
}

CanonicalizeOutcome canonicalize_attributes(
    const std::vector<AttributeCandidate>& candidates, llm::Gateway& gateway,
    std::vector<std::string>& notes) {
    CanonicalizeOutcome outcome;
    if (candidates.empty()) return outcome;

    std::map<std::string, std::size_t> known;
    std::string listing;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        known.emplace(normalize_for_match(candidates[i].name), i);
        listing += candidates[i].name + ": " +
                   std::to_string(candidates[i].frequency()) + "\n";
    }

    std::vector<std::vector<std::size_t>> groups;
    bool have_groups = false;
    try {
        nlohmann::ordered_json answer = gateway.ask_json(
            llm::TemplateId::attr_dedup, {{"attributes", listing}});
        if (answer.contains("groups") && answer["groups"].is_array()) {
            std::set<std::size_t> claimed;
            for (const auto& group : answer["groups"]) {
                if (!group.is_array()) continue;
                std::vector<std::size_t> members;
                for (const auto& name : group) {
                    if (!name.is_string()) continue;
                    auto found = known.find(
                        normalize_for_match(name.get<std::string>()));
                    if (found == known.end()) continue;  // invented name
                    if (!claimed.insert(found->second).second) continue;
                    members.push_back(found->second);
                }
                if (!members.empty()) groups.push_back(std::move(members));
            }
            // Names the answer never placed stand alone.
            for (std::size_t i = 0; i < candidates.size(); ++i) {
                if (!claimed.contains(i)) groups.push_back({i});
            }
            have_groups = true;
        } else {
            notes.push_back("attr dedup: answer had no \"groups\" array");
        }
    } catch (const GatewayError&) {
        throw;
    } catch (const Error& e) {
        notes.push_back(std::string("attr dedup: unparseable answer: ") +
                        e.what());
    }

    if (!have_groups) {
        // Candidate names are already unique case-insensitively, so the
        // fallback keeps each as its own canonical attribute.
        outcome.used_fallback = true;
        for (const auto& candidate : candidates) {
            outcome.attributes.push_back({candidate.name, {candidate.name}});
        }
        return outcome;
    }

    // Highest frequency wins a group; ties break lexicographically, then by
    // first occurrence in the candidate list.
    for (auto& group : groups) {
        std::size_t winner = group.front();
        for (std::size_t index : group) {
            const auto& cand = candidates[index];
            const auto& best = candidates[winner];
            if (cand.frequency() != best.frequency()) {
                if (cand.frequency() > best.frequency()) winner = index;
            } else if (cand.name != best.name) {
                if (cand.name < best.name) winner = index;
            } else if (index < winner) {
                winner = index;
            }
        }
        CanonicalAttribute canonical;
        canonical.name = candidates[winner].name;
        for (std::size_t index : group) {
            canonical.merged_from.push_back(candidates[index].name);
        }
        // Remember the winner index for ordering below.
        outcome.attributes.push_back(std::move(canonical));
        group.front() = winner;
    }

    // Present canonical attributes in first-occurrence order of their winners.
    std::vector<std::size_t> order(groups.size());
    for (std::size_t g = 0; g < groups.size(); ++g) order[g] = g;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return groups[a].front() < groups[b].front();
    });
    std::vector<CanonicalAttribute> sorted;
    sorted.reserve(outcome.attributes.size());
    for (std::size_t g : order) sorted.push_back(std::move(outcome.attributes[g]));
    outcome.attributes = std::move(sorted);
    return outcome;
}

std::vector<Entity> stage3_extract_entities(
    const std::vector<corpus::Chunk>& chunks,
    const std::vector<DescriptorSpan>& descriptors,
    const corpus::Corpus& corpus, llm::Gateway& gateway,
    std::size_t max_in_flight, std::vector<std::string>& notes) {
    struct ChunkEntities {
        std::vector<std::string> names;
        std::vector<std::string> notes;
    };

    auto results = parallel_map(chunks, max_in_flight, [&](const corpus::Chunk& chunk) {
        ChunkEntities out;
        // The evidence sentences found in stage 1 tell the model which parts
        // of the chunk carry descriptions.
        std::string hints;
        std::set<std::string> seen_sentences;
        for (const auto& span : descriptors) {
            if (span.chunk_ref.chunk_id != chunk.chunk_id) continue;
            if (span.evidence.empty()) continue;
            if (!seen_sentences.insert(span.evidence_sent_id).second) continue;
            hints += span.evidence + "\n";
        }
        if (hints.empty()) hints = "(none)";
        try {
            out.names = gateway.ask_list(llm::TemplateId::stage3_entities,
                                         {{"context", chunk.text},
                                          {"described_hints", hints}});
        } catch (const GatewayError&) {
            throw;
        } catch (const Error& e) {
            out.notes.push_back("stage3: skipped chunk " + chunk.chunk_id + ": " +
                                e.what());
        }
        return out;
    });

    std::vector<Entity> entities;
    std::set<std::pair<std::string, std::string>> seen;  // (doc_id, lower name)
    for (std::size_t i = 0; i < chunks.size(); ++i) {
        std::move(results[i].notes.begin(), results[i].notes.end(),
                  std::back_inserter(notes));
        for (const auto& raw_name : results[i].names) {
            const std::string name{trim_view(raw_name)};
            if (name.empty()) continue;
            const std::string& doc_id = chunks[i].doc_id;
            if (!seen.insert({doc_id, lowercase_ascii(name)}).second) continue;

            Entity entity{name, doc_id, {}};
            for (const auto& sentence : corpus.sentences(doc_id)) {
                if (contains_ci(sentence.text, name)) {
                    entity.mention_sentences.push_back(sentence.sent_id);
                }
            }
            if (entity.mention_sentences.empty()) {
                notes.push_back("stage3: entity \"" + name + "\" in " + doc_id +
                                " has no mention sentence, dropped");
                continue;
            }
            entities.push_back(std::move(entity));
        }
    }
    return entities;
}

EntityRecord stage4_bind(const Entity& entity,
                         const std::vector<CanonicalAttribute>& canonical,
                         const std::vector<corpus::Sentence>& sentences,
                         llm::Gateway& gateway,
                         std::vector<std::string>& notes) {
    EntityRecord record;
    record.entity = entity.name;
    record.doc_id = entity.doc_id;

    std::string attr_names;
    for (const auto& attr : canonical) {
        if (!attr_names.empty()) attr_names += ", ";
        attr_names += attr.name;
    }
    std::string sentence_text;
    std::vector<std::string> submitted_ids;
    for (const auto& sentence : sentences) {
        sentence_text += sentence.text + "\n";
        submitted_ids.push_back(sentence.sent_id);
    }

    nlohmann::ordered_json answer;
    try {
        answer = gateway.ask_json(llm::TemplateId::stage4_bind,
                                  {{"entity", entity.name},
                                   {"attributes", attr_names},
                                   {"sentences", sentence_text}});
    } catch (const GatewayError&) {
        throw;
    } catch (const Error& e) {
        notes.push_back("stage4: entity \"" + entity.name +
                        "\" answer unparseable, record left empty: " + e.what());
        return record;
    }

    // Answer keys match canonical names case-insensitively; values keep the
    // model's wording. Unknown keys are dropped but remembered for audit.
    std::map<std::string, std::pair<std::string, bool>> by_norm;  // norm -> (value, used)
    for (const auto& [key, value] : answer.items()) {
        by_norm.emplace(normalize_for_match(key),
                        std::make_pair(value_to_text(value), false));
    }
    for (const auto& attr : canonical) {
        auto found = by_norm.find(normalize_for_match(attr.name));
        if (found == by_norm.end()) continue;
        found->second.second = true;
        const std::string& value = found->second.first;
        if (value.empty()) continue;
        record.attributes.emplace_back(attr.name, value);
        record.provenance.emplace_back(attr.name, submitted_ids);
    }
    for (const auto& [key, value] : answer.items()) {
        const auto& slot = by_norm.at(normalize_for_match(key));
        if (!slot.second) {
            notes.push_back("stage4: dropped unknown key \"" + key +
                            "\" for entity \"" + entity.name + "\"");
        }
    }
    return record;
}

namespace {

RunAborted::Kind classify_cause(const std::exception_ptr& cause) {
    if (!cause) return RunAborted::Kind::parse;
    try {
        std::rethrow_exception(cause);
    } catch (const GatewayError&) {
        return RunAborted::Kind::gateway;
    } catch (...) {
        return RunAborted::Kind::parse;
    }
}

}  // namespace

ExtractionResult run_pipeline(const corpus::Corpus& corpus,
                              const vec::VectorIndex& index,
                              vec::EmbeddingProvider& provider,
                              llm::Gateway& gateway,
                              ebr::RelevanceOracle& oracle,
                              const PipelineOptions& options) {
    ExtractionResult result;
    RunMetadata& meta = result.metadata;
    meta.config_digest = options.config_digest;
    meta.backend = gateway.backend_name();
    meta.started = std::chrono::system_clock::now();

    auto finalize = [&] {
        const auto counters = gateway.counters();
        meta.counters.gateway_calls = counters.calls;
        meta.counters.retries = counters.retries;
        meta.counters.parse_failures = counters.parse_failures;
        meta.failures = gateway.failures();
        std::sort(meta.failures.begin(), meta.failures.end(),
                  [](const llm::ParseFailure& a, const llm::ParseFailure& b) {
                      if (a.id != b.id) return a.id < b.id;
                      return a.raw_text < b.raw_text;
                  });
        meta.finished = std::chrono::system_clock::now();
    };

    auto resolve_chunk = [&](const vec::ChunkRef& ref) {
        const corpus::Chunk* chunk = corpus.find_chunk(ref.chunk_id);
        if (chunk == nullptr) {
            throw CorruptIndex("index references unknown chunk " + ref.chunk_id);
        }
        return chunk->text;
    };

    try {
        const auto hits =
            index.knn_query(options.retrieval_query, options.k, provider);
        const auto outcome =
            ebr::ebr_filter(hits, resolve_chunk, oracle, options.max_probes);
        meta.counters.filter_probes = outcome.probes_used;
        meta.counters.accepted_chunks = outcome.boundary;
        if (options.probe_stream != nullptr) {
            for (const auto& probe : outcome.probe_log) {
                nlohmann::ordered_json line = {{"rank", probe.rank},
                                               {"distance", probe.distance},
                                               {"verdict", probe.relevant},
                                               {"oracle_kind", oracle.kind()}};
                *options.probe_stream << line.dump() << "\n";
            }
        }
        if (outcome.accepted.empty()) {
            meta.notes.push_back("filter accepted no chunks");
            finalize();
            return result;
        }

        std::vector<corpus::Chunk> chunks;
        chunks.reserve(outcome.accepted.size());
        for (const auto& hit : outcome.accepted) {
            const corpus::Chunk* chunk = corpus.find_chunk(hit.ref.chunk_id);
            if (chunk == nullptr) {
                throw CorruptIndex("index references unknown chunk " +
                                   hit.ref.chunk_id);
            }
            chunks.push_back(*chunk);
        }
        std::sort(chunks.begin(), chunks.end(),
                  [](const corpus::Chunk& a, const corpus::Chunk& b) {
                      if (a.doc_id != b.doc_id) return a.doc_id < b.doc_id;
                      return a.seq < b.seq;
                  });

        const auto spans = stage1_extract_descriptors(
            chunks, corpus, gateway, options.max_in_flight, meta.notes);
        meta.counters.descriptors = spans.size();

        std::vector<CanonicalAttribute> canonical;
        std::map<std::string, std::vector<CanonicalAttribute>> canonical_by_doc;
        if (!spans.empty()) {
            const auto candidates = stage2_derive_attributes(
                spans, gateway, options.batch_size, meta.notes);
            if (options.per_document_attributes) {
                // Canonical set per document: restrict each candidate's
                // support to the document, drop empties, dedup per document.
                std::vector<std::string> doc_order;
                for (const auto& chunk : chunks) {
                    if (doc_order.empty() || doc_order.back() != chunk.doc_id) {
                        doc_order.push_back(chunk.doc_id);
                    }
                }
                for (const auto& doc_id : doc_order) {
                    std::vector<AttributeCandidate> local;
                    for (const auto& candidate : candidates) {
                        AttributeCandidate scoped{candidate.name, {}};
                        for (const auto& span : candidate.supporting) {
                            if (span.chunk_ref.doc_id == doc_id) {
                                scoped.supporting.push_back(span);
                            }
                        }
                        if (!scoped.supporting.empty()) {
                            local.push_back(std::move(scoped));
                        }
                    }
                    auto scoped_outcome =
                        canonicalize_attributes(local, gateway, meta.notes);
                    meta.dedup_fallback |= scoped_outcome.used_fallback;
                    for (const auto& attr : scoped_outcome.attributes) {
                        if (std::none_of(canonical.begin(), canonical.end(),
                                         [&](const CanonicalAttribute& c) {
                                             return c.name == attr.name;
                                         })) {
                            canonical.push_back(attr);
                        }
                    }
                    canonical_by_doc[doc_id] = std::move(scoped_outcome.attributes);
                }
            } else {
                auto dedup_outcome =
                    canonicalize_attributes(candidates, gateway, meta.notes);
                meta.dedup_fallback = dedup_outcome.used_fallback;
                canonical = std::move(dedup_outcome.attributes);
            }
        }

        const auto entities = stage3_extract_entities(
            chunks, spans, corpus, gateway, options.max_in_flight, meta.notes);
        meta.counters.entities = entities.size();

        struct BoundRecord {
            EntityRecord record;
            std::vector<std::string> notes;
            std::size_t extra_probes = 0;
        };
        static const std::vector<CanonicalAttribute> kNoAttributes;
        auto bound = parallel_map(entities, options.max_in_flight, [&](const Entity& entity) {
            BoundRecord out;
            const auto doc_canon = canonical_by_doc.find(entity.doc_id);
            const auto& canon =
                options.per_document_attributes
                    ? (doc_canon != canonical_by_doc.end() ? doc_canon->second
                                                           : kNoAttributes)
                    : canonical;
            if (canon.empty()) {
                out.record.entity = entity.name;
                out.record.doc_id = entity.doc_id;
                out.notes.push_back("stage4: no canonical attributes; record for \"" +
                                    entity.name + "\" left empty");
                return out;
            }

            std::vector<corpus::Sentence> sentences;
            for (const auto& sentence : corpus.sentences(entity.doc_id)) {
                if (std::find(entity.mention_sentences.begin(),
                              entity.mention_sentences.end(),
                              sentence.sent_id) != entity.mention_sentences.end()) {
                    sentences.push_back(sentence);
                }
            }

            if (options.stage4_use_ebr && sentences.size() > 1) {
                // Optional second filter pass: rank this entity's sentences
                // against "{entity} {attribute names}" and keep the accepted
                // prefix. An empty prefix keeps everything, because losing
                // all evidence is worse than extra sentences.
                std::string query = entity.name;
                for (const auto& attr : canon) query += " " + attr.name;
                const auto query_vec = provider.embed(query);
                std::vector<vec::RetrievalHit> sentence_hits;
                std::map<std::string, std::string> text_by_id;
                for (const auto& sentence : sentences) {
                    text_by_id[sentence.sent_id] = sentence.text;
                    sentence_hits.push_back(
                        {{sentence.sent_id, entity.doc_id},
                         vec::cosine_distance(query_vec,
                                              provider.embed(sentence.text)),
                         0});
                }
                std::sort(sentence_hits.begin(), sentence_hits.end(),
                          [](const vec::RetrievalHit& a, const vec::RetrievalHit& b) {
                              if (a.distance != b.distance) {
                                  return a.distance < b.distance;
                              }
                              return a.ref.chunk_id < b.ref.chunk_id;
                          });
                for (std::size_t i = 0; i < sentence_hits.size(); ++i) {
                    sentence_hits[i].rank = i;
                }
                const auto filtered = ebr::ebr_filter(
                    sentence_hits,
                    [&](const vec::ChunkRef& ref) { return text_by_id.at(ref.chunk_id); },
                    oracle, options.max_probes);
                out.extra_probes = filtered.probes_used;
                if (filtered.accepted.empty()) {
                    out.notes.push_back("stage4: sentence filter for \"" +
                                        entity.name +
                                        "\" accepted nothing; keeping all");
                } else {
                    std::set<std::string> keep;
                    for (const auto& hit : filtered.accepted) {
                        keep.insert(hit.ref.chunk_id);
                    }
                    std::vector<corpus::Sentence> kept;
                    for (auto& sentence : sentences) {
                        if (keep.contains(sentence.sent_id)) {
                            kept.push_back(std::move(sentence));
                        }
                    }
                    sentences = std::move(kept);
                }
            }

            out.record =
                stage4_bind(entity, canon, sentences, gateway, out.notes);
            return out;
        });

        for (auto& item : bound) {
            meta.counters.filter_probes += item.extra_probes;
            std::move(item.notes.begin(), item.notes.end(),
                      std::back_inserter(meta.notes));
            result.records.push_back(std::move(item.record));
        }
        meta.counters.records = result.records.size();
        result.canonical_attributes = std::move(canonical);
        finalize();
        return result;
    } catch (const ebr::OracleError& e) {
        meta.counters.filter_probes += e.probe_log().size();
        finalize();
        throw RunAborted(classify_cause(e.cause()), e.what(), std::move(result));
    } catch (const GatewayError& e) {
        finalize();
        throw RunAborted(RunAborted::Kind::gateway, e.what(), std::move(result));
    }
}

void write_outputs(const ExtractionResult& result, const corpus::Corpus& corpus,
                   const std::filesystem::path& out_dir) {
    for (const auto& doc : corpus.documents()) {
        nlohmann::ordered_json file;
        file["doc_id"] = doc.doc_id;
        file["config_digest"] = result.metadata.config_digest;
        auto entities = nlohmann::ordered_json::array();
        for (const auto& record : result.records) {
            if (record.doc_id != doc.doc_id) continue;
            nlohmann::ordered_json entity;
            entity["name"] = record.entity;
            auto attributes = nlohmann::ordered_json::object();
            for (const auto& [name, value] : record.attributes) {
                attributes[name] = value;
            }
            entity["attributes"] = std::move(attributes);
            auto provenance = nlohmann::ordered_json::object();
            for (const auto& [name, sent_ids] : record.provenance) {
                provenance[name] = sent_ids;
            }
            entity["provenance"] = std::move(provenance);
            entities.push_back(std::move(entity));
        }
        file["entities"] = std::move(entities);
        write_file_atomic(out_dir / (doc.doc_id + ".json"), file.dump(2) + "\n");
    }

    const RunMetadata& meta = result.metadata;
    nlohmann::ordered_json run;
    run["config_digest"] = meta.config_digest;
    run["backend"] = meta.backend;
    run["counters"] = {{"gateway_calls", meta.counters.gateway_calls},
                       {"retries", meta.counters.retries},
                       {"parse_failures", meta.counters.parse_failures},
                       {"filter_probes", meta.counters.filter_probes},
                       {"accepted_chunks", meta.counters.accepted_chunks},
                       {"descriptors", meta.counters.descriptors},
                       {"entities", meta.counters.entities},
                       {"records", meta.counters.records}};
    run["dedup_fallback"] = meta.dedup_fallback;
    run["notes"] = meta.notes;
    auto failures = nlohmann::ordered_json::array();
    for (const auto& failure : meta.failures) {
        failures.push_back({{"template_id", llm::to_string(failure.id)},
                            {"raw_text", failure.raw_text}});
    }
    run["failures"] = std::move(failures);
    write_file_atomic(out_dir / "run.json", run.dump(2) + "\n");
}

}  // namespace finder::pipeline
