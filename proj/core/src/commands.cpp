#include "finder/commands.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "json.hpp"

#include "finder/ebr_filter.hpp"
#include "finder/errors.hpp"
#include "finder/evaluation.hpp"
#include "finder/hashing.hpp"
#include "finder/io.hpp"
#include "finder/llm_gateway.hpp"
#include "finder/pipeline.hpp"
#include "finder/text.hpp"
#include "finder/vector_index.hpp"

namespace finder::cli {

using hashing::sha256_hex;

namespace fs = std::filesystem;

namespace {

struct ManifestEntry {
    std::string doc_id;
    std::string sha256;
};

fs::path corpus_dir(const RunConfig& config) {
    return fs::path(config.output_dir) / "corpus";
}

fs::path manifest_path(const RunConfig& config) {
    return corpus_dir(config) / "manifest.jsonl";
}

fs::path doc_path(const RunConfig& config, const std::string& doc_id) {
    return corpus_dir(config) / "docs" / (doc_id + ".json");
}

fs::path index_path(const RunConfig& config) {
    return fs::path(config.output_dir) / "index.json";
}

fs::path records_dir(const RunConfig& config) {
    return fs::path(config.output_dir) / "records";
}

std::map<std::string, ManifestEntry> load_manifest(const RunConfig& config) {
    std::map<std::string, ManifestEntry> manifest;
    if (!fs::exists(manifest_path(config))) return manifest;
    std::istringstream lines(read_file(manifest_path(config)));
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        nlohmann::json row =
            nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (row.is_discarded() || !row.is_object()) {
            throw IoError("corrupt corpus manifest: " +
                          manifest_path(config).string());
        }
        manifest[row.at("source_path").get<std::string>()] = {
            row.at("doc_id").get<std::string>(),
            row.at("sha256").get<std::string>()};
    }
    return manifest;
}

void save_manifest(const RunConfig& config,
                   const std::map<std::string, ManifestEntry>& manifest) {
    std::string out;
    for (const auto& [source_path, entry] : manifest) {
        nlohmann::ordered_json row = {{"doc_id", entry.doc_id},
                                      {"source_path", source_path},
                                      {"sha256", entry.sha256}};
        out += row.dump();
        out += '\n';
    }
    write_file_atomic(manifest_path(config), out);
}

// Expands files and directory trees into a sorted list of candidate files.
std::vector<std::string> collect_files(const std::vector<std::string>& paths,
                                       std::ostream& err) {
    std::vector<std::string> files;
    for (const auto& path : paths) {
        std::error_code ec;
        if (fs::is_directory(path, ec)) {
            for (auto it = fs::recursive_directory_iterator(
                     path, fs::directory_options::skip_permission_denied, ec);
                 it != fs::recursive_directory_iterator(); ++it) {
                if (!it->is_regular_file(ec)) continue;
                const std::string name = it->path().filename().string();
                if (name.empty() || name.front() == '.') continue;
                if (name.size() > 8 &&
                    name.substr(name.size() - 8) == ".partial") {
                    continue;
                }
                files.push_back(it->path().string());
            }
        } else if (fs::exists(path, ec)) {
            files.push_back(path);
        } else {
            err << "warning: path does not exist: " << path << "\n";
        }
    }
    std::sort(files.begin(), files.end());
    files.erase(std::unique(files.begin(), files.end()), files.end());
    return files;
}

std::unique_ptr<vec::EmbeddingProvider> make_embedding_provider(
    const RunConfig& config) {
    if (config.embedding.provider == "remote") {
        vec::RemoteEmbeddingConfig remote;
        remote.endpoint = config.embedding.endpoint;
        remote.model = config.embedding.model;
        remote.api_key_env = config.embedding.api_key_env;
        remote.dim = config.dim;
        remote.timeout_s = config.embedding.timeout_s;
        remote.retries = config.embedding.retries;
        return std::make_unique<vec::RemoteEmbeddingProvider>(std::move(remote));
    }
    return std::make_unique<vec::HashedBagProvider>(config.dim);
}

std::shared_ptr<llm::Backend> make_backend(const RunConfig& config) {
    if (config.gateway.backend == "replay") {
        return std::make_shared<llm::ReplayBackend>(
            llm::ReplayBackend::from_file(config.gateway.replay_cache));
    }
    llm::RemoteBackendConfig remote;
    remote.endpoint = config.gateway.endpoint;
    remote.model = config.gateway.model;
    remote.api_key_env = config.gateway.api_key_env;
    remote.temperature = config.gateway.temperature;
    remote.max_tokens = config.gateway.max_tokens;
    remote.timeout_s = config.gateway.timeout_s;
    remote.retries = config.gateway.retries;
    return std::make_shared<llm::RemoteBackend>(std::move(remote));
}

std::unique_ptr<ebr::RelevanceOracle> make_oracle(const RunConfig& config,
                                                  llm::Gateway& gateway,
                                                  CommandStreams& streams) {
    if (config.oracle.kind == "scripted") {
        auto needles = config.oracle.scripted_contains;
        return std::make_unique<ebr::ScriptedTextOracle>(
            [needles](std::string_view probed) {
                return std::any_of(needles.begin(), needles.end(),
                                   [&](const std::string& needle) {
                                       return text::contains_ci(probed, needle);
                                   });
            });
    }
    if (config.oracle.kind == "interactive_prompt") {
        return std::make_unique<ebr::InteractiveOracle>(streams.in, streams.out);
    }
    return std::make_unique<ebr::LlmJudgeOracle>(gateway,
                                                 config.oracle.query_intent);
}

vec::VectorIndex load_or_build_index(const RunConfig& config,
                                     const corpus::Corpus& corpus,
                                     vec::EmbeddingProvider& provider,
                                     std::ostream& err) {
    if (fs::exists(index_path(config))) {
        vec::VectorIndex index = vec::VectorIndex::load(index_path(config));
        if (index.config().dim != config.dim) {
            throw ConfigError("stored index has dim " +
                              std::to_string(index.config().dim) +
                              " but config says " + std::to_string(config.dim) +
                              "; re-run the index command");
        }
        if (index.size() == corpus.chunks().size()) return index;
        err << "warning: index entry count differs from corpus chunk count; "
               "rebuilding\n";
    }
    vec::VectorIndex index({config.dim, vec::Metric::cosine_distance, config.k});
    index.index_chunks(corpus, provider);
    index.save(index_path(config));
    return index;
}

fs::path record_path(const RunConfig& config) {
    if (!config.gateway.record_path.empty()) {
        return config.gateway.record_path;
    }
    return fs::path(config.output_dir) / "session.jsonl";
}

}  // namespace

corpus::Corpus load_corpus(const RunConfig& config) {
    const auto manifest = load_manifest(config);
    if (manifest.empty()) {
        throw EmptyCorpus("corpus store is empty; run the ingest command first");
    }
    corpus::Corpus corpus;
    for (const auto& [source_path, entry] : manifest) {
        nlohmann::json doc =
            nlohmann::json::parse(read_file(doc_path(config, entry.doc_id)),
                                  nullptr, /*allow_exceptions=*/false);
        if (doc.is_discarded() || !doc.is_object()) {
            throw IoError("corrupt document file for " + entry.doc_id);
        }
        corpus::Document document;
        document.doc_id = doc.at("doc_id").get<std::string>();
        document.source_path = doc.at("source_path").get<std::string>();
        if (doc.contains("title") && doc["title"].is_string()) {
            document.title = doc["title"].get<std::string>();
        }
        document.body = doc.at("body").get<std::string>();
        corpus.add(std::move(document), config.chunking);
    }
    return corpus;
}

int cmd_ingest(const RunConfig& config, const std::vector<std::string>& paths,
               CommandStreams& streams) {
    config.validate_common();
    const auto& inputs = paths.empty() ? config.corpus_paths : paths;
    if (inputs.empty()) {
        throw ConfigError("no corpus paths given (flag or corpus_paths)");
    }

    auto manifest = load_manifest(config);
    const auto files = collect_files(inputs, streams.err);
    std::size_t ingested = 0;
    std::size_t skipped = 0;
    std::size_t failed = 0;

    for (const auto& file : files) {
        std::string raw;
        try {
            raw = read_file(file);
        } catch (const Error& e) {
            streams.err << "warning: " << e.what() << "\n";
            ++failed;
            continue;
        }
        const std::string sha = sha256_hex(raw);
        auto known = manifest.find(file);
        if (known != manifest.end() && known->second.sha256 == sha) {
            ++skipped;
            continue;
        }
        corpus::Document document;
        try {
            document = corpus::ingest_document(raw, file);
        } catch (const Error& e) {
            streams.err << "warning: skipping " << file << ": " << e.what()
                        << "\n";
            ++failed;
            continue;
        }
        if (known != manifest.end()) {
            std::error_code ec;
            fs::remove(doc_path(config, known->second.doc_id), ec);
        }
        nlohmann::ordered_json stored;
        stored["doc_id"] = document.doc_id;
        stored["source_path"] = document.source_path;
        stored["sha256"] = sha;
        stored["title"] = document.title.has_value()
                              ? nlohmann::ordered_json(*document.title)
                              : nlohmann::ordered_json(nullptr);
        stored["body"] = document.body;
        write_file_atomic(doc_path(config, document.doc_id),
                          stored.dump(2) + "\n");
        manifest[file] = {document.doc_id, sha};
        ++ingested;
    }

    if (manifest.empty()) {
        throw EmptyCorpus("nothing to ingest under the given paths");
    }
    save_manifest(config, manifest);
    streams.out << "ingested " << ingested << " document(s), " << skipped
                << " unchanged, " << failed << " failed\n";
    if (!files.empty() && ingested == 0 && skipped == 0) return 1;
    return 0;
}

int cmd_index(const RunConfig& config, CommandStreams& streams) {
    config.validate_common();
    const auto corpus = load_corpus(config);
    const auto provider = make_embedding_provider(config);
    vec::VectorIndex index({config.dim, vec::Metric::cosine_distance, config.k});
    const auto stats = index.index_chunks(corpus, *provider);
    index.save(index_path(config));
    streams.out << "indexed " << stats.count << " chunk(s), dim " << stats.dim
                << ", written to " << index_path(config).string() << "\n";
    return 0;
}

int cmd_extract(const RunConfig& config, CommandStreams& streams,
                ExtractMode mode, bool verbose) {
    config.validate_extract();
    const auto corpus = load_corpus(config);
    const auto provider = make_embedding_provider(config);
    const auto index =
        load_or_build_index(config, corpus, *provider, streams.err);

    llm::TemplateSet templates;
    if (!config.templates_path.empty()) {
        templates = llm::TemplateSet::from_file(config.templates_path);
    }
    std::shared_ptr<llm::Backend> backend = make_backend(config);
    std::shared_ptr<llm::RecordingBackend> recorder;
    if (mode == ExtractMode::record) {
        recorder = std::make_shared<llm::RecordingBackend>(backend);
        backend = recorder;
    }
    llm::Gateway gateway(backend, std::move(templates));
    const auto oracle = make_oracle(config, gateway, streams);

    pipeline::PipelineOptions options;
    options.retrieval_query = config.retrieval_query;
    options.k = config.k;
    options.max_probes = config.max_probes;
    options.batch_size = config.batch_size;
    options.max_in_flight = config.max_in_flight;
    options.stage4_use_ebr = config.stage4_use_ebr;
    options.per_document_attributes = config.per_document_attributes;
    options.config_digest = config.digest();
    options.probe_stream = verbose ? &streams.err : nullptr;

    pipeline::ExtractionResult result;
    try {
        result = pipeline::run_pipeline(corpus, index, *provider, gateway,
                                        *oracle, options);
    } catch (const pipeline::RunAborted& e) {
        pipeline::write_outputs(e.partial(), corpus, records_dir(config));
        nlohmann::ordered_json failure = {
            {"error", e.what()},
            {"kind", e.kind() == pipeline::RunAborted::Kind::gateway
                         ? "gateway"
                         : "parse"}};
        write_file_atomic(records_dir(config) / "failure.json",
                          failure.dump(2) + "\n");
        streams.err << "run aborted: " << e.what() << "\n";
        return e.kind() == pipeline::RunAborted::Kind::gateway ? 3 : 4;
    }

    pipeline::write_outputs(result, corpus, records_dir(config));
    if (recorder != nullptr) {
        recorder->record_session(record_path(config));
        streams.out << "session recorded to " << record_path(config).string()
                    << "\n";
    }

    const auto& counters = result.metadata.counters;
    streams.out << "extracted " << counters.records << " record(s) for "
                << counters.entities << " entity(ies); "
                << result.canonical_attributes.size()
                << " canonical attribute(s)\n"
                << "gateway calls " << counters.gateway_calls << ", retries "
                << counters.retries << ", parse failures "
                << counters.parse_failures << ", filter probes "
                << counters.filter_probes << "\n"
                << "records written to " << records_dir(config).string()
                << "\n";
    return 0;
}

int cmd_eval(const RunConfig& config, const std::string& predictions_path,
             const std::string& gold_path, CommandStreams& streams) {
    config.validate_common();
    const auto golds = eval::load_gold(gold_path);
    const auto predictions = eval::load_predictions(predictions_path);
    const auto report = eval::compute_report(golds, predictions);
    streams.out << eval::format_table(report);
    const fs::path out = fs::path(config.output_dir) / "eval_report.json";
    eval::export_report(report, out);
    streams.out << "report written to " << out.string() << "\n";
    return 0;
}

int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const SchemaError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const pipeline::RunAborted& e) {
        err << "error: " << e.what() << "\n";
        return e.kind() == pipeline::RunAborted::Kind::gateway ? 3 : 4;
    } catch (const GatewayError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const UnparseableList& e) {
        err << "error: " << e.what() << "\n";
        return 4;
    } catch (const UnparseableJson& e) {
        err << "error: " << e.what() << "\n";
        return 4;
    } catch (const UnparseableVerdict& e) {
        err << "error: " << e.what() << "\n";
        return 4;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace finder::cli
