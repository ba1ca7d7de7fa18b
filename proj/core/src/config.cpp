#include "finder/config.hpp"

#include <cstdlib>
#include <set>

#include "finder/errors.hpp"
#include "finder/hashing.hpp"
#include "finder/io.hpp"

namespace finder::cli {

using hashing::sha256_hex;

namespace {

void reject_unknown_keys(const nlohmann::json& object,
                         const std::set<std::string>& known,
                         const std::string& where) {
    for (const auto& [key, value] : object.items()) {
        if (!known.contains(key)) {
            throw ConfigError("unknown key \"" + key + "\" in " + where);
        }
    }
}

template <typename T>
void read_field(const nlohmann::json& object, const char* key, T& into) {
    if (!object.contains(key)) return;
    try {
        into = object[key].get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(std::string("field \"") + key + "\" has the wrong type");
    }
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
    // Plain (key-sorted) json, so the digest does not depend on field order.
    nlohmann::json j;
    j["corpus_paths"] = corpus_paths;
    j["output_dir"] = output_dir;
    j["chunking"] = {{"max_chunk_chars", chunking.max_chunk_chars},
                     {"overlap_chars", chunking.overlap_chars}};
    j["index"] = {{"dim", dim}, {"k", k}};
    j["retrieval_query"] = retrieval_query;
    j["max_probes"] = max_probes;
    j["oracle"] = {{"kind", oracle.kind},
                   {"query_intent", oracle.query_intent},
                   {"scripted_contains", oracle.scripted_contains}};
    j["gateway"] = {{"backend", gateway.backend},
                    {"endpoint", gateway.endpoint},
                    {"model", gateway.model},
                    {"api_key_env", gateway.api_key_env},
                    {"temperature", gateway.temperature},
                    {"max_tokens", gateway.max_tokens},
                    {"timeout_s", gateway.timeout_s},
                    {"retries", gateway.retries},
                    {"replay_cache", gateway.replay_cache},
                    {"record_path", gateway.record_path}};
    j["embedding"] = {{"provider", embedding.provider},
                      {"endpoint", embedding.endpoint},
                      {"model", embedding.model},
                      {"api_key_env", embedding.api_key_env},
                      {"timeout_s", embedding.timeout_s},
                      {"retries", embedding.retries}};
    j["templates_path"] = templates_path;
    j["stage4_use_ebr"] = stage4_use_ebr;
    j["per_document_attributes"] = per_document_attributes;
    j["batch_size"] = batch_size;
    j["max_in_flight"] = max_in_flight;
    return j;
}

std::string RunConfig::digest() const { return sha256_hex(to_json().dump()); }

void RunConfig::validate_common() const {
    if (chunking.max_chunk_chars < 200) {
        throw ConfigError("chunking.max_chunk_chars must be >= 200");
    }
    if (chunking.overlap_chars >= chunking.max_chunk_chars) {
        throw ConfigError("chunking.overlap_chars must be < max_chunk_chars");
    }
    if (dim == 0) throw ConfigError("index.dim must be >= 1");
    if (k == 0) throw ConfigError("index.k must be >= 1");
    if (max_probes == 0) throw ConfigError("max_probes must be >= 1");
    if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
    if (max_in_flight == 0) throw ConfigError("max_in_flight must be >= 1");
    if (retrieval_query.empty()) throw ConfigError("retrieval_query is empty");
    if (output_dir.empty()) throw ConfigError("output_dir is empty");
    if (embedding.provider != "deterministic-local" &&
        embedding.provider != "remote") {
        throw ConfigError("embedding.provider must be deterministic-local or remote");
    }
}

void RunConfig::validate_extract() const {
    validate_common();
    if (oracle.kind != "llm_judge" && oracle.kind != "interactive_prompt" &&
        oracle.kind != "scripted") {
        throw ConfigError(
            "oracle.kind must be llm_judge, interactive_prompt or scripted");
    }
    if (oracle.kind == "scripted" && oracle.scripted_contains.empty()) {
        throw ConfigError("scripted oracle needs oracle.scripted_contains");
    }
    if (oracle.kind == "llm_judge" && oracle.query_intent.empty()) {
        throw ConfigError("llm_judge oracle needs oracle.query_intent");
    }
    if (gateway.backend == "remote") {
        if (gateway.endpoint.empty() || gateway.model.empty()) {
            throw ConfigError("remote gateway needs endpoint and model");
        }
        if (!gateway.api_key_env.empty() &&
            std::getenv(gateway.api_key_env.c_str()) == nullptr) {
            throw ConfigError("credential env var " + gateway.api_key_env +
                              " is not set");
        }
    } else if (gateway.backend == "replay") {
        if (gateway.replay_cache.empty()) {
            throw ConfigError("replay gateway needs gateway.replay_cache");
        }
    } else {
        throw ConfigError("gateway.backend must be remote or replay");
    }
    if (embedding.provider == "remote") {
        if (embedding.endpoint.empty() || embedding.model.empty()) {
            throw ConfigError("remote embedding needs endpoint and model");
        }
        if (!embedding.api_key_env.empty() &&
            std::getenv(embedding.api_key_env.c_str()) == nullptr) {
            throw ConfigError("credential env var " + embedding.api_key_env +
                              " is not set");
        }
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    nlohmann::json doc = nlohmann::json::parse(read_file(path), nullptr,
                                               /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.is_object()) {
        throw ConfigError("config file is not a JSON object: " + path.string());
    }

    reject_unknown_keys(doc,
                        {"corpus_paths", "output_dir", "chunking", "index",
                         "retrieval_query", "max_probes", "oracle", "gateway",
                         "embedding", "templates_path", "stage4_use_ebr",
                         "per_document_attributes", "batch_size",
                         "max_in_flight"},
                        "config");

    RunConfig config;
    read_field(doc, "corpus_paths", config.corpus_paths);
    read_field(doc, "output_dir", config.output_dir);
    if (doc.contains("chunking")) {
        reject_unknown_keys(doc["chunking"], {"max_chunk_chars", "overlap_chars"},
                            "chunking");
        read_field(doc["chunking"], "max_chunk_chars",
                   config.chunking.max_chunk_chars);
        read_field(doc["chunking"], "overlap_chars",
                   config.chunking.overlap_chars);
    }
    if (doc.contains("index")) {
        reject_unknown_keys(doc["index"], {"dim", "k"}, "index");
        read_field(doc["index"], "dim", config.dim);
        read_field(doc["index"], "k", config.k);
    }
    read_field(doc, "retrieval_query", config.retrieval_query);
    read_field(doc, "max_probes", config.max_probes);
    if (doc.contains("oracle")) {
        reject_unknown_keys(doc["oracle"],
                            {"kind", "query_intent", "scripted_contains"},
                            "oracle");
        read_field(doc["oracle"], "kind", config.oracle.kind);
        read_field(doc["oracle"], "query_intent", config.oracle.query_intent);
        read_field(doc["oracle"], "scripted_contains",
                   config.oracle.scripted_contains);
    }
    if (doc.contains("gateway")) {
        reject_unknown_keys(doc["gateway"],
                            {"backend", "endpoint", "model", "api_key_env",
                             "temperature", "max_tokens", "timeout_s",
                             "retries", "replay_cache", "record_path"},
                            "gateway");
        read_field(doc["gateway"], "backend", config.gateway.backend);
        read_field(doc["gateway"], "endpoint", config.gateway.endpoint);
        read_field(doc["gateway"], "model", config.gateway.model);
        read_field(doc["gateway"], "api_key_env", config.gateway.api_key_env);
        read_field(doc["gateway"], "temperature", config.gateway.temperature);
        read_field(doc["gateway"], "max_tokens", config.gateway.max_tokens);
        read_field(doc["gateway"], "timeout_s", config.gateway.timeout_s);
        read_field(doc["gateway"], "retries", config.gateway.retries);
        read_field(doc["gateway"], "replay_cache", config.gateway.replay_cache);
        read_field(doc["gateway"], "record_path", config.gateway.record_path);
    }
    if (doc.contains("embedding")) {
        reject_unknown_keys(doc["embedding"],
                            {"provider", "endpoint", "model", "api_key_env",
                             "timeout_s", "retries"},
                            "embedding");
        read_field(doc["embedding"], "provider", config.embedding.provider);
        read_field(doc["embedding"], "endpoint", config.embedding.endpoint);
        read_field(doc["embedding"], "model", config.embedding.model);
        read_field(doc["embedding"], "api_key_env", config.embedding.api_key_env);
        read_field(doc["embedding"], "timeout_s", config.embedding.timeout_s);
        read_field(doc["embedding"], "retries", config.embedding.retries);
    }
    read_field(doc, "templates_path", config.templates_path);
    read_field(doc, "stage4_use_ebr", config.stage4_use_ebr);
    read_field(doc, "per_document_attributes", config.per_document_attributes);
    read_field(doc, "batch_size", config.batch_size);
    read_field(doc, "max_in_flight", config.max_in_flight);
    return config;
}

}  // namespace finder::cli
