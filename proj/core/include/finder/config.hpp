#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "finder/corpus.hpp"

namespace finder::cli {

struct OracleConfig {
    std::string kind = "llm_judge";  // llm_judge | interactive_prompt | scripted
    std::string query_intent =
        "contains appearance or identification information";
    // For the scripted oracle: a probed text is relevant when it contains any
    // of these, case-insensitively.
    std::vector<std::string> scripted_contains;
};

struct GatewayConfig {
    std::string backend = "replay";  // remote | replay
    std::string endpoint;
    std::string model;
    std::string api_key_env;
    double temperature = 0.0;
    int max_tokens = 1024;
    int timeout_s = 60;
    int retries = 3;
    std::string replay_cache;  // JSONL path, replay backend
    std::string record_path;   // session output, record mode
};

struct EmbeddingConfig {
    std::string provider = "deterministic-local";  // deterministic-local | remote
    std::string endpoint;
    std::string model;
    std::string api_key_env;
    int timeout_s = 30;
    int retries = 3;
};

struct RunConfig {
    std::vector<std::string> corpus_paths;
    std::string output_dir = "out";
    corpus::ChunkPolicy chunking;
    std::size_t dim = 256;
    std::size_t k = 20;
    std::string retrieval_query = "appearance, identification";
    std::size_t max_probes = 3;
    OracleConfig oracle;
    GatewayConfig gateway;
    EmbeddingConfig embedding;
    std::string templates_path;
    bool stage4_use_ebr = false;
    bool per_document_attributes = false;
    std::size_t batch_size = 50;
    std::size_t max_in_flight = 4;

    /// Canonical JSON used for the digest; key order is alphabetical and no
    /// secret values appear (credentials stay behind env-var names).
    nlohmann::json to_json() const;

    /// sha256 of the canonical JSON; stamped into every output artifact.
    std::string digest() const;

    /// Checks every command's shared preconditions. Throws ConfigError.
    void validate_common() const;

    /// Extraction-specific checks: backend choice is complete and, for the
    /// remote backend, the credential env var is set (so a misconfigured run
    /// fails before touching the network).
    void validate_extract() const;
};

/// Parses a config file. Unknown keys are rejected so typos fail loudly.
RunConfig load_config(const std::filesystem::path& path);

}  // namespace finder::cli
