#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "finder/prompts.hpp"

namespace finder::llm {

class Backend {
public:
    virtual ~Backend() = default;

    /// Returns the raw completion text for a rendered prompt. Throws a
    /// GatewayError subclass when the answer cannot be obtained.
    virtual std::string complete(const RenderedPrompt& prompt) = 0;

    virtual std::string name() const = 0;
};

/// Adapts any callable for tests and fixtures.
class ScriptedBackend final : public Backend {
public:
    using Handler = std::function<std::string(const RenderedPrompt&)>;

    explicit ScriptedBackend(Handler handler) : handler_(std::move(handler)) {}

    std::string complete(const RenderedPrompt& prompt) override {
        return handler_(prompt);
    }
    std::string name() const override { return "scripted"; }

private:
    Handler handler_;
};

/// Serves completions from a recorded digest -> raw_text map. A prompt whose
/// digest was never recorded throws CacheMiss; replay runs are fully offline
/// and byte-deterministic.
class ReplayBackend final : public Backend {
public:
    explicit ReplayBackend(std::map<std::string, std::string> cache)
        : cache_(std::move(cache)) {}

    /// Loads a JSONL file of {"digest", "template_id", "raw_text"} records.
    static ReplayBackend from_file(const std::filesystem::path& path);

    std::string complete(const RenderedPrompt& prompt) override;
    std::string name() const override { return "replay"; }
    std::size_t size() const { return cache_.size(); }

private:
    std::map<std::string, std::string> cache_;
};

struct RemoteBackendConfig {
    std::string endpoint;     // chat-completions URL
    std::string model;
    std::string api_key_env;  // env var holding the credential; may be empty
    double temperature = 0.0;
    int max_tokens = 1024;
    int timeout_s = 60;
    int retries = 3;
};

/// OpenAI-style chat completions over HTTP. Temperature 0 for repeatability;
/// 429 and 5xx retry with backoff, timeouts surface as GatewayTimeout.
class RemoteBackend final : public Backend {
public:
    explicit RemoteBackend(RemoteBackendConfig config);

    std::string complete(const RenderedPrompt& prompt) override;
    std::string name() const override { return "remote:" + config_.model; }

private:
    RemoteBackendConfig config_;
    std::string api_key_;
};

/// Wraps another backend and records every (digest, template_id, raw_text)
/// triple it sees. First answer wins per digest, so a recorded session
/// replays deterministically even if the upstream was not.
class RecordingBackend final : public Backend {
public:
    explicit RecordingBackend(std::shared_ptr<Backend> delegate)
        : delegate_(std::move(delegate)) {}

    std::string complete(const RenderedPrompt& prompt) override;
    std::string name() const override { return "recording:" + delegate_->name(); }

    /// Writes the session as JSONL sorted by digest. An empty session still
    /// produces a valid (empty) file.
    void record_session(const std::filesystem::path& path) const;

private:
    struct Row {
        std::string template_id;
        std::string raw_text;
    };

    std::shared_ptr<Backend> delegate_;
    std::map<std::string, Row> rows_;
    mutable std::mutex mutex_;
};

struct Usage {
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

struct Completion {
    std::string raw_text;
    std::string backend;
    std::optional<Usage> usage;
    std::optional<double> latency_ms;
};

struct ParseFailure {
    TemplateId id;
    std::string raw_text;
};

struct GatewayCounters {
    std::size_t calls = 0;
    std::size_t retries = 0;
    std::size_t parse_failures = 0;
};

/// Renders templates, calls the backend, and parses answers. Each ask_*
/// method retries once with a format reminder appended to the user text
/// before giving up; failed raw answers are kept for the run report.
class Gateway {
public:
    Gateway(std::shared_ptr<Backend> backend, TemplateSet templates = {});

    RenderedPrompt render_prompt(TemplateId id,
                                 const std::map<std::string, std::string>& slots) const;

    Completion complete(const RenderedPrompt& prompt);

    std::vector<std::string> ask_list(TemplateId id,
                                      const std::map<std::string, std::string>& slots);
    nlohmann::ordered_json ask_json(TemplateId id,
                                    const std::map<std::string, std::string>& slots);
    bool ask_verdict(TemplateId id,
                     const std::map<std::string, std::string>& slots);

    GatewayCounters counters() const;
    std::vector<ParseFailure> failures() const;
    const std::string& backend_name() const { return backend_name_; }

private:
    template <typename T>
    T ask_parsed(TemplateId id, const std::map<std::string, std::string>& slots,
                 T (*parse)(std::string_view), const char* reminder);

    std::shared_ptr<Backend> backend_;
    TemplateSet templates_;
    std::string backend_name_;
    GatewayCounters counters_;
    std::vector<ParseFailure> failures_;
    mutable std::mutex mutex_;
};

/// Lenient list parsing: a JSON array anywhere in the text wins; otherwise
/// bulleted, numbered, or quoted lines; otherwise short bare lines. "none"
/// and empty answers mean an empty list. Throws UnparseableList when nothing
/// list-like is found.
std::vector<std::string> parse_list(std::string_view raw);

/// First balanced {...} region that parses as a JSON object, keys in
/// document order. Throws UnparseableJson otherwise.
nlohmann::ordered_json parse_json_object(std::string_view raw);

/// Last standalone YES/NO token (case-insensitive) decides. Throws
/// UnparseableVerdict when neither appears.
bool parse_yes_no(std::string_view raw);

}  // namespace finder::llm
