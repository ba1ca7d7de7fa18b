#include "finder/llm_gateway.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <sstream>
#include <thread>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "finder/errors.hpp"
#include "finder/io.hpp"

namespace finder::llm {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return out;
}

// Finds the end (exclusive) of the balanced region starting at `open`, where
// raw[open] is '[' or '{'. Skips string literals including escapes. Returns
// npos when unbalanced.
std::size_t balanced_end(std::string_view raw, std::size_t open) {
    const char open_c = raw[open];
    const char close_c = (open_c == '[') ? ']' : '}';
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = open; i < raw.size(); ++i) {
        const char c = raw[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == open_c) {
            ++depth;
        } else if (c == close_c) {
            if (--depth == 0) return i + 1;
        }
    }
    return std::string_view::npos;
}

std::string strip_outer_quotes(std::string item) {
    if (item.size() >= 2 && item.front() == '"' && item.back() == '"') {
        return item.substr(1, item.size() - 2);
    }
    return item;
}

std::size_t word_count(std::string_view s) {
    std::size_t words = 0;
    bool in_word = false;
    for (unsigned char c : s) {
        const bool space = std::isspace(c) != 0;
        if (!space && !in_word) ++words;
        in_word = !space;
    }
    return words;
}

void push_unique(std::vector<std::string>& items, std::string item) {
    if (item.empty()) return;
    if (std::find(items.begin(), items.end(), item) == items.end()) {
        items.push_back(std::move(item));
    }
}

}  // namespace

std::vector<std::string> parse_list(std::string_view raw) {
    const std::string_view trimmed = trim(raw);
    const std::string low = lower(trimmed);
    if (trimmed.empty() || trimmed == "[]" || low == "none" || low == "none.") {
        return {};
    }

    // A JSON array anywhere in the answer is the most reliable signal.
    for (std::size_t i = raw.find('['); i != std::string_view::npos;
         i = raw.find('[', i + 1)) {
        const std::size_t end = balanced_end(raw, i);
        if (end == std::string_view::npos) continue;
        nlohmann::json parsed = nlohmann::json::parse(
            raw.substr(i, end - i), nullptr, /*allow_exceptions=*/false);
        if (parsed.is_discarded() || !parsed.is_array()) continue;
        std::vector<std::string> items;
        for (const auto& item : parsed) {
            push_unique(items, item.is_string() ? item.get<std::string>()
                                                : item.dump());
        }
        return items;
    }

    // Otherwise read line by line: marked lines (bullets, numbering, quotes)
    // win; short bare lines are a last resort.
    std::vector<std::string> marked;
    std::vector<std::string> bare;
    std::istringstream lines{std::string(raw)};
    std::string line;
    while (std::getline(lines, line)) {
        std::string_view t = trim(line);
        if (t.empty()) continue;

        if (t.size() >= 2 && (t[0] == '-' || t[0] == '*') &&
            std::isspace(static_cast<unsigned char>(t[1]))) {
            push_unique(marked, strip_outer_quotes(std::string(trim(t.substr(2)))));
            continue;
        }
        if (t.size() >= 4 && t.substr(0, 3) == "•" &&
            std::isspace(static_cast<unsigned char>(t[3]))) {
            push_unique(marked, strip_outer_quotes(std::string(trim(t.substr(4)))));
            continue;
        }
        std::size_t digits = 0;
        while (digits < t.size() && digits < 3 &&
               std::isdigit(static_cast<unsigned char>(t[digits]))) {
            ++digits;
        }
        if (digits > 0 && digits < t.size() &&
            (t[digits] == '.' || t[digits] == ')') && digits + 1 < t.size() &&
            std::isspace(static_cast<unsigned char>(t[digits + 1]))) {
            push_unique(marked,
                        strip_outer_quotes(std::string(trim(t.substr(digits + 2)))));
            continue;
        }
        if (t.size() >= 2 && t.front() == '"' && t.back() == '"') {
            push_unique(marked, std::string(t.substr(1, t.size() - 2)));
            continue;
        }

        // Bare line: short, phrase-like, not a header or a prose sentence.
        std::string_view body = t;
        if (!body.empty() && (body.back() == '.' || body.back() == '!' ||
                              body.back() == '?')) {
            body = trim(body.substr(0, body.size() - 1));
        }
        if (body.empty() || body.size() > 120 || word_count(body) > 8 ||
            body.back() == ':') {
            continue;
        }
        if (body.find_first_of(".!?") != std::string_view::npos) continue;
        if (body.find(',') != std::string_view::npos) {
            std::size_t start = 0;
            while (start <= body.size()) {
                const std::size_t comma = body.find(',', start);
                const std::string_view part =
                    body.substr(start, comma == std::string_view::npos
                                           ? std::string_view::npos
                                           : comma - start);
                push_unique(bare, std::string(trim(part)));
                if (comma == std::string_view::npos) break;
                start = comma + 1;
            }
        } else {
            push_unique(bare, std::string(body));
        }
    }
    if (!marked.empty()) return marked;
    if (!bare.empty()) return bare;
    throw UnparseableList("no list found in answer: " +
                          std::string(trimmed.substr(0, 200)));
}

nlohmann::ordered_json parse_json_object(std::string_view raw) {
    for (std::size_t i = raw.find('{'); i != std::string_view::npos;
         i = raw.find('{', i + 1)) {
        const std::size_t end = balanced_end(raw, i);
        if (end == std::string_view::npos) continue;
        nlohmann::ordered_json parsed = nlohmann::ordered_json::parse(
            raw.substr(i, end - i), nullptr, /*allow_exceptions=*/false);
        if (!parsed.is_discarded() && parsed.is_object()) return parsed;
    }
    throw UnparseableJson("no JSON object found in answer: " +
                          std::string(trim(raw).substr(0, 200)));
}

bool parse_yes_no(std::string_view raw) {
    int verdict = -1;
    std::size_t i = 0;
    while (i < raw.size()) {
        if (!std::isalpha(static_cast<unsigned char>(raw[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < raw.size() && std::isalpha(static_cast<unsigned char>(raw[j]))) {
            ++j;
        }
        const std::string token = lower(raw.substr(i, j - i));
        if (token == "yes") verdict = 1;
        if (token == "no") verdict = 0;
        i = j;
    }
    if (verdict < 0) {
        throw UnparseableVerdict("no YES/NO in answer: " +
                                 std::string(trim(raw).substr(0, 200)));
    }
    return verdict == 1;
}

ReplayBackend ReplayBackend::from_file(const std::filesystem::path& path) {
    const std::string raw = read_file(path);
    std::map<std::string, std::string> cache;
    std::istringstream lines(raw);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        nlohmann::json row =
            nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (row.is_discarded() || !row.is_object() || !row.contains("digest") ||
            !row.contains("raw_text")) {
            throw ConfigError("replay cache " + path.string() + " line " +
                              std::to_string(lineno) + " is malformed");
        }
        cache[row["digest"].get<std::string>()] =
            row["raw_text"].get<std::string>();
    }
    return ReplayBackend(std::move(cache));
}

std::string ReplayBackend::complete(const RenderedPrompt& prompt) {
    auto found = cache_.find(prompt.digest());
    if (found == cache_.end()) {
        throw CacheMiss("no recorded answer for " + to_string(prompt.id) +
                        " prompt with digest " + prompt.digest());
    }
    return found->second;
}

RemoteBackend::RemoteBackend(RemoteBackendConfig config)
    : config_(std::move(config)) {
    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr || *key == '\0') {
            throw RemoteError("credential env var " + config_.api_key_env +
                              " is not set");
        }
        api_key_ = key;
    }
}

std::string RemoteBackend::complete(const RenderedPrompt& prompt) {
    const auto scheme_end = config_.endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw RemoteError("endpoint is not a URL: " + config_.endpoint);
    }
    const auto path_start = config_.endpoint.find('/', scheme_end + 3);
    const std::string base = path_start == std::string::npos
                                 ? config_.endpoint
                                 : config_.endpoint.substr(0, path_start);
    const std::string path =
        path_start == std::string::npos ? "/" : config_.endpoint.substr(path_start);

    nlohmann::json body = {
        {"model", config_.model},
        {"messages",
         {{{"role", "system"}, {"content", prompt.system_text}},
          {{"role", "user"}, {"content", prompt.user_text}}}},
        {"temperature", config_.temperature},
        {"max_tokens", config_.max_tokens},
    };
    const std::string payload = body.dump();

    std::string last_error;
    bool timed_out = false;
    bool rate_limited = false;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(200 * attempt));
        }
        httplib::Client client(base);
        client.set_connection_timeout(config_.timeout_s);
        client.set_read_timeout(config_.timeout_s);
        httplib::Headers headers;
        if (!api_key_.empty()) {
            headers.emplace("Authorization", "Bearer " + api_key_);
        }
        auto res = client.Post(path, headers, payload, "application/json");
        if (!res) {
            timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                        res.error() == httplib::Error::Read;
            rate_limited = false;
            last_error = "connection failed: " + httplib::to_string(res.error());
            continue;
        }
        timed_out = false;
        if (res->status == 429) {
            rate_limited = true;
            last_error = "HTTP 429";
            continue;
        }
        rate_limited = false;
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw RemoteError("completion endpoint returned HTTP " +
                              std::to_string(res->status) + ": " + res->body);
        }
        nlohmann::json parsed =
            nlohmann::json::parse(res->body, nullptr, /*allow_exceptions=*/false);
        if (parsed.is_discarded() || !parsed.contains("choices") ||
            !parsed["choices"].is_array() || parsed["choices"].empty()) {
            throw RemoteError("completion response has unexpected shape");
        }
        const auto& message = parsed["choices"][0]["message"];
        if (!message.contains("content") || !message["content"].is_string()) {
            throw RemoteError("completion response has no message content");
        }
        return message["content"].get<std::string>();
    }
    const std::string detail = "after " + std::to_string(config_.retries + 1) +
                               " attempts: " + last_error;
    if (rate_limited) throw RateLimited("rate limited " + detail);
    if (timed_out) throw GatewayTimeout("timed out " + detail);
    throw RemoteError("completion failed " + detail);
}

std::string RecordingBackend::complete(const RenderedPrompt& prompt) {
    const std::string digest = prompt.digest();
    {
        std::lock_guard lock(mutex_);
        auto found = rows_.find(digest);
        if (found != rows_.end()) return found->second.raw_text;
    }
    std::string answer = delegate_->complete(prompt);
    std::lock_guard lock(mutex_);
    auto [it, inserted] =
        rows_.emplace(digest, Row{to_string(prompt.id), std::move(answer)});
    return it->second.raw_text;
}

void RecordingBackend::record_session(const std::filesystem::path& path) const {
    std::string out;
    {
        std::lock_guard lock(mutex_);
        for (const auto& [digest, row] : rows_) {
            nlohmann::ordered_json line = {{"digest", digest},
                                           {"template_id", row.template_id},
                                           {"raw_text", row.raw_text}};
            out += line.dump();
            out += '\n';
        }
    }
    write_file_atomic(path, out);
}

Gateway::Gateway(std::shared_ptr<Backend> backend, TemplateSet templates)
    : backend_(std::move(backend)),
      templates_(std::move(templates)),
      backend_name_(backend_->name()) {}

RenderedPrompt Gateway::render_prompt(
    TemplateId id, const std::map<std::string, std::string>& slots) const {
    return render(templates_.get(id), slots);
}

Completion Gateway::complete(const RenderedPrompt& prompt) {
    {
        std::lock_guard lock(mutex_);
        ++counters_.calls;
    }
    const auto start = std::chrono::steady_clock::now();
    std::string raw = backend_->complete(prompt);
    const auto elapsed = std::chrono::duration<double, std::milli>(
        std::chrono::steady_clock::now() - start);
    return {std::move(raw), backend_name_, std::nullopt, elapsed.count()};
}

template <typename T>
T Gateway::ask_parsed(TemplateId id,
                      const std::map<std::string, std::string>& slots,
                      T (*parse)(std::string_view), const char* reminder) {
    RenderedPrompt prompt = render_prompt(id, slots);
    std::string raw = complete(prompt).raw_text;
    try {
        return parse(raw);
    } catch (const GatewayError&) {
        throw;
    } catch (const Error&) {
        std::lock_guard lock(mutex_);
        ++counters_.parse_failures;
        ++counters_.retries;
        failures_.push_back({id, raw});
    }
    RenderedPrompt reminded = prompt;
    reminded.user_text += "\n\n";
    reminded.user_text += reminder;
    raw = complete(reminded).raw_text;
    try {
        return parse(raw);
    } catch (const GatewayError&) {
        throw;
    } catch (const Error&) {
        std::lock_guard lock(mutex_);
        ++counters_.parse_failures;
        failures_.push_back({id, raw});
        throw;
    }
}

std::vector<std::string> Gateway::ask_list(
    TemplateId id, const std::map<std::string, std::string>& slots) {
    return ask_parsed(id, slots, &parse_list,
                      "Reminder: reply with only a JSON array of strings.");
}

nlohmann::ordered_json Gateway::ask_json(
    TemplateId id, const std::map<std::string, std::string>& slots) {
    return ask_parsed(id, slots, &parse_json_object,
                      "Reminder: reply with only a single JSON object.");
}

bool Gateway::ask_verdict(TemplateId id,
                          const std::map<std::string, std::string>& slots) {
    return ask_parsed(id, slots, &parse_yes_no,
                      "Reminder: reply with a single word: YES or NO.");
}

GatewayCounters Gateway::counters() const {
    std::lock_guard lock(mutex_);
    return counters_;
}

std::vector<ParseFailure> Gateway::failures() const {
    std::lock_guard lock(mutex_);
    return failures_;
}

}  // namespace finder::llm
