#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "finder/errors.hpp"
#include "finder/llm_gateway.hpp"
#include "finder/vector_index.hpp"

namespace finder::ebr {

struct Probe {
    std::size_t rank = 0;
    double distance = 0.0;
    bool relevant = false;
};

struct FilterOutcome {
    std::vector<vec::RetrievalHit> accepted;  // always a prefix of the input
    std::size_t boundary = 0;                 // accepted = hits[0..boundary)
    std::size_t probes_used = 0;
    std::vector<Probe> probe_log;
};

/// Raised when the relevance oracle fails mid-search. Keeps the probes made
/// so far and the original failure for callers that classify it.
class OracleError : public Error {
public:
    OracleError(const std::string& message, std::vector<Probe> partial_log,
                std::exception_ptr cause)
        : Error("OracleError", message),
          probe_log_(std::move(partial_log)),
          cause_(std::move(cause)) {}

    const std::vector<Probe>& probe_log() const { return probe_log_; }
    std::exception_ptr cause() const { return cause_; }

private:
    std::vector<Probe> probe_log_;
    std::exception_ptr cause_;
};

/// Maps one hit's text to a relevance verdict.
class RelevanceOracle {
public:
    virtual ~RelevanceOracle() = default;

    virtual bool judge(const vec::RetrievalHit& hit, std::string_view text) = 0;
    virtual std::string kind() const = 0;
};

/// Pure function of the probed text; used by tests and the scripted config.
class ScriptedTextOracle final : public RelevanceOracle {
public:
    using Judge = std::function<bool(std::string_view)>;

    explicit ScriptedTextOracle(Judge judge) : judge_(std::move(judge)) {}

    bool judge(const vec::RetrievalHit&, std::string_view text) override {
        return judge_(text);
    }
    std::string kind() const override { return "scripted"; }

private:
    Judge judge_;
};

/// Asks the relevance-judge template for a strict YES/NO.
class LlmJudgeOracle final : public RelevanceOracle {
public:
    LlmJudgeOracle(llm::Gateway& gateway, std::string query_intent)
        : gateway_(gateway), query_intent_(std::move(query_intent)) {}

    bool judge(const vec::RetrievalHit& hit, std::string_view text) override;
    std::string kind() const override { return "llm_judge"; }

private:
    llm::Gateway& gateway_;
    std::string query_intent_;
};

/// Prints the probed text and reads y/n answers; the manual-check path.
class InteractiveOracle final : public RelevanceOracle {
public:
    InteractiveOracle(std::istream& in, std::ostream& out) : in_(in), out_(out) {}

    bool judge(const vec::RetrievalHit& hit, std::string_view text) override;
    std::string kind() const override { return "interactive_prompt"; }

private:
    std::istream& in_;
    std::ostream& out_;
};

using ProbeFn = std::function<bool(const vec::RetrievalHit&)>;
using TextResolver = std::function<std::string(const vec::ChunkRef&)>;

/// Binary search for the relevance boundary over distance-ranked hits.
/// Window [lo, hi) starts at [0, n); each probe tests mid = lo + (hi-lo)/2;
/// RELEVANT moves lo past mid, NOT RELEVANT closes hi to mid. Stops when the
/// window is empty or the probe budget runs out; the boundary is lo, so only
/// hits proven or implied relevant are accepted.
FilterOutcome ebr_filter(std::span<const vec::RetrievalHit> hits,
                         const ProbeFn& probe, std::size_t max_probes);

FilterOutcome ebr_filter(std::span<const vec::RetrievalHit> hits,
                         const TextResolver& resolve_text,
                         RelevanceOracle& oracle, std::size_t max_probes);

}  // namespace finder::ebr
