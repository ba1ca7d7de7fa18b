#include "finder/ebr_filter.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>

namespace finder::ebr {

bool LlmJudgeOracle::judge(const vec::RetrievalHit&, std::string_view text) {
    return gateway_.ask_verdict(llm::TemplateId::relevance_judge,
                                {{"intent", query_intent_},
                                 {"context", std::string(text)}});
}

bool InteractiveOracle::judge(const vec::RetrievalHit& hit,
                              std::string_view text) {
    out_ << "--- chunk " << hit.ref.chunk_id << " (rank " << hit.rank
         << ", distance " << hit.distance << ") ---\n"
         << text << "\n";
    std::string line;
    while (true) {
        out_ << "Relevant? [y/n] " << std::flush;
        if (!std::getline(in_, line)) {
            throw UnparseableVerdict("input ended before a y/n answer");
        }
        std::string lowered;
        for (char c : line) {
            if (!std::isspace(static_cast<unsigned char>(c))) {
                lowered += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            }
        }
        if (lowered == "y" || lowered == "yes") return true;
        if (lowered == "n" || lowered == "no") return false;
        out_ << "Please answer y or n.\n";
    }
}

FilterOutcome ebr_filter(std::span<const vec::RetrievalHit> hits,
                         const ProbeFn& probe, std::size_t max_probes) {
    FilterOutcome outcome;
    std::size_t lo = 0;
    std::size_t hi = hits.size();
    while (lo < hi && outcome.probes_used < max_probes) {
        const std::size_t mid = lo + (hi - lo) / 2;
        bool relevant = false;
        try {
            relevant = probe(hits[mid]);
        } catch (...) {
            throw OracleError("relevance probe at rank " + std::to_string(mid) +
                                  " failed",
                              std::move(outcome.probe_log),
                              std::current_exception());
        }
        outcome.probe_log.push_back({mid, hits[mid].distance, relevant});
        ++outcome.probes_used;
        if (relevant) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    outcome.boundary = lo;
    outcome.accepted.assign(hits.begin(),
                            hits.begin() + static_cast<std::ptrdiff_t>(lo));
    return outcome;
}

FilterOutcome ebr_filter(std::span<const vec::RetrievalHit> hits,
                         const TextResolver& resolve_text,
                         RelevanceOracle& oracle, std::size_t max_probes) {
    return ebr_filter(
        hits,
        [&](const vec::RetrievalHit& hit) {
            return oracle.judge(hit, resolve_text(hit.ref));
        },
        max_probes);
}

}  // namespace finder::ebr
