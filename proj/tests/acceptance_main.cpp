// Acceptance gate for the extraction pipeline. Each check states one
// behavioral guarantee, runs it against an independent oracle (brute force,
// linear scan, hand-computed values or byte comparison) and prints a single
// timed PASS/FAIL line. The exit code is the number of failed checks.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "finder/corpus.hpp"
#include "finder/ebr_filter.hpp"
#include "finder/embedding.hpp"
#include "finder/errors.hpp"
#include "finder/evaluation.hpp"
#include "finder/io.hpp"
#include "finder/llm_gateway.hpp"
#include "finder/pipeline.hpp"
#include "finder/vector_index.hpp"

#include "fixtures.hpp"

using namespace finder;

namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void expect(bool condition, const std::string& message) {
    if (!condition) throw std::runtime_error(message);
}

void criterion(const std::string& name, double budget_s,
               const std::function<void()>& body) {
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool passed = true;
    try {
        body();
    } catch (const std::exception& e) {
        passed = false;
        detail = e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (passed && elapsed > budget_s) {
        passed = false;
        detail = "over time budget";
    }
    char line[160];
    std::snprintf(line, sizeof(line), "[%s] %-68s %6.2fs / %gs",
                  passed ? "PASS" : "FAIL", name.c_str(), elapsed, budget_s);
    std::cout << line;
    if (!detail.empty()) std::cout << "\n       " << detail;
    std::cout << "\n";
    if (!passed) ++g_failures;
}

void skip(const std::string& name, const std::string& why) {
    std::cout << "[SKIP] " << name << " (" << why << ")\n";
}

// Copies the fixture corpus, config and replay cache into `dir` so the CLI
// can run there with the same relative paths the cache was recorded under.
void stage_workspace(const fs::path& dir) {
    for (const char* name :
         {"cabbage-stem-flea-beetle.txt", "field-margins.txt"}) {
        write_file_atomic(dir / "corpus" / name,
                          fixtures::read_fixture(std::string("corpus/") + name));
    }
    write_file_atomic(dir / "config.json", fixtures::read_fixture("config.json"));
    write_file_atomic(dir / "replay_cache.jsonl",
                      fixtures::read_fixture("replay_cache.jsonl"));
}

int run_cli(const fs::path& dir, const std::string& args) {
    const std::string command = "cd \"" + dir.string() + "\" && \"" +
                                FINDER_CLI_PATH + "\" " + args +
                                " >> cli.log 2>&1";
    return std::system(command.c_str());
}

// Runs ingest + replay-extract in a fresh workspace and returns the records
// directory. Throws with the CLI log when either command fails.
fs::path replay_workspace(const fs::path& dir) {
    stage_workspace(dir);
    if (run_cli(dir, "--config config.json ingest") != 0 ||
        run_cli(dir, "--config config.json replay") != 0) {
        std::string log;
        try {
            log = read_file(dir / "cli.log");
        } catch (const Error&) {
        }
        throw std::runtime_error("cli failed:\n" + log);
    }
    return dir / "out" / "records";
}

nlohmann::json record_for(const fs::path& records, const std::string& stem) {
    for (const auto& entry : fs::directory_iterator(records)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind(stem + "-", 0) == 0) {
            return nlohmann::json::parse(read_file(entry.path()));
        }
    }
    throw std::runtime_error("no record written for " + stem);
}

llm::Gateway make_gateway(llm::ScriptedBackend::Handler handler) {
    return llm::Gateway(
        std::make_shared<llm::ScriptedBackend>(std::move(handler)));
}

std::vector<vec::RetrievalHit> ranked_hits(std::size_t n) {
    std::vector<vec::RetrievalHit> hits(n);
    for (std::size_t i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof(id), "c%04zu", i);
        hits[i] = {{id, "d0"}, static_cast<double>(i) * 1e-3, i};
    }
    return hits;
}

std::size_t probe_budget(std::size_t n) {
    std::size_t bound = 0;
    while ((std::size_t{1} << bound) < n) ++bound;  // ceil(log2 n) for n >= 1
    return bound + 1;
}

std::vector<eval::Judgment> judgments_from_counts(const eval::Counts& counts) {
    std::vector<eval::Judgment> out;
    auto push = [&](eval::Verdict verdict, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            eval::Judgment j;
            j.stage = eval::Stage::stage2;
            j.item_key = "item";
            j.verdict = verdict;
            if (verdict != eval::Verdict::false_negative) j.predicted = "v";
            out.push_back(std::move(j));
        }
    };
    push(eval::Verdict::true_positive, counts.tp);
    push(eval::Verdict::acceptable_positive, counts.ap);
    push(eval::Verdict::false_positive, counts.fp);
    push(eval::Verdict::false_negative, counts.fn);
    return out;
}

// --- the individual checks ---

void check_cli_replay() {
    fixtures::TempDir dir;
    const fs::path records = replay_workspace(dir.path());

    const auto run = nlohmann::json::parse(read_file(records / "run.json"));
    expect(run["backend"] == "replay", "run did not use the replay backend");
    expect(run["counters"]["gateway_calls"] == 8,
           "expected 8 replayed completions");
    expect(run["notes"].empty(), "run produced unexpected notes");

    const auto beetle = record_for(records, "cabbage-stem-flea-beetle");
    expect(beetle["entities"].size() == 2, "expected the two worked entities");
    expect(beetle["entities"][0]["name"] == "Adults", "first entity name");
    expect(beetle["entities"][1]["name"] == "Larvae", "second entity name");

    const auto& adults = beetle["entities"][0]["attributes"];
    for (const auto& [name, value] : fixtures::adults_expected_attributes()) {
        expect(adults.contains(name), "Adults missing attribute " + name);
        expect(adults[name] == value, "Adults " + name + " is \"" +
                                          adults[name].get<std::string>() +
                                          "\", wanted \"" + value + "\"");
    }
    const auto& larvae = beetle["entities"][1]["attributes"];
    const std::vector<std::pair<std::string, std::string>> larvae_expected = {
        {"colour", "White, with very small dark spots on the back"},
        {"size", "Up to 6 mm when mature"},
        {"body part", "Black head and tail, three pairs of dark legs"},
    };
    for (const auto& [name, value] : larvae_expected) {
        expect(larvae.contains(name) && larvae[name] == value,
               "Larvae " + name + " mismatch");
    }

    const auto margins = record_for(records, "field-margins");
    expect(margins["entities"].empty(),
           "the filtered-out document gained entities");
}

void check_canonicalization() {
    auto gateway = make_gateway(fixtures::beetle_model(true));
    auto beetle = corpus::ingest_document(
        fixtures::read_fixture("corpus/cabbage-stem-flea-beetle.txt"),
        "corpus/cabbage-stem-flea-beetle.txt");
    corpus::Corpus corpus;
    corpus.add(std::move(beetle), {});

    std::vector<std::string> notes;
    const auto spans = pipeline::stage1_extract_descriptors(
        corpus.chunks(), corpus, gateway, 1, notes);
    expect(spans.size() == 10, "expected the ten worked descriptors");

    const auto candidates =
        pipeline::stage2_derive_attributes(spans, gateway, 50, notes);
    const std::vector<std::pair<std::string, std::size_t>> expected_counts = {
        {"colour", 4}, {"size", 1},      {"behavior", 1},
        {"antennae", 1}, {"legs", 1},    {"body part", 2},
    };
    expect(candidates.size() == expected_counts.size(),
           "candidate attribute count");
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        expect(candidates[i].name == expected_counts[i].first &&
                   candidates[i].frequency() == expected_counts[i].second,
               "candidate " + candidates[i].name + " has frequency " +
                   std::to_string(candidates[i].frequency()));
    }

    const auto outcome =
        pipeline::canonicalize_attributes(candidates, gateway, notes);
    expect(!outcome.used_fallback, "canonicalization fell back");
    const auto& attrs = outcome.attributes;
    expect(attrs.size() == 4, "expected four canonical attributes, got " +
                                  std::to_string(attrs.size()));
    const std::vector<std::string> order = {"colour", "size", "behavior",
                                            "body part"};
    for (std::size_t i = 0; i < order.size(); ++i) {
        expect(attrs[i].name == order[i],
               "canonical slot " + std::to_string(i) + " is " + attrs[i].name);
    }
    const std::vector<std::string> merged = {"body part", "antennae", "legs"};
    expect(attrs[3].merged_from == merged,
           "body part group did not keep the highest-frequency name");
    expect(notes.empty(), "canonicalization produced notes");
}

void check_filter_monotone() {
    std::mt19937 rng(20260819);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 256;
        const std::size_t prefix = rng() % (n + 1);
        const auto hits = ranked_hits(n);

        // Independent oracle: a linear scan finds the first irrelevant rank.
        std::size_t scan = 0;
        while (scan < n && scan < prefix) ++scan;

        std::size_t probes = 0;
        const auto outcome = ebr::ebr_filter(
            hits,
            [&](const vec::RetrievalHit& hit) {
                ++probes;
                return hit.rank < prefix;
            },
            64);

        expect(outcome.boundary == scan,
               "boundary " + std::to_string(outcome.boundary) + " != scan " +
                   std::to_string(scan) + " (n=" + std::to_string(n) + ")");
        expect(outcome.accepted.size() == scan, "accepted size");
        for (std::size_t i = 0; i < outcome.accepted.size(); ++i) {
            expect(outcome.accepted[i].rank == i, "accepted not a prefix");
        }
        expect(probes == outcome.probes_used, "probe count bookkeeping");
        expect(outcome.probes_used <= probe_budget(n),
               "used " + std::to_string(outcome.probes_used) + " probes for n=" +
                   std::to_string(n));
    }
}

void check_filter_adversarial() {
    std::mt19937 rng(424242);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 256;
        std::vector<char> verdicts(n);
        for (auto& v : verdicts) v = static_cast<char>(rng() % 2);
        const std::size_t max_probes = 1 + rng() % 10;
        const auto hits = ranked_hits(n);

        const auto outcome = ebr::ebr_filter(
            hits,
            [&](const vec::RetrievalHit& hit) {
                return verdicts[hit.rank] != 0;
            },
            max_probes);

        expect(outcome.boundary <= n, "boundary out of range");
        expect(outcome.accepted.size() == outcome.boundary,
               "accepted is not the boundary prefix");
        for (std::size_t i = 0; i < outcome.accepted.size(); ++i) {
            expect(outcome.accepted[i].rank == i &&
                       outcome.accepted[i].ref == hits[i].ref,
                   "accepted not a prefix of the ranked hits");
        }
        expect(outcome.probes_used <= max_probes, "probe cap exceeded");
        expect(outcome.probes_used <= probe_budget(n), "budget bound exceeded");
        expect(outcome.probe_log.size() == outcome.probes_used, "log size");
        for (const auto& probe : outcome.probe_log) {
            expect(probe.relevant == (probe.rank < outcome.boundary),
                   "a probe verdict contradicts the boundary");
        }
    }
}

void check_knn_exact() {
    std::mt19937 rng(97);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    const std::size_t dim = 256;

    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng() % 512;
        std::vector<vec::Vector> vectors(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (i > 0 && rng() % 8 == 0) {
                vectors[i] = vectors[rng() % i];  // exercise distance ties
            } else {
                vectors[i].resize(dim);
                for (auto& x : vectors[i]) x = coord(rng);
            }
        }
        vec::VectorIndex index({dim, vec::Metric::cosine_distance, 20});
        std::vector<std::string> ids(n);
        for (std::size_t i = 0; i < n; ++i) {
            char id[16];
            std::snprintf(id, sizeof(id), "c%04zu", i);
            ids[i] = id;
            index.add({ids[i], "d0"}, vectors[i]);
        }

        vec::Vector query(dim);
        for (auto& x : query) x = coord(rng);
        const std::size_t k = 1 + rng() % (n + 4);

        std::vector<std::pair<double, std::string>> brute(n);
        for (std::size_t i = 0; i < n; ++i) {
            brute[i] = {vec::cosine_distance(query, vectors[i]), ids[i]};
        }
        std::sort(brute.begin(), brute.end());
        brute.resize(std::min(k, n));

        const auto hits = index.knn_query_vector(query, k);
        expect(hits.size() == brute.size(), "result size differs");
        for (std::size_t i = 0; i < hits.size(); ++i) {
            expect(hits[i].ref.chunk_id == brute[i].second,
                   "rank " + std::to_string(i) + " id  " +
                       hits[i].ref.chunk_id + " != " + brute[i].second);
            expect(std::abs(hits[i].distance - brute[i].first) <= 1e-12,
                   "distance drifts from the direct computation");
            expect(hits[i].rank == i, "rank field");
        }
    }
}

void check_metrics() {
    // 19 of 25 exactly right, the remaining 6 wrong.
    std::vector<eval::GoldAnnotation> golds;
    std::vector<eval::Prediction> predictions;
    for (int i = 0; i < 25; ++i) {
        eval::GoldAnnotation gold;
        gold.stage = eval::Stage::stage2;
        gold.key_parts = {"doc", "descriptor " + std::to_string(i)};
        gold.correct = "value " + std::to_string(i);
        golds.push_back(gold);

        eval::Prediction prediction;
        prediction.stage = eval::Stage::stage2;
        prediction.key_parts = gold.key_parts;
        prediction.predicted =
            i < 19 ? gold.correct : std::string("something else");
        predictions.push_back(prediction);
    }
    const auto report = eval::compute_report(golds, predictions);
    const auto& metrics = report.stages.at(eval::Stage::stage2);
    expect(metrics.counts.tp == 19 && metrics.counts.fp == 6 &&
               metrics.counts.fn == 6,
           "hand-counted verdicts do not match");
    expect(std::abs(metrics.precision - 0.76) < 1e-12, "precision != 19/25");
    expect(std::abs(metrics.recall - 0.76) < 1e-12, "recall != 19/25");
    expect(eval::format_table(report).find("76%") != std::string::npos,
           "table does not show 76%");

    // Crediting acceptable answers can never lower a score.
    std::mt19937 rng(1701);
    for (int trial = 0; trial < 1000; ++trial) {
        eval::Counts counts{rng() % 13, rng() % 13, rng() % 13, rng() % 13};
        if (counts.tp + counts.ap + counts.fp + counts.fn == 0) continue;
        const auto judged = judgments_from_counts(counts);
        const auto m = eval::compute_metrics(judged, eval::Stage::stage2);
        expect(m.precision_ac >= m.precision - 1e-12 &&
                   m.recall_ac >= m.recall - 1e-12 &&
                   m.f1_ac >= m.f1 - 1e-12,
               "acceptable credit lowered a metric");
        for (double value : {m.precision, m.precision_ac, m.recall, m.recall_ac,
                             m.f1, m.f1_ac}) {
            expect(value >= 0.0 && value <= 1.0 + 1e-12, "metric out of range");
        }
    }

    // Zero denominators yield zero and the degenerate flag, not NaN.
    const auto only_fn =
        eval::compute_metrics(judgments_from_counts({0, 0, 0, 3}),
                              eval::Stage::stage2);
    expect(only_fn.degenerate && only_fn.precision == 0.0 && only_fn.f1 == 0.0,
           "no-prediction case is not flagged degenerate");
    const auto only_fp =
        eval::compute_metrics(judgments_from_counts({0, 0, 2, 0}),
                              eval::Stage::stage2);
    expect(only_fp.degenerate && only_fp.recall == 0.0,
           "no-gold case is not flagged degenerate");
}

void check_replay_determinism() {
    fixtures::TempDir first;
    fixtures::TempDir second;
    const fs::path records_a = replay_workspace(first.path());
    const fs::path records_b = replay_workspace(second.path());

    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(records_a)) {
        names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    expect(names.size() == 3, "expected two records plus the run summary");
    for (const auto& name : names) {
        expect(fs::exists(records_b / name), name + " missing in second run");
        expect(read_file(records_a / name) == read_file(records_b / name),
               name + " differs between identical replay runs");
    }
}

void check_parser_fuzz() {
    std::mt19937 rng(8675309);
    const std::string alphabet =
        "[]{}\",:.-*#0123456789 \n\tabcdefghijklmnopqrstuvwxyz"
        "ABCDEFGHIJKLMNOPQRSTUVWXYZ\xE2\x80\xA2\xC3\xA9\xF0\x9F\x90\x9E";
    const std::vector<std::string> seeds = {
        "[\"a\", \"b\"]", "- one\n- two", "1. first\n2. second",
        "{\"colour\": \"red\"}", "YES", "no", "The phrases are:", "",
    };

    for (int i = 0; i < 10000; ++i) {
        std::string input;
        if (i % 4 == 0) {
            input = seeds[rng() % seeds.size()];
            const std::size_t flips = 1 + rng() % 4;
            for (std::size_t f = 0; f < flips && !input.empty(); ++f) {
                input[rng() % input.size()] = alphabet[rng() % alphabet.size()];
            }
        } else {
            const std::size_t len = rng() % 300;
            input.reserve(len);
            for (std::size_t c = 0; c < len; ++c) {
                input.push_back(alphabet[rng() % alphabet.size()]);
            }
        }
        try {
            (void)llm::parse_list(input);
        } catch (const Error&) {
        }
        try {
            (void)llm::parse_json_object(input);
        } catch (const Error&) {
        }
        try {
            (void)llm::parse_yes_no(input);
        } catch (const Error&) {
        }
    }
}

bool check_live_smoke() {
    const char* endpoint = std::getenv("FINDER_SMOKE_ENDPOINT");
    const char* model = std::getenv("FINDER_SMOKE_MODEL");
    if (endpoint == nullptr || model == nullptr) return false;

    llm::RemoteBackendConfig remote;
    remote.endpoint = endpoint;
    remote.model = model;
    if (const char* key_env = std::getenv("FINDER_SMOKE_KEY_ENV")) {
        remote.api_key_env = key_env;
    }
    remote.retries = 1;
    llm::Gateway gateway(std::make_shared<llm::RemoteBackend>(remote));
    const bool verdict = gateway.ask_verdict(
        llm::TemplateId::relevance_judge,
        {{"intent", "mentions a colour"},
         {"context", "The beetle is metallic blue."}});
    expect(verdict, "live judge rejected an obviously relevant sentence");
    return true;
}

}  // namespace

int main() {
    std::cout << "acceptance checks\n=================\n";

    criterion("worked example replays through the CLI without a network", 5.0,
              check_cli_replay);
    criterion("attribute names canonicalize by group frequency", 2.0,
              check_canonicalization);
    criterion("filter boundary matches a linear scan on monotone oracles",
              10.0, check_filter_monotone);
    criterion("filter stays a ranked prefix within the probe budget", 10.0,
              check_filter_adversarial);
    criterion("knn results match brute force exactly", 30.0, check_knn_exact);
    criterion("metrics match hand counts and acceptable credit never hurts",
              5.0, check_metrics);
    criterion("identical replay runs write byte-identical outputs", 10.0,
              check_replay_determinism);
    criterion("answer parsers survive ten thousand fuzz inputs", 30.0,
              check_parser_fuzz);

    if (std::getenv("FINDER_SMOKE_ENDPOINT") != nullptr &&
        std::getenv("FINDER_SMOKE_MODEL") != nullptr) {
        criterion("live endpoint answers the relevance judge", 60.0,
                  [] { (void)check_live_smoke(); });
    } else {
        skip("live endpoint answers the relevance judge",
             "set FINDER_SMOKE_ENDPOINT and FINDER_SMOKE_MODEL to enable");
    }

    std::cout << (g_failures == 0 ? "all checks passed\n"
                                  : std::to_string(g_failures) +
                                        " check(s) failed\n");
    return g_failures;
}
