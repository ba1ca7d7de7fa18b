#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace finder::eval {

enum class Stage { stage2, stage3, stage4 };

std::string to_string(Stage stage);
Stage stage_from_string(std::string_view name);

/// One human-annotated answer. The item key identifies what was asked:
/// (doc_id, descriptor) for stage 2, (doc_id) for stage 3, and
/// (doc_id, entity, attribute) for stage 4.
struct GoldAnnotation {
    Stage stage = Stage::stage2;
    std::vector<std::string> key_parts;
    std::string correct;
    std::vector<std::string> acceptable;

    std::string normalized_key() const;
    std::string display_key() const;
};

struct Prediction {
    Stage stage = Stage::stage2;
    std::vector<std::string> key_parts;
    std::string predicted;

    std::string normalized_key() const;
    std::string display_key() const;
};

enum class Verdict {
    true_positive,
    acceptable_positive,
    false_positive,
    false_negative,
};

std::string to_string(Verdict verdict);

struct Judgment {
    Stage stage = Stage::stage2;
    std::string item_key;
    std::optional<std::string> predicted;
    Verdict verdict = Verdict::false_negative;
};

struct Counts {
    std::size_t tp = 0;
    std::size_t ap = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
};

/// Plain metrics count acceptable answers as wrong; the AC variants count
/// them as right. Zero denominators yield 0 with the degenerate flag set.
struct StageMetrics {
    Counts counts;
    double precision = 0.0;
    double precision_ac = 0.0;
    double recall = 0.0;
    double recall_ac = 0.0;
    double f1 = 0.0;
    double f1_ac = 0.0;
    bool degenerate = false;
};

struct MetricsReport {
    std::map<Stage, StageMetrics> stages;
    std::vector<Judgment> judgments;
    // AC rows for stage 3 are shown only when some stage-3 annotation
    // actually offers acceptable alternatives.
    bool stage3_ac_applicable = false;
};

/// Normalized comparison (lowercase, collapsed whitespace, edge punctuation
/// stripped) of one prediction against one annotation.
Verdict match_prediction(const std::optional<std::string>& predicted,
                         const GoldAnnotation& gold);

/// Matches predictions to annotations grouped by item key: exact matches
/// claim annotations first, then acceptable matches; leftover predictions
/// are false positives and leftover annotations false negatives.
std::vector<Judgment> judge_predictions(
    const std::vector<GoldAnnotation>& golds,
    const std::vector<Prediction>& predictions);

/// Tallies one stage's judgments. Throws NoJudgments when the stage has none.
StageMetrics compute_metrics(const std::vector<Judgment>& judgments,
                             Stage stage);

MetricsReport compute_report(const std::vector<GoldAnnotation>& golds,
                             const std::vector<Prediction>& predictions);

/// Gold / prediction files: a JSON object {"stage": ..., "items": [...]} or
/// an array of such objects. Item fields per stage are documented in the
/// README. SchemaError carries the item index of the offending entry.
std::vector<GoldAnnotation> load_gold(const std::filesystem::path& path);
std::vector<Prediction> load_predictions(const std::filesystem::path& path);

void export_report(const MetricsReport& report,
                   const std::filesystem::path& path);
MetricsReport load_report(const std::filesystem::path& path);

/// Plain-text table: one column per stage, rows for precision/recall (plain
/// and AC) and F1, percentages rounded to whole points.
std::string format_table(const MetricsReport& report);

}  // namespace finder::eval
