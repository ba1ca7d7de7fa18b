#include "finder/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "finder/errors.hpp"
#include "finder/io.hpp"
#include "finder/text.hpp"

namespace finder::eval {

using text::normalize_for_match;

namespace {

std::string join_parts(const std::vector<std::string>& parts,
                       const std::string& sep, bool normalized) {
    std::string out;
    for (const auto& part : parts) {
        if (!out.empty()) out += sep;
        out += normalized ? normalize_for_match(part) : part;
    }
    return out;
}

const char* stage_key_fields(Stage stage, std::size_t index) {
    static const char* kStage2[] = {"doc_id", "descriptor"};
    static const char* kStage3[] = {"doc_id"};
    static const char* kStage4[] = {"doc_id", "entity", "attribute"};
    switch (stage) {
        case Stage::stage2: return index < 2 ? kStage2[index] : nullptr;
        case Stage::stage3: return index < 1 ? kStage3[index] : nullptr;
        case Stage::stage4: return index < 3 ? kStage4[index] : nullptr;
    }
    return nullptr;
}

std::vector<std::string> read_key_parts(const nlohmann::json& item, Stage stage,
                                        std::size_t item_index) {
    std::vector<std::string> parts;
    for (std::size_t f = 0; stage_key_fields(stage, f) != nullptr; ++f) {
        const char* field = stage_key_fields(stage, f);
        if (!item.contains(field) || !item[field].is_string() ||
            item[field].get<std::string>().empty()) {
            throw SchemaError("item " + std::to_string(item_index) +
                              ": missing or empty \"" + field + "\"");
        }
        parts.push_back(item[field].get<std::string>());
    }
    return parts;
}

// Applies fn to every {stage, items} block in the file (a single object or
// an array of objects).
template <typename Fn>
void for_each_block(const std::filesystem::path& path, Fn&& fn) {
    nlohmann::json doc = nlohmann::json::parse(read_file(path), nullptr,
                                               /*allow_exceptions=*/false);
    if (doc.is_discarded()) {
        throw SchemaError("not valid JSON: " + path.string());
    }
    nlohmann::json blocks = doc.is_array() ? doc : nlohmann::json::array({doc});
    for (const auto& block : blocks) {
        if (!block.is_object() || !block.contains("stage") ||
            !block["stage"].is_string() || !block.contains("items") ||
            !block["items"].is_array()) {
            throw SchemaError("each block needs \"stage\" and \"items\": " +
                              path.string());
        }
        const Stage stage = stage_from_string(block["stage"].get<std::string>());
        fn(stage, block["items"]);
    }
}

double ratio(std::size_t numerator, std::size_t denominator) {
    if (denominator == 0) return 0.0;
    return static_cast<double>(numerator) / static_cast<double>(denominator);
}

double harmonic(double a, double b) {
    if (a + b == 0.0) return 0.0;
    return 2.0 * a * b / (a + b);
}

std::string percent_cell(double value) {
    return std::to_string(std::llround(value * 100.0)) + "%";
}

}  // namespace

std::string to_string(Stage stage) {
    switch (stage) {
        case Stage::stage2: return "stage2";
        case Stage::stage3: return "stage3";
        case Stage::stage4: return "stage4";
    }
    return "stage2";
}

Stage stage_from_string(std::string_view name) {
    if (name == "stage2") return Stage::stage2;
    if (name == "stage3") return Stage::stage3;
    if (name == "stage4") return Stage::stage4;
    throw SchemaError("unknown stage: " + std::string(name));
}

std::string to_string(Verdict verdict) {
    switch (verdict) {
        case Verdict::true_positive: return "true_positive";
        case Verdict::acceptable_positive: return "acceptable_positive";
        case Verdict::false_positive: return "false_positive";
        case Verdict::false_negative: return "false_negative";
    }
    return "false_negative";
}

std::string GoldAnnotation::normalized_key() const {
    return join_parts(key_parts, "\x1f", true);
}

std::string GoldAnnotation::display_key() const {
    return join_parts(key_parts, " / ", false);
}

std::string Prediction::normalized_key() const {
    return join_parts(key_parts, "\x1f", true);
}

std::string Prediction::display_key() const {
    return join_parts(key_parts, " / ", false);
}

Verdict match_prediction(const std::optional<std::string>& predicted,
                         const GoldAnnotation& gold) {
    if (!predicted.has_value()) return Verdict::false_negative;
    const std::string norm = normalize_for_match(*predicted);
    if (norm == normalize_for_match(gold.correct)) {
        return Verdict::true_positive;
    }
    for (const auto& alternative : gold.acceptable) {
        if (norm == normalize_for_match(alternative)) {
            return Verdict::acceptable_positive;
        }
    }
    return Verdict::false_positive;
}

std::vector<Judgment> judge_predictions(
    const std::vector<GoldAnnotation>& golds,
    const std::vector<Prediction>& predictions) {
    struct Group {
        std::vector<std::size_t> gold_indices;
        std::vector<std::size_t> pred_indices;
    };
    std::map<std::pair<Stage, std::string>, Group> groups;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        groups[{golds[i].stage, golds[i].normalized_key()}].gold_indices.push_back(i);
    }
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        groups[{predictions[i].stage, predictions[i].normalized_key()}]
            .pred_indices.push_back(i);
    }

    std::vector<Judgment> judgments;
    for (const auto& [key, group] : groups) {
        std::vector<bool> gold_taken(group.gold_indices.size(), false);
        std::vector<int> pred_match(group.pred_indices.size(), -1);
        std::vector<Verdict> pred_verdict(group.pred_indices.size(),
                                          Verdict::false_positive);

        // Exact matches claim annotations first, then acceptable matches;
        // within each pass, file order.
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t p = 0; p < group.pred_indices.size(); ++p) {
                if (pred_match[p] >= 0) continue;
                const auto& predicted = predictions[group.pred_indices[p]].predicted;
                for (std::size_t g = 0; g < group.gold_indices.size(); ++g) {
                    if (gold_taken[g]) continue;
                    const auto& gold = golds[group.gold_indices[g]];
                    const Verdict verdict = match_prediction(predicted, gold);
                    const bool want = pass == 0
                                          ? verdict == Verdict::true_positive
                                          : verdict == Verdict::acceptable_positive;
                    if (want) {
                        gold_taken[g] = true;
                        pred_match[p] = static_cast<int>(g);
                        pred_verdict[p] = verdict;
                        break;
                    }
                }
            }
        }

        for (std::size_t p = 0; p < group.pred_indices.size(); ++p) {
            const auto& prediction = predictions[group.pred_indices[p]];
            judgments.push_back({key.first, prediction.display_key(),
                                 prediction.predicted, pred_verdict[p]});
        }
        for (std::size_t g = 0; g < group.gold_indices.size(); ++g) {
            if (gold_taken[g]) continue;
            const auto& gold = golds[group.gold_indices[g]];
            judgments.push_back({key.first, gold.display_key(), std::nullopt,
                                 Verdict::false_negative});
        }
    }
    return judgments;
}

StageMetrics compute_metrics(const std::vector<Judgment>& judgments,
                             Stage stage) {
    StageMetrics metrics;
    std::size_t seen = 0;
    for (const auto& judgment : judgments) {
        if (judgment.stage != stage) continue;
        ++seen;
        switch (judgment.verdict) {
            case Verdict::true_positive: ++metrics.counts.tp; break;
            case Verdict::acceptable_positive: ++metrics.counts.ap; break;
            case Verdict::false_positive: ++metrics.counts.fp; break;
            case Verdict::false_negative: ++metrics.counts.fn; break;
        }
    }
    if (seen == 0) {
        throw NoJudgments("no judgments for " + to_string(stage));
    }
    const Counts& c = metrics.counts;
    const std::size_t pred_denominator = c.tp + c.ap + c.fp;
    const std::size_t gold_denominator = c.tp + c.ap + c.fn;
    metrics.degenerate = pred_denominator == 0 || gold_denominator == 0;
    metrics.precision = ratio(c.tp, pred_denominator);
    metrics.precision_ac = ratio(c.tp + c.ap, pred_denominator);
    metrics.recall = ratio(c.tp, gold_denominator);
    metrics.recall_ac = ratio(c.tp + c.ap, gold_denominator);
    metrics.f1 = harmonic(metrics.precision, metrics.recall);
    metrics.f1_ac = harmonic(metrics.precision_ac, metrics.recall_ac);
    return metrics;
}

MetricsReport compute_report(const std::vector<GoldAnnotation>& golds,
                             const std::vector<Prediction>& predictions) {
    MetricsReport report;
    report.judgments = judge_predictions(golds, predictions);
    for (Stage stage : {Stage::stage2, Stage::stage3, Stage::stage4}) {
        try {
            report.stages[stage] = compute_metrics(report.judgments, stage);
        } catch (const NoJudgments&) {
        }
    }
    for (const auto& gold : golds) {
        if (gold.stage == Stage::stage3 && !gold.acceptable.empty()) {
            report.stage3_ac_applicable = true;
        }
    }
    return report;
}

std::vector<GoldAnnotation> load_gold(const std::filesystem::path& path) {
    std::vector<GoldAnnotation> golds;
    for_each_block(path, [&](Stage stage, const nlohmann::json& items) {
        std::size_t index = 0;
        for (const auto& item : items) {
            GoldAnnotation gold;
            gold.stage = stage;
            gold.key_parts = read_key_parts(item, stage, index);
            if (!item.contains("correct") || !item["correct"].is_string() ||
                item["correct"].get<std::string>().empty()) {
                throw SchemaError("item " + std::to_string(index) +
                                  ": missing or empty \"correct\"");
            }
            gold.correct = item["correct"].get<std::string>();
            if (item.contains("acceptable")) {
                if (!item["acceptable"].is_array()) {
                    throw SchemaError("item " + std::to_string(index) +
                                      ": \"acceptable\" must be an array");
                }
                for (const auto& alternative : item["acceptable"]) {
                    if (!alternative.is_string() ||
                        alternative.get<std::string>().empty()) {
                        throw SchemaError("item " + std::to_string(index) +
                                          ": acceptable entries must be "
                                          "non-empty strings");
                    }
                    gold.acceptable.push_back(alternative.get<std::string>());
                }
            }
            const std::string norm_correct = normalize_for_match(gold.correct);
            for (const auto& alternative : gold.acceptable) {
                if (normalize_for_match(alternative) == norm_correct) {
                    throw SchemaError(
                        "item " + std::to_string(index) +
                        ": correct answer duplicated in \"acceptable\"");
                }
            }
            golds.push_back(std::move(gold));
            ++index;
        }
    });
    return golds;
}

std::vector<Prediction> load_predictions(const std::filesystem::path& path) {
    std::vector<Prediction> predictions;
    for_each_block(path, [&](Stage stage, const nlohmann::json& items) {
        std::size_t index = 0;
        for (const auto& item : items) {
            Prediction prediction;
            prediction.stage = stage;
            prediction.key_parts = read_key_parts(item, stage, index);
            if (!item.contains("predicted") || !item["predicted"].is_string() ||
                item["predicted"].get<std::string>().empty()) {
                throw SchemaError("item " + std::to_string(index) +
                                  ": missing or empty \"predicted\"");
            }
            prediction.predicted = item["predicted"].get<std::string>();
            predictions.push_back(std::move(prediction));
            ++index;
        }
    });
    return predictions;
}

void export_report(const MetricsReport& report,
                   const std::filesystem::path& path) {
    nlohmann::ordered_json doc;
    auto stages = nlohmann::ordered_json::object();
    for (const auto& [stage, metrics] : report.stages) {
        stages[to_string(stage)] = {
            {"counts",
             {{"tp", metrics.counts.tp},
              {"ap", metrics.counts.ap},
              {"fp", metrics.counts.fp},
              {"fn", metrics.counts.fn}}},
            {"precision", metrics.precision},
            {"precision_ac", metrics.precision_ac},
            {"recall", metrics.recall},
            {"recall_ac", metrics.recall_ac},
            {"f1", metrics.f1},
            {"f1_ac", metrics.f1_ac},
            {"degenerate", metrics.degenerate},
        };
    }
    doc["stages"] = std::move(stages);
    doc["stage3_ac_applicable"] = report.stage3_ac_applicable;
    auto judgments = nlohmann::ordered_json::array();
    for (const auto& judgment : report.judgments) {
        nlohmann::ordered_json row = {
            {"stage", to_string(judgment.stage)},
            {"item_key", judgment.item_key},
            {"predicted", judgment.predicted.has_value()
                              ? nlohmann::ordered_json(*judgment.predicted)
                              : nlohmann::ordered_json(nullptr)},
            {"verdict", to_string(judgment.verdict)},
        };
        judgments.push_back(std::move(row));
    }
    doc["judgments"] = std::move(judgments);
    write_file_atomic(path, doc.dump(2) + "\n");
}

MetricsReport load_report(const std::filesystem::path& path) {
    nlohmann::json doc = nlohmann::json::parse(read_file(path), nullptr,
                                               /*allow_exceptions=*/false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("stages")) {
        throw SchemaError("not a report file: " + path.string());
    }
    MetricsReport report;
    report.stage3_ac_applicable = doc.value("stage3_ac_applicable", false);
    for (const auto& [name, value] : doc["stages"].items()) {
        StageMetrics metrics;
        metrics.counts.tp = value.at("counts").at("tp").get<std::size_t>();
        metrics.counts.ap = value.at("counts").at("ap").get<std::size_t>();
        metrics.counts.fp = value.at("counts").at("fp").get<std::size_t>();
        metrics.counts.fn = value.at("counts").at("fn").get<std::size_t>();
        metrics.precision = value.at("precision").get<double>();
        metrics.precision_ac = value.at("precision_ac").get<double>();
        metrics.recall = value.at("recall").get<double>();
        metrics.recall_ac = value.at("recall_ac").get<double>();
        metrics.f1 = value.at("f1").get<double>();
        metrics.f1_ac = value.at("f1_ac").get<double>();
        metrics.degenerate = value.at("degenerate").get<bool>();
        report.stages[stage_from_string(name)] = metrics;
    }
    for (const auto& row : doc.value("judgments", nlohmann::json::array())) {
        Judgment judgment;
        judgment.stage = stage_from_string(row.at("stage").get<std::string>());
        judgment.item_key = row.at("item_key").get<std::string>();
        if (row.contains("predicted") && row["predicted"].is_string()) {
            judgment.predicted = row["predicted"].get<std::string>();
        }
        const std::string verdict = row.at("verdict").get<std::string>();
        if (verdict == "true_positive") {
            judgment.verdict = Verdict::true_positive;
        } else if (verdict == "acceptable_positive") {
            judgment.verdict = Verdict::acceptable_positive;
        } else if (verdict == "false_positive") {
            judgment.verdict = Verdict::false_positive;
        } else if (verdict == "false_negative") {
            judgment.verdict = Verdict::false_negative;
        } else {
            throw SchemaError("unknown verdict: " + verdict);
        }
        report.judgments.push_back(std::move(judgment));
    }
    return report;
}

std::string format_table(const MetricsReport& report) {
    const Stage stages[] = {Stage::stage2, Stage::stage3, Stage::stage4};
    const char* columns[] = {"Stage 2", "Stage 3", "Stage 4"};

    auto cell = [&](Stage stage, bool ac_row, double StageMetrics::*field) {
        auto found = report.stages.find(stage);
        if (found == report.stages.end()) return std::string("-");
        if (ac_row && stage == Stage::stage3 && !report.stage3_ac_applicable) {
            return std::string("-");
        }
        return percent_cell(found->second.*field);
    };

    struct Row {
        const char* label;
        bool ac;
        double StageMetrics::*field;
    };
    const Row rows[] = {
        {"Precision", false, &StageMetrics::precision},
        {"Precision AC.", true, &StageMetrics::precision_ac},
        {"Recall", false, &StageMetrics::recall},
        {"Recall AC.", true, &StageMetrics::recall_ac},
        {"F1", false, &StageMetrics::f1},
        {"F1 AC.", true, &StageMetrics::f1_ac},
    };

    std::ostringstream out;
    out << std::left << std::setw(16) << "Metric";
    for (const char* column : columns) {
        out << std::right << std::setw(10) << column;
    }
    out << "\n";
    for (const auto& row : rows) {
        out << std::left << std::setw(16) << row.label;
        for (std::size_t s = 0; s < 3; ++s) {
            out << std::right << std::setw(10) << cell(stages[s], row.ac, row.field);
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace finder::eval
