#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "skinstack/class_label.hpp"
#include "skinstack/detail/text.hpp"
#include "skinstack/error.hpp"

namespace skinstack {

/// counts[t][p]: samples with true class t predicted as p.
struct ConfusionMatrix {
    std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

    [[nodiscard]] std::uint64_t total() const noexcept {
        std::uint64_t sum = 0;
        for (const auto& row : counts) {
            for (const auto v : row) {
                sum += v;
            }
        }
        return sum;
    }
    [[nodiscard]] std::uint64_t trace() const noexcept {
        std::uint64_t sum = 0;
        for (std::size_t i = 0; i < kNumClasses; ++i) {
            sum += counts[i][i];
        }
        return sum;
    }
    [[nodiscard]] std::uint64_t row_sum(std::size_t t) const noexcept {
        std::uint64_t sum = 0;
        for (const auto v : counts[t]) {
            sum += v;
        }
        return sum;
    }
    [[nodiscard]] std::uint64_t column_sum(std::size_t p) const noexcept {
        std::uint64_t sum = 0;
        for (const auto& row : counts) {
            sum += row[p];
        }
        return sum;
    }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// One-vs-rest statistics for a single class.
struct ClassStats {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;
    std::uint64_t tn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;

    friend bool operator==(const ClassStats&, const ClassStats&) = default;
};

using ClassMetrics = std::array<ClassStats, kNumClasses>;

struct WeightedMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    friend bool operator==(const WeightedMetrics&, const WeightedMetrics&) = default;
};

struct EvaluationReport {
    std::string model_name;
    double accuracy = 0.0;
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;
    double weighted_f1 = 0.0;
    ClassMetrics per_class{};
    ConfusionMatrix confusion{};

    friend bool operator==(const EvaluationReport&, const EvaluationReport&) = default;
};

[[nodiscard]] inline ConfusionMatrix confusion(std::span<const ClassLabel> truth, std::span<const ClassLabel> predicted) {
    if (truth.size() != predicted.size()) {
        throw std::invalid_argument("label sequences differ in length: " + std::to_string(truth.size()) + " vs " +
                                    std::to_string(predicted.size()));
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto t = ordinal(truth[i]);
        const auto p = ordinal(predicted[i]);
        if (t >= kNumClasses || p >= kNumClasses) {
            throw std::invalid_argument("label ordinal out of range at position " + std::to_string(i));
        }
        ++cm.counts[t][p];
    }
    return cm;
}

/// Ordinal-based overload; ordinals are validated.
[[nodiscard]] inline ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size()) {
        throw std::invalid_argument("label sequences differ in length");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || predicted[i] < 0 || truth[i] >= static_cast<int>(kNumClasses) ||
            predicted[i] >= static_cast<int>(kNumClasses)) {
            throw std::invalid_argument("label ordinal out of range at position " + std::to_string(i));
        }
        ++cm.counts[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
    }
    return cm;
}

namespace detail {
[[nodiscard]] inline double safe_ratio(std::uint64_t num, std::uint64_t den) noexcept {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace detail

/// precision = TP / (TP + FP), recall = TP / (TP + FN),
/// f1 = 2 p r / (p + r); every 0/0 is taken as 0.
[[nodiscard]] inline ClassMetrics per_class_metrics(const ConfusionMatrix& cm) noexcept {
    ClassMetrics out{};
    const auto total = cm.total();
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        auto& s = out[c];
        s.tp = cm.counts[c][c];
        s.fp = cm.column_sum(c) - s.tp;
        s.fn = cm.row_sum(c) - s.tp;
        s.tn = total - s.tp - s.fp - s.fn;
        s.support = cm.row_sum(c);
        s.precision = detail::safe_ratio(s.tp, s.tp + s.fp);
        s.recall = detail::safe_ratio(s.tp, s.tp + s.fn);
        const double denom = s.precision + s.recall;
        s.f1 = denom > 0.0 ? 2.0 * s.precision * s.recall / denom : 0.0;
    }
    return out;
}

/// Matches over total; for single-label multi-class data this is the
/// one-vs-rest micro aggregate of (TP + TN) / (TP + TN + FP + FN).
[[nodiscard]] inline double accuracy(const ConfusionMatrix& cm) {
    const auto total = cm.total();
    if (total == 0) {
        throw std::invalid_argument("accuracy of an empty confusion matrix is undefined");
    }
    return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

/// Support-weighted mean of the per-class values.
[[nodiscard]] inline WeightedMetrics weighted_average(const ClassMetrics& per_class) {
    std::uint64_t total = 0;
    for (const auto& s : per_class) {
        total += s.support;
    }
    if (total == 0) {
        throw std::invalid_argument("weighted average needs at least one class with support");
    }
    WeightedMetrics w;
    for (const auto& s : per_class) {
        const double weight = static_cast<double>(s.support);
        w.precision += s.precision * weight;
        w.recall += static_cast<double>(s.tp);  // recall * support, kept integral
        w.f1 += s.f1 * weight;
    }
    const auto n = static_cast<double>(total);
    w.precision /= n;
    w.recall /= n;
    w.f1 /= n;
    return w;
}

[[nodiscard]] inline EvaluationReport evaluate_confusion(const ConfusionMatrix& cm, std::string model_name) {
    EvaluationReport r;
    r.model_name = std::move(model_name);
    r.confusion = cm;
    r.per_class = per_class_metrics(cm);
    r.accuracy = accuracy(cm);
    const auto w = weighted_average(r.per_class);
    r.weighted_precision = w.precision;
    r.weighted_recall = w.recall;
    r.weighted_f1 = w.f1;
    return r;
}

[[nodiscard]] inline EvaluationReport evaluate(std::span<const ClassLabel> truth, std::span<const ClassLabel> predicted,
                                               std::string model_name) {
    return evaluate_confusion(confusion(truth, predicted), std::move(model_name));
}

// ---------------------------------------------------------------------------
// Serialisation

[[nodiscard]] inline nlohmann::ordered_json to_json(const EvaluationReport& r) {
    nlohmann::ordered_json j;
    j["model_name"] = r.model_name;
    j["samples"] = r.confusion.total();
    j["accuracy"] = r.accuracy;
    j["weighted_average"] = {
        {"precision", r.weighted_precision}, {"recall", r.weighted_recall}, {"f1", r.weighted_f1}};
    auto classes = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const auto& s = r.per_class[c];
        classes.push_back({{"class", std::string(symbol(label_from_ordinal(c)))},
                           {"code", std::string(short_code(label_from_ordinal(c)))},
                           {"precision", s.precision},
                           {"recall", s.recall},
                           {"f1", s.f1},
                           {"support", s.support},
                           {"tp", s.tp},
                           {"fp", s.fp},
                           {"fn", s.fn},
                           {"tn", s.tn}});
    }
    j["per_class"] = std::move(classes);
    auto rows = nlohmann::ordered_json::array();
    for (const auto& row : r.confusion.counts) {
        rows.push_back(row);
    }
    j["confusion"] = std::move(rows);
    return j;
}

[[nodiscard]] inline EvaluationReport report_from_json(const nlohmann::json& j) {
    try {
        EvaluationReport r;
        r.model_name = j.at("model_name").get<std::string>();
        r.accuracy = j.at("accuracy").get<double>();
        const auto& w = j.at("weighted_average");
        r.weighted_precision = w.at("precision").get<double>();
        r.weighted_recall = w.at("recall").get<double>();
        r.weighted_f1 = w.at("f1").get<double>();
        const auto& rows = j.at("confusion");
        if (rows.size() != kNumClasses) {
            throw DataError("confusion matrix must have 7 rows");
        }
        for (std::size_t t = 0; t < kNumClasses; ++t) {
            if (rows[t].size() != kNumClasses) {
                throw DataError("confusion matrix row " + std::to_string(t) + " must have 7 entries");
            }
            for (std::size_t p = 0; p < kNumClasses; ++p) {
                r.confusion.counts[t][p] = rows[t][p].get<std::uint64_t>();
            }
        }
        const auto& classes = j.at("per_class");
        if (classes.size() != kNumClasses) {
            throw DataError("per_class must list 7 classes");
        }
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            auto& s = r.per_class[c];
            const auto& e = classes[c];
            s.precision = e.at("precision").get<double>();
            s.recall = e.at("recall").get<double>();
            s.f1 = e.at("f1").get<double>();
            s.support = e.at("support").get<std::uint64_t>();
            s.tp = e.value("tp", std::uint64_t{0});
            s.fp = e.value("fp", std::uint64_t{0});
            s.fn = e.value("fn", std::uint64_t{0});
            s.tn = e.value("tn", std::uint64_t{0});
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed evaluation report: ") + e.what());
    }
}

inline void save_report(const EvaluationReport& r, const std::filesystem::path& path) {
    detail::write_file(path, to_json(r).dump(2) + "\n");
}

[[nodiscard]] inline EvaluationReport load_report(const std::filesystem::path& path) {
    const auto text = detail::read_file(path);
    try {
        return report_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

inline constexpr std::string_view kSummaryHeader = "model,accuracy,precision,recall,f1";

/// Table-column-order summary row at full precision.
[[nodiscard]] inline std::string summary_row(const EvaluationReport& r) {
    return r.model_name + "," + detail::format_double(r.accuracy) + "," + detail::format_double(r.weighted_precision) +
           "," + detail::format_double(r.weighted_recall) + "," + detail::format_double(r.weighted_f1);
}

}  // namespace skinstack
