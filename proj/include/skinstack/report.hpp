#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "skinstack/class_label.hpp"
#include "skinstack/detail/text.hpp"
#include "skinstack/error.hpp"
#include "skinstack/evaluation.hpp"
#include "skinstack/model_spec.hpp"
#include "skinstack/predictions.hpp"
#include "skinstack/stacking.hpp"

namespace skinstack {

/// Name as printed in the tables: "Inceptionv3", "Resnet-50",
/// "Densenet-Mobilenet". Unknown names are printed verbatim.
[[nodiscard]] inline std::string table_name(const std::string& model_name) {
    if (const auto b = parse_backbone(model_name)) {
        return std::string(display_name(*b));
    }
    if (const auto s = parse_stack_name(model_name)) {
        return std::string(display_name(*s));
    }
    return model_name;
}

namespace detail {

// Reference single-model ordering, used to break accuracy ties.
inline constexpr std::array<BackboneId, kNumBackbones> kTableOneOrder = {
    BackboneId::kInceptionV3, BackboneId::kXception, BackboneId::kDenseNet,    BackboneId::kMobileNet,
    BackboneId::kResNet50,    BackboneId::kCnnBaseline, BackboneId::kVgg16,
};

inline std::size_t table_one_rank(const std::string& model_name) {
    if (const auto b = parse_backbone(model_name)) {
        return static_cast<std::size_t>(std::find(kTableOneOrder.begin(), kTableOneOrder.end(), *b) -
                                        kTableOneOrder.begin());
    }
    return kTableOneOrder.size();
}

inline std::size_t stack_rank(const std::string& model_name) {
    if (const auto s = parse_stack_name(model_name)) {
        return static_cast<std::size_t>(*s);
    }
    return kNumStacks;
}

}  // namespace detail

/// Single models by accuracy, highest first; ties keep the reference order,
/// then the name.
[[nodiscard]] inline std::vector<EvaluationReport> order_table_one(std::vector<EvaluationReport> reports) {
    std::stable_sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) {
        if (a.accuracy != b.accuracy) {
            return a.accuracy > b.accuracy;
        }
        const auto ra = detail::table_one_rank(a.model_name);
        const auto rb = detail::table_one_rank(b.model_name);
        return ra != rb ? ra < rb : a.model_name < b.model_name;
    });
    return reports;
}

/// Stacks in their reference order, unknown names last.
[[nodiscard]] inline std::vector<EvaluationReport> order_table_two(std::vector<EvaluationReport> reports) {
    std::stable_sort(reports.begin(), reports.end(), [](const auto& a, const auto& b) {
        const auto ra = detail::stack_rank(a.model_name);
        const auto rb = detail::stack_rank(b.model_name);
        return ra != rb ? ra < rb : a.model_name < b.model_name;
    });
    return reports;
}

/// Aligned text table with two-decimal values, in the given row order.
[[nodiscard]] inline std::string render_table(const std::string& title, const std::vector<EvaluationReport>& rows) {
    std::size_t name_width = 5;
    for (const auto& r : rows) {
        name_width = std::max(name_width, table_name(r.model_name).size());
    }
    std::ostringstream out;
    out << title << '\n';
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-*s  %8s  %9s  %6s  %8s\n", static_cast<int>(name_width), "Model", "Accuracy",
                  "Precision", "Recall", "F1-Score");
    out << buf;
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-*s  %8s  %9s  %6s  %8s\n", static_cast<int>(name_width),
                      table_name(r.model_name).c_str(), detail::format_2dp(r.accuracy).c_str(),
                      detail::format_2dp(r.weighted_precision).c_str(), detail::format_2dp(r.weighted_recall).c_str(),
                      detail::format_2dp(r.weighted_f1).c_str());
        out << buf;
    }
    return out.str();
}

/// Machine-readable companion: full precision, same row order.
[[nodiscard]] inline std::string render_table_csv(const std::vector<EvaluationReport>& rows) {
    std::string out(kSummaryHeader);
    out += '\n';
    for (const auto& r : rows) {
        auto copy = r;
        copy.model_name = table_name(r.model_name);
        out += summary_row(copy);
        out += '\n';
    }
    return out;
}

// ---- plots --------------------------------------------------------------

namespace detail {

inline const cv::Scalar kBlack(0, 0, 0);
inline const cv::Scalar kWhite(255, 255, 255);
inline const cv::Scalar kGrey(200, 200, 200);
inline const cv::Scalar kBlue(180, 119, 31);    // BGR
inline const cv::Scalar kOrange(14, 127, 255);  // BGR

inline void put_text(cv::Mat& img, const std::string& text, cv::Point origin, double scale, const cv::Scalar& color,
                     bool centered = false) {
    int baseline = 0;
    const auto size = cv::getTextSize(text, cv::FONT_HERSHEY_SIMPLEX, scale, 1, &baseline);
    if (centered) {
        origin.x -= size.width / 2;
        origin.y += size.height / 2;
    }
    cv::putText(img, text, origin, cv::FONT_HERSHEY_SIMPLEX, scale, color, 1, cv::LINE_AA);
}

// White -> dark blue ramp.
inline cv::Scalar heat_color(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const auto mix = [t](double a, double b) { return a + (b - a) * t; };
    return {mix(255, 107), mix(255, 48), mix(255, 8)};
}

inline void write_png(const cv::Mat& img, const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    if (!cv::imwrite(path.string(), img)) {
        throw DataError("cannot write image: " + path.string());
    }
}

}  // namespace detail

/// Confusion matrix heatmap annotated with integer counts. Rows are true
/// classes, columns predicted classes; colour is the count relative to the
/// largest cell.
[[nodiscard]] inline cv::Mat render_confusion(const ConfusionMatrix& cm, const std::string& title) {
    constexpr int kCell = 60;
    constexpr int kLeft = 110;
    constexpr int kTop = 70;
    constexpr int kN = static_cast<int>(kNumClasses);
    cv::Mat img(kTop + kN * kCell + 60, kLeft + kN * kCell + 30, CV_8UC3, detail::kWhite);
    std::uint64_t peak = 0;
    for (const auto& row : cm.counts) {
        for (const auto v : row) {
            peak = std::max(peak, v);
        }
    }
    detail::put_text(img, title, {kLeft, 30}, 0.6, detail::kBlack);
    for (int t = 0; t < kN; ++t) {
        for (int p = 0; p < kN; ++p) {
            const auto v = cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
            const double frac = peak == 0 ? 0.0 : static_cast<double>(v) / static_cast<double>(peak);
            const cv::Rect cell(kLeft + p * kCell, kTop + t * kCell, kCell, kCell);
            cv::rectangle(img, cell, detail::heat_color(frac), cv::FILLED);
            cv::rectangle(img, cell, detail::kGrey, 1);
            detail::put_text(img, std::to_string(v), {cell.x + kCell / 2, cell.y + kCell / 2}, 0.5,
                             frac > 0.5 ? detail::kWhite : detail::kBlack, true);
        }
        const auto code = std::string(short_code(label_from_ordinal(static_cast<std::size_t>(t))));
        detail::put_text(img, code, {kLeft - 60, kTop + t * kCell + kCell / 2 + 5}, 0.5, detail::kBlack);
        detail::put_text(img, code, {kLeft + t * kCell + kCell / 2, kTop + kN * kCell + 18}, 0.5, detail::kBlack,
                         true);
    }
    detail::put_text(img, "predicted", {kLeft + kN * kCell / 2, kTop + kN * kCell + 45}, 0.5, detail::kBlack, true);
    detail::put_text(img, "true", {10, kTop - 10}, 0.5, detail::kBlack);
    return img;
}

namespace detail {

// One panel: two series against epoch, with axes, ticks and legend.
inline void draw_panel(cv::Mat& img, cv::Rect area, const std::string& title, const std::vector<double>& a,
                       const std::vector<double>& b, const std::string& label_a, const std::string& label_b) {
    const int left = area.x + 55;
    const int right = area.x + area.width - 15;
    const int top = area.y + 35;
    const int bottom = area.y + area.height - 40;
    put_text(img, title, {area.x + area.width / 2, area.y + 12}, 0.55, kBlack, true);
    double lo = 0.0;
    double hi = 1.0;
    if (!a.empty()) {
        lo = std::min(*std::min_element(a.begin(), a.end()), *std::min_element(b.begin(), b.end()));
        hi = std::max(*std::max_element(a.begin(), a.end()), *std::max_element(b.begin(), b.end()));
    }
    if (hi - lo < 1e-9) {
        lo -= 0.5;
        hi += 0.5;
    }
    const auto n = std::max<std::size_t>(a.size(), 1);
    const auto px = [&](std::size_t i) {
        return n == 1 ? (left + right) / 2
                      : left + static_cast<int>(std::lround(static_cast<double>(i) * (right - left) /
                                                            static_cast<double>(n - 1)));
    };
    const auto py = [&](double v) {
        return bottom - static_cast<int>(std::lround((v - lo) / (hi - lo) * (bottom - top)));
    };
    cv::line(img, {left, top}, {left, bottom}, kBlack, 1);
    cv::line(img, {left, bottom}, {right, bottom}, kBlack, 1);
    for (int k = 0; k <= 4; ++k) {
        const double v = lo + (hi - lo) * k / 4.0;
        const int y = py(v);
        cv::line(img, {left - 4, y}, {left, y}, kBlack, 1);
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        put_text(img, buf, {area.x + 5, y + 4}, 0.4, kBlack);
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        cv::line(img, {px(i), bottom}, {px(i), bottom + 4}, kBlack, 1);
        put_text(img, std::to_string(i + 1), {px(i), bottom + 14}, 0.4, kBlack, true);
    }
    put_text(img, "epoch", {(left + right) / 2, bottom + 32}, 0.45, kBlack, true);
    const auto series = [&](const std::vector<double>& v, const cv::Scalar& color) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            cv::circle(img, {px(i), py(v[i])}, 3, color, cv::FILLED, cv::LINE_AA);
            if (i > 0) {
                cv::line(img, {px(i - 1), py(v[i - 1])}, {px(i), py(v[i])}, color, 2, cv::LINE_AA);
            }
        }
    };
    series(a, kBlue);
    series(b, kOrange);
    cv::line(img, {right - 120, top + 5}, {right - 100, top + 5}, kBlue, 2);
    put_text(img, label_a, {right - 95, top + 10}, 0.4, kBlack);
    cv::line(img, {right - 120, top + 22}, {right - 100, top + 22}, kOrange, 2);
    put_text(img, label_b, {right - 95, top + 27}, 0.4, kBlack);
}

}  // namespace detail

/// Training/validation accuracy (left) and loss (right) per epoch.
[[nodiscard]] inline cv::Mat render_curves(const TrainingHistory& history, const std::string& title) {
    cv::Mat img(360, 900, CV_8UC3, detail::kWhite);
    std::vector<double> ta;
    std::vector<double> va;
    std::vector<double> tl;
    std::vector<double> vl;
    for (const auto& e : history.epochs) {
        ta.push_back(e.train_accuracy);
        va.push_back(e.val_accuracy);
        tl.push_back(e.train_loss);
        vl.push_back(e.val_loss);
    }
    detail::put_text(img, title, {450, 14}, 0.55, detail::kBlack, true);
    detail::draw_panel(img, {0, 20, 450, 340}, "accuracy", ta, va, "train", "validation");
    detail::draw_panel(img, {450, 20, 450, 340}, "loss", tl, vl, "train", "validation");
    return img;
}

inline void save_confusion_plot(const EvaluationReport& r, const std::filesystem::path& path) {
    detail::write_png(render_confusion(r.confusion, "Confusion matrix: " + table_name(r.model_name)), path);
}

inline void save_curve_plot(const TrainingHistory& h, const std::string& name, const std::filesystem::path& path) {
    detail::write_png(render_curves(h, "Training curves: " + table_name(name)), path);
}

// ---- report directory ---------------------------------------------------

/// Files written by write_report_artifacts, relative to the output directory.
struct ReportArtifacts {
    std::vector<std::filesystem::path> files;
};

[[nodiscard]] inline std::vector<EvaluationReport> load_reports_in(const std::filesystem::path& dir) {
    std::vector<EvaluationReport> out;
    if (!std::filesystem::is_directory(dir)) {
        return out;
    }
    std::vector<std::filesystem::path> paths;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            paths.push_back(entry.path());
        }
    }
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) {
        out.push_back(load_report(p));
    }
    return out;
}

/// Renders tables, heatmaps and curves from `<root>/reports/{models,stacks}`
/// and `<root>/histories`. Throws DataError when no report exists.
inline ReportArtifacts write_report_artifacts(const std::filesystem::path& root) {
    const auto models = load_reports_in(root / "reports" / "models");
    const auto stacks = load_reports_in(root / "reports" / "stacks");
    if (models.empty() && stacks.empty()) {
        throw DataError("no evaluation reports under " + (root / "reports").string() +
                        "; run `evaluate` (single models) or `stack` first");
    }
    ReportArtifacts art;
    const auto emit = [&](const std::filesystem::path& rel, const std::string& text) {
        detail::write_file(root / rel, text);
        art.files.push_back(rel);
    };
    const auto t1 = order_table_one(models);
    const auto t2 = order_table_two(stacks);
    emit("tables/table1.txt", render_table("Table 1: single models (weighted averages)", t1));
    emit("tables/table1.csv", render_table_csv(t1));
    emit("tables/table2.txt", render_table("Table 2: stacking ensembles (weighted averages)", t2));
    emit("tables/table2.csv", render_table_csv(t2));
    for (const auto& r : t1) {
        const auto rel = std::filesystem::path("plots") / ("confusion_" + r.model_name + ".png");
        save_confusion_plot(r, root / rel);
        art.files.push_back(rel);
    }
    for (const auto& r : t2) {
        const auto rel = std::filesystem::path("plots") / ("confusion_" + r.model_name + ".png");
        save_confusion_plot(r, root / rel);
        art.files.push_back(rel);
    }
    const auto hist_dir = root / "histories";
    if (std::filesystem::is_directory(hist_dir)) {
        std::vector<std::filesystem::path> paths;
        for (const auto& entry : std::filesystem::directory_iterator(hist_dir)) {
            if (entry.is_regular_file() && entry.path().extension() == ".csv") {
                paths.push_back(entry.path());
            }
        }
        std::sort(paths.begin(), paths.end());
        for (const auto& p : paths) {
            const auto name = p.stem().string();
            const auto rel = std::filesystem::path("plots") / ("curves_" + name + ".png");
            save_curve_plot(load_history(p), name, root / rel);
            art.files.push_back(rel);
        }
    }
    return art;
}

}  // namespace skinstack
