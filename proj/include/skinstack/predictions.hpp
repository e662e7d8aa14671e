#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "skinstack/class_label.hpp"
#include "skinstack/detail/text.hpp"
#include "skinstack/error.hpp"

namespace skinstack {

using ProbabilityRow = std::array<double, kNumClasses>;

/// Rows must sum to one within this tolerance.
inline constexpr double kRowSumTolerance = 1e-5;

/// N x 7 class probabilities produced by one checkpoint, rows aligned with
/// `image_ids`.
struct PredictionMatrix {
    std::vector<std::string> image_ids;
    std::vector<ProbabilityRow> probabilities;
    std::string source_checkpoint;

    [[nodiscard]] std::size_t rows() const noexcept { return image_ids.size(); }

    /// Arg-max per row; ties resolve to the lower ordinal.
    [[nodiscard]] std::vector<ClassLabel> argmax() const {
        std::vector<ClassLabel> out;
        out.reserve(probabilities.size());
        for (const auto& row : probabilities) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < kNumClasses; ++c) {
                if (row[c] > row[best]) {
                    best = c;
                }
            }
            out.push_back(label_from_ordinal(best));
        }
        return out;
    }

    /// Throws DataError if any invariant is broken.
    void validate() const {
        if (image_ids.size() != probabilities.size()) {
            throw DataError("prediction matrix has " + std::to_string(image_ids.size()) + " ids but " +
                            std::to_string(probabilities.size()) + " rows");
        }
        std::unordered_set<std::string> seen;
        for (std::size_t i = 0; i < rows(); ++i) {
            if (!seen.insert(image_ids[i]).second) {
                throw DataError("duplicate image_id in prediction matrix: " + image_ids[i]);
            }
            double sum = 0.0;
            for (const double p : probabilities[i]) {
                if (!std::isfinite(p) || p < 0.0) {
                    throw DataError("invalid probability in row for " + image_ids[i]);
                }
                sum += p;
            }
            if (std::abs(sum - 1.0) > kRowSumTolerance) {
                throw DataError("probabilities for " + image_ids[i] + " sum to " + detail::format_double(sum) +
                                ", outside the normalization tolerance of 1e-5");
            }
        }
    }

    friend bool operator==(const PredictionMatrix&, const PredictionMatrix&) = default;
};

// File layout:
//   # classes: 0=MELANOCYTIC_NEVI 1=MELANOMA ... ; source=<checkpoint id>
//   image_id,p0,p1,p2,p3,p4,p5,p6
//   ISIC_0024306,0.91,...
// Values are written as the shortest decimal that reads back bit-identically.

[[nodiscard]] inline std::string format_predictions(const PredictionMatrix& m) {
    std::ostringstream out;
    out << "# classes:";
    for (const auto label : kAllClasses) {
        out << ' ' << ordinal(label) << '=' << symbol(label);
    }
    out << "; source=" << m.source_checkpoint << '\n';
    out << "image_id";
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        out << ",p" << c;
    }
    out << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out << m.image_ids[i];
        for (const double p : m.probabilities[i]) {
            out << ',' << detail::format_double(p);
        }
        out << '\n';
    }
    return out.str();
}

inline void save_predictions(const PredictionMatrix& m, const std::filesystem::path& path) {
    m.validate();
    detail::write_file(path, format_predictions(m));
}

[[nodiscard]] inline PredictionMatrix parse_predictions(std::string_view text, const std::string& origin = "<memory>") {
    PredictionMatrix m;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto t = detail::trim(line);
        if (t.empty()) {
            continue;
        }
        if (t.front() == '#') {
            const auto pos = t.find("source=");
            if (pos != std::string_view::npos) {
                m.source_checkpoint = std::string(detail::trim(t.substr(pos + 7)));
            }
            continue;
        }
        const auto fields = detail::split_csv_line(t);
        if (!header_seen) {
            if (fields.empty() || fields[0] != "image_id" || fields.size() != kNumClasses + 1) {
                throw DataError(origin + ":" + std::to_string(lineno) + ": expected header image_id,p0,...,p6");
            }
            header_seen = true;
            continue;
        }
        if (fields.size() != kNumClasses + 1) {
            throw DataError(origin + ":" + std::to_string(lineno) + ": row for '" + fields[0] + "' has " +
                            std::to_string(fields.size() - 1) + " probability columns, expected 7");
        }
        ProbabilityRow row{};
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            const auto v = detail::parse_double(fields[c + 1]);
            if (!v) {
                throw DataError(origin + ":" + std::to_string(lineno) + ": non-numeric cell '" + fields[c + 1] + "'");
            }
            row[c] = *v;
        }
        m.image_ids.push_back(fields[0]);
        m.probabilities.push_back(row);
    }
    if (!header_seen) {
        throw DataError(origin + ": missing header line");
    }
    try {
        m.validate();
    } catch (const DataError& e) {
        throw DataError(origin + ": " + e.what());
    }
    return m;
}

[[nodiscard]] inline PredictionMatrix load_predictions(const std::filesystem::path& path) {
    return parse_predictions(detail::read_file(path), path.string());
}

/// Per-epoch curves. Epochs are numbered from 1 without gaps.
struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainingHistory {
    std::vector<EpochRecord> epochs;

    /// Epoch with the highest validation accuracy (first on ties), 0 if empty.
    [[nodiscard]] int best_val_epoch() const noexcept {
        int best = 0;
        double best_acc = -1.0;
        for (const auto& e : epochs) {
            if (e.val_accuracy > best_acc) {
                best_acc = e.val_accuracy;
                best = e.epoch;
            }
        }
        return best;
    }

    friend bool operator==(const TrainingHistory&, const TrainingHistory&) = default;
};

[[nodiscard]] inline std::string format_history(const TrainingHistory& h) {
    std::ostringstream out;
    out << "# best_val_epoch=" << h.best_val_epoch() << '\n';
    out << "epoch,train_loss,train_acc,val_loss,val_acc\n";
    for (const auto& e : h.epochs) {
        out << e.epoch << ',' << detail::format_double(e.train_loss) << ',' << detail::format_double(e.train_accuracy)
            << ',' << detail::format_double(e.val_loss) << ',' << detail::format_double(e.val_accuracy) << '\n';
    }
    return out.str();
}

inline void save_history(const TrainingHistory& h, const std::filesystem::path& path) {
    detail::write_file(path, format_history(h));
}

[[nodiscard]] inline TrainingHistory load_history(const std::filesystem::path& path) {
    std::istringstream in(detail::read_file(path));
    TrainingHistory h;
    bool header = false;
    std::size_t lineno = 0;
    for (std::string line; std::getline(in, line);) {
        ++lineno;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        if (!header) {
            if (t != "epoch,train_loss,train_acc,val_loss,val_acc") {
                throw DataError(path.string() + ": unexpected history header");
            }
            header = true;
            continue;
        }
        const auto f = detail::split_csv_line(t);
        if (f.size() != 5) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 5 columns");
        }
        const auto epoch = detail::parse_int<int>(f[0]);
        const auto tl = detail::parse_double(f[1]);
        const auto ta = detail::parse_double(f[2]);
        const auto vl = detail::parse_double(f[3]);
        const auto va = detail::parse_double(f[4]);
        if (!epoch || !tl || !ta || !vl || !va) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": non-numeric history cell");
        }
        if (*epoch != static_cast<int>(h.epochs.size()) + 1) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": epochs must run 1, 2, ... without gaps");
        }
        h.epochs.push_back({*epoch, *tl, *ta, *vl, *va});
    }
    return h;
}

}  // namespace skinstack
