#pragma once

#include <algorithm>
#include <array>
#include <functional>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "skinstack/class_label.hpp"
#include "skinstack/dataset.hpp"
#include "skinstack/decision_tree.hpp"
#include "skinstack/error.hpp"
#include "skinstack/evaluation.hpp"
#include "skinstack/model_spec.hpp"
#include "skinstack/predictions.hpp"

namespace skinstack {

enum class StackName : std::uint8_t {
    kInceptionV3InceptionV3 = 0,
    kDenseNetMobileNet = 1,
    kInceptionV3Xception = 2,
    kResNet50Vgg16 = 3,
    kStackSix = 4,
};

inline constexpr std::size_t kNumStacks = 5;

namespace detail {
struct StackNames {
    std::string_view symbol;
    std::string_view selector;
    std::string_view display;
};
inline constexpr std::array<StackNames, kNumStacks> kStackNames = {{
    {"INCEPTIONV3_INCEPTIONV3", "inceptionv3-inceptionv3", "Inceptionv3-Inceptionv3"},
    {"DENSENET_MOBILENET", "densenet-mobilenet", "Densenet-Mobilenet"},
    {"INCEPTIONV3_XCEPTION", "inceptionv3-xception", "Inceptionv3-Xception"},
    {"RESNET50_VGG16", "resnet50-vgg16", "Resnet-50-vgg16"},
    {"STACK_SIX", "stack-six", "stack-six"},
}};
}  // namespace detail

[[nodiscard]] constexpr std::string_view symbol(StackName n) noexcept {
    return detail::kStackNames[static_cast<std::size_t>(n)].symbol;
}
[[nodiscard]] constexpr std::string_view selector_name(StackName n) noexcept {
    return detail::kStackNames[static_cast<std::size_t>(n)].selector;
}
[[nodiscard]] constexpr std::string_view display_name(StackName n) noexcept {
    return detail::kStackNames[static_cast<std::size_t>(n)].display;
}

[[nodiscard]] inline std::optional<StackName> parse_stack_name(std::string_view text) {
    for (std::size_t i = 0; i < kNumStacks; ++i) {
        if (text == detail::kStackNames[i].symbol || text == detail::kStackNames[i].selector) {
            return static_cast<StackName>(i);
        }
    }
    return std::nullopt;
}

struct StackSpec {
    StackName name = StackName::kStackSix;
    std::vector<BackboneId> base_models;
    TreeParams tree_params;

    friend bool operator==(const StackSpec&, const StackSpec&) = default;
};

[[nodiscard]] inline std::vector<BackboneId> builtin_bases(StackName name) {
    using B = BackboneId;
    switch (name) {
        case StackName::kInceptionV3InceptionV3:
            return {B::kInceptionV3, B::kInceptionV3};
        case StackName::kDenseNetMobileNet:
            return {B::kDenseNet, B::kMobileNet};
        case StackName::kInceptionV3Xception:
            return {B::kInceptionV3, B::kXception};
        case StackName::kResNet50Vgg16:
            return {B::kResNet50, B::kVgg16};
        case StackName::kStackSix:
            return {B::kResNet50, B::kVgg16, B::kDenseNet, B::kMobileNet, B::kInceptionV3, B::kXception};
    }
    return {};
}

/// The five ensembles, each with default tree parameters.
[[nodiscard]] inline std::vector<StackSpec> builtin_stacks() {
    std::vector<StackSpec> out;
    for (std::size_t i = 0; i < kNumStacks; ++i) {
        const auto name = static_cast<StackName>(i);
        out.push_back({name, builtin_bases(name), TreeParams{}});
    }
    return out;
}

/// Horizontal concatenation of base-model probability blocks:
/// columns [7k, 7k + 7) hold base k.
struct MetaFeatures {
    std::vector<std::string> image_ids;
    std::vector<double> matrix;  // row-major, rows() x width
    std::size_t width = 0;

    [[nodiscard]] std::size_t rows() const noexcept { return image_ids.size(); }
    [[nodiscard]] FeatureView view() const noexcept { return {matrix, width}; }
};

[[nodiscard]] inline MetaFeatures assemble_meta_features(std::span<const PredictionMatrix> matrices) {
    if (matrices.empty()) {
        throw std::invalid_argument("meta features need at least one prediction matrix");
    }
    const auto& ids = matrices.front().image_ids;
    for (std::size_t k = 1; k < matrices.size(); ++k) {
        const auto& other = matrices[k].image_ids;
        const auto n = std::min(ids.size(), other.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (ids[i] != other[i]) {
                throw DataError("prediction matrix " + std::to_string(k) + " diverges from matrix 0 at row " +
                                std::to_string(i) + ": '" + other[i] + "' vs '" + ids[i] + "'");
            }
        }
        if (ids.size() != other.size()) {
            throw DataError("prediction matrix " + std::to_string(k) + " has " + std::to_string(other.size()) +
                            " rows, matrix 0 has " + std::to_string(ids.size()));
        }
    }
    MetaFeatures f;
    f.image_ids = ids;
    f.width = kNumClasses * matrices.size();
    f.matrix.reserve(f.width * ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        for (const auto& m : matrices) {
            f.matrix.insert(f.matrix.end(), m.probabilities[i].begin(), m.probabilities[i].end());
        }
    }
    return f;
}

[[nodiscard]] inline MetaFeatures assemble_meta_features(const std::vector<PredictionMatrix>& matrices) {
    return assemble_meta_features(std::span<const PredictionMatrix>(matrices));
}

/// Decision-tree meta-learner plus what it was trained on.
struct MetaModel {
    DecisionTree tree;
    std::optional<StackSpec> spec;
    std::size_t sample_count = 0;

    [[nodiscard]] std::size_t width() const noexcept { return tree.width(); }

    [[nodiscard]] std::string serialize() const {
        std::ostringstream out;
        out << "# meta-model";
        if (spec) {
            out << " stack=" << symbol(spec->name) << " bases=";
            for (std::size_t i = 0; i < spec->base_models.size(); ++i) {
                out << (i ? "," : "") << symbol(spec->base_models[i]);
            }
        }
        out << " samples=" << sample_count << '\n';
        out << tree.serialize();
        return out.str();
    }
};

[[nodiscard]] inline MetaModel train_meta(const MetaFeatures& features, std::span<const ClassLabel> labels,
                                          const TreeParams& params) {
    if (labels.size() != features.rows()) {
        throw std::invalid_argument("label count " + std::to_string(labels.size()) + " does not match feature rows " +
                                    std::to_string(features.rows()));
    }
    std::vector<std::size_t> y;
    y.reserve(labels.size());
    std::unordered_set<std::size_t> distinct;
    for (const auto l : labels) {
        y.push_back(ordinal(l));
        distinct.insert(ordinal(l));
    }
    if (distinct.size() < 2) {
        throw DataError("meta-learner needs at least two distinct classes in its training labels");
    }
    MetaModel m;
    m.tree = DecisionTree::fit(features.view(), y, kNumClasses, params);
    m.sample_count = labels.size();
    return m;
}

[[nodiscard]] inline std::vector<ClassLabel> stack_predict(const MetaModel& model, const MetaFeatures& features) {
    if (features.rows() == 0) {
        return {};
    }
    if (features.width != model.width()) {
        throw std::invalid_argument("meta features have width " + std::to_string(features.width) +
                                    " but the model was trained on width " + std::to_string(model.width()));
    }
    std::vector<ClassLabel> out;
    out.reserve(features.rows());
    for (const auto c : model.tree.predict(features.view())) {
        out.push_back(label_from_ordinal(c));
    }
    return out;
}

/// Leakage guard: meta-training and evaluation ids must not intersect.
inline void check_disjoint(std::span<const std::string> meta_train_ids, std::span<const std::string> eval_ids) {
    const std::unordered_set<std::string> train(meta_train_ids.begin(), meta_train_ids.end());
    for (const auto& id : eval_ids) {
        if (train.contains(id)) {
            throw DataError("leakage guard: image_id " + id + " is in both the meta-training and evaluation sets");
        }
    }
}

/// A trained base classifier as seen by the stacker.
struct BaseModelRun {
    std::string id;  // checkpoint identifier
    BackboneId backbone = BackboneId::kCnnBaseline;
    std::function<PredictionMatrix(const DatasetManifest&)> predict;
};

struct StackResult {
    MetaModel model;
    EvaluationReport report;
    std::vector<std::string> base_ids;
    std::vector<std::string> meta_train_ids;
    std::vector<std::string> eval_ids;
    std::size_t feature_width = 0;
};

/// Picks one run per entry of spec.base_models; repeated backbones consume
/// successive runs of that backbone. Throws naming the first missing base.
[[nodiscard]] inline std::vector<const BaseModelRun*> select_bases(const StackSpec& spec,
                                                                   std::span<const BaseModelRun> available) {
    std::vector<const BaseModelRun*> chosen;
    std::vector<bool> used(available.size(), false);
    for (const auto backbone : spec.base_models) {
        const BaseModelRun* pick = nullptr;
        for (std::size_t i = 0; i < available.size(); ++i) {
            if (!used[i] && available[i].backbone == backbone) {
                used[i] = true;
                pick = &available[i];
                break;
            }
        }
        if (pick == nullptr) {
            throw DataError("stack " + std::string(symbol(spec.name)) + ": missing checkpoint for base model " +
                            std::string(symbol(backbone)));
        }
        chosen.push_back(pick);
    }
    std::unordered_set<std::string> ids;
    for (const auto* run : chosen) {
        if (!ids.insert(run->id).second) {
            throw DataError("stack " + std::string(symbol(spec.name)) + ": checkpoint " + run->id +
                            " used for two base slots; repeated backbones need distinct checkpoints");
        }
    }
    return chosen;
}

/// The validation partition is split 50/50 (stratified, seeded with the split
/// seed) into meta-training and evaluation halves. Bases predict both halves,
/// the tree is fit on the first and scored on the second.
[[nodiscard]] inline StackResult run_stack(const StackSpec& spec, std::span<const BaseModelRun> available,
                                           const DatasetSplit& split) {
    const auto bases = select_bases(spec, available);
    if (split.validation.empty()) {
        throw DataError("stacking needs a non-empty validation partition");
    }
    const auto halves = stratified_split(split.validation, 0.5, split.seed);
    const auto& meta_train = halves.train;
    const auto& meta_eval = halves.validation;
    if (meta_eval.empty()) {
        throw DataError("validation partition too small to hold out an evaluation half");
    }
    StackResult result;
    result.meta_train_ids = meta_train.image_ids();
    result.eval_ids = meta_eval.image_ids();
    check_disjoint(result.meta_train_ids, result.eval_ids);

    std::vector<PredictionMatrix> train_preds;
    std::vector<PredictionMatrix> eval_preds;
    for (const auto* base : bases) {
        result.base_ids.push_back(base->id);
        auto p_train = base->predict(meta_train);
        auto p_eval = base->predict(meta_eval);
        if (p_train.image_ids != result.meta_train_ids || p_eval.image_ids != result.eval_ids) {
            throw DataError("base " + base->id + " returned predictions out of manifest order");
        }
        train_preds.push_back(std::move(p_train));
        eval_preds.push_back(std::move(p_eval));
    }
    const auto train_features = assemble_meta_features(train_preds);
    const auto eval_features = assemble_meta_features(eval_preds);
    result.feature_width = train_features.width;

    result.model = train_meta(train_features, meta_train.labels(), spec.tree_params);
    result.model.spec = spec;
    const auto predicted = stack_predict(result.model, eval_features);
    const auto truth = meta_eval.labels();
    result.report = evaluate(truth, predicted, std::string(selector_name(spec.name)));
    return result;
}

}  // namespace skinstack
