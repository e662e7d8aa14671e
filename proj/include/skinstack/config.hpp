#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "skinstack/augment.hpp"
#include "skinstack/decision_tree.hpp"
#include "skinstack/detail/text.hpp"
#include "skinstack/error.hpp"
#include "skinstack/model_spec.hpp"
#include "skinstack/stacking.hpp"

// Experiment configuration: one JSON document. Every field has a default;
// unknown fields and type mismatches are rejected with the dotted path of the
// offending field (e.g. "models[2].train.learning_rate").

namespace skinstack {

using Json = nlohmann::ordered_json;

namespace detail {

/// Reads one JSON object, remembering which keys were consumed so that
/// leftovers can be reported as unknown fields.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) {
            fail(path_.empty() ? "<root>" : path_, "expected an object");
        }
    }

    [[nodiscard]] std::string field(std::string_view key) const {
        return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
    }

    [[nodiscard]] const Json* find(std::string_view key) {
        seen_.insert(std::string(key));
        const auto it = j_.find(std::string(key));
        return (it == j_.end() || it->is_null()) ? nullptr : &*it;
    }

    [[nodiscard]] bool has(std::string_view key) const { return j_.contains(std::string(key)); }

    template <typename T>
    [[nodiscard]] T get(std::string_view key, T fallback) {
        const auto* v = find(key);
        return v == nullptr ? fallback : convert<T>(*v, field(key));
    }

    template <typename T>
    [[nodiscard]] T require(std::string_view key) {
        const auto* v = find(key);
        if (v == nullptr) {
            fail(field(key), "required field is missing");
        }
        return convert<T>(*v, field(key));
    }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!seen_.contains(item.key())) {
                fail(field(item.key()), "unknown field");
            }
        }
    }

    [[noreturn]] static void fail(const std::string& path, const std::string& message) {
        throw ConfigError("config: " + path + ": " + message);
    }

    template <typename T>
    [[nodiscard]] static T convert(const Json& v, const std::string& path) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) {
                fail(path, "expected true or false");
            }
            return v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) {
                fail(path, "expected a string");
            }
            return v.get<std::string>();
        } else if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) {
                fail(path, "expected a number");
            }
            return v.get<double>();
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
            if (!v.is_number_unsigned()) {
                fail(path, "expected a non-negative integer");
            }
            return v.get<std::uint64_t>();
        } else if constexpr (std::is_same_v<T, int>) {
            if (!v.is_number_integer()) {
                fail(path, "expected an integer");
            }
            const auto x = v.get<std::int64_t>();
            if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
                fail(path, "integer out of range");
            }
            return static_cast<int>(x);
        } else {
            static_assert(sizeof(T) == 0, "unsupported config field type");
        }
    }

private:
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

[[nodiscard]] inline std::string index_path(const std::string& base, std::size_t i) {
    return base + "[" + std::to_string(i) + "]";
}

}  // namespace detail

// ---- AugmentationConfig -------------------------------------------------

[[nodiscard]] inline Json to_json(const AugmentationConfig& c) {
    return Json{
        {"rotation_range", c.rotation_range},
        {"width_shift", c.width_shift},
        {"height_shift", c.height_shift},
        {"zoom_range", c.zoom_range},
        {"horizontal_flip", c.horizontal_flip},
        {"vertical_flip", c.vertical_flip},
        {"fill_mode", c.fill_mode == FillMode::kNearest ? "nearest" : "constant"},
        {"fill_value", c.fill_value},
        {"std_normalization", c.std_normalization},
        {"std_mode", c.std_mode == StdMode::kFeaturewise ? "featurewise" : "samplewise"},
        {"zca_whitening", c.zca_whitening},
        {"zca_epsilon", c.zca_epsilon},
        {"zca_working_size", Json::array({c.zca_working_height, c.zca_working_width})},
        {"zca_grayscale", c.zca_grayscale},
        {"zca_full_resolution", c.zca_full_resolution},
        {"seed", c.seed},
    };
}

[[nodiscard]] inline AugmentationConfig augmentation_from_json(const Json& j, const std::string& path) {
    detail::ObjectReader r(j, path);
    AugmentationConfig c;
    c.rotation_range = r.get("rotation_range", c.rotation_range);
    c.width_shift = r.get("width_shift", c.width_shift);
    c.height_shift = r.get("height_shift", c.height_shift);
    c.zoom_range = r.get("zoom_range", c.zoom_range);
    c.horizontal_flip = r.get("horizontal_flip", c.horizontal_flip);
    c.vertical_flip = r.get("vertical_flip", c.vertical_flip);
    const auto fill = r.get<std::string>("fill_mode", "nearest");
    if (fill == "nearest") {
        c.fill_mode = FillMode::kNearest;
    } else if (fill == "constant") {
        c.fill_mode = FillMode::kConstant;
    } else {
        detail::ObjectReader::fail(r.field("fill_mode"), "expected \"nearest\" or \"constant\", got \"" + fill + "\"");
    }
    c.fill_value = r.get("fill_value", c.fill_value);
    c.std_normalization = r.get("std_normalization", c.std_normalization);
    const auto mode = r.get<std::string>("std_mode", "featurewise");
    if (mode == "featurewise") {
        c.std_mode = StdMode::kFeaturewise;
    } else if (mode == "samplewise") {
        c.std_mode = StdMode::kSamplewise;
    } else {
        detail::ObjectReader::fail(r.field("std_mode"), "expected \"featurewise\" or \"samplewise\"");
    }
    c.zca_whitening = r.get("zca_whitening", c.zca_whitening);
    c.zca_epsilon = r.get("zca_epsilon", c.zca_epsilon);
    if (const auto* size = r.find("zca_working_size")) {
        if (!size->is_array() || size->size() != 2) {
            detail::ObjectReader::fail(r.field("zca_working_size"), "expected [height, width]");
        }
        c.zca_working_height = detail::ObjectReader::convert<int>((*size)[0], r.field("zca_working_size") + "[0]");
        c.zca_working_width = detail::ObjectReader::convert<int>((*size)[1], r.field("zca_working_size") + "[1]");
    }
    c.zca_grayscale = r.get("zca_grayscale", c.zca_grayscale);
    c.zca_full_resolution = r.get("zca_full_resolution", c.zca_full_resolution);
    c.seed = r.get("seed", c.seed);
    r.finish();
    try {
        validate(c);
    } catch (const ConfigError& e) {
        detail::ObjectReader::fail(path, e.what());
    }
    return c;
}

// ---- ModelSpec / TrainConfig --------------------------------------------

[[nodiscard]] inline Json to_json(const ModelSpec& s) {
    return Json{
        {"backbone", symbol(s.backbone)},
        {"head", {{"dense_units", s.head.dense_units}, {"dropout_rate", s.head.dropout_rate}}},
        {"pretrained", s.pretrained},
        {"freeze_backbone", s.freeze_backbone},
        {"input_shape", Json::array({s.input_height, s.input_width, s.input_channels})},
    };
}

[[nodiscard]] inline Json to_json(const TrainConfig& c) {
    return Json{
        {"epochs", c.epochs},       {"learning_rate", c.learning_rate}, {"beta1", c.beta1},
        {"beta2", c.beta2},         {"adam_epsilon", c.adam_epsilon},   {"batch_size", c.batch_size},
        {"seed", c.seed},
    };
}

[[nodiscard]] inline BackboneId backbone_from_string(const std::string& text, const std::string& path) {
    if (const auto b = parse_backbone(text)) {
        return *b;
    }
    std::string valid;
    for (const auto id : kAllBackbones) {
        valid += (valid.empty() ? "" : ", ") + std::string(symbol(id));
    }
    detail::ObjectReader::fail(path, "unknown backbone \"" + text + "\" (valid: " + valid + ")");
}

/// Reads the model-spec fields of `r`; shared by model entries and checkpoint
/// sidecars.
inline void read_model_spec(detail::ObjectReader& r, ModelSpec& s) {
    if (const auto* head = r.find("head")) {
        detail::ObjectReader h(*head, r.field("head"));
        s.head.dense_units = h.get("dense_units", s.head.dense_units);
        s.head.dropout_rate = h.get("dropout_rate", s.head.dropout_rate);
        h.finish();
    }
    s.pretrained = r.get("pretrained", s.pretrained);
    s.freeze_backbone = r.get("freeze_backbone", s.freeze_backbone);
    if (const auto* shape = r.find("input_shape")) {
        if (!shape->is_array() || shape->size() != 3) {
            detail::ObjectReader::fail(r.field("input_shape"), "expected [height, width, channels]");
        }
        s.input_height = detail::ObjectReader::convert<int>((*shape)[0], r.field("input_shape") + "[0]");
        s.input_width = detail::ObjectReader::convert<int>((*shape)[1], r.field("input_shape") + "[1]");
        s.input_channels = detail::ObjectReader::convert<int>((*shape)[2], r.field("input_shape") + "[2]");
    }
}

[[nodiscard]] inline ModelSpec model_spec_from_json(const Json& j, const std::string& path) {
    detail::ObjectReader r(j, path);
    ModelSpec s;
    s.backbone = backbone_from_string(r.require<std::string>("backbone"), r.field("backbone"));
    read_model_spec(r, s);
    r.finish();
    try {
        validate(s);
    } catch (const ConfigError& e) {
        detail::ObjectReader::fail(path, e.what());
    }
    return s;
}

[[nodiscard]] inline TrainConfig train_config_from_json(const Json& j, const std::string& path, TrainConfig c) {
    detail::ObjectReader r(j, path);
    c.epochs = r.get("epochs", c.epochs);
    c.learning_rate = r.get("learning_rate", c.learning_rate);
    c.beta1 = r.get("beta1", c.beta1);
    c.beta2 = r.get("beta2", c.beta2);
    c.adam_epsilon = r.get("adam_epsilon", c.adam_epsilon);
    c.batch_size = r.get("batch_size", c.batch_size);
    c.seed = r.get("seed", c.seed);
    r.finish();
    try {
        validate(c);
    } catch (const ConfigError& e) {
        detail::ObjectReader::fail(path, e.what());
    }
    return c;
}

// ---- TreeParams ---------------------------------------------------------

[[nodiscard]] inline Json to_json(const TreeParams& p) {
    Json j{{"criterion", p.criterion == SplitCriterion::kGini ? "gini" : "entropy"}};
    j["max_depth"] = p.max_depth ? Json(*p.max_depth) : Json(nullptr);
    j["min_samples_split"] = p.min_samples_split;
    j["seed"] = p.seed;
    return j;
}

[[nodiscard]] inline TreeParams tree_params_from_json(const Json& j, const std::string& path) {
    detail::ObjectReader r(j, path);
    TreeParams p;
    const auto criterion = r.get<std::string>("criterion", "gini");
    if (criterion == "gini") {
        p.criterion = SplitCriterion::kGini;
    } else if (criterion == "entropy") {
        p.criterion = SplitCriterion::kEntropy;
    } else {
        detail::ObjectReader::fail(r.field("criterion"), "expected \"gini\" or \"entropy\"");
    }
    if (const auto* depth = r.find("max_depth")) {
        p.max_depth = detail::ObjectReader::convert<int>(*depth, r.field("max_depth"));
    }
    p.min_samples_split = r.get("min_samples_split", p.min_samples_split);
    p.seed = r.get("seed", p.seed);
    r.finish();
    try {
        validate(p);
    } catch (const ConfigError& e) {
        detail::ObjectReader::fail(path, e.what());
    }
    return p;
}

// ---- ExperimentConfig ---------------------------------------------------

/// A named model to train. Names are unique; the name equal to the
/// backbone's selector marks the primary model of that backbone, other names
/// (e.g. "inceptionv3-replica") are extra instances used by stacks that
/// repeat a backbone.
struct ModelEntry {
    std::string name;
    ModelSpec spec;
    TrainConfig train;

    [[nodiscard]] bool is_primary() const { return name == selector_name(spec.backbone); }
    friend bool operator==(const ModelEntry&, const ModelEntry&) = default;
};

/// A stack plus the model entries feeding each of its base slots.
struct StackEntry {
    StackSpec spec;
    std::vector<std::string> base_names;

    friend bool operator==(const StackEntry&, const StackEntry&) = default;
};

struct ExperimentConfig {
    std::filesystem::path metadata;
    std::vector<std::filesystem::path> image_dirs;
    double train_fraction = 0.9;
    std::uint64_t split_seed = 7;
    AugmentationConfig augmentation;
    std::vector<ModelEntry> models;
    std::vector<StackEntry> stacks;
    std::filesystem::path output_dir = "runs";
    std::optional<std::filesystem::path> weights_dir;
    int num_threads = 1;
    std::size_t toy_per_class = 35;
    int toy_epochs = 2;

    [[nodiscard]] const ModelEntry* find_model(std::string_view name) const {
        for (const auto& m : models) {
            if (m.name == name) {
                return &m;
            }
        }
        return nullptr;
    }
};

/// The seven primary models with their default schedules, pretrained
/// backbones (the baseline CNN starts from scratch), plus a second InceptionV3
/// with a different seed for the InceptionV3-InceptionV3 stack.
[[nodiscard]] inline std::vector<ModelEntry> default_models() {
    std::vector<ModelEntry> out;
    for (const auto id : kAllBackbones) {
        ModelEntry e;
        e.name = std::string(selector_name(id));
        e.spec.backbone = id;
        e.spec.pretrained = id != BackboneId::kCnnBaseline;
        e.train = default_train_config(id);
        e.train.seed = index_of(id) + 1;
        out.push_back(e);
    }
    ModelEntry replica = out[index_of(BackboneId::kInceptionV3)];
    replica.name = "inceptionv3-replica";
    replica.train.seed = 101;
    out.push_back(replica);
    return out;
}

/// Assigns model entries to the stack's base slots: each slot takes the first
/// unused entry of the right backbone, primary entries first.
[[nodiscard]] inline std::vector<std::string> resolve_bases(const StackSpec& spec, const std::vector<ModelEntry>& models,
                                                            const std::string& path) {
    std::vector<std::string> names;
    std::set<std::string> used;
    for (const auto backbone : spec.base_models) {
        const ModelEntry* pick = nullptr;
        for (const bool primary : {true, false}) {
            for (const auto& m : models) {
                if (pick == nullptr && m.spec.backbone == backbone && m.is_primary() == primary &&
                    !used.contains(m.name)) {
                    pick = &m;
                }
            }
        }
        if (pick == nullptr) {
            detail::ObjectReader::fail(path, "no model entry available for base " + std::string(symbol(backbone)) +
                                                 " (repeated backbones need one entry each)");
        }
        used.insert(pick->name);
        names.push_back(pick->name);
    }
    return names;
}

[[nodiscard]] inline std::vector<StackEntry> default_stacks(const std::vector<ModelEntry>& models) {
    std::vector<StackEntry> out;
    for (const auto& spec : builtin_stacks()) {
        out.push_back({spec, resolve_bases(spec, models, "stacks")});
    }
    return out;
}

[[nodiscard]] inline ExperimentConfig default_experiment_config() {
    ExperimentConfig c;
    c.metadata = "data/HAM10000_metadata.csv";
    c.image_dirs = {"data/HAM10000_images_part_1", "data/HAM10000_images_part_2"};
    c.models = default_models();
    c.stacks = default_stacks(c.models);
    return c;
}

namespace detail {

inline std::filesystem::path resolve_path(const std::filesystem::path& p, const std::filesystem::path& base) {
    return (p.is_absolute() || base.empty()) ? p : base / p;
}

inline std::string path_string(const std::filesystem::path& p) { return p.generic_string(); }

}  // namespace detail

[[nodiscard]] inline Json to_json(const ExperimentConfig& c) {
    Json image_dirs = Json::array();
    for (const auto& d : c.image_dirs) {
        image_dirs.push_back(detail::path_string(d));
    }
    Json models = Json::array();
    for (const auto& m : c.models) {
        Json j{{"name", m.name}};
        const auto spec = to_json(m.spec);
        for (const auto& item : spec.items()) {
            j[item.key()] = item.value();
        }
        j["train"] = to_json(m.train);
        models.push_back(j);
    }
    Json stacks = Json::array();
    for (const auto& s : c.stacks) {
        stacks.push_back(Json{{"name", selector_name(s.spec.name)}, {"bases", s.base_names}, {"tree", to_json(s.spec.tree_params)}});
    }
    Json j{
        {"dataset", {{"metadata", detail::path_string(c.metadata)}, {"image_dirs", image_dirs}}},
        {"split", {{"train_fraction", c.train_fraction}, {"seed", c.split_seed}}},
        {"augmentation", to_json(c.augmentation)},
        {"models", models},
        {"stacks", stacks},
        {"output_dir", detail::path_string(c.output_dir)},
    };
    j["weights_dir"] = c.weights_dir ? Json(detail::path_string(*c.weights_dir)) : Json(nullptr);
    j["num_threads"] = c.num_threads;
    j["toy"] = Json{{"per_class", c.toy_per_class}, {"epochs", c.toy_epochs}};
    return j;
}

/// Parses a config document. Relative paths are resolved against `base_dir`
/// (normally the directory holding the config file).
[[nodiscard]] inline ExperimentConfig experiment_config_from_json(const Json& j,
                                                                  const std::filesystem::path& base_dir = {}) {
    using detail::ObjectReader;
    ObjectReader r(j, "");
    ExperimentConfig c;

    if (const auto* ds = r.find("dataset")) {
        ObjectReader d(*ds, "dataset");
        c.metadata = detail::resolve_path(d.require<std::string>("metadata"), base_dir);
        const auto* dirs = d.find("image_dirs");
        if (dirs == nullptr || !dirs->is_array() || dirs->empty()) {
            ObjectReader::fail("dataset.image_dirs", "expected a non-empty list of directories");
        }
        for (std::size_t i = 0; i < dirs->size(); ++i) {
            c.image_dirs.push_back(detail::resolve_path(
                ObjectReader::convert<std::string>((*dirs)[i], detail::index_path("dataset.image_dirs", i)), base_dir));
        }
        d.finish();
    } else {
        ObjectReader::fail("dataset", "required field is missing");
    }

    if (const auto* sp = r.find("split")) {
        ObjectReader s(*sp, "split");
        c.train_fraction = s.get("train_fraction", c.train_fraction);
        c.split_seed = s.get("seed", c.split_seed);
        s.finish();
        if (!(c.train_fraction > 0.0 && c.train_fraction <= 1.0)) {
            ObjectReader::fail("split.train_fraction", "must lie in (0, 1]");
        }
    }

    if (const auto* aug = r.find("augmentation")) {
        c.augmentation = augmentation_from_json(*aug, "augmentation");
    }

    if (const auto* models = r.find("models")) {
        if (!models->is_array() || models->empty()) {
            ObjectReader::fail("models", "expected a non-empty list");
        }
        std::set<std::string> names;
        for (std::size_t i = 0; i < models->size(); ++i) {
            const auto path = detail::index_path("models", i);
            ObjectReader m((*models)[i], path);
            ModelEntry e;
            e.spec.backbone = backbone_from_string(m.require<std::string>("backbone"), m.field("backbone"));
            e.spec.pretrained = e.spec.backbone != BackboneId::kCnnBaseline;
            e.name = m.get("name", std::string(selector_name(e.spec.backbone)));
            read_model_spec(m, e.spec);
            e.train = default_train_config(e.spec.backbone);
            e.train.seed = i + 1;
            if (const auto* train = m.find("train")) {
                e.train = train_config_from_json(*train, m.field("train"), e.train);
            }
            m.finish();
            try {
                validate(e.spec);
            } catch (const ConfigError& err) {
                ObjectReader::fail(path, err.what());
            }
            if (e.spec.pretrained && e.spec.backbone == BackboneId::kCnnBaseline) {
                ObjectReader::fail(m.field("pretrained"), "CNN_BASELINE has no pretrained weights");
            }
            if (!names.insert(e.name).second) {
                ObjectReader::fail(m.field("name"), "duplicate model name \"" + e.name + "\"");
            }
            c.models.push_back(e);
        }
    } else {
        c.models = default_models();
    }

    if (const auto* stacks = r.find("stacks")) {
        if (!stacks->is_array()) {
            ObjectReader::fail("stacks", "expected a list");
        }
        for (std::size_t i = 0; i < stacks->size(); ++i) {
            const auto path = detail::index_path("stacks", i);
            ObjectReader s((*stacks)[i], path);
            const auto name_text = s.require<std::string>("name");
            const auto name = parse_stack_name(name_text);
            if (!name) {
                std::string valid;
                for (const auto& spec : builtin_stacks()) {
                    valid += (valid.empty() ? "" : ", ") + std::string(selector_name(spec.name));
                }
                ObjectReader::fail(s.field("name"), "unknown stack \"" + name_text + "\" (valid: " + valid + ")");
            }
            StackEntry e;
            e.spec = {*name, builtin_bases(*name), TreeParams{}};
            if (const auto* tree = s.find("tree")) {
                e.spec.tree_params = tree_params_from_json(*tree, s.field("tree"));
            }
            if (const auto* bases = s.find("bases")) {
                if (!bases->is_array() || bases->size() != e.spec.base_models.size()) {
                    ObjectReader::fail(s.field("bases"), "expected " + std::to_string(e.spec.base_models.size()) +
                                                             " model names");
                }
                std::set<std::string> distinct;
                for (std::size_t k = 0; k < bases->size(); ++k) {
                    const auto bpath = detail::index_path(s.field("bases"), k);
                    const auto bname = ObjectReader::convert<std::string>((*bases)[k], bpath);
                    const auto* model = c.find_model(bname);
                    if (model == nullptr) {
                        ObjectReader::fail(bpath, "no model named \"" + bname + "\"");
                    }
                    if (model->spec.backbone != e.spec.base_models[k]) {
                        ObjectReader::fail(bpath, "model \"" + bname + "\" is " + std::string(symbol(model->spec.backbone)) +
                                                      ", slot expects " + std::string(symbol(e.spec.base_models[k])));
                    }
                    if (!distinct.insert(bname).second) {
                        ObjectReader::fail(bpath, "model \"" + bname +
                                                      "\" used twice; repeated backbones need distinct model entries");
                    }
                    e.base_names.push_back(bname);
                }
            } else {
                e.base_names = resolve_bases(e.spec, c.models, path);
            }
            s.finish();
            c.stacks.push_back(e);
        }
    } else if (!r.has("models")) {
        c.stacks = default_stacks(c.models);
    }

    c.output_dir = detail::resolve_path(r.get<std::string>("output_dir", "runs"), base_dir);
    if (const auto* w = r.find("weights_dir")) {
        c.weights_dir = detail::resolve_path(ObjectReader::convert<std::string>(*w, "weights_dir"), base_dir);
    }
    c.num_threads = r.get("num_threads", c.num_threads);
    if (c.num_threads < 1) {
        ObjectReader::fail("num_threads", "must be >= 1");
    }
    if (const auto* toy = r.find("toy")) {
        ObjectReader t(*toy, "toy");
        c.toy_per_class = static_cast<std::size_t>(t.get<std::uint64_t>("per_class", c.toy_per_class));
        c.toy_epochs = t.get("epochs", c.toy_epochs);
        t.finish();
        if (c.toy_per_class < 1) {
            ObjectReader::fail("toy.per_class", "must be >= 1");
        }
        if (c.toy_epochs < 1) {
            ObjectReader::fail("toy.epochs", "must be >= 1");
        }
    }
    r.finish();
    return c;
}

[[nodiscard]] inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = detail::read_file(path);
    } catch (const DataError&) {
        throw ConfigError("config: cannot read " + path.string());
    }
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError("config: " + path.string() + ": " + e.what());
    }
    return experiment_config_from_json(j, path.parent_path());
}

/// Fails unless the dataset paths exist.
inline void validate_paths(const ExperimentConfig& c) {
    if (!std::filesystem::is_regular_file(c.metadata)) {
        detail::ObjectReader::fail("dataset.metadata", "file not found: " + c.metadata.string());
    }
    for (std::size_t i = 0; i < c.image_dirs.size(); ++i) {
        if (!std::filesystem::is_directory(c.image_dirs[i])) {
            detail::ObjectReader::fail(detail::index_path("dataset.image_dirs", i),
                                       "directory not found: " + c.image_dirs[i].string());
        }
    }
}

/// --seed: one value drives the split, the augmentation streams and every
/// meta-learner. Model initialisation seeds stay as configured so that
/// repeated backbones remain distinct.
inline void apply_seed_override(ExperimentConfig& c, std::uint64_t seed) {
    c.split_seed = seed;
    c.augmentation.seed = seed;
    for (auto& s : c.stacks) {
        s.spec.tree_params.seed = seed;
    }
}

/// --toy: every model trains for `toy_epochs`. The per-class subsample is
/// taken at ingest time.
inline void apply_toy(ExperimentConfig& c) {
    for (auto& m : c.models) {
        m.train.epochs = c.toy_epochs;
    }
}

}  // namespace skinstack
