#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <functional>
#include <new>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "skinstack/augment.hpp"
#include "skinstack/config.hpp"
#include "skinstack/dataset.hpp"
#include "skinstack/detail/random.hpp"
#include "skinstack/error.hpp"
#include "skinstack/image.hpp"
#include "skinstack/ledger.hpp"
#include "skinstack/model_spec.hpp"
#include "skinstack/model_zoo.hpp"
#include "skinstack/predictions.hpp"
#include "skinstack/preprocess.hpp"

namespace skinstack {

/// Decoded, resized images with their labels, in manifest order.
struct LabeledImages {
    std::vector<std::string> ids;
    std::vector<ImageTensor> images;
    std::vector<ClassLabel> labels;

    [[nodiscard]] std::size_t size() const noexcept { return images.size(); }
};

[[nodiscard]] inline LabeledImages load_images(const DatasetManifest& manifest, int height, int width) {
    LabeledImages out;
    out.ids.reserve(manifest.size());
    out.images.reserve(manifest.size());
    out.labels.reserve(manifest.size());
    for (const auto& r : manifest.records()) {
        out.ids.push_back(r.image_id);
        out.images.push_back(load_and_resize(r, height, width));
        out.labels.push_back(r.label);
    }
    return out;
}

/// N x H x W x C images to an N x C x H x W float tensor.
[[nodiscard]] inline torch::Tensor to_tensor(std::span<const ImageTensor> images) {
    if (images.empty()) {
        throw std::invalid_argument("cannot build a tensor from an empty batch");
    }
    const auto& first = images.front();
    auto t = torch::empty({static_cast<int64_t>(images.size()), first.height(), first.width(), first.channels()},
                          torch::kFloat32);
    auto* dst = t.data_ptr<float>();
    for (const auto& img : images) {
        if (!img.same_shape(first)) {
            throw std::invalid_argument("batch images differ in shape");
        }
        std::memcpy(dst, img.values().data(), img.size() * sizeof(float));
        dst += img.size();
    }
    return t.permute({0, 3, 1, 2}).contiguous();
}

[[nodiscard]] inline torch::Tensor to_target(std::span<const ClassLabel> labels) {
    auto t = torch::empty({static_cast<int64_t>(labels.size())}, torch::kInt64);
    auto* p = t.data_ptr<int64_t>();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        p[i] = static_cast<int64_t>(ordinal(labels[i]));
    }
    return t;
}

[[nodiscard]] inline bool has_random_transforms(const AugmentationConfig& c) noexcept {
    return c.rotation_range > 0.0 || c.width_shift > 0.0 || c.height_shift > 0.0 || c.zoom_range > 0.0 ||
           c.horizontal_flip || c.vertical_flip;
}

/// Batch boundaries over n samples. A trailing batch of one sample is merged
/// into its predecessor, since batch norm cannot normalise a single value.
[[nodiscard]] inline std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n,
                                                                                   std::size_t batch_size) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t begin = 0; begin < n; begin += batch_size) {
        out.emplace_back(begin, std::min(n, begin + batch_size));
    }
    if (out.size() > 1 && out.back().second - out.back().first == 1) {
        out.pop_back();
        out.back().second = n;
    }
    return out;
}

/// Fixed input on which every checkpoint records its outputs; reloading must
/// reproduce them exactly.
[[nodiscard]] inline torch::Tensor probe_batch(const ModelSpec& spec) {
    std::mt19937_64 engine(0x5eedULL);
    auto t = torch::empty({2, spec.input_channels, spec.input_height, spec.input_width}, torch::kFloat32);
    auto* p = t.data_ptr<float>();
    for (int64_t i = 0; i < t.numel(); ++i) {
        p[i] = static_cast<float>(detail::uniform01(engine));
    }
    return t;
}

[[nodiscard]] inline std::vector<ProbabilityRow> to_rows(const torch::Tensor& probs) {
    const auto c = probs.contiguous().to(torch::kFloat64);
    std::vector<ProbabilityRow> rows(static_cast<std::size_t>(c.size(0)));
    const auto* p = c.data_ptr<double>();
    for (auto& row : rows) {
        std::copy(p, p + kNumClasses, row.begin());
        p += kNumClasses;
    }
    return rows;
}

[[nodiscard]] inline std::vector<ProbabilityRow> probe_outputs(Classifier& model) {
    torch::NoGradGuard no_grad;
    const bool was_training = model->is_training();
    model->eval();
    auto rows = to_rows(model->forward(probe_batch(model->spec())));
    model->train(was_training);
    return rows;
}

struct TrainResult {
    Classifier model{nullptr};
    Preprocessor preprocessor;
    TrainingHistory history;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

namespace detail {

[[noreturn]] inline void rethrow_as_oom(const std::string& what, int batch_size) {
    throw TrainingError("out of memory during training (" + what + "); retry with a smaller batch_size (currently " +
                        std::to_string(batch_size) + ") or a smaller input size");
}

inline bool looks_like_oom(const std::string& msg) {
    return msg.find("alloc") != std::string::npos || msg.find("out of memory") != std::string::npos;
}

struct EvalStats {
    double loss = 0.0;
    double accuracy = 0.0;
};

inline EvalStats evaluate_batches(Classifier& model, std::span<const ImageTensor> images,
                                  std::span<const ClassLabel> labels, std::size_t batch_size) {
    torch::NoGradGuard no_grad;
    model->eval();
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < images.size(); begin += batch_size) {
        const auto end = std::min(images.size(), begin + batch_size);
        const auto x = to_tensor(images.subspan(begin, end - begin));
        const auto y = to_target(labels.subspan(begin, end - begin));
        const auto logits = model->logits(x);
        loss_sum += torch::nll_loss(torch::log_softmax(logits, 1), y, {}, at::Reduction::Sum).item<double>();
        correct += static_cast<std::size_t>(logits.argmax(1).eq(y).sum().item<int64_t>());
    }
    model->train();
    const auto n = static_cast<double>(images.size());
    return {loss_sum / n, static_cast<double>(correct) / n};
}

}  // namespace detail

/// Fits the preprocessor on the raw training images, then runs exactly
/// `config.epochs` epochs of Adam on categorical cross-entropy. Each epoch
/// shuffles with derive_seed(config.seed, epoch); sample i of the training
/// set is augmented with derive_seed(augmentation.seed, epoch, i).
[[nodiscard]] inline TrainResult train_in_memory(const ModelSpec& spec, const LabeledImages& train,
                                                 const LabeledImages& validation, const TrainConfig& config,
                                                 const AugmentationConfig& augmentation,
                                                 const BuildOptions& build = {}, const EpochCallback& on_epoch = {}) {
    validate(config);
    validate(augmentation);
    if (train.size() == 0 || validation.size() == 0) {
        throw DataError("training needs non-empty train and validation partitions (got " +
                        std::to_string(train.size()) + " and " + std::to_string(validation.size()) + ")");
    }
    TrainResult result;
    result.model = build_model(spec, config.seed, build);
    result.preprocessor = Preprocessor::fit(train.images, augmentation);

    std::vector<ImageTensor> val_images;
    val_images.reserve(validation.size());
    for (const auto& img : validation.images) {
        val_images.push_back(result.preprocessor.apply(img));
    }
    const bool augment = has_random_transforms(augmentation);
    std::vector<ImageTensor> fixed_train;
    if (!augment) {
        for (const auto& img : train.images) {
            fixed_train.push_back(result.preprocessor.apply(img));
        }
    }

    std::vector<torch::Tensor> trainable;
    for (auto& p : result.model->parameters()) {
        if (p.requires_grad()) {
            trainable.push_back(p);
        }
    }
    torch::optim::Adam optimizer(trainable, torch::optim::AdamOptions(config.learning_rate)
                                                .betas({config.beta1, config.beta2})
                                                .eps(config.adam_epsilon));
    const auto batch_size = static_cast<std::size_t>(config.batch_size);
    const auto ranges = batch_ranges(train.size(), batch_size);

    try {
        for (int epoch = 1; epoch <= config.epochs; ++epoch) {
            std::vector<std::size_t> order(train.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::mt19937_64 shuffle_engine(detail::derive_seed(config.seed, static_cast<std::uint64_t>(epoch)));
            detail::shuffle(order.begin(), order.end(), shuffle_engine);

            result.model->train();
            double loss_sum = 0.0;
            std::size_t correct = 0;
            for (std::size_t b = 0; b < ranges.size(); ++b) {
                const auto [begin, end] = ranges[b];
                std::vector<ImageTensor> batch;
                std::vector<ClassLabel> labels;
                batch.reserve(end - begin);
                for (std::size_t k = begin; k < end; ++k) {
                    const auto i = order[k];
                    if (augment) {
                        const auto moved = augment_image(
                            train.images[i], augmentation,
                            detail::derive_seed(augmentation.seed, static_cast<std::uint64_t>(epoch), i));
                        batch.push_back(result.preprocessor.apply(moved));
                    } else {
                        batch.push_back(fixed_train[i]);
                    }
                    labels.push_back(train.labels[i]);
                }
                const auto x = to_tensor(batch);
                const auto y = to_target(labels);
                optimizer.zero_grad();
                const auto logits = result.model->logits(x);
                const auto loss = torch::nll_loss(torch::log_softmax(logits, 1), y);
                const double loss_value = loss.item<double>();
                if (!std::isfinite(loss_value)) {
                    throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                                        std::to_string(b + 1) + "; lower the learning rate (currently " +
                                        detail::format_double(config.learning_rate) + ")");
                }
                loss.backward();
                optimizer.step();
                loss_sum += loss_value * static_cast<double>(end - begin);
                correct += static_cast<std::size_t>(logits.argmax(1).eq(y).sum().item<int64_t>());
            }
            const auto val = detail::evaluate_batches(result.model, val_images, validation.labels, batch_size);
            if (!std::isfinite(val.loss)) {
                throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch));
            }
            EpochRecord rec{epoch, loss_sum / static_cast<double>(train.size()),
                            static_cast<double>(correct) / static_cast<double>(train.size()), val.loss, val.accuracy};
            result.history.epochs.push_back(rec);
            if (on_epoch) {
                on_epoch(rec);
            }
        }
    } catch (const std::bad_alloc&) {
        detail::rethrow_as_oom("allocation failed", config.batch_size);
    } catch (const c10::Error& e) {
        const std::string msg = e.what_without_backtrace();
        if (detail::looks_like_oom(msg)) {
            detail::rethrow_as_oom(msg, config.batch_size);
        }
        throw TrainingError("training failed: " + msg);
    }
    result.model->eval();
    return result;
}

/// A persisted training run. `dir` holds weights.pt (native libtorch
/// archive), checkpoint.json (the sidecar below) and the fitted
/// preprocessing arrays.
struct Checkpoint {
    std::string id;
    std::filesystem::path dir;
    ModelSpec spec;
    TrainConfig train_config;
    AugmentationConfig augmentation;
    std::uint64_t split_seed = 0;
    std::string created_at;
    std::vector<ProbabilityRow> probe;

    [[nodiscard]] BackboneId backbone() const noexcept { return spec.backbone; }
    [[nodiscard]] std::filesystem::path weights_ref() const { return dir / "weights.pt"; }
    [[nodiscard]] std::filesystem::path sidecar() const { return dir / "checkpoint.json"; }
};

/// Identifier derived from everything that determines the trained weights,
/// so distinct seeds give distinct identifiers.
[[nodiscard]] inline std::string checkpoint_id(const std::string& name, const ModelSpec& spec,
                                               const TrainConfig& config, const AugmentationConfig& aug,
                                               std::uint64_t split_seed) {
    InputHash h;
    h.add("spec", to_json(spec).dump()).add("train", to_json(config).dump()).add("aug", to_json(aug).dump());
    h.add("split_seed", std::to_string(split_seed));
    return name + "@" + h.hex().substr(0, 8);
}

[[nodiscard]] inline Json to_json(const Checkpoint& c) {
    Json probe = Json::array();
    for (const auto& row : c.probe) {
        probe.push_back(Json(std::vector<double>(row.begin(), row.end())));
    }
    return Json{
        {"id", c.id},
        {"backbone", symbol(c.spec.backbone)},
        {"weights", "weights.pt"},
        {"spec", to_json(c.spec)},
        {"train_config", to_json(c.train_config)},
        {"augmentation", to_json(c.augmentation)},
        {"split_seed", c.split_seed},
        {"created_at", c.created_at},
        {"probe_outputs", probe},
    };
}

inline void save_checkpoint(const Checkpoint& c, Classifier& model, const Preprocessor& preprocessor) {
    std::filesystem::create_directories(c.dir);
    torch::save(model, c.weights_ref().string());
    preprocessor.save(c.dir);
    detail::write_file(c.sidecar(), to_json(c).dump(2) + "\n");
}

/// A checkpoint with its model rebuilt and weights restored.
struct LoadedModel {
    Checkpoint checkpoint;
    Classifier model{nullptr};
    Preprocessor preprocessor;
};

[[nodiscard]] inline Checkpoint read_checkpoint(const std::filesystem::path& dir) {
    const auto path = dir / "checkpoint.json";
    if (!std::filesystem::exists(path)) {
        throw DataError("no checkpoint at " + dir.string() + " (missing checkpoint.json)");
    }
    Json j;
    try {
        j = Json::parse(detail::read_file(path));
    } catch (const Json::parse_error& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    Checkpoint c;
    c.dir = dir;
    try {
        c.id = j.at("id").get<std::string>();
        c.spec = model_spec_from_json(j.at("spec"), "spec");
        c.train_config = train_config_from_json(j.at("train_config"), "train_config", TrainConfig{});
        c.augmentation = augmentation_from_json(j.at("augmentation"), "augmentation");
        c.split_seed = j.at("split_seed").get<std::uint64_t>();
        c.created_at = j.value("created_at", "");
        for (const auto& row : j.at("probe_outputs")) {
            ProbabilityRow r{};
            if (row.size() != kNumClasses) {
                throw DataError("probe row must have 7 values");
            }
            for (std::size_t k = 0; k < kNumClasses; ++k) {
                r[k] = row[k].get<double>();
            }
            c.probe.push_back(r);
        }
        if (j.at("backbone").get<std::string>() != symbol(c.spec.backbone)) {
            throw DataError("backbone field disagrees with spec");
        }
    } catch (const Json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    } catch (const ConfigError& e) {
        throw DataError(path.string() + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return c;
}

/// Rebuilds the model, restores its weights and checks the recorded probe
/// outputs are reproduced exactly.
[[nodiscard]] inline LoadedModel load_checkpoint(const std::filesystem::path& dir) {
    LoadedModel m;
    m.checkpoint = read_checkpoint(dir);
    auto spec = m.checkpoint.spec;
    spec.pretrained = false;  // the archive already holds every weight
    m.model = build_model(spec, 0);
    try {
        torch::load(m.model, m.checkpoint.weights_ref().string());
    } catch (const c10::Error& e) {
        throw DataError("checkpoint " + m.checkpoint.id + ": weights do not match spec " +
                        std::string(symbol(spec.backbone)) + ": " + e.what_without_backtrace());
    }
    m.model->eval();
    m.preprocessor = Preprocessor::load(dir, m.checkpoint.augmentation);
    if (probe_outputs(m.model) != m.checkpoint.probe) {
        throw DataError("checkpoint " + m.checkpoint.id + ": reloaded weights do not reproduce the recorded outputs");
    }
    return m;
}

/// Trains one model on a split and persists the checkpoint in `dir`.
[[nodiscard]] inline std::pair<Checkpoint, TrainingHistory> train(
    const std::string& name, const ModelSpec& spec, const DatasetSplit& split, const TrainConfig& config,
    const AugmentationConfig& augmentation, const std::filesystem::path& dir, const BuildOptions& build = {},
    const EpochCallback& on_epoch = {}) {
    if (split.train.empty() || split.validation.empty()) {
        throw DataError("training needs non-empty train and validation partitions");
    }
    const auto train_images = load_images(split.train, spec.input_height, spec.input_width);
    const auto val_images = load_images(split.validation, spec.input_height, spec.input_width);
    auto result = train_in_memory(spec, train_images, val_images, config, augmentation, build, on_epoch);

    Checkpoint c;
    c.id = checkpoint_id(name, spec, config, augmentation, split.seed);
    c.dir = dir;
    c.spec = spec;
    c.train_config = config;
    c.augmentation = augmentation;
    c.split_seed = split.seed;
    c.created_at = utc_timestamp();
    c.probe = probe_outputs(result.model);
    save_checkpoint(c, result.model, result.preprocessor);
    return {c, result.history};
}

/// Class probabilities for already-decoded images: resize, preprocessing,
/// eval-mode forward. No augmentation.
[[nodiscard]] inline std::vector<ProbabilityRow> predict_images(LoadedModel& m, std::span<const ImageTensor> images,
                                                                std::size_t batch_size = 32) {
    torch::NoGradGuard no_grad;
    m.model->eval();
    std::vector<ProbabilityRow> rows;
    rows.reserve(images.size());
    for (std::size_t begin = 0; begin < images.size(); begin += batch_size) {
        const auto end = std::min(images.size(), begin + batch_size);
        std::vector<ImageTensor> batch;
        for (std::size_t i = begin; i < end; ++i) {
            batch.push_back(m.preprocessor.apply(images[i]));
        }
        for (const auto& row : to_rows(m.model->forward(to_tensor(batch)))) {
            rows.push_back(row);
        }
    }
    return rows;
}

[[nodiscard]] inline PredictionMatrix predict(LoadedModel& m, const DatasetManifest& manifest,
                                              std::size_t batch_size = 32) {
    PredictionMatrix out;
    out.source_checkpoint = m.checkpoint.id;
    const auto& spec = m.checkpoint.spec;
    for (std::size_t begin = 0; begin < manifest.size(); begin += batch_size) {
        const auto end = std::min(manifest.size(), begin + batch_size);
        std::vector<ImageTensor> images;
        for (std::size_t i = begin; i < end; ++i) {
            const auto& r = manifest.records()[i];
            images.push_back(load_and_resize(r, spec.input_height, spec.input_width));
            out.image_ids.push_back(r.image_id);
        }
        for (const auto& row : predict_images(m, images, batch_size)) {
            out.probabilities.push_back(row);
        }
    }
    out.validate();
    return out;
}

}  // namespace skinstack
