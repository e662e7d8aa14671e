#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include <torch/torch.h>

#include "skinstack/error.hpp"
#include "skinstack/model_spec.hpp"
#include "skinstack/nn/backbones.hpp"
#include "skinstack/nn/layers.hpp"

namespace skinstack {

/// Environment variable naming the pretrained-weights cache directory.
inline constexpr const char* kWeightsDirEnv = "SKINSTACK_WEIGHTS_DIR";

struct BuildOptions {
    /// Overrides the environment variable when set.
    std::optional<std::filesystem::path> weights_dir;
};

[[nodiscard]] inline std::optional<std::filesystem::path> resolve_weights_dir(const BuildOptions& opts) {
    if (opts.weights_dir) {
        return opts.weights_dir;
    }
    if (const char* env = std::getenv(kWeightsDirEnv); env != nullptr && *env != '\0') {
        return std::filesystem::path(env);
    }
    return std::nullopt;
}

/// Backbone followed by the classification head. forward() returns class
/// probabilities; logits() the pre-softmax scores used by the loss.
class ClassifierImpl : public torch::nn::Module {
public:
    explicit ClassifierImpl(const ModelSpec& spec) : spec_(spec) {
        backbone_ = register_module("backbone", nn::make_backbone(spec.backbone));
        flatten_ = spec.backbone == BackboneId::kCnnBaseline;
        const auto features = feature_width();
        dense_ = register_module("dense", torch::nn::Linear(features, spec.head.dense_units));
        dropout_ = register_module("dropout", torch::nn::Dropout(spec.head.dropout_rate));
        out_ = register_module("output",
                               torch::nn::Linear(spec.head.dense_units, static_cast<int64_t>(HeadConfig::kNumOutputs)));
    }

    torch::Tensor features(torch::Tensor x) {
        auto f = backbone_->forward(x);
        return flatten_ ? f.flatten(1) : f.mean({2, 3});
    }

    torch::Tensor logits(torch::Tensor x) {
        auto h = torch::relu(dense_->forward(features(x)));
        return out_->forward(dropout_->forward(h));
    }

    torch::Tensor forward(torch::Tensor x) { return torch::softmax(logits(x), 1); }

    [[nodiscard]] const ModelSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] nn::Sequential& backbone() noexcept { return backbone_; }

private:
    // Width of the vector entering the dense layer, found by a dry run in eval
    // mode so batch-norm statistics are left untouched.
    int64_t feature_width() {
        torch::NoGradGuard no_grad;
        backbone_->eval();
        torch::Tensor probe;
        try {
            probe = features(torch::zeros({1, spec_.input_channels, spec_.input_height, spec_.input_width}));
        } catch (const c10::Error&) {
            throw ConfigError("input shape " + std::to_string(spec_.input_height) + "x" +
                              std::to_string(spec_.input_width) + " is too small for backbone " +
                              std::string(symbol(spec_.backbone)));
        }
        backbone_->train();
        return probe.size(1);
    }

    ModelSpec spec_;
    nn::Sequential backbone_{nullptr};
    bool flatten_ = false;
    torch::nn::Linear dense_{nullptr};
    torch::nn::Dropout dropout_{nullptr};
    torch::nn::Linear out_{nullptr};
};
TORCH_MODULE(Classifier);

[[nodiscard]] inline std::filesystem::path pretrained_weights_path(const std::filesystem::path& dir, BackboneId id) {
    return dir / (std::string(selector_name(id)) + ".pt");
}

/// Builds the classifier with every parameter drawn from `seed`. Pretrained
/// backbones are read from `<weights_dir>/<selector>.pt`, a serialized
/// backbone module; the head keeps its seeded initialization.
[[nodiscard]] inline Classifier build_model(const ModelSpec& spec, std::uint64_t seed, const BuildOptions& opts = {}) {
    validate(spec);
    if (spec.pretrained && spec.backbone == BackboneId::kCnnBaseline) {
        throw ConfigError("CNN_BASELINE has no pretrained weights; set pretrained to false");
    }
    torch::manual_seed(seed);
    Classifier model(spec);
    if (spec.pretrained) {
        const auto dir = resolve_weights_dir(opts);
        if (!dir) {
            throw ConfigError("pretrained weights for " + std::string(symbol(spec.backbone)) +
                              " requested but no cache directory is configured (set " + kWeightsDirEnv +
                              " or weights_dir)");
        }
        const auto path = pretrained_weights_path(*dir, spec.backbone);
        if (!std::filesystem::exists(path)) {
            throw ConfigError("pretrained weights for " + std::string(symbol(spec.backbone)) + " not found at " +
                              path.string());
        }
        try {
            torch::load(model->backbone(), path.string());
        } catch (const c10::Error& e) {
            throw ConfigError("cannot load pretrained weights " + path.string() + ": " + e.what_without_backtrace());
        }
    }
    if (spec.freeze_backbone) {
        for (auto& p : model->backbone()->parameters()) {
            p.set_requires_grad(false);
        }
    }
    return model;
}

namespace detail {

inline int64_t count_params(const torch::nn::Module& m) {
    int64_t n = 0;
    for (const auto& p : m.parameters()) {
        n += p.numel();
    }
    return n;
}

inline bool is_weight_layer(const torch::nn::Module& m) {
    return dynamic_cast<const torch::nn::Conv2dImpl*>(&m) != nullptr ||
           dynamic_cast<const torch::nn::LinearImpl*>(&m) != nullptr;
}

}  // namespace detail

/// Deterministic text summary: one line per leaf layer, weight-layer tallies
/// for backbone and head, parameter counts.
[[nodiscard]] inline std::string describe_model(const ModelSpec& spec, const BuildOptions& opts = {}) {
    auto model = build_model(spec, 0, opts);
    std::ostringstream out;
    out << "model " << symbol(spec.backbone) << " input " << spec.input_height << "x" << spec.input_width << "x"
        << spec.input_channels << (spec.pretrained ? " pretrained" : " random-init")
        << (spec.freeze_backbone ? " frozen-backbone" : "") << '\n';

    std::map<std::string, int> kinds;
    int backbone_weight_layers = 0;
    int head_weight_layers = 0;
    for (const auto& item : model->named_modules("", false)) {
        const auto& m = *item.value();
        if (!m.children().empty()) {
            continue;
        }
        std::ostringstream pretty;
        m.pretty_print(pretty);
        const auto params = detail::count_params(m);
        out << "  " << item.key() << "  " << pretty.str();
        if (params > 0) {
            out << "  params=" << params;
        }
        out << '\n';
        const auto kind = pretty.str().substr(0, pretty.str().find('('));
        ++kinds[kind];
        if (detail::is_weight_layer(m)) {
            (item.key().rfind("backbone.", 0) == 0 ? backbone_weight_layers : head_weight_layers)++;
        }
    }
    out << "layer kinds:";
    for (const auto& [kind, n] : kinds) {
        out << ' ' << kind << '=' << n;
    }
    out << '\n';
    out << "backbone weight layers: " << backbone_weight_layers << '\n';
    out << "head weight layers: " << head_weight_layers << " (dense " << spec.head.dense_units << " relu, dropout "
        << spec.head.dropout_rate << ", dense " << HeadConfig::kNumOutputs << " softmax)\n";
    if (spec.backbone == BackboneId::kCnnBaseline) {
        out << "blocks: 3 x (convolutional, pooling), fully connected " << spec.head.dense_units << ", output "
            << HeadConfig::kNumOutputs << '\n';
    } else {
        out << "reference depth: " << nn::reference_weight_layers(spec.backbone)
            << " weight layers (original classifier replaced by the head)\n";
    }
    const auto total = detail::count_params(*model);
    int64_t trainable = 0;
    for (const auto& p : model->parameters()) {
        if (p.requires_grad()) {
            trainable += p.numel();
        }
    }
    out << "parameters: total=" << total << " trainable=" << trainable << '\n';
    return out.str();
}

}  // namespace skinstack
