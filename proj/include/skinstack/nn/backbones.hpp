#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

#include "skinstack/model_spec.hpp"
#include "skinstack/nn/layers.hpp"

// Feature extractors without their original classifier. Layouts follow the
// reference Keras applications (include_top=False); all convolutional
// backbones end in a spatial feature map that the head pools globally.

namespace skinstack::nn {

namespace detail {
inline std::string idx(const char* prefix, std::size_t i) { return prefix + std::to_string(i); }
}  // namespace detail

/// Three conv(3x3, same) + relu + maxpool(2x2) blocks with 32/64/128 filters.
[[nodiscard]] inline Sequential cnn_baseline() {
    Sequential seq;
    int64_t in = 3;
    std::size_t i = 1;
    for (const int64_t filters : {32, 64, 128}) {
        Sequential block;
        block->push_back("conv", conv2d(in, filters, 3, 1, 1, true));
        block->push_back("relu", torch::nn::ReLU());
        block->push_back("pool", torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(2).stride(2)));
        seq->push_back(detail::idx("block", i++), block);
        in = filters;
    }
    return seq;
}

/// 13 conv(3x3) layers in five blocks, each block closed by maxpool(2x2).
[[nodiscard]] inline Sequential vgg16() {
    Sequential seq;
    const std::array<std::vector<int64_t>, 5> blocks = {{{64, 64}, {128, 128}, {256, 256, 256}, {512, 512, 512},
                                                         {512, 512, 512}}};
    int64_t in = 3;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        Sequential block;
        for (std::size_t c = 0; c < blocks[b].size(); ++c) {
            block->push_back(detail::idx("conv", c + 1), conv2d(in, blocks[b][c], 3, 1, 1, true));
            block->push_back(detail::idx("relu", c + 1), torch::nn::ReLU());
            in = blocks[b][c];
        }
        block->push_back("pool", torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(2).stride(2)));
        seq->push_back(detail::idx("block", b + 1), block);
    }
    return seq;
}

/// ResNet-50 v1: bottleneck stages of 3/4/6/3 blocks.
[[nodiscard]] inline Sequential resnet50() {
    Sequential seq;
    seq->push_back("stem", conv_bn(3, 64, 7, 2, 3));
    seq->push_back("pool", torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(3).stride(2).padding(1)));
    const std::array<std::pair<int64_t, int>, 4> stages = {{{64, 3}, {128, 4}, {256, 6}, {512, 3}}};
    int64_t in = 64;
    for (std::size_t s = 0; s < stages.size(); ++s) {
        const auto [width, blocks] = stages[s];
        const int64_t out = width * 4;
        Sequential stage;
        for (int b = 0; b < blocks; ++b) {
            const int64_t stride = (b == 0 && s > 0) ? 2 : 1;
            Sequential main;
            main->push_back("reduce", conv_bn(in, width, 1, stride, 0));
            main->push_back("conv", conv_bn(width, width, 3, 1, 1));
            main->push_back("expand", conv_bn(width, out, 1, 1, 0, Act::kNone));
            Sequential shortcut;
            if (b == 0) {
                shortcut->push_back("project", conv_bn(in, out, 1, stride, 0, Act::kNone));
            }
            stage->push_back(detail::idx("block", static_cast<std::size_t>(b) + 1), Residual(main, shortcut, true));
            in = out;
        }
        seq->push_back(detail::idx("stage", s + 1), stage);
    }
    return seq;
}

/// DenseNet-121: growth rate 32, blocks of 6/12/24/16 layers, transitions
/// halve the channel count.
[[nodiscard]] inline Sequential densenet121() {
    constexpr int64_t kGrowth = 32;
    Sequential seq;
    seq->push_back("stem", conv_bn(3, 64, 7, 2, 3));
    seq->push_back("pool", torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(3).stride(2).padding(1)));
    int64_t channels = 64;
    const std::array<int, 4> layers = {6, 12, 24, 16};
    for (std::size_t b = 0; b < layers.size(); ++b) {
        Sequential block;
        for (int l = 0; l < layers[b]; ++l) {
            Sequential layer;
            layer->push_back("bn1", batch_norm(channels, 1.001e-5));
            layer->push_back("relu1", torch::nn::ReLU());
            layer->push_back("conv1", conv2d(channels, 4 * kGrowth, 1));
            layer->push_back("bn2", batch_norm(4 * kGrowth, 1.001e-5));
            layer->push_back("relu2", torch::nn::ReLU());
            layer->push_back("conv2", conv2d(4 * kGrowth, kGrowth, 3, 1, 1));
            block->push_back(detail::idx("layer", static_cast<std::size_t>(l) + 1), DenseAppend(layer));
            channels += kGrowth;
        }
        seq->push_back(detail::idx("dense", b + 1), block);
        if (b + 1 < layers.size()) {
            Sequential transition;
            transition->push_back("bn", batch_norm(channels, 1.001e-5));
            transition->push_back("relu", torch::nn::ReLU());
            transition->push_back("conv", conv2d(channels, channels / 2, 1));
            transition->push_back("pool", torch::nn::AvgPool2d(torch::nn::AvgPool2dOptions(2).stride(2)));
            seq->push_back(detail::idx("transition", b + 1), transition);
            channels /= 2;
        }
    }
    seq->push_back("bn", batch_norm(channels, 1.001e-5));
    seq->push_back("relu", torch::nn::ReLU());
    return seq;
}

/// MobileNet v1 (width multiplier 1): a full conv followed by 13 depthwise
/// separable blocks.
[[nodiscard]] inline Sequential mobilenet() {
    Sequential seq;
    seq->push_back("stem", conv_bn(3, 32, 3, 2, 1, Act::kRelu6));
    const std::array<std::pair<int64_t, int64_t>, 13> blocks = {{{64, 1},
                                                                  {128, 2},
                                                                  {128, 1},
                                                                  {256, 2},
                                                                  {256, 1},
                                                                  {512, 2},
                                                                  {512, 1},
                                                                  {512, 1},
                                                                  {512, 1},
                                                                  {512, 1},
                                                                  {512, 1},
                                                                  {1024, 2},
                                                                  {1024, 1}}};
    int64_t in = 32;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        const auto [out, stride] = blocks[i];
        Sequential block;
        block->push_back("depthwise", conv_bn(in, in, 3, stride, 1, Act::kRelu6, in));
        block->push_back("pointwise", conv_bn(in, out, 1, 1, 0, Act::kRelu6));
        seq->push_back(detail::idx("separable", i + 1), block);
        in = out;
    }
    return seq;
}

namespace detail {

[[nodiscard]] inline Sequential chain(std::vector<Sequential> parts) {
    Sequential seq;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        seq->push_back(idx("c", i + 1), parts[i]);
    }
    return seq;
}

[[nodiscard]] inline Sequential avg_pool_branch(int64_t in, int64_t out) {
    Sequential seq;
    seq->push_back("pool",
                   torch::nn::AvgPool2d(torch::nn::AvgPool2dOptions(3).stride(1).padding(1).count_include_pad(false)));
    seq->push_back("proj", conv_bn(in, out, 1));
    return seq;
}

[[nodiscard]] inline Sequential max_pool_branch() {
    Sequential seq;
    seq->push_back("pool", torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(3).stride(2)));
    return seq;
}

[[nodiscard]] inline Sequential single(torch::nn::AnyModule module, const std::string& name) {
    Sequential seq;
    seq->push_back(name, std::move(module));
    return seq;
}

// 35x35-grid block (mixed0..2).
[[nodiscard]] inline Concat inception_a(int64_t in, int64_t pool_features) {
    return Concat(std::vector<std::pair<std::string, Sequential>>{
        {"b1x1", conv_bn(in, 64, 1)},
        {"b5x5", chain({conv_bn(in, 48, 1), conv_bn(48, 64, 5, 1, 2)})},
        {"b3x3dbl", chain({conv_bn(in, 64, 1), conv_bn(64, 96, 3, 1, 1), conv_bn(96, 96, 3, 1, 1)})},
        {"pool", avg_pool_branch(in, pool_features)},
    });
}

// grid reduction (mixed3).
[[nodiscard]] inline Concat inception_b(int64_t in) {
    return Concat(std::vector<std::pair<std::string, Sequential>>{
        {"b3x3", conv_bn(in, 384, 3, 2, 0)},
        {"b3x3dbl", chain({conv_bn(in, 64, 1), conv_bn(64, 96, 3, 1, 1), conv_bn(96, 96, 3, 2, 0)})},
        {"pool", max_pool_branch()},
    });
}

// 17x17-grid block with factorised 7x7 convolutions (mixed4..7).
[[nodiscard]] inline Concat inception_c(int64_t in, int64_t c7) {
    return Concat(std::vector<std::pair<std::string, Sequential>>{
        {"b1x1", conv_bn(in, 192, 1)},
        {"b7x7", chain({conv_bn(in, c7, 1), conv_bn(c7, c7, {1, 7}, 1, same(1, 7)),
                        conv_bn(c7, 192, {7, 1}, 1, same(7, 1))})},
        {"b7x7dbl", chain({conv_bn(in, c7, 1), conv_bn(c7, c7, {7, 1}, 1, same(7, 1)),
                           conv_bn(c7, c7, {1, 7}, 1, same(1, 7)), conv_bn(c7, c7, {7, 1}, 1, same(7, 1)),
                           conv_bn(c7, 192, {1, 7}, 1, same(1, 7))})},
        {"pool", avg_pool_branch(in, 192)},
    });
}

// grid reduction (mixed8).
[[nodiscard]] inline Concat inception_d(int64_t in) {
    return Concat(std::vector<std::pair<std::string, Sequential>>{
        {"b3x3", chain({conv_bn(in, 192, 1), conv_bn(192, 320, 3, 2, 0)})},
        {"b7x7x3", chain({conv_bn(in, 192, 1), conv_bn(192, 192, {1, 7}, 1, same(1, 7)),
                          conv_bn(192, 192, {7, 1}, 1, same(7, 1)), conv_bn(192, 192, 3, 2, 0)})},
        {"pool", max_pool_branch()},
    });
}

// 8x8-grid block with expanded filter bank (mixed9..10).
[[nodiscard]] inline Concat inception_e(int64_t in) {
    auto split_3 = [](int64_t c) {
        return single(torch::nn::AnyModule(Concat(std::vector<std::pair<std::string, Sequential>>{
                          {"b1x3", conv_bn(c, 384, {1, 3}, 1, same(1, 3))},
                          {"b3x1", conv_bn(c, 384, {3, 1}, 1, same(3, 1))},
                      })),
                      "split");
    };
    return Concat(std::vector<std::pair<std::string, Sequential>>{
        {"b1x1", conv_bn(in, 320, 1)},
        {"b3x3", chain({conv_bn(in, 384, 1), split_3(384)})},
        {"b3x3dbl", chain({conv_bn(in, 448, 1), conv_bn(448, 384, 3, 1, 1), split_3(384)})},
        {"pool", avg_pool_branch(in, 192)},
    });
}

}  // namespace detail

/// Inception v3 with "valid" stem convolutions, eleven mixed blocks.
[[nodiscard]] inline Sequential inception_v3() {
    using namespace detail;
    Sequential seq;
    seq->push_back("stem1", conv_bn(3, 32, 3, 2, 0));
    seq->push_back("stem2", conv_bn(32, 32, 3, 1, 0));
    seq->push_back("stem3", conv_bn(32, 64, 3, 1, 1));
    seq->push_back("pool1", torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(3).stride(2)));
    seq->push_back("stem4", conv_bn(64, 80, 1));
    seq->push_back("stem5", conv_bn(80, 192, 3, 1, 0));
    seq->push_back("pool2", torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(3).stride(2)));
    seq->push_back("mixed0", inception_a(192, 32));
    seq->push_back("mixed1", inception_a(256, 64));
    seq->push_back("mixed2", inception_a(288, 64));
    seq->push_back("mixed3", inception_b(288));
    seq->push_back("mixed4", inception_c(768, 128));
    seq->push_back("mixed5", inception_c(768, 160));
    seq->push_back("mixed6", inception_c(768, 160));
    seq->push_back("mixed7", inception_c(768, 192));
    seq->push_back("mixed8", inception_d(768));
    seq->push_back("mixed9", inception_e(1280));
    seq->push_back("mixed10", inception_e(2048));
    return seq;
}

/// Xception: entry flow (3 strided residual blocks), middle flow (8 blocks
/// of three separable convolutions), exit flow.
[[nodiscard]] inline Sequential xception() {
    Sequential seq;
    seq->push_back("stem1", conv_bn(3, 32, 3, 2, 0));
    seq->push_back("stem2", conv_bn(32, 64, 3, 1, 0));

    auto strided_block = [](int64_t in, int64_t mid, int64_t out, bool relu_first) {
        Sequential main;
        if (relu_first) {
            main->push_back("relu1", torch::nn::ReLU());
        }
        main->push_back("sep1", separable_conv(in, mid));
        main->push_back("bn1", batch_norm(mid));
        main->push_back("relu2", torch::nn::ReLU());
        main->push_back("sep2", separable_conv(mid, out));
        main->push_back("bn2", batch_norm(out));
        main->push_back("pool", torch::nn::MaxPool2d(torch::nn::MaxPool2dOptions(3).stride(2).padding(1)));
        Sequential shortcut;
        shortcut->push_back("project", conv_bn(in, out, 1, 2, 0, Act::kNone));
        return Residual(main, shortcut, false);
    };
    seq->push_back("entry1", strided_block(64, 128, 128, false));
    seq->push_back("entry2", strided_block(128, 256, 256, true));
    seq->push_back("entry3", strided_block(256, 728, 728, true));
    for (std::size_t i = 0; i < 8; ++i) {
        Sequential main;
        for (std::size_t k = 1; k <= 3; ++k) {
            main->push_back(detail::idx("relu", k), torch::nn::ReLU());
            main->push_back(detail::idx("sep", k), separable_conv(728, 728));
            main->push_back(detail::idx("bn", k), batch_norm(728));
        }
        seq->push_back(detail::idx("middle", i + 1), Residual(main, Sequential(), false));
    }
    seq->push_back("exit1", strided_block(728, 728, 1024, true));
    seq->push_back("exit_sep1", separable_conv(1024, 1536));
    seq->push_back("exit_bn1", batch_norm(1536));
    seq->push_back("exit_relu1", torch::nn::ReLU());
    seq->push_back("exit_sep2", separable_conv(1536, 2048));
    seq->push_back("exit_bn2", batch_norm(2048));
    seq->push_back("exit_relu2", torch::nn::ReLU());
    return seq;
}

[[nodiscard]] inline Sequential make_backbone(BackboneId id) {
    switch (id) {
        case BackboneId::kCnnBaseline:
            return cnn_baseline();
        case BackboneId::kInceptionV3:
            return inception_v3();
        case BackboneId::kXception:
            return xception();
        case BackboneId::kDenseNet:
            return densenet121();
        case BackboneId::kMobileNet:
            return mobilenet();
        case BackboneId::kResNet50:
            return resnet50();
        case BackboneId::kVgg16:
            return vgg16();
    }
    throw std::invalid_argument("unknown backbone");
}

/// Depth of the published reference network, in weight layers.
[[nodiscard]] constexpr int reference_weight_layers(BackboneId id) noexcept {
    switch (id) {
        case BackboneId::kCnnBaseline:
            return 5;
        case BackboneId::kInceptionV3:
            return 48;
        case BackboneId::kXception:
            return 71;
        case BackboneId::kDenseNet:
            return 121;
        case BackboneId::kMobileNet:
            return 28;
        case BackboneId::kResNet50:
            return 50;
        case BackboneId::kVgg16:
            return 16;
    }
    return 0;
}

}  // namespace skinstack::nn
