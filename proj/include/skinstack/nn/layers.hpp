#pragma once

#include <string>
#include <utility>
#include <vector>

#include <torch/torch.h>

namespace skinstack::nn {

/// Sequential with a concrete forward, so it can be nested in other
/// containers.
class SequentialImpl : public torch::nn::SequentialImpl {
public:
    using torch::nn::SequentialImpl::SequentialImpl;
    torch::Tensor forward(torch::Tensor x) { return torch::nn::SequentialImpl::forward(x); }
};
TORCH_MODULE(Sequential);

enum class Act { kNone, kRelu, kRelu6 };

[[nodiscard]] inline torch::nn::Conv2d conv2d(int64_t in, int64_t out, torch::ExpandingArray<2> kernel,
                                              torch::ExpandingArray<2> stride = 1, torch::ExpandingArray<2> padding = 0,
                                              bool bias = false, int64_t groups = 1) {
    return torch::nn::Conv2d(
        torch::nn::Conv2dOptions(in, out, kernel).stride(stride).padding(padding).bias(bias).groups(groups));
}

[[nodiscard]] inline torch::nn::BatchNorm2d batch_norm(int64_t channels, double eps = 1e-3) {
    return torch::nn::BatchNorm2d(torch::nn::BatchNorm2dOptions(channels).eps(eps).momentum(0.01));
}

inline void push_activation(Sequential& seq, Act act) {
    switch (act) {
        case Act::kRelu:
            seq->push_back("relu", torch::nn::ReLU());
            break;
        case Act::kRelu6:
            seq->push_back("relu6", torch::nn::ReLU6());
            break;
        case Act::kNone:
            break;
    }
}

/// conv (no bias) -> batch norm -> activation. `padding` is explicit so that
/// both "valid" (0) and "same" (k / 2) layouts can be expressed.
[[nodiscard]] inline Sequential conv_bn(int64_t in, int64_t out, torch::ExpandingArray<2> kernel,
                                        torch::ExpandingArray<2> stride = 1, torch::ExpandingArray<2> padding = 0,
                                        Act act = Act::kRelu, int64_t groups = 1) {
    Sequential seq;
    seq->push_back("conv", conv2d(in, out, kernel, stride, padding, false, groups));
    seq->push_back("bn", batch_norm(out));
    push_activation(seq, act);
    return seq;
}

/// "same" padding for odd kernels at stride 1.
[[nodiscard]] inline torch::ExpandingArray<2> same(int64_t kh, int64_t kw) { return {kh / 2, kw / 2}; }

/// Depthwise 3x3 followed by pointwise 1x1, neither with bias.
[[nodiscard]] inline Sequential separable_conv(int64_t in, int64_t out) {
    Sequential seq;
    seq->push_back("depthwise", conv2d(in, in, 3, 1, 1, false, in));
    seq->push_back("pointwise", conv2d(in, out, 1));
    return seq;
}

/// y = main(x) + shortcut(x), shortcut defaulting to identity, optionally
/// followed by ReLU.
class ResidualImpl : public torch::nn::Module {
public:
    ResidualImpl(Sequential main, Sequential shortcut, bool relu_after)
        : main_(register_module("main", std::move(main))), relu_after_(relu_after) {
        if (!shortcut.is_empty() && shortcut->size() > 0) {
            shortcut_ = register_module("shortcut", std::move(shortcut));
        }
    }

    torch::Tensor forward(torch::Tensor x) {
        auto y = main_->forward(x);
        y = y + (shortcut_ ? shortcut_->forward(x) : x);
        return relu_after_ ? torch::relu(y) : y;
    }

private:
    Sequential main_;
    Sequential shortcut_{nullptr};
    bool relu_after_;
};
TORCH_MODULE(Residual);

/// Runs parallel branches on the same input and concatenates on channels.
class ConcatImpl : public torch::nn::Module {
public:
    explicit ConcatImpl(std::vector<std::pair<std::string, Sequential>> branches) {
        for (auto& [name, branch] : branches) {
            branches_.push_back(register_module(name, std::move(branch)));
        }
    }

    torch::Tensor forward(torch::Tensor x) {
        std::vector<torch::Tensor> outs;
        outs.reserve(branches_.size());
        for (auto& b : branches_) {
            outs.push_back(b->forward(x));
        }
        return torch::cat(outs, 1);
    }

private:
    std::vector<Sequential> branches_;
};
TORCH_MODULE(Concat);

/// Output is the input with the layer's output appended on channels.
class DenseAppendImpl : public torch::nn::Module {
public:
    explicit DenseAppendImpl(Sequential layer) : layer_(register_module("layer", std::move(layer))) {}
    torch::Tensor forward(torch::Tensor x) { return torch::cat({x, layer_->forward(x)}, 1); }

private:
    Sequential layer_;
};
TORCH_MODULE(DenseAppend);

}  // namespace skinstack::nn
