#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "skinstack/dataset.hpp"
#include "skinstack/error.hpp"

namespace skinstack {

/// Working input resolution of every classifier.
inline constexpr int kInputHeight = 120;
inline constexpr int kInputWidth = 120;
inline constexpr int kInputChannels = 3;

/// Dense height x width x channels image, channels interleaved (HWC).
template <std::floating_point T>
class BasicImage {
public:
    using value_type = T;

    BasicImage() = default;
    BasicImage(int height, int width, int channels, T fill = T{0})
        : height_(height), width_(width), channels_(channels),
          values_(static_cast<std::size_t>(checked_size(height, width, channels)), fill) {}
    BasicImage(int height, int width, int channels, std::vector<T> values)
        : height_(height), width_(width), channels_(channels), values_(std::move(values)) {
        if (values_.size() != static_cast<std::size_t>(checked_size(height, width, channels))) {
            throw std::invalid_argument("image buffer size does not match its shape");
        }
    }

    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int channels() const noexcept { return channels_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] bool same_shape(const BasicImage& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
    }

    [[nodiscard]] T& at(int y, int x, int c) noexcept { return values_[index(y, x, c)]; }
    [[nodiscard]] T at(int y, int x, int c) const noexcept { return values_[index(y, x, c)]; }

    [[nodiscard]] std::span<T> values() noexcept { return values_; }
    [[nodiscard]] std::span<const T> values() const noexcept { return values_; }

    [[nodiscard]] bool all_finite() const noexcept {
        return std::all_of(values_.begin(), values_.end(), [](T v) { return std::isfinite(v); });
    }

    template <std::floating_point U>
    [[nodiscard]] BasicImage<U> cast() const {
        return BasicImage<U>(height_, width_, channels_, std::vector<U>(values_.begin(), values_.end()));
    }

    friend bool operator==(const BasicImage&, const BasicImage&) = default;

private:
    static long checked_size(int h, int w, int c) {
        if (h < 1 || w < 1 || c < 1) {
            throw std::invalid_argument("image dimensions must be positive");
        }
        return static_cast<long>(h) * w * c;
    }
    [[nodiscard]] std::size_t index(int y, int x, int c) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
                   static_cast<std::size_t>(channels_) +
               static_cast<std::size_t>(c);
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<T> values_;
};

using ImageTensor = BasicImage<float>;

namespace detail {

/// Bilinear interpolation written as nested lerps so that equal neighbours
/// reproduce their value exactly and integral coordinates return the stored
/// pixel untouched.
template <std::floating_point T>
[[nodiscard]] T bilinear_at(const BasicImage<T>& img, double y, double x, int c) {
    const double y0f = std::floor(y);
    const double x0f = std::floor(x);
    const int y0 = static_cast<int>(y0f);
    const int x0 = static_cast<int>(x0f);
    const double fy = y - y0f;
    const double fx = x - x0f;
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const int x1 = std::min(x0 + 1, img.width() - 1);
    if (fy == 0.0 && fx == 0.0) {
        return img.at(y0, x0, c);
    }
    const double top = std::lerp(double{img.at(y0, x0, c)}, double{img.at(y0, x1, c)}, fx);
    const double bottom = std::lerp(double{img.at(y1, x0, c)}, double{img.at(y1, x1, c)}, fx);
    return static_cast<T>(std::lerp(top, bottom, fy));
}

}  // namespace detail

/// Resamples to (out_h, out_w) with half-pixel-centre bilinear interpolation
/// and edge clamping. Aspect ratio is not preserved. Same-size resizes return
/// an exact copy.
template <std::floating_point T>
[[nodiscard]] BasicImage<T> resize_bilinear(const BasicImage<T>& src, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) {
        throw std::invalid_argument("resize target must be at least 1x1");
    }
    if (out_h == src.height() && out_w == src.width()) {
        return src;
    }
    BasicImage<T> out(out_h, out_w, src.channels());
    const double sy = static_cast<double>(src.height()) / out_h;
    const double sx = static_cast<double>(src.width()) / out_w;
    for (int y = 0; y < out_h; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height() - 1));
        for (int x = 0; x < out_w; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width() - 1));
            for (int c = 0; c < src.channels(); ++c) {
                out.at(y, x, c) = detail::bilinear_at(src, fy, fx, c);
            }
        }
    }
    return out;
}

/// ITU-R BT.601 luma; single-channel images pass through.
template <std::floating_point T>
[[nodiscard]] BasicImage<T> to_grayscale(const BasicImage<T>& src) {
    if (src.channels() == 1) {
        return src;
    }
    if (src.channels() != 3) {
        throw std::invalid_argument("grayscale conversion needs 1 or 3 channels");
    }
    BasicImage<T> out(src.height(), src.width(), 1);
    for (int y = 0; y < src.height(); ++y) {
        for (int x = 0; x < src.width(); ++x) {
            out.at(y, x, 0) = static_cast<T>(0.299 * src.at(y, x, 0) + 0.587 * src.at(y, x, 1) +
                                             0.114 * src.at(y, x, 2));
        }
    }
    return out;
}

/// Replicates a single channel into `channels` channels.
template <std::floating_point T>
[[nodiscard]] BasicImage<T> broadcast_channels(const BasicImage<T>& src, int channels) {
    if (src.channels() == channels) {
        return src;
    }
    if (src.channels() != 1) {
        throw std::invalid_argument("can only broadcast single-channel images");
    }
    BasicImage<T> out(src.height(), src.width(), channels);
    for (int y = 0; y < src.height(); ++y) {
        for (int x = 0; x < src.width(); ++x) {
            for (int c = 0; c < channels; ++c) {
                out.at(y, x, c) = src.at(y, x, 0);
            }
        }
    }
    return out;
}

/// Decodes an image file to RGB with values in [0, 1].
[[nodiscard]] inline ImageTensor load_image(const std::filesystem::path& path) {
    const cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) {
        throw DataError("cannot decode image: " + path.string());
    }
    ImageTensor out(bgr.rows, bgr.cols, 3);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < bgr.cols; ++x) {
            out.at(y, x, 0) = static_cast<float>(row[x][2]) / 255.0f;
            out.at(y, x, 1) = static_cast<float>(row[x][1]) / 255.0f;
            out.at(y, x, 2) = static_cast<float>(row[x][0]) / 255.0f;
        }
    }
    return out;
}

[[nodiscard]] inline ImageTensor load_and_resize(const LesionRecord& record, int target_h, int target_w) {
    if (target_h < 1 || target_w < 1) {
        throw std::invalid_argument("resize target must be at least 1x1");
    }
    try {
        return resize_bilinear(load_image(record.image_path), target_h, target_w);
    } catch (const DataError& e) {
        throw DataError("image_id " + record.image_id + ": " + e.what());
    }
}

/// Writes an RGB or grayscale image in [0, 1] as 8-bit. Used by tests and the
/// synthetic data generator.
inline void save_image(const ImageTensor& img, const std::filesystem::path& path) {
    const int type = img.channels() == 1 ? CV_8UC1 : CV_8UC3;
    cv::Mat mat(img.height(), img.width(), type);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            auto to8 = [&](int c) {
                return static_cast<unsigned char>(std::lround(std::clamp(img.at(y, x, c), 0.0f, 1.0f) * 255.0f));
            };
            if (img.channels() == 1) {
                mat.at<unsigned char>(y, x) = to8(0);
            } else {
                mat.at<cv::Vec3b>(y, x) = cv::Vec3b(to8(2), to8(1), to8(0));
            }
        }
    }
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    if (!cv::imwrite(path.string(), mat)) {
        throw DataError("cannot write image: " + path.string());
    }
}

}  // namespace skinstack
