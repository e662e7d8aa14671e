#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "skinstack/detail/random.hpp"
#include "skinstack/detail/text.hpp"
#include "skinstack/error.hpp"
#include "skinstack/image.hpp"

namespace skinstack {

enum class FlipAxis { kHorizontal, kVertical };

/// How pixels that fall outside the source frame are filled.
enum class FillMode { kNearest, kConstant };

enum class StdMode { kFeaturewise, kSamplewise };

struct AugmentationConfig {
    double rotation_range = 20.0;  // degrees
    double width_shift = 0.1;      // fraction of width
    double height_shift = 0.1;     // fraction of height
    double zoom_range = 0.1;       // zoom factor drawn from [1 - z, 1 + z]
    bool horizontal_flip = true;
    bool vertical_flip = true;
    FillMode fill_mode = FillMode::kNearest;
    double fill_value = 0.0;

    bool std_normalization = true;
    StdMode std_mode = StdMode::kFeaturewise;

    bool zca_whitening = true;
    double zca_epsilon = 1e-6;
    // ZCA is fitted on a reduced working image; full resolution has to be
    // asked for explicitly since its covariance is d x d with d = 43200.
    int zca_working_height = 32;
    int zca_working_width = 32;
    bool zca_grayscale = true;
    bool zca_full_resolution = false;

    std::uint64_t seed = 0;

    /// Every random transform and every normalisation disabled.
    [[nodiscard]] static AugmentationConfig none() {
        AugmentationConfig c;
        c.rotation_range = 0.0;
        c.width_shift = 0.0;
        c.height_shift = 0.0;
        c.zoom_range = 0.0;
        c.horizontal_flip = false;
        c.vertical_flip = false;
        c.std_normalization = false;
        c.zca_whitening = false;
        return c;
    }

    friend bool operator==(const AugmentationConfig&, const AugmentationConfig&) = default;
};

inline void validate(const AugmentationConfig& c) {
    auto fraction_ok = [](double v) { return std::isfinite(v) && v >= 0.0 && v < 1.0; };
    if (!std::isfinite(c.rotation_range) || c.rotation_range < 0.0) {
        throw ConfigError("rotation_range must be >= 0");
    }
    if (!fraction_ok(c.width_shift) || !fraction_ok(c.height_shift)) {
        throw ConfigError("width_shift and height_shift must lie in [0, 1)");
    }
    if (!fraction_ok(c.zoom_range)) {
        throw ConfigError("zoom_range must lie in [0, 1)");
    }
    if (!(c.zca_epsilon > 0.0) || !std::isfinite(c.zca_epsilon)) {
        throw ConfigError("zca_epsilon must be > 0");
    }
    if (c.zca_working_height < 1 || c.zca_working_width < 1) {
        throw ConfigError("zca working size must be at least 1x1");
    }
}

/// Mirrors the image left-right (horizontal) or top-bottom (vertical).
template <std::floating_point T>
[[nodiscard]] BasicImage<T> flip(const BasicImage<T>& img, FlipAxis axis) {
    BasicImage<T> out(img.height(), img.width(), img.channels());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            const int sy = axis == FlipAxis::kVertical ? img.height() - 1 - y : y;
            const int sx = axis == FlipAxis::kHorizontal ? img.width() - 1 - x : x;
            for (int c = 0; c < img.channels(); ++c) {
                out.at(y, x, c) = img.at(sy, sx, c);
            }
        }
    }
    return out;
}

namespace detail {

/// Samples `img` at a continuous source position, applying the fill policy
/// outside the pixel-centre lattice.
template <std::floating_point T>
[[nodiscard]] T sample_or_fill(const BasicImage<T>& img, double y, double x, int c, FillMode mode,
                               double fill_value) {
    constexpr double kSlack = 1e-9;
    const double max_y = img.height() - 1;
    const double max_x = img.width() - 1;
    const bool outside = y < -kSlack || x < -kSlack || y > max_y + kSlack || x > max_x + kSlack;
    if (outside && mode == FillMode::kConstant) {
        return static_cast<T>(fill_value);
    }
    return bilinear_at(img, std::clamp(y, 0.0, max_y), std::clamp(x, 0.0, max_x), c);
}

/// cos/sin of an angle in degrees, exact for multiples of 90.
[[nodiscard]] inline std::pair<double, double> exact_cos_sin(double degrees) {
    double a = std::fmod(degrees, 360.0);
    if (a < 0.0) {
        a += 360.0;
    }
    if (a == 0.0) return {1.0, 0.0};
    if (a == 90.0) return {0.0, 1.0};
    if (a == 180.0) return {-1.0, 0.0};
    if (a == 270.0) return {0.0, -1.0};
    const double rad = a * (3.14159265358979323846 / 180.0);
    return {std::cos(rad), std::sin(rad)};
}

}  // namespace detail

/// Rotates counter-clockwise by `degrees` about the image centre with
/// bilinear sampling. Quarter turns of square images are exact pixel
/// permutations.
template <std::floating_point T>
[[nodiscard]] BasicImage<T> rotate(const BasicImage<T>& img, double degrees, FillMode fill = FillMode::kNearest,
                                   double fill_value = 0.0) {
    const auto [cs, sn] = detail::exact_cos_sin(degrees);
    const double cy = (img.height() - 1) / 2.0;
    const double cx = (img.width() - 1) / 2.0;
    BasicImage<T> out(img.height(), img.width(), img.channels());
    for (int y = 0; y < img.height(); ++y) {
        const double dy = y - cy;
        for (int x = 0; x < img.width(); ++x) {
            const double dx = x - cx;
            const double sx = cx + dx * cs - dy * sn;
            const double sy = cy + dx * sn + dy * cs;
            for (int c = 0; c < img.channels(); ++c) {
                out.at(y, x, c) = detail::sample_or_fill(img, sy, sx, c, fill, fill_value);
            }
        }
    }
    return out;
}

/// Translates content by round(dx * W) columns (positive moves right) and
/// round(dy * H) rows (positive moves down).
template <std::floating_point T>
[[nodiscard]] BasicImage<T> shift(const BasicImage<T>& img, double dx, double dy, FillMode fill = FillMode::kNearest,
                                  double fill_value = 0.0) {
    if (!(std::abs(dx) < 1.0) || !(std::abs(dy) < 1.0)) {
        throw std::invalid_argument("shift fractions must satisfy |dx|, |dy| < 1");
    }
    const int off_x = static_cast<int>(std::lround(dx * img.width()));
    const int off_y = static_cast<int>(std::lround(dy * img.height()));
    BasicImage<T> out(img.height(), img.width(), img.channels());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            int sy = y - off_y;
            int sx = x - off_x;
            const bool outside = sy < 0 || sx < 0 || sy >= img.height() || sx >= img.width();
            if (outside && fill == FillMode::kConstant) {
                for (int c = 0; c < img.channels(); ++c) {
                    out.at(y, x, c) = static_cast<T>(fill_value);
                }
                continue;
            }
            sy = std::clamp(sy, 0, img.height() - 1);
            sx = std::clamp(sx, 0, img.width() - 1);
            for (int c = 0; c < img.channels(); ++c) {
                out.at(y, x, c) = img.at(sy, sx, c);
            }
        }
    }
    return out;
}

/// Central crop of size (H / factor, W / factor) rescaled back to H x W.
/// factor > 1 zooms in; factor < 1 zooms out and fills the border.
template <std::floating_point T>
[[nodiscard]] BasicImage<T> zoom(const BasicImage<T>& img, double factor, FillMode fill = FillMode::kNearest,
                                 double fill_value = 0.0) {
    if (!(factor > 0.0) || !std::isfinite(factor)) {
        throw std::invalid_argument("zoom factor must be positive");
    }
    const double crop_h = img.height() / factor;
    const double crop_w = img.width() / factor;
    const double top = (img.height() - crop_h) / 2.0;
    const double left = (img.width() - crop_w) / 2.0;
    // Sampling never reaches past the centres of the outermost crop pixels,
    // which is what resizing the crop on its own would do.
    const double lo_y = top;
    const double hi_y = std::max(top, top + crop_h - 1.0);
    const double lo_x = left;
    const double hi_x = std::max(left, left + crop_w - 1.0);
    BasicImage<T> out(img.height(), img.width(), img.channels());
    for (int y = 0; y < img.height(); ++y) {
        const double sy = std::clamp(top + (y + 0.5) / factor - 0.5, lo_y, hi_y);
        for (int x = 0; x < img.width(); ++x) {
            const double sx = std::clamp(left + (x + 0.5) / factor - 0.5, lo_x, hi_x);
            for (int c = 0; c < img.channels(); ++c) {
                out.at(y, x, c) = detail::sample_or_fill(img, sy, sx, c, fill, fill_value);
            }
        }
    }
    return out;
}

/// Per-feature (pixel-channel position) statistics over a batch.
class FeaturewiseStandardizer {
public:
    FeaturewiseStandardizer() = default;
    FeaturewiseStandardizer(std::vector<double> mean, std::vector<double> stddev)
        : mean_(std::move(mean)), stddev_(std::move(stddev)) {
        if (mean_.size() != stddev_.size()) {
            throw std::invalid_argument("mean and stddev lengths differ");
        }
    }

    template <std::floating_point T>
    [[nodiscard]] static FeaturewiseStandardizer fit(std::span<const BasicImage<T>> batch) {
        if (batch.empty()) {
            throw std::invalid_argument("std normalization needs a non-empty batch");
        }
        const std::size_t d = batch.front().size();
        for (const auto& img : batch) {
            if (!img.same_shape(batch.front())) {
                throw std::invalid_argument("std normalization batch has mixed shapes");
            }
        }
        const auto n = static_cast<double>(batch.size());
        std::vector<double> mean(d, 0.0);
        for (const auto& img : batch) {
            const auto v = img.values();
            for (std::size_t k = 0; k < d; ++k) {
                mean[k] += v[k];
            }
        }
        for (auto& m : mean) {
            m /= n;
        }
        std::vector<double> var(d, 0.0);
        for (const auto& img : batch) {
            const auto v = img.values();
            for (std::size_t k = 0; k < d; ++k) {
                const double e = v[k] - mean[k];
                var[k] += e * e;
            }
        }
        std::vector<double> stddev(d);
        for (std::size_t k = 0; k < d; ++k) {
            stddev[k] = std::sqrt(var[k] / n);
        }
        return {std::move(mean), std::move(stddev)};
    }

    /// Features whose spread is negligible relative to their level are
    /// treated as constant and mapped to 0.
    [[nodiscard]] static bool degenerate(double mean, double stddev) noexcept {
        return !(stddev > 1e-12 * std::max(1.0, std::abs(mean)));
    }

    template <std::floating_point T>
    [[nodiscard]] BasicImage<T> apply(const BasicImage<T>& img) const {
        if (img.size() != mean_.size()) {
            throw std::invalid_argument("image size does not match fitted standardizer");
        }
        BasicImage<T> out = img;
        auto v = out.values();
        for (std::size_t k = 0; k < v.size(); ++k) {
            v[k] = degenerate(mean_[k], stddev_[k]) ? T{0}
                                                    : static_cast<T>((double{v[k]} - mean_[k]) / stddev_[k]);
        }
        return out;
    }

    [[nodiscard]] const std::vector<double>& mean() const noexcept { return mean_; }
    [[nodiscard]] const std::vector<double>& stddev() const noexcept { return stddev_; }
    [[nodiscard]] std::size_t dimension() const noexcept { return mean_.size(); }

private:
    std::vector<double> mean_;
    std::vector<double> stddev_;
};

/// Featurewise standardisation: zero mean and unit (population) standard
/// deviation per position across the batch; constant positions become 0.
template <std::floating_point T>
[[nodiscard]] std::vector<BasicImage<T>> std_normalize(std::span<const BasicImage<T>> batch) {
    const auto standardizer = FeaturewiseStandardizer::fit(batch);
    std::vector<BasicImage<T>> out;
    out.reserve(batch.size());
    for (const auto& img : batch) {
        out.push_back(standardizer.apply(img));
    }
    return out;
}

template <std::floating_point T>
[[nodiscard]] std::vector<BasicImage<T>> std_normalize(const std::vector<BasicImage<T>>& batch) {
    return std_normalize(std::span<const BasicImage<T>>(batch));
}

/// Samplewise variant: each image is standardised over its own values.
template <std::floating_point T>
[[nodiscard]] BasicImage<T> samplewise_normalize(const BasicImage<T>& img) {
    const auto v = img.values();
    double mean = 0.0;
    for (const T x : v) {
        mean += x;
    }
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (const T x : v) {
        var += (x - mean) * (x - mean);
    }
    const double stddev = std::sqrt(var / static_cast<double>(v.size()));
    BasicImage<T> out = img;
    for (auto& x : out.values()) {
        x = FeaturewiseStandardizer::degenerate(mean, stddev) ? T{0} : static_cast<T>((x - mean) / stddev);
    }
    return out;
}

/// Random parameters drawn for one image.
struct TransformParams {
    double angle = 0.0;
    double shift_x = 0.0;
    double shift_y = 0.0;
    double zoom = 1.0;
    bool flip_horizontal = false;
    bool flip_vertical = false;

    friend bool operator==(const TransformParams&, const TransformParams&) = default;
};

/// Draws one parameter set. The engine is advanced the same number of times
/// regardless of which transforms are enabled.
template <typename Engine>
[[nodiscard]] TransformParams sample_transform(const AugmentationConfig& config, Engine& engine) {
    TransformParams p;
    p.angle = detail::uniform_real(engine, -config.rotation_range, config.rotation_range);
    p.shift_x = detail::uniform_real(engine, -config.width_shift, config.width_shift);
    p.shift_y = detail::uniform_real(engine, -config.height_shift, config.height_shift);
    p.zoom = detail::uniform_real(engine, 1.0 - config.zoom_range, 1.0 + config.zoom_range);
    const bool h = detail::coin(engine);
    const bool v = detail::coin(engine);
    p.flip_horizontal = config.horizontal_flip && h;
    p.flip_vertical = config.vertical_flip && v;
    return p;
}

/// rotate -> shift -> zoom -> flips; identity parameters are skipped.
template <std::floating_point T>
[[nodiscard]] BasicImage<T> apply_transform(const BasicImage<T>& img, const TransformParams& p,
                                            const AugmentationConfig& config) {
    BasicImage<T> out = img;
    if (p.angle != 0.0) {
        out = rotate(out, p.angle, config.fill_mode, config.fill_value);
    }
    if (p.shift_x != 0.0 || p.shift_y != 0.0) {
        out = shift(out, p.shift_x, p.shift_y, config.fill_mode, config.fill_value);
    }
    if (p.zoom != 1.0) {
        out = zoom(out, p.zoom, config.fill_mode, config.fill_value);
    }
    if (p.flip_horizontal) {
        out = flip(out, FlipAxis::kHorizontal);
    }
    if (p.flip_vertical) {
        out = flip(out, FlipAxis::kVertical);
    }
    return out;
}

/// Augments one image with the substream derived from `stream_seed`.
template <std::floating_point T>
[[nodiscard]] BasicImage<T> augment_image(const BasicImage<T>& img, const AugmentationConfig& config,
                                          std::uint64_t stream_seed, TransformParams* drawn = nullptr) {
    std::mt19937_64 engine(stream_seed);
    const auto params = sample_transform(config, engine);
    if (drawn != nullptr) {
        *drawn = params;
    }
    return apply_transform(img, params, config);
}

/// Independent random transforms per image. Image i uses the substream
/// derive_seed(seed, i), so results do not depend on processing order.
template <std::floating_point T>
[[nodiscard]] std::vector<BasicImage<T>> augment_batch(std::span<const BasicImage<T>> batch,
                                                       const AugmentationConfig& config, std::uint64_t seed,
                                                       std::vector<TransformParams>* drawn = nullptr) {
    validate(config);
    std::vector<BasicImage<T>> out;
    out.reserve(batch.size());
    if (drawn != nullptr) {
        drawn->assign(batch.size(), {});
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
        out.push_back(augment_image(batch[i], config, detail::derive_seed(seed, i),
                                    drawn != nullptr ? &(*drawn)[i] : nullptr));
    }
    return out;
}

template <std::floating_point T>
[[nodiscard]] std::vector<BasicImage<T>> augment_batch(const std::vector<BasicImage<T>>& batch,
                                                       const AugmentationConfig& config, std::uint64_t seed,
                                                       std::vector<TransformParams>* drawn = nullptr) {
    return augment_batch(std::span<const BasicImage<T>>(batch), config, seed, drawn);
}

}  // namespace skinstack
