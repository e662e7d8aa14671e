#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <vector>

#include "skinstack/augment.hpp"
#include "skinstack/image.hpp"
#include "skinstack/zca.hpp"

namespace skinstack {

/// The fitted, deterministic part of the input pipeline: featurewise (or
/// samplewise) standardisation followed by ZCA whitening. Fitted on the
/// un-augmented training partition and stored with each checkpoint so that
/// prediction sees exactly the same transform.
class Preprocessor {
public:
    Preprocessor() = default;

    [[nodiscard]] static Preprocessor fit(std::span<const ImageTensor> train_images, const AugmentationConfig& config) {
        validate(config);
        Preprocessor p;
        p.config_ = config;
        if (!config.std_normalization && !config.zca_whitening) {
            return p;
        }
        if (train_images.empty()) {
            throw DataError("cannot fit preprocessing on an empty training partition");
        }
        if (config.std_normalization && config.std_mode == StdMode::kFeaturewise) {
            p.standardizer_ = FeaturewiseStandardizer::fit(train_images);
        }
        if (config.zca_whitening) {
            std::vector<ImageTensor> working;
            working.reserve(train_images.size());
            for (const auto& img : train_images) {
                working.push_back(p.to_working(p.standardize(img)));
            }
            p.whitener_ = ZCAWhitener::fit(std::span<const ImageTensor>(working), config.zca_epsilon);
        }
        return p;
    }

    [[nodiscard]] ImageTensor apply(const ImageTensor& img) const {
        ImageTensor out = standardize(img);
        if (!config_.zca_whitening) {
            return out;
        }
        if (!whitener_) {
            throw std::logic_error("preprocessor used before fitting");
        }
        ImageTensor white = whitener_->apply(to_working(out));
        if (config_.zca_full_resolution) {
            return white;
        }
        return broadcast_channels(resize_bilinear(white, img.height(), img.width()), img.channels());
    }

    [[nodiscard]] const AugmentationConfig& config() const noexcept { return config_; }
    [[nodiscard]] const std::optional<FeaturewiseStandardizer>& standardizer() const noexcept { return standardizer_; }
    [[nodiscard]] const std::optional<ZCAWhitener>& whitener() const noexcept { return whitener_; }

    /// Writes `featurewise.bin` and/or `zca.bin` into `dir`.
    void save(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        if (standardizer_) {
            save_standardizer(*standardizer_, dir / "featurewise.bin");
        }
        if (whitener_) {
            whitener_->save(dir / "zca.bin");
        }
    }

    [[nodiscard]] static Preprocessor load(const std::filesystem::path& dir, const AugmentationConfig& config) {
        Preprocessor p;
        p.config_ = config;
        if (config.std_normalization && config.std_mode == StdMode::kFeaturewise) {
            p.standardizer_ = load_standardizer(dir / "featurewise.bin");
        }
        if (config.zca_whitening) {
            p.whitener_ = ZCAWhitener::load(dir / "zca.bin");
        }
        return p;
    }

private:
    [[nodiscard]] ImageTensor standardize(const ImageTensor& img) const {
        if (!config_.std_normalization) {
            return img;
        }
        if (config_.std_mode == StdMode::kSamplewise) {
            return samplewise_normalize(img);
        }
        if (!standardizer_) {
            throw std::logic_error("preprocessor used before fitting");
        }
        return standardizer_->apply(img);
    }

    [[nodiscard]] ImageTensor to_working(const ImageTensor& img) const {
        if (config_.zca_full_resolution) {
            return img;
        }
        ImageTensor small = resize_bilinear(img, config_.zca_working_height, config_.zca_working_width);
        return config_.zca_grayscale ? to_grayscale(small) : small;
    }

    static constexpr std::array<char, 8> kStdMagic = {'S', 'K', 'S', 'T', 'D', '0', '0', '1'};

    static void save_standardizer(const FeaturewiseStandardizer& s, const std::filesystem::path& path) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        const auto d = static_cast<std::uint64_t>(s.dimension());
        out.write(kStdMagic.data(), kStdMagic.size());
        out.write(reinterpret_cast<const char*>(&d), sizeof(d));
        out.write(reinterpret_cast<const char*>(s.mean().data()), static_cast<std::streamsize>(d * sizeof(double)));
        out.write(reinterpret_cast<const char*>(s.stddev().data()), static_cast<std::streamsize>(d * sizeof(double)));
        if (!out) {
            throw DataError("cannot write standardizer: " + path.string());
        }
    }

    [[nodiscard]] static FeaturewiseStandardizer load_standardizer(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        std::array<char, 8> magic{};
        in.read(magic.data(), magic.size());
        std::uint64_t d = 0;
        in.read(reinterpret_cast<char*>(&d), sizeof(d));
        if (!in || magic != kStdMagic || d == 0 || d > (1ULL << 32)) {
            throw DataError("not a standardizer file: " + path.string());
        }
        std::vector<double> mean(d);
        std::vector<double> stddev(d);
        in.read(reinterpret_cast<char*>(mean.data()), static_cast<std::streamsize>(d * sizeof(double)));
        in.read(reinterpret_cast<char*>(stddev.data()), static_cast<std::streamsize>(d * sizeof(double)));
        if (!in) {
            throw DataError("truncated standardizer file: " + path.string());
        }
        return {std::move(mean), std::move(stddev)};
    }

    AugmentationConfig config_ = AugmentationConfig::none();
    std::optional<FeaturewiseStandardizer> standardizer_;
    std::optional<ZCAWhitener> whitener_;
};

}  // namespace skinstack
