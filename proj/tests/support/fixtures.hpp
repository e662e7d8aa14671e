#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "skinstack/class_label.hpp"

namespace skinstack::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("skinstack_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

struct FakeSample {
    std::string image_id;
    ClassLabel label;
};

/// Class-dependent colour with per-image noise; images of one class share a
/// hue so that a small network can separate them.
inline cv::Mat lesion_like_image(ClassLabel label, int height, int width, std::uint64_t seed) {
    static constexpr int kPalette[kNumClasses][3] = {
        {40, 60, 200}, {30, 30, 60}, {120, 160, 200}, {200, 120, 200}, {60, 120, 220}, {40, 40, 220}, {90, 130, 150},
    };
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> noise(-20, 20);
    cv::Mat img(height, width, CV_8UC3, cv::Scalar(170, 190, 225));
    const auto* col = kPalette[ordinal(label)];
    const int cy = height / 2 + noise(rng) / 2;
    const int cx = width / 2 + noise(rng) / 2;
    const int r = std::min(height, width) / 3;
    for (int y = 0; y < height; ++y) {
        auto* row = img.ptr<cv::Vec3b>(y);
        for (int x = 0; x < width; ++x) {
            const bool inside = (y - cy) * (y - cy) + (x - cx) * (x - cx) < r * r;
            for (int c = 0; c < 3; ++c) {
                const int base = inside ? col[c] : row[x][c];
                row[x][c] = cv::saturate_cast<uchar>(base + noise(rng));
            }
        }
    }
    return img;
}

/// Writes `<dir>/metadata.csv` in the HAM10000 column layout plus one image
/// per sample under `<dir>/images`.
inline std::filesystem::path write_fake_dataset(const std::filesystem::path& dir, const std::vector<FakeSample>& samples,
                                                int height = 24, int width = 32, const std::string& ext = ".png") {
    std::filesystem::create_directories(dir / "images");
    std::ofstream meta(dir / "metadata.csv");
    meta << "lesion_id,image_id,dx,dx_type,age,sex,localization\n";
    std::uint64_t seed = 0;
    for (const auto& s : samples) {
        meta << "HAM_" << s.image_id << ',' << s.image_id << ',' << short_code(s.label) << ",histo,50.0,male,back\n";
        cv::imwrite((dir / "images" / (s.image_id + ext)).string(), lesion_like_image(s.label, height, width, ++seed));
    }
    return dir / "metadata.csv";
}

/// `per_class[c]` samples of class c, ids ISIC_0000000 upwards.
inline std::vector<FakeSample> fake_samples(const std::array<std::size_t, kNumClasses>& per_class) {
    std::vector<FakeSample> out;
    std::size_t next = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        for (std::size_t k = 0; k < per_class[c]; ++k) {
            char id[32];
            std::snprintf(id, sizeof(id), "ISIC_%07zu", next++);
            out.push_back({id, kAllClasses[c]});
        }
    }
    return out;
}

}  // namespace skinstack::testing
