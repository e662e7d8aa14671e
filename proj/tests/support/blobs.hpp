#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "skinstack/class_label.hpp"
#include "skinstack/image.hpp"

namespace skinstack::testing {

struct BlobSet {
    std::vector<ImageTensor> images;
    std::vector<ClassLabel> labels;
};

/// One bright Gaussian blob per image on a noisy background. Class c puts its
/// blob at angle 2*pi*c/7 on a circle around the centre and tints it with a
/// class-specific colour.
inline BlobSet make_blobs(std::size_t per_class, int size, std::uint64_t seed, double noise = 0.05) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> jitter(0.0, 1.0);
    BlobSet out;
    const double radius = size * 0.3;
    const double sigma = size * 0.08;
    for (std::size_t k = 0; k < per_class; ++k) {
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / kNumClasses;
            const double cy = size / 2.0 + radius * std::sin(angle) + jitter(rng);
            const double cx = size / 2.0 + radius * std::cos(angle) + jitter(rng);
            const double tint[3] = {0.5 + 0.5 * std::cos(angle), 0.5 + 0.5 * std::sin(angle), 0.5};
            ImageTensor img(size, size, 3);
            for (int y = 0; y < size; ++y) {
                for (int x = 0; x < size; ++x) {
                    const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                    const double g = std::exp(-d2 / (2 * sigma * sigma));
                    for (int ch = 0; ch < 3; ++ch) {
                        img.at(y, x, ch) = static_cast<float>(0.2 + 0.8 * g * tint[ch] + noise * jitter(rng));
                    }
                }
            }
            out.images.push_back(std::move(img));
            out.labels.push_back(kAllClasses[c]);
        }
    }
    return out;
}

/// Training-set accuracy of a nearest-class-mean classifier on raw pixels.
inline double nearest_centroid_accuracy(const BlobSet& s) {
    const std::size_t d = s.images.front().size();
    std::vector<std::vector<double>> centroid(kNumClasses, std::vector<double>(d, 0.0));
    std::vector<std::size_t> count(kNumClasses, 0);
    for (std::size_t i = 0; i < s.images.size(); ++i) {
        const auto c = ordinal(s.labels[i]);
        ++count[c];
        const auto v = s.images[i].values();
        for (std::size_t k = 0; k < d; ++k) {
            centroid[c][k] += v[k];
        }
    }
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        for (auto& x : centroid[c]) {
            x /= static_cast<double>(std::max<std::size_t>(count[c], 1));
        }
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < s.images.size(); ++i) {
        const auto v = s.images[i].values();
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            double dist = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                dist += (v[k] - centroid[c][k]) * (v[k] - centroid[c][k]);
            }
            if (dist < best_d) {
                best_d = dist;
                best = c;
            }
        }
        hits += best == ordinal(s.labels[i]);
    }
    return static_cast<double>(hits) / static_cast<double>(s.images.size());
}

}  // namespace skinstack::testing
