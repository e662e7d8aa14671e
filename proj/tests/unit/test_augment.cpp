#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "skinstack/augment.hpp"

namespace {

using namespace skinstack;
using Img = BasicImage<double>;

Img random_image(int h, int w, int c, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Img img(h, w, c);
    for (auto& v : img.values()) {
        v = u(rng);
    }
    return img;
}

Img from_rows(int h, int w, std::vector<double> v) { return Img(h, w, 1, std::move(v)); }

void expect_identical(const Img& a, const Img& b) {
    ASSERT_TRUE(a.same_shape(b));
    for (std::size_t i = 0; i < a.size(); ++i) {
        ASSERT_EQ(a.values()[i], b.values()[i]) << "at " << i;
    }
}

TEST(Augment, FlipIsAnInvolution) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto img = random_image(3 + static_cast<int>(s % 5), 2 + static_cast<int>(s % 7), 3, s);
        expect_identical(flip(flip(img, FlipAxis::kHorizontal), FlipAxis::kHorizontal), img);
        expect_identical(flip(flip(img, FlipAxis::kVertical), FlipAxis::kVertical), img);
    }
}

TEST(Augment, FlipMovesPixels) {
    const auto img = from_rows(2, 3, {1, 2, 3, 4, 5, 6});
    expect_identical(flip(img, FlipAxis::kHorizontal), from_rows(2, 3, {3, 2, 1, 6, 5, 4}));
    expect_identical(flip(img, FlipAxis::kVertical), from_rows(2, 3, {4, 5, 6, 1, 2, 3}));
    expect_identical(flip(from_rows(2, 1, {7, 8}), FlipAxis::kVertical), from_rows(2, 1, {8, 7}));
}

TEST(Augment, NeutralParametersAreExactIdentities) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto img = random_image(9, 7, 3, 100 + s);
        expect_identical(rotate(img, 0.0), img);
        expect_identical(rotate(img, 360.0), img);
        expect_identical(shift(img, 0.0, 0.0), img);
        expect_identical(zoom(img, 1.0), img);
    }
}

TEST(Augment, QuarterTurnsPermutePixels) {
    const auto img = from_rows(2, 2, {1, 2, 3, 4});
    expect_identical(rotate(img, 180.0), from_rows(2, 2, {4, 3, 2, 1}));
    // counter-clockwise: the top-right pixel moves to the top-left
    expect_identical(rotate(img, 90.0), from_rows(2, 2, {2, 4, 1, 3}));

    const auto sq = random_image(4, 4, 2, 5);
    expect_identical(rotate(rotate(sq, 90.0), 270.0), sq);
    expect_identical(rotate(rotate(sq, 90.0), 90.0), rotate(sq, 180.0));
    expect_identical(rotate(rotate(sq, 180.0), 180.0), sq);
}

TEST(Augment, ShiftMovesWholePixelsAndFillsEdges) {
    const auto img = from_rows(3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    expect_identical(shift(img, 1.0 / 3.0, 0.0), from_rows(3, 3, {1, 1, 2, 4, 4, 5, 7, 7, 8}));
    expect_identical(shift(img, 0.0, -1.0 / 3.0), from_rows(3, 3, {4, 5, 6, 7, 8, 9, 7, 8, 9}));
    expect_identical(shift(img, 1.0 / 3.0, 0.0, FillMode::kConstant, -1.0),
                     from_rows(3, 3, {-1, 1, 2, -1, 4, 5, -1, 7, 8}));
    EXPECT_THROW((void)shift(img, 1.0, 0.0), std::invalid_argument);
}

TEST(Augment, ShiftThereAndBackRestoresTheInterior) {
    const auto img = random_image(5, 5, 1, 17);
    const auto back = shift(shift(img, 0.2, 0.2), -0.2, -0.2);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) {
            EXPECT_EQ(back.at(y, x, 0), img.at(y, x, 0));
        }
    }
}

TEST(Augment, ZoomMatchesCropThenResize) {
    const auto img = random_image(4, 4, 1, 23);
    Img crop(2, 2, 1);
    for (int y = 0; y < 2; ++y) {
        for (int x = 0; x < 2; ++x) {
            crop.at(y, x, 0) = img.at(y + 1, x + 1, 0);
        }
    }
    const auto expected = resize_bilinear(crop, 4, 4);
    const auto got = zoom(img, 2.0);
    for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_NEAR(got.values()[i], expected.values()[i], 1e-12);
    }
}

TEST(Augment, ConstantImagesStayConstant) {
    const Img flat(6, 5, 3, 0.25);
    for (const double a : {13.0, -29.0, 90.0}) {
        expect_identical(rotate(flat, a), flat);
    }
    expect_identical(zoom(flat, 0.9), flat);
    expect_identical(zoom(flat, 1.1), flat);
    expect_identical(shift(flat, 0.4, -0.2), flat);
}

TEST(Augment, FeaturewiseStandardizationAgreesWithRecomputation) {
    std::vector<Img> batch;
    for (std::uint64_t s = 0; s < 12; ++s) {
        batch.push_back(random_image(3, 4, 2, 300 + s));
    }
    const auto out = std_normalize(batch);
    const std::size_t d = batch.front().size();
    for (std::size_t k = 0; k < d; ++k) {
        double mean = 0.0;
        for (const auto& img : batch) {
            mean += img.values()[k];
        }
        mean /= batch.size();
        double var = 0.0;
        for (const auto& img : batch) {
            var += (img.values()[k] - mean) * (img.values()[k] - mean);
        }
        const double sd = std::sqrt(var / batch.size());
        double out_mean = 0.0;
        double out_var = 0.0;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            EXPECT_NEAR(out[i].values()[k], (batch[i].values()[k] - mean) / sd, 1e-12);
            out_mean += out[i].values()[k];
        }
        out_mean /= batch.size();
        for (const auto& img : out) {
            out_var += (img.values()[k] - out_mean) * (img.values()[k] - out_mean);
        }
        EXPECT_NEAR(out_mean, 0.0, 1e-6);
        EXPECT_NEAR(std::sqrt(out_var / batch.size()), 1.0, 1e-6);
    }
}

TEST(Augment, IdenticalImagesStandardizeToZero) {
    const auto img = random_image(3, 3, 3, 1);
    const std::vector<Img> batch(5, img);
    for (const auto& out : std_normalize(batch)) {
        for (const double v : out.values()) {
            EXPECT_EQ(v, 0.0);
        }
    }
}

TEST(Augment, NullConfigBatchIsTheIdentity) {
    std::vector<Img> batch;
    for (std::uint64_t s = 0; s < 8; ++s) {
        batch.push_back(random_image(7, 6, 3, 40 + s));
    }
    const auto out = augment_batch(batch, AugmentationConfig::none(), 99);
    ASSERT_EQ(out.size(), batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        expect_identical(out[i], batch[i]);
    }
}

TEST(Augment, SeededBatchesAreBitReproducible) {
    std::vector<Img> batch;
    for (std::uint64_t s = 0; s < 6; ++s) {
        batch.push_back(random_image(10, 10, 3, 70 + s));
    }
    AugmentationConfig cfg;
    std::vector<TransformParams> pa;
    std::vector<TransformParams> pb;
    const auto a = augment_batch(batch, cfg, 2024, &pa);
    const auto b = augment_batch(batch, cfg, 2024, &pb);
    EXPECT_EQ(pa, pb);
    for (std::size_t i = 0; i < a.size(); ++i) {
        expect_identical(a[i], b[i]);
    }
    const auto c = augment_batch(batch, cfg, 2025);
    bool differs = false;
    for (std::size_t i = 0; i < c.size() && !differs; ++i) {
        differs = !std::equal(c[i].values().begin(), c[i].values().end(), a[i].values().begin());
    }
    EXPECT_TRUE(differs);
}

TEST(Augment, DrawnParametersStayInRange) {
    AugmentationConfig cfg;
    cfg.rotation_range = 30.0;
    std::mt19937_64 engine(5);
    int hflips = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto p = sample_transform(cfg, engine);
        EXPECT_GE(p.angle, -30.0);
        EXPECT_LE(p.angle, 30.0);
        EXPECT_LE(std::abs(p.shift_x), cfg.width_shift);
        EXPECT_LE(std::abs(p.shift_y), cfg.height_shift);
        EXPECT_GE(p.zoom, 1.0 - cfg.zoom_range);
        EXPECT_LE(p.zoom, 1.0 + cfg.zoom_range);
        hflips += p.flip_horizontal ? 1 : 0;
    }
    EXPECT_GT(hflips, 400);
    EXPECT_LT(hflips, 600);
}

TEST(Augment, ValidationRejectsBadRanges) {
    AugmentationConfig cfg;
    cfg.width_shift = 1.0;
    EXPECT_THROW(validate(cfg), ConfigError);
    cfg = AugmentationConfig{};
    cfg.zca_epsilon = 0.0;
    EXPECT_THROW(validate(cfg), ConfigError);
    cfg = AugmentationConfig{};
    cfg.rotation_range = -1.0;
    EXPECT_THROW(validate(cfg), ConfigError);
}

}  // namespace
