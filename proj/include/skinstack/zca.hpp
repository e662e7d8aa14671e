#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "skinstack/error.hpp"
#include "skinstack/image.hpp"

namespace skinstack {

/// Zero-phase whitening: x -> W (x - mean) with
/// W = U diag((lambda + eps)^-1/2) U^T from the eigendecomposition of the
/// population covariance of the flattened fitting batch.
class ZCAWhitener {
public:
    ZCAWhitener() = default;
    ZCAWhitener(int height, int width, int channels, double epsilon, Eigen::VectorXd mean, Eigen::MatrixXd transform)
        : height_(height), width_(width), channels_(channels), epsilon_(epsilon), mean_(std::move(mean)),
          transform_(std::move(transform)) {
        const auto d = static_cast<Eigen::Index>(height) * width * channels;
        if (mean_.size() != d || transform_.rows() != d || transform_.cols() != d) {
            throw std::invalid_argument("whitener shape does not match image shape");
        }
    }

    template <std::floating_point T>
    [[nodiscard]] static ZCAWhitener fit(std::span<const BasicImage<T>> batch, double epsilon) {
        if (batch.size() < 2) {
            throw std::invalid_argument("ZCA fit needs at least 2 images");
        }
        if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
            throw std::invalid_argument("ZCA epsilon must be > 0");
        }
        const auto& first = batch.front();
        const auto d = static_cast<Eigen::Index>(first.size());
        const auto n = static_cast<Eigen::Index>(batch.size());
        Eigen::MatrixXd data(n, d);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& img = batch[static_cast<std::size_t>(i)];
            if (!img.same_shape(first)) {
                throw std::invalid_argument("ZCA batch has mixed image shapes");
            }
            if (!img.all_finite()) {
                throw DataError("ZCA batch contains non-finite pixel values (image " + std::to_string(i) + ")");
            }
            const auto v = img.values();
            for (Eigen::Index k = 0; k < d; ++k) {
                data(i, k) = v[static_cast<std::size_t>(k)];
            }
        }
        Eigen::VectorXd mean = data.colwise().mean().transpose();
        // sum / n can miss a constant column by an ulp, which 1/sqrt(eps) then amplifies
        for (Eigen::Index k = 0; k < d; ++k) {
            if (data.col(k).minCoeff() == data.col(k).maxCoeff()) {
                mean(k) = data(0, k);
            }
        }
        data.rowwise() -= mean.transpose();
        const Eigen::MatrixXd cov = (data.transpose() * data) / static_cast<double>(n);

        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
        if (eig.info() != Eigen::Success) {
            throw DataError("ZCA eigendecomposition failed");
        }
        const Eigen::VectorXd scale =
            (eig.eigenvalues().array().max(0.0) + epsilon).rsqrt().matrix();
        const Eigen::MatrixXd& u = eig.eigenvectors();
        Eigen::MatrixXd w = u * scale.asDiagonal() * u.transpose();
        w = (0.5 * (w + w.transpose())).eval();
        return {first.height(), first.width(), first.channels(), epsilon, std::move(mean), std::move(w)};
    }

    template <std::floating_point T>
    [[nodiscard]] static ZCAWhitener fit(const std::vector<BasicImage<T>>& batch, double epsilon) {
        return fit(std::span<const BasicImage<T>>(batch), epsilon);
    }

    template <std::floating_point T>
    [[nodiscard]] BasicImage<T> apply(const BasicImage<T>& img) const {
        if (static_cast<Eigen::Index>(img.size()) != dimension()) {
            throw std::invalid_argument("image dimension " + std::to_string(img.size()) +
                                        " does not match whitener dimension " + std::to_string(dimension()));
        }
        Eigen::VectorXd x(dimension());
        const auto v = img.values();
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            x(k) = v[static_cast<std::size_t>(k)];
        }
        const Eigen::VectorXd y = transform_ * (x - mean_);
        BasicImage<T> out = img;
        auto o = out.values();
        for (Eigen::Index k = 0; k < y.size(); ++k) {
            o[static_cast<std::size_t>(k)] = static_cast<T>(y(k));
        }
        return out;
    }

    template <std::floating_point T>
    [[nodiscard]] std::vector<BasicImage<T>> apply(std::span<const BasicImage<T>> batch) const {
        std::vector<BasicImage<T>> out;
        out.reserve(batch.size());
        for (const auto& img : batch) {
            out.push_back(apply(img));
        }
        return out;
    }

    template <std::floating_point T>
    [[nodiscard]] std::vector<BasicImage<T>> apply(const std::vector<BasicImage<T>>& batch) const {
        return apply(std::span<const BasicImage<T>>(batch));
    }

    [[nodiscard]] Eigen::Index dimension() const noexcept { return mean_.size(); }
    [[nodiscard]] double epsilon() const noexcept { return epsilon_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int channels() const noexcept { return channels_; }
    [[nodiscard]] const Eigen::VectorXd& mean() const noexcept { return mean_; }
    [[nodiscard]] const Eigen::MatrixXd& transform() const noexcept { return transform_; }

    // Binary layout, little-endian:
    //   char[8]  "SKZCA001"
    //   u32      height, width, channels
    //   u64      dimension d
    //   f64      epsilon
    //   f64[d]   mean
    //   f64[d*d] transform, row-major
    void save(const std::filesystem::path& path) const {
        static_assert(std::endian::native == std::endian::little, "whitener files are little-endian");
        if (path.has_parent_path()) {
            std::filesystem::create_directories(path.parent_path());
        }
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw DataError("cannot write whitener: " + path.string());
        }
        out.write(kMagic.data(), kMagic.size());
        write_pod(out, static_cast<std::uint32_t>(height_));
        write_pod(out, static_cast<std::uint32_t>(width_));
        write_pod(out, static_cast<std::uint32_t>(channels_));
        write_pod(out, static_cast<std::uint64_t>(dimension()));
        write_pod(out, epsilon_);
        out.write(reinterpret_cast<const char*>(mean_.data()),
                  static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(mean_.size())));
        const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = transform_;
        out.write(reinterpret_cast<const char*>(rm.data()),
                  static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(rm.size())));
        if (!out) {
            throw DataError("write failed: " + path.string());
        }
    }

    [[nodiscard]] static ZCAWhitener load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) {
            throw DataError("cannot open whitener: " + path.string());
        }
        std::array<char, 8> magic{};
        in.read(magic.data(), magic.size());
        if (!in || magic != kMagic) {
            throw DataError("not a whitener file: " + path.string());
        }
        const auto h = read_pod<std::uint32_t>(in);
        const auto w = read_pod<std::uint32_t>(in);
        const auto c = read_pod<std::uint32_t>(in);
        const auto d = read_pod<std::uint64_t>(in);
        const auto eps = read_pod<double>(in);
        if (!in || d != std::uint64_t{h} * w * c || d == 0) {
            throw DataError("corrupt whitener header: " + path.string());
        }
        const auto dim = static_cast<Eigen::Index>(d);
        Eigen::VectorXd mean(dim);
        in.read(reinterpret_cast<char*>(mean.data()), static_cast<std::streamsize>(sizeof(double) * d));
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(dim, dim);
        in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(sizeof(double) * d * d));
        if (!in) {
            throw DataError("truncated whitener file: " + path.string());
        }
        return {static_cast<int>(h), static_cast<int>(w), static_cast<int>(c), eps, std::move(mean),
                Eigen::MatrixXd(rm)};
    }

private:
    static constexpr std::array<char, 8> kMagic = {'S', 'K', 'Z', 'C', 'A', '0', '0', '1'};

    template <typename P>
    static void write_pod(std::ofstream& out, P value) {
        out.write(reinterpret_cast<const char*>(&value), sizeof(P));
    }
    template <typename P>
    static P read_pod(std::ifstream& in) {
        P value{};
        in.read(reinterpret_cast<char*>(&value), sizeof(P));
        return value;
    }

    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    double epsilon_ = 0.0;
    Eigen::VectorXd mean_;
    Eigen::MatrixXd transform_;
};

template <std::floating_point T>
[[nodiscard]] ZCAWhitener fit_zca(std::span<const BasicImage<T>> batch, double epsilon) {
    return ZCAWhitener::fit(batch, epsilon);
}

template <std::floating_point T>
[[nodiscard]] ZCAWhitener fit_zca(const std::vector<BasicImage<T>>& batch, double epsilon) {
    return ZCAWhitener::fit(batch, epsilon);
}

template <std::floating_point T>
[[nodiscard]] std::vector<BasicImage<T>> apply_zca(const ZCAWhitener& whitener, const std::vector<BasicImage<T>>& batch) {
    return whitener.apply(batch);
}

}  // namespace skinstack
