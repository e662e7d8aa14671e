#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <utility>

namespace skinstack::detail {

struct PixelSize {
    int width = 0;
    int height = 0;
};

namespace probe {

inline std::optional<PixelSize> png(std::ifstream& in) {
    std::array<unsigned char, 24> head{};
    in.seekg(0);
    if (!in.read(reinterpret_cast<char*>(head.data()), head.size())) {
        return std::nullopt;
    }
    constexpr std::array<unsigned char, 8> sig = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    for (std::size_t i = 0; i < sig.size(); ++i) {
        if (head[i] != sig[i]) {
            return std::nullopt;
        }
    }
    auto be32 = [&](std::size_t at) {
        return (std::uint32_t{head[at]} << 24) | (std::uint32_t{head[at + 1]} << 16) |
               (std::uint32_t{head[at + 2]} << 8) | std::uint32_t{head[at + 3]};
    };
    return PixelSize{static_cast<int>(be32(16)), static_cast<int>(be32(20))};
}

inline std::optional<PixelSize> jpeg(std::ifstream& in) {
    in.seekg(0);
    int b0 = in.get();
    int b1 = in.get();
    if (b0 != 0xFF || b1 != 0xD8) {
        return std::nullopt;
    }
    while (in) {
        int marker = in.get();
        while (marker == 0xFF) {
            marker = in.get();
        }
        if (!in || marker < 0) {
            return std::nullopt;
        }
        if (marker == 0xD8 || marker == 0x01 || (marker >= 0xD0 && marker <= 0xD7)) {
            continue;
        }
        const int hi = in.get();
        const int lo = in.get();
        if (!in) {
            return std::nullopt;
        }
        const int length = (hi << 8) | lo;
        // SOF0..SOF15 except DHT (C4), JPG (C8) and DAC (CC)
        if (marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 && marker != 0xCC) {
            std::array<unsigned char, 5> sof{};
            if (!in.read(reinterpret_cast<char*>(sof.data()), sof.size())) {
                return std::nullopt;
            }
            const int height = (sof[1] << 8) | sof[2];
            const int width = (sof[3] << 8) | sof[4];
            return PixelSize{width, height};
        }
        if (length < 2) {
            return std::nullopt;
        }
        in.seekg(length - 2, std::ios::cur);
    }
    return std::nullopt;
}

inline std::optional<PixelSize> bmp(std::ifstream& in) {
    std::array<unsigned char, 26> head{};
    in.seekg(0);
    if (!in.read(reinterpret_cast<char*>(head.data()), head.size()) || head[0] != 'B' || head[1] != 'M') {
        return std::nullopt;
    }
    auto le32 = [&](std::size_t at) {
        return static_cast<std::int32_t>(std::uint32_t{head[at]} | (std::uint32_t{head[at + 1]} << 8) |
                                         (std::uint32_t{head[at + 2]} << 16) |
                                         (std::uint32_t{head[at + 3]} << 24));
    };
    const std::int32_t h = le32(22);
    return PixelSize{le32(18), h < 0 ? -h : h};
}

}  // namespace probe

/// Reads the pixel dimensions from a JPEG, PNG or BMP header without decoding
/// the image body.
[[nodiscard]] inline std::optional<PixelSize> probe_image_size(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        return std::nullopt;
    }
    for (auto* reader : {&probe::png, &probe::jpeg, &probe::bmp}) {
        in.clear();
        if (auto size = reader(in); size && size->width > 0 && size->height > 0) {
            return size;
        }
    }
    return std::nullopt;
}

}  // namespace skinstack::detail
