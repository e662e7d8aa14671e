#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "skinstack/error.hpp"

namespace skinstack {

inline constexpr std::size_t kNumClasses = 7;

/// The seven HAM10000 diagnostic categories. Ordinals are fixed and are used as
/// column indices in every probability matrix written to disk.
enum class ClassLabel : std::uint8_t {
    kMelanocyticNevi = 0,
    kMelanoma = 1,
    kBenignKeratosis = 2,
    kBasalCellCarcinoma = 3,
    kActinicKeratosis = 4,
    kVascularLesion = 5,
    kDermatofibroma = 6,
};

inline constexpr std::array<ClassLabel, kNumClasses> kAllClasses = {
    ClassLabel::kMelanocyticNevi,   ClassLabel::kMelanoma,          ClassLabel::kBenignKeratosis,
    ClassLabel::kBasalCellCarcinoma, ClassLabel::kActinicKeratosis, ClassLabel::kVascularLesion,
    ClassLabel::kDermatofibroma,
};

namespace detail {
inline constexpr std::array<std::string_view, kNumClasses> kClassSymbols = {
    "MELANOCYTIC_NEVI", "MELANOMA",          "BENIGN_KERATOSIS", "BASAL_CELL_CARCINOMA",
    "ACTINIC_KERATOSIS", "VASCULAR_LESION", "DERMATOFIBROMA",
};
// dx codes as they appear in HAM10000_metadata.csv
inline constexpr std::array<std::string_view, kNumClasses> kClassCodes = {
    "nv", "mel", "bkl", "bcc", "akiec", "vasc", "df",
};
}  // namespace detail

/// Per-class counts indexed by ordinal.
using ClassCounts = std::array<std::size_t, kNumClasses>;

[[nodiscard]] constexpr std::size_t ordinal(ClassLabel label) noexcept {
    return static_cast<std::size_t>(label);
}

[[nodiscard]] inline ClassLabel label_from_ordinal(std::size_t index) {
    if (index >= kNumClasses) {
        throw DataError("class ordinal out of range: " + std::to_string(index));
    }
    return static_cast<ClassLabel>(index);
}

[[nodiscard]] constexpr std::string_view symbol(ClassLabel label) noexcept {
    return detail::kClassSymbols[ordinal(label)];
}

[[nodiscard]] constexpr std::string_view short_code(ClassLabel label) noexcept {
    return detail::kClassCodes[ordinal(label)];
}

/// Accepts either the dx short code (nv, mel, ...) or the symbolic name, in
/// any letter case.
[[nodiscard]] inline std::optional<ClassLabel> parse_class(std::string_view text) {
    std::string lowered(text);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (std::size_t i = 0; i < kNumClasses; ++i) {
        std::string sym(detail::kClassSymbols[i]);
        std::transform(sym.begin(), sym.end(), sym.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (lowered == detail::kClassCodes[i] || lowered == sym) {
            return static_cast<ClassLabel>(i);
        }
    }
    return std::nullopt;
}

}  // namespace skinstack
