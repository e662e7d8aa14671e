#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "skinstack/class_label.hpp"
#include "skinstack/detail/image_probe.hpp"
#include "skinstack/detail/random.hpp"
#include "skinstack/detail/text.hpp"
#include "skinstack/error.hpp"

namespace skinstack {

struct LesionRecord {
    std::string image_id;
    std::filesystem::path image_path;
    ClassLabel label = ClassLabel::kMelanocyticNevi;
    int source_width = 0;
    int source_height = 0;

    friend bool operator==(const LesionRecord&, const LesionRecord&) = default;
};

[[nodiscard]] inline ClassCounts count_classes(std::span<const LesionRecord> records) noexcept {
    ClassCounts counts{};
    for (const auto& r : records) {
        ++counts[ordinal(r.label)];
    }
    return counts;
}

/// Ordered list of records plus their per-class counts. The counts are always
/// derived from the records, so the two cannot disagree.
class DatasetManifest {
public:
    DatasetManifest() = default;
    explicit DatasetManifest(std::vector<LesionRecord> records)
        : records_(std::move(records)), class_counts_(count_classes(records_)) {}

    [[nodiscard]] const std::vector<LesionRecord>& records() const noexcept { return records_; }
    [[nodiscard]] const ClassCounts& class_counts() const noexcept { return class_counts_; }
    [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }
    [[nodiscard]] bool empty() const noexcept { return records_.empty(); }

    [[nodiscard]] std::vector<std::string> image_ids() const {
        std::vector<std::string> ids;
        ids.reserve(records_.size());
        for (const auto& r : records_) {
            ids.push_back(r.image_id);
        }
        return ids;
    }

    [[nodiscard]] std::vector<ClassLabel> labels() const {
        std::vector<ClassLabel> out;
        out.reserve(records_.size());
        for (const auto& r : records_) {
            out.push_back(r.label);
        }
        return out;
    }

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;

private:
    std::vector<LesionRecord> records_;
    ClassCounts class_counts_{};
};

struct DatasetSplit {
    DatasetManifest train;
    DatasetManifest validation;
    std::uint64_t seed = 0;
    double train_fraction = 1.0;

    friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

/// Fresh scan of the records; never trusts cached counts.
[[nodiscard]] inline ClassCounts class_distribution(const DatasetManifest& manifest) noexcept {
    return count_classes(manifest.records());
}

namespace detail {

inline constexpr std::array<std::string_view, 4> kImageExtensions = {".jpg", ".jpeg", ".png", ".bmp"};

[[nodiscard]] inline std::optional<std::filesystem::path> resolve_image(
    const std::string& image_id, std::span<const std::filesystem::path> dirs) {
    for (const auto& dir : dirs) {
        for (const auto ext : kImageExtensions) {
            auto candidate = dir / (image_id + std::string(ext));
            std::error_code ec;
            if (std::filesystem::is_regular_file(candidate, ec)) {
                return candidate;
            }
        }
    }
    return std::nullopt;
}

}  // namespace detail

/// Reads a HAM10000-style metadata CSV (header row with at least `image_id`
/// and `dx` columns) and resolves every image under one of `image_dirs`.
/// Record order follows row order.
[[nodiscard]] inline DatasetManifest load_manifest(const std::filesystem::path& metadata_path,
                                                   std::span<const std::filesystem::path> image_dirs) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(metadata_path, ec)) {
        throw DataError("metadata file not found: " + metadata_path.string());
    }
    std::istringstream in(detail::read_file(metadata_path));
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("metadata file is empty: " + metadata_path.string());
    }
    const auto header = detail::split_csv_line(line);
    std::size_t id_col = header.size();
    std::size_t dx_col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "image_id") {
            id_col = i;
        } else if (header[i] == "dx") {
            dx_col = i;
        }
    }
    if (id_col == header.size() || dx_col == header.size()) {
        throw DataError("metadata header must contain 'image_id' and 'dx' columns: " + metadata_path.string());
    }

    std::vector<LesionRecord> records;
    std::unordered_set<std::string> seen;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (detail::trim(line).empty()) {
            continue;
        }
        const auto fields = detail::split_csv_line(line);
        if (fields.size() <= std::max(id_col, dx_col)) {
            throw DataError("metadata row " + std::to_string(row) + " has too few columns");
        }
        const auto& id = fields[id_col];
        if (id.empty()) {
            throw DataError("metadata row " + std::to_string(row) + " has an empty image_id");
        }
        const auto label = parse_class(fields[dx_col]);
        if (!label) {
            throw DataError("unknown class '" + fields[dx_col] + "' for image_id " + id + " (row " +
                            std::to_string(row) + ")");
        }
        if (!seen.insert(id).second) {
            throw DataError("duplicate image_id " + id + " (row " + std::to_string(row) + ")");
        }
        auto path = detail::resolve_image(id, image_dirs);
        if (!path) {
            throw DataError("image file not found for image_id " + id);
        }
        const auto size = detail::probe_image_size(*path);
        if (!size) {
            throw DataError("unreadable image header for image_id " + id + ": " + path->string());
        }
        records.push_back({id, std::move(*path), *label, size->width, size->height});
    }
    return DatasetManifest(std::move(records));
}

[[nodiscard]] inline DatasetManifest load_manifest(const std::filesystem::path& metadata_path,
                                                   const std::filesystem::path& images_dir) {
    return load_manifest(metadata_path, std::span<const std::filesystem::path>(&images_dir, 1));
}

namespace detail {

/// Per-class shuffled index lists; the record order inside each class is
/// permuted with a class-specific substream of `seed`.
[[nodiscard]] inline std::array<std::vector<std::size_t>, kNumClasses> shuffled_class_indices(
    const DatasetManifest& manifest, std::uint64_t seed) {
    std::array<std::vector<std::size_t>, kNumClasses> by_class;
    const auto& records = manifest.records();
    for (std::size_t i = 0; i < records.size(); ++i) {
        by_class[ordinal(records[i].label)].push_back(i);
    }
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        std::mt19937_64 engine(derive_seed(seed, c));
        shuffle(by_class[c].begin(), by_class[c].end(), engine);
    }
    return by_class;
}

[[nodiscard]] inline DatasetManifest select_records(const DatasetManifest& manifest,
                                                    const std::vector<bool>& keep) {
    std::vector<LesionRecord> out;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        if (keep[i]) {
            out.push_back(manifest.records()[i]);
        }
    }
    return DatasetManifest(std::move(out));
}

}  // namespace detail

/// Number of training records a class of size `n` contributes.
[[nodiscard]] inline std::size_t stratified_train_count(std::size_t n, double train_fraction) {
    return std::min(n, static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n))));
}

/// Deterministic per-class split. Both partitions keep the source order.
[[nodiscard]] inline DatasetSplit stratified_split(const DatasetManifest& manifest, double train_fraction,
                                                   std::uint64_t seed) {
    if (manifest.empty()) {
        throw DataError("cannot split an empty manifest");
    }
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
        throw ConfigError("train_fraction must lie in (0, 1], got " + detail::format_double(train_fraction));
    }
    const auto by_class = detail::shuffled_class_indices(manifest, seed);
    std::vector<bool> in_train(manifest.size(), false);
    for (const auto& indices : by_class) {
        const auto take = stratified_train_count(indices.size(), train_fraction);
        for (std::size_t k = 0; k < take; ++k) {
            in_train[indices[k]] = true;
        }
    }
    std::vector<bool> in_val(in_train.size());
    std::transform(in_train.begin(), in_train.end(), in_val.begin(), [](bool b) { return !b; });
    return {detail::select_records(manifest, in_train), detail::select_records(manifest, in_val), seed,
            train_fraction};
}

/// Keeps at most `per_class` records of every class, chosen with `seed`.
[[nodiscard]] inline DatasetManifest stratified_subsample(const DatasetManifest& manifest, std::size_t per_class,
                                                          std::uint64_t seed) {
    const auto by_class = detail::shuffled_class_indices(manifest, seed);
    std::vector<bool> keep(manifest.size(), false);
    for (const auto& indices : by_class) {
        for (std::size_t k = 0; k < std::min(per_class, indices.size()); ++k) {
            keep[indices[k]] = true;
        }
    }
    return detail::select_records(manifest, keep);
}

// Split file: auditable plain text, one image_id per line under a section
// header. Replaying it against the source manifest restores the split.
//
//   # skinstack split
//   seed=7
//   train_fraction=0.9
//   [train] 9014
//   ISIC_0027419
//   ...
//   [validation] 1001
//   ...

[[nodiscard]] inline std::string format_split(const DatasetSplit& split) {
    std::ostringstream out;
    out << "# skinstack split\n";
    out << "seed=" << split.seed << '\n';
    out << "train_fraction=" << detail::format_double(split.train_fraction) << '\n';
    out << "[train] " << split.train.size() << '\n';
    for (const auto& r : split.train.records()) {
        out << r.image_id << '\n';
    }
    out << "[validation] " << split.validation.size() << '\n';
    for (const auto& r : split.validation.records()) {
        out << r.image_id << '\n';
    }
    return out.str();
}

inline void save_split(const DatasetSplit& split, const std::filesystem::path& path) {
    detail::write_file(path, format_split(split));
}

/// Rebuilds a split from its file. Every id must exist in `source`, appear
/// once, and the two partitions must cover `source` exactly.
[[nodiscard]] inline DatasetSplit load_split(const std::filesystem::path& path, const DatasetManifest& source) {
    std::istringstream in(detail::read_file(path));
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < source.size(); ++i) {
        index.emplace(source.records()[i].image_id, i);
    }
    DatasetSplit split;
    std::vector<int> part(source.size(), -1);
    int section = -1;
    bool have_seed = false;
    bool have_fraction = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto text = detail::trim(line);
        if (text.empty() || text.front() == '#') {
            continue;
        }
        if (text.starts_with("seed=")) {
            auto v = detail::parse_int<std::uint64_t>(text.substr(5));
            if (!v) {
                throw DataError(path.string() + ":" + std::to_string(lineno) + ": bad seed");
            }
            split.seed = *v;
            have_seed = true;
        } else if (text.starts_with("train_fraction=")) {
            auto v = detail::parse_double(text.substr(15));
            if (!v) {
                throw DataError(path.string() + ":" + std::to_string(lineno) + ": bad train_fraction");
            }
            split.train_fraction = *v;
            have_fraction = true;
        } else if (text.starts_with("[train]")) {
            section = 0;
        } else if (text.starts_with("[validation]")) {
            section = 1;
        } else {
            if (section < 0) {
                throw DataError(path.string() + ":" + std::to_string(lineno) + ": id before section header");
            }
            const auto it = index.find(std::string(text));
            if (it == index.end()) {
                throw DataError(path.string() + ": unknown image_id " + std::string(text));
            }
            if (part[it->second] != -1) {
                throw DataError(path.string() + ": image_id listed twice: " + std::string(text));
            }
            part[it->second] = section;
        }
    }
    if (!have_seed || !have_fraction) {
        throw DataError(path.string() + ": missing seed or train_fraction");
    }
    std::vector<bool> train(source.size());
    std::vector<bool> val(source.size());
    for (std::size_t i = 0; i < source.size(); ++i) {
        if (part[i] == -1) {
            throw DataError(path.string() + ": image_id missing from split: " + source.records()[i].image_id);
        }
        train[i] = part[i] == 0;
        val[i] = part[i] == 1;
    }
    split.train = detail::select_records(source, train);
    split.validation = detail::select_records(source, val);
    return split;
}

}  // namespace skinstack
