#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "skinstack/detail/random.hpp"
#include "skinstack/detail/text.hpp"
#include "skinstack/error.hpp"

namespace skinstack {

enum class SplitCriterion { kGini, kEntropy };

struct TreeParams {
    SplitCriterion criterion = SplitCriterion::kGini;
    std::optional<int> max_depth;  // nullopt = grow until pure
    int min_samples_split = 2;
    std::uint64_t seed = 0;

    friend bool operator==(const TreeParams&, const TreeParams&) = default;
};

inline void validate(const TreeParams& p) {
    if (p.min_samples_split < 2) {
        throw ConfigError("min_samples_split must be >= 2");
    }
    if (p.max_depth && *p.max_depth < 0) {
        throw ConfigError("max_depth must be >= 0");
    }
}

/// Row-major view over an n x width feature matrix.
struct FeatureView {
    std::span<const double> values;
    std::size_t width = 0;

    [[nodiscard]] std::size_t rows() const noexcept { return width == 0 ? 0 : values.size() / width; }
    [[nodiscard]] double at(std::size_t row, std::size_t col) const noexcept { return values[row * width + col]; }
    [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept { return values.subspan(r * width, width); }
};

/// Axis-aligned classification tree grown greedily on an impurity criterion
/// (CART). Samples with x[feature] <= threshold go left. At every node the
/// candidate features are visited in a seeded random order and the first
/// strictly best split wins, so a fixed seed gives a fixed tree.
class DecisionTree {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        std::vector<std::uint64_t> counts;  // class distribution of the training samples reaching this node

        [[nodiscard]] bool is_leaf() const noexcept { return feature < 0; }
        friend bool operator==(const Node&, const Node&) = default;
    };

    DecisionTree() = default;

    [[nodiscard]] static DecisionTree fit(FeatureView x, std::span<const std::size_t> labels, std::size_t num_classes,
                                          const TreeParams& params) {
        validate(params);
        if (x.width == 0) {
            throw std::invalid_argument("feature width must be positive");
        }
        if (x.values.size() % x.width != 0) {
            throw std::invalid_argument("feature buffer is not a whole number of rows");
        }
        if (labels.size() != x.rows()) {
            throw std::invalid_argument("label count " + std::to_string(labels.size()) + " does not match row count " +
                                        std::to_string(x.rows()));
        }
        if (labels.empty()) {
            throw std::invalid_argument("cannot fit a tree on zero rows");
        }
        for (const auto l : labels) {
            if (l >= num_classes) {
                throw std::invalid_argument("label out of range");
            }
        }
        for (const double v : x.values) {
            if (!std::isfinite(v)) {
                throw DataError("tree features must be finite");
            }
        }
        DecisionTree tree;
        tree.width_ = x.width;
        tree.num_classes_ = num_classes;
        tree.criterion_ = params.criterion;
        Builder builder{tree, x, labels, params, std::mt19937_64(params.seed)};
        std::vector<std::size_t> all(labels.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        builder.grow(all, 0);
        return tree;
    }

    [[nodiscard]] std::size_t predict_row(std::span<const double> row) const {
        if (row.size() != width_) {
            throw std::invalid_argument("row width " + std::to_string(row.size()) + " does not match tree width " +
                                        std::to_string(width_));
        }
        const Node* node = &nodes_.at(0);
        while (!node->is_leaf()) {
            node = &nodes_[static_cast<std::size_t>(row[static_cast<std::size_t>(node->feature)] <= node->threshold
                                                        ? node->left
                                                        : node->right)];
        }
        return majority(node->counts);
    }

    [[nodiscard]] std::vector<std::size_t> predict(FeatureView x) const {
        if (x.rows() > 0 && x.width != width_) {
            throw std::invalid_argument("feature width " + std::to_string(x.width) + " does not match tree width " +
                                        std::to_string(width_));
        }
        std::vector<std::size_t> out;
        out.reserve(x.rows());
        for (std::size_t r = 0; r < x.rows(); ++r) {
            out.push_back(predict_row(x.row(r)));
        }
        return out;
    }

    [[nodiscard]] std::size_t width() const noexcept { return width_; }
    [[nodiscard]] std::size_t num_classes() const noexcept { return num_classes_; }
    [[nodiscard]] const std::vector<Node>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] SplitCriterion criterion() const noexcept { return criterion_; }

    [[nodiscard]] int depth() const { return nodes_.empty() ? 0 : depth_of(0); }
    [[nodiscard]] std::size_t leaf_count() const {
        return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
    }

    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

    // Text form, nodes in pre-order, indentation shows depth:
    //
    //   decision-tree 1
    //   features 14
    //   classes 7
    //   criterion gini
    //   split 3 0.5
    //     leaf 10 0 0 0 0 0 0
    //     split 7 0.25
    //       leaf ...
    //       leaf ...
    //
    // Split nodes carry their class distribution after the threshold.
    [[nodiscard]] std::string serialize() const {
        std::ostringstream out;
        out << "decision-tree 1\n";
        out << "features " << width_ << '\n';
        out << "classes " << num_classes_ << '\n';
        out << "criterion " << (criterion_ == SplitCriterion::kGini ? "gini" : "entropy") << '\n';
        if (!nodes_.empty()) {
            write_node(out, 0, 0);
        }
        return out.str();
    }

    [[nodiscard]] static DecisionTree parse(std::string_view text) {
        std::vector<std::string> lines;
        std::istringstream in{std::string(text)};
        for (std::string line; std::getline(in, line);) {
            if (!detail::trim(line).empty()) {
                lines.push_back(line);
            }
        }
        if (lines.size() < 5 || detail::trim(lines[0]) != "decision-tree 1") {
            throw DataError("not a decision-tree description");
        }
        DecisionTree tree;
        auto header_value = [&](std::size_t i, std::string_view key) {
            const auto t = detail::trim(lines[i]);
            if (!t.starts_with(key)) {
                throw DataError("decision tree: expected '" + std::string(key) + "' on line " + std::to_string(i + 1));
            }
            return detail::trim(t.substr(key.size()));
        };
        const auto width = detail::parse_int<std::size_t>(header_value(1, "features"));
        const auto classes = detail::parse_int<std::size_t>(header_value(2, "classes"));
        const auto crit = header_value(3, "criterion");
        if (!width || !classes || *width == 0 || *classes == 0 || (crit != "gini" && crit != "entropy")) {
            throw DataError("decision tree: bad header");
        }
        tree.width_ = *width;
        tree.num_classes_ = *classes;
        tree.criterion_ = crit == "gini" ? SplitCriterion::kGini : SplitCriterion::kEntropy;
        std::size_t cursor = 4;
        tree.read_node(lines, cursor);
        if (cursor != lines.size()) {
            throw DataError("decision tree: trailing lines after the root subtree");
        }
        return tree;
    }

private:
    struct Builder {
        DecisionTree& tree;
        FeatureView x;
        std::span<const std::size_t> labels;
        const TreeParams& params;
        std::mt19937_64 engine;

        int grow(const std::vector<std::size_t>& idx, int depth) {
            const auto node_id = static_cast<int>(tree.nodes_.size());
            tree.nodes_.push_back({});
            std::vector<std::uint64_t> counts(tree.num_classes_, 0);
            for (const auto i : idx) {
                ++counts[labels[i]];
            }
            tree.nodes_[static_cast<std::size_t>(node_id)].counts = counts;

            const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;
            const bool depth_reached = params.max_depth && depth >= *params.max_depth;
            const bool too_small = idx.size() < static_cast<std::size_t>(params.min_samples_split);
            if (pure || depth_reached || too_small) {
                return node_id;
            }

            std::vector<std::size_t> order(x.width);
            std::iota(order.begin(), order.end(), std::size_t{0});
            detail::shuffle(order.begin(), order.end(), engine);

            double best_score = std::numeric_limits<double>::infinity();
            int best_feature = -1;
            double best_threshold = 0.0;
            std::vector<std::size_t> sorted = idx;
            std::vector<std::uint64_t> left(tree.num_classes_);
            for (const auto f : order) {
                std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
                    const double va = x.at(a, f);
                    const double vb = x.at(b, f);
                    return va < vb || (va == vb && a < b);
                });
                std::fill(left.begin(), left.end(), 0);
                for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
                    ++left[labels[sorted[k]]];
                    const double a = x.at(sorted[k], f);
                    const double b = x.at(sorted[k + 1], f);
                    if (!(a < b)) {
                        continue;
                    }
                    const double score = split_score(left, counts, k + 1, idx.size());
                    if (score < best_score) {
                        best_score = score;
                        best_feature = static_cast<int>(f);
                        double mid = a + (b - a) / 2.0;
                        if (!(mid < b)) {
                            mid = a;
                        }
                        best_threshold = mid;
                    }
                }
            }
            if (best_feature < 0) {
                return node_id;  // every feature constant on this node
            }
            std::vector<std::size_t> li;
            std::vector<std::size_t> ri;
            for (const auto i : idx) {
                (x.at(i, static_cast<std::size_t>(best_feature)) <= best_threshold ? li : ri).push_back(i);
            }
            const int l = grow(li, depth + 1);
            const int r = grow(ri, depth + 1);
            auto& node = tree.nodes_[static_cast<std::size_t>(node_id)];
            node.feature = best_feature;
            node.threshold = best_threshold;
            node.left = l;
            node.right = r;
            return node_id;
        }

        [[nodiscard]] double impurity(const std::vector<std::uint64_t>& counts, std::size_t n) const {
            if (n == 0) {
                return 0.0;
            }
            const double inv = 1.0 / static_cast<double>(n);
            double acc = 0.0;
            if (params.criterion == SplitCriterion::kGini) {
                for (const auto c : counts) {
                    const double p = static_cast<double>(c) * inv;
                    acc += p * p;
                }
                return 1.0 - acc;
            }
            for (const auto c : counts) {
                if (c > 0) {
                    const double p = static_cast<double>(c) * inv;
                    acc -= p * std::log2(p);
                }
            }
            return acc;
        }

        [[nodiscard]] double split_score(const std::vector<std::uint64_t>& left, const std::vector<std::uint64_t>& all,
                                         std::size_t n_left, std::size_t n) const {
            std::vector<std::uint64_t> right(all.size());
            for (std::size_t c = 0; c < all.size(); ++c) {
                right[c] = all[c] - left[c];
            }
            const std::size_t n_right = n - n_left;
            return (static_cast<double>(n_left) * impurity(left, n_left) +
                    static_cast<double>(n_right) * impurity(right, n_right)) /
                   static_cast<double>(n);
        }
    };

    [[nodiscard]] static std::size_t majority(const std::vector<std::uint64_t>& counts) {
        return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    }

    [[nodiscard]] int depth_of(int id) const {
        const auto& n = nodes_[static_cast<std::size_t>(id)];
        return n.is_leaf() ? 0 : 1 + std::max(depth_of(n.left), depth_of(n.right));
    }

    void write_node(std::ostringstream& out, int id, int depth) const {
        const auto& n = nodes_[static_cast<std::size_t>(id)];
        out << std::string(static_cast<std::size_t>(depth) * 2, ' ');
        if (n.is_leaf()) {
            out << "leaf";
        } else {
            out << "split " << n.feature << ' ' << detail::format_double(n.threshold) << " |";
        }
        for (const auto c : n.counts) {
            out << ' ' << c;
        }
        out << '\n';
        if (!n.is_leaf()) {
            write_node(out, n.left, depth + 1);
            write_node(out, n.right, depth + 1);
        }
    }

    int read_node(const std::vector<std::string>& lines, std::size_t& cursor) {
        if (cursor >= lines.size()) {
            throw DataError("decision tree: unexpected end of node list");
        }
        std::istringstream in(lines[cursor]);
        const auto lineno = std::to_string(cursor + 1);
        ++cursor;
        std::string kind;
        in >> kind;
        Node node;
        if (kind == "split") {
            std::string feature;
            std::string threshold;
            std::string bar;
            in >> feature >> threshold >> bar;
            const auto f = detail::parse_int<int>(feature);
            const auto t = detail::parse_double(threshold);
            if (!f || !t || *f < 0 || static_cast<std::size_t>(*f) >= width_ || bar != "|") {
                throw DataError("decision tree: bad split on line " + lineno);
            }
            node.feature = *f;
            node.threshold = *t;
        } else if (kind != "leaf") {
            throw DataError("decision tree: unknown node kind on line " + lineno);
        }
        for (std::string tok; in >> tok;) {
            const auto c = detail::parse_int<std::uint64_t>(tok);
            if (!c) {
                throw DataError("decision tree: bad class count on line " + lineno);
            }
            node.counts.push_back(*c);
        }
        if (node.counts.size() != num_classes_) {
            throw DataError("decision tree: expected " + std::to_string(num_classes_) + " class counts on line " + lineno);
        }
        const auto id = static_cast<int>(nodes_.size());
        nodes_.push_back(std::move(node));
        if (kind == "split") {
            const int l = read_node(lines, cursor);
            const int r = read_node(lines, cursor);
            nodes_[static_cast<std::size_t>(id)].left = l;
            nodes_[static_cast<std::size_t>(id)].right = r;
        }
        return id;
    }

    std::size_t width_ = 0;
    std::size_t num_classes_ = 0;
    SplitCriterion criterion_ = SplitCriterion::kGini;
    std::vector<Node> nodes_;
};

}  // namespace skinstack
