#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rome/dataset.hpp"
#include "rome/errors.hpp"
#include "rome/rng.hpp"
#include "rome/text.hpp"

namespace rome::cart {

/// The four tuned hyperparameters. Defaults are the untuned baseline:
/// every feature eligible, unbounded depth, split at 2, leaves of 1.
struct Config {
    double max_features_fraction = 1.0;
    std::optional<int> max_depth;   // nullopt = unbounded
    int min_sample_split = 2;
    int min_samples_leaf = 1;

    /// Splitting fewer than 2 rows is undefined, so tuned values 0 and 1
    /// act as 2.
    int effective_min_split() const { return std::max(min_sample_split, 2); }

    void validate() const {
        if (max_features_fraction < 0.01 || max_features_fraction > 1.0)
            throw DataError("max_features_fraction must lie in [0.01, 1]");
        if (max_depth && (*max_depth < 1 || *max_depth > 12))
            throw DataError("max_depth must lie in [1, 12] or be unbounded");
        if (min_sample_split < 0 || min_sample_split > 20)
            throw DataError("min_sample_split must lie in [0, 20]");
        if (min_samples_leaf < 1 || min_samples_leaf > 12)
            throw DataError("min_samples_leaf must lie in [1, 12]");
    }

    bool operator==(const Config&) const = default;
};

/// Split quality: weighted child spread. Child targets are taken in
/// increasing original-row order, the variance is the two-pass population
/// variance in that same order, and the result is
///   (sqrt(var_left) * n_left + sqrt(var_right) * n_right) / n.
/// Any independent scorer that follows this operand order reproduces the
/// value bit for bit.
inline double target_variance(const std::vector<double>& targets) {
    const double n = static_cast<double>(targets.size());
    double sum = 0.0;
    for (double t : targets) sum += t;
    const double mean = sum / n;
    double ssd = 0.0;
    for (double t : targets) ssd += (t - mean) * (t - mean);
    return ssd / n;
}

inline double split_score(const std::vector<double>& left_targets,
                          const std::vector<double>& right_targets) {
    const double nl = static_cast<double>(left_targets.size());
    const double nr = static_cast<double>(right_targets.size());
    return (std::sqrt(target_variance(left_targets)) * nl +
            std::sqrt(target_variance(right_targets)) * nr) /
           (nl + nr);
}

struct Node {
    int feature = -1;       // -1 for leaves
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double prediction = 0.0;
    std::size_t support = 0;

    bool is_leaf() const { return feature < 0; }
};

class Tree {
public:
    Tree() = default;
    Tree(std::size_t n_features, std::vector<Node> nodes)
        : n_features_(n_features), nodes_(std::move(nodes)) {}

    std::size_t n_features() const { return n_features_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& root() const { return nodes_.front(); }

    double predict(const std::vector<double>& row) const {
        if (row.size() != n_features_)
            throw DataError("predict: row has " + std::to_string(row.size()) +
                            " features, tree expects " + std::to_string(n_features_));
        int i = 0;
        while (!nodes_[i].is_leaf())
            i = row[nodes_[i].feature] <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
        return nodes_[i].prediction;
    }

    int depth() const { return node_depth(0); }

    /// Feature indices that appear in at least one internal node.
    std::vector<std::size_t> features_used() const {
        std::vector<bool> used(n_features_, false);
        for (const Node& n : nodes_)
            if (!n.is_leaf()) used[n.feature] = true;
        std::vector<std::size_t> out;
        for (std::size_t f = 0; f < used.size(); ++f)
            if (used[f]) out.push_back(f);
        return out;
    }

    std::size_t leaf_count() const {
        std::size_t c = 0;
        for (const Node& n : nodes_)
            if (n.is_leaf()) ++c;
        return c;
    }

    bool operator==(const Tree& other) const {
        if (n_features_ != other.n_features_ || nodes_.size() != other.nodes_.size()) return false;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const Node &a = nodes_[i], &b = other.nodes_[i];
            if (a.feature != b.feature || a.threshold != b.threshold || a.left != b.left ||
                a.right != b.right || a.prediction != b.prediction || a.support != b.support)
                return false;
        }
        return true;
    }

private:
    int node_depth(int i) const {
        if (nodes_[i].is_leaf()) return 0;
        return 1 + std::max(node_depth(nodes_[i].left), node_depth(nodes_[i].right));
    }

    std::size_t n_features_ = 0;
    std::vector<Node> nodes_;
};

namespace detail {

struct Candidate {
    std::size_t feature = 0;
    double threshold = 0.0;
    double score = 0.0;
};

class Builder {
public:
    Builder(const std::vector<std::vector<double>>& rows, const std::vector<double>& targets,
            const Config& config, std::uint64_t seed)
        : rows_(rows), targets_(targets), config_(config), rng_(seed) {
        n_features_ = rows.front().size();
        std::size_t k = static_cast<std::size_t>(
            std::ceil(config.max_features_fraction * static_cast<double>(n_features_)));
        eligible_count_ = std::clamp<std::size_t>(k, 1, n_features_);
    }

    Tree build() {
        std::vector<std::size_t> all(rows_.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        grow(all, 0);
        return Tree(n_features_, std::move(nodes_));
    }

private:
    int make_leaf(const std::vector<std::size_t>& node_rows) {
        double sum = 0.0;
        for (std::size_t r : node_rows) sum += targets_[r];
        Node leaf;
        leaf.prediction = sum / static_cast<double>(node_rows.size());
        leaf.support = node_rows.size();
        nodes_.push_back(leaf);
        return static_cast<int>(nodes_.size()) - 1;
    }

    bool constant_target(const std::vector<std::size_t>& node_rows) const {
        for (std::size_t r : node_rows)
            if (targets_[r] != targets_[node_rows.front()]) return false;
        return true;
    }

    /// Features eligible at this node. Drawing happens even when the
    /// fraction covers everything only if a strict subset is requested,
    /// so the all-features configuration is seed-independent.
    std::vector<std::size_t> draw_features() {
        std::vector<std::size_t> features(n_features_);
        for (std::size_t i = 0; i < features.size(); ++i) features[i] = i;
        if (eligible_count_ == n_features_) return features;
        for (std::size_t i = 0; i < eligible_count_; ++i) {
            const std::size_t j = i + rng_.index(features.size() - i);
            std::swap(features[i], features[j]);
        }
        features.resize(eligible_count_);
        std::sort(features.begin(), features.end());
        return features;
    }

    std::optional<Candidate> best_split(const std::vector<std::size_t>& node_rows) {
        std::optional<Candidate> best;
        std::vector<double> left, right;
        std::vector<double> values;
        for (std::size_t f : draw_features()) {
            values.clear();
            for (std::size_t r : node_rows) values.push_back(rows_[r][f]);
            std::sort(values.begin(), values.end());
            values.erase(std::unique(values.begin(), values.end()), values.end());
            for (std::size_t k = 0; k + 1 < values.size(); ++k) {
                const double threshold = (values[k] + values[k + 1]) / 2.0;
                left.clear();
                right.clear();
                for (std::size_t r : node_rows)
                    (rows_[r][f] <= threshold ? left : right).push_back(targets_[r]);
                if (left.size() < static_cast<std::size_t>(config_.min_samples_leaf) ||
                    right.size() < static_cast<std::size_t>(config_.min_samples_leaf))
                    continue;
                const double score = split_score(left, right);
                if (!best || score < best->score ||
                    (score == best->score &&
                     (f < best->feature || (f == best->feature && threshold < best->threshold))))
                    best = Candidate{f, threshold, score};
            }
        }
        return best;
    }

    int grow(const std::vector<std::size_t>& node_rows, int depth) {
        if (constant_target(node_rows) ||
            node_rows.size() < static_cast<std::size_t>(config_.effective_min_split()) ||
            (config_.max_depth && depth >= *config_.max_depth))
            return make_leaf(node_rows);
        auto split = best_split(node_rows);
        if (!split) return make_leaf(node_rows);

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : node_rows)
            (rows_[r][split->feature] <= split->threshold ? left_rows : right_rows).push_back(r);

        const int self = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        nodes_[self].feature = static_cast<int>(split->feature);
        nodes_[self].threshold = split->threshold;
        nodes_[self].support = node_rows.size();
        const int left = grow(left_rows, depth + 1);
        const int right = grow(right_rows, depth + 1);
        nodes_[self].left = left;
        nodes_[self].right = right;
        return self;
    }

    const std::vector<std::vector<double>>& rows_;
    const std::vector<double>& targets_;
    Config config_;
    Rng rng_;
    std::size_t n_features_ = 0;
    std::size_t eligible_count_ = 0;
    std::vector<Node> nodes_;
};

} // namespace detail

inline Tree train(const std::vector<std::vector<double>>& rows, const std::vector<double>& targets,
                  const Config& config, std::uint64_t seed) {
    if (rows.empty()) throw DataError("cart: empty training data");
    if (rows.size() != targets.size()) throw DataError("cart: row/target count mismatch");
    config.validate();
    return detail::Builder(rows, targets, config, seed).build();
}

inline Tree train(const Dataset& data, const Config& config, std::uint64_t seed) {
    std::vector<std::vector<double>> rows;
    rows.reserve(data.n_rows());
    for (std::size_t r = 0; r < data.n_rows(); ++r) rows.push_back(data.row(r));
    return train(rows, data.targets(), config, seed);
}

/// Nested text form, one node per line, children indented two spaces.
inline std::string to_text(const Tree& tree) {
    std::ostringstream out;
    out << "cart n_features=" << tree.n_features() << '\n';
    auto emit = [&](auto&& self, int i, int indent) -> void {
        const Node& n = tree.nodes()[i];
        for (int s = 0; s < indent; ++s) out << ' ';
        if (n.is_leaf()) {
            out << "leaf predict=" << fmt_double(n.prediction) << " support=" << n.support << '\n';
        } else {
            out << "split feature=" << n.feature << " threshold=" << fmt_double(n.threshold)
                << " support=" << n.support << '\n';
            self(self, n.left, indent + 2);
            self(self, n.right, indent + 2);
        }
    };
    emit(emit, 0, 2);
    return out.str();
}

inline Tree from_text(const std::string& text) {
    auto lines = split(text, '\n');
    std::size_t cursor = 0;
    while (cursor < lines.size() && trim(lines[cursor]).empty()) ++cursor;
    if (cursor == lines.size()) throw DataError("tree text: empty input");

    auto field = [](const std::string& line, const std::string& key) -> std::string {
        auto pos = line.find(key + "=");
        if (pos == std::string::npos) throw DataError("tree text: missing field '" + key + "'");
        auto start = pos + key.size() + 1;
        auto end = line.find(' ', start);
        return line.substr(start, end == std::string::npos ? std::string::npos : end - start);
    };

    auto header = std::string(trim(lines[cursor]));
    if (header.rfind("cart ", 0) != 0) throw DataError("tree text: missing header");
    auto n_features = parse_long(field(header, "n_features"));
    if (!n_features) throw DataError("tree text: bad n_features");
    ++cursor;

    std::vector<Node> nodes;
    auto parse_node = [&](auto&& self) -> int {
        while (cursor < lines.size() && trim(lines[cursor]).empty()) ++cursor;
        if (cursor >= lines.size()) throw DataError("tree text: truncated");
        auto line = std::string(trim(lines[cursor]));
        ++cursor;
        const int index = static_cast<int>(nodes.size());
        nodes.emplace_back();
        if (line.rfind("leaf ", 0) == 0) {
            auto predict = parse_double(field(line, "predict"));
            auto support = parse_long(field(line, "support"));
            if (!predict || !support) throw DataError("tree text: bad leaf line");
            nodes[index].prediction = *predict;
            nodes[index].support = static_cast<std::size_t>(*support);
        } else if (line.rfind("split ", 0) == 0) {
            auto feature = parse_long(field(line, "feature"));
            auto threshold = parse_double(field(line, "threshold"));
            auto support = parse_long(field(line, "support"));
            if (!feature || !threshold || !support) throw DataError("tree text: bad split line");
            nodes[index].feature = static_cast<int>(*feature);
            nodes[index].threshold = *threshold;
            nodes[index].support = static_cast<std::size_t>(*support);
            const int left = self(self);
            const int right = self(self);
            nodes[index].left = left;
            nodes[index].right = right;
        } else {
            throw DataError("tree text: unrecognized line '" + line + "'");
        }
        return index;
    };
    parse_node(parse_node);
    return Tree(static_cast<std::size_t>(*n_features), std::move(nodes));
}

} // namespace rome::cart
