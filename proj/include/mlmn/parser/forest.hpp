#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mlmn/errors.hpp"
#include "mlmn/util/rng.hpp"

namespace mlmn::parser {

    // Binary labels: 0 = premise, 1 = conclusion.
    inline constexpr int label_premise = 0;
    inline constexpr int label_conclusion = 1;

    struct ForestConfig {
        std::size_t n_trees = 100;
        std::size_t max_depth = 10;  // 0 means unlimited
        std::uint64_t seed = 1;
        // off: every tree sees the full training set (useful for the
        // single-tree memorization check)
        bool bootstrap = true;
    };

    struct TreeNode {
        int feature = -1;  // -1 for a leaf
        double threshold = 0.0;
        int left = -1;     // x[feature] <= threshold
        int right = -1;
        std::array<std::size_t, 2> counts{0, 0};

        bool is_leaf() const { return feature < 0; }
    };

    class DecisionTree {
    public:
        DecisionTree() = default;
        explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

        const TreeNode& leaf_for(std::span<const double> x) const {
            std::size_t n = 0;
            while (!nodes_[n].is_leaf()) {
                const auto& node = nodes_[n];
                n = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                                         : node.right);
            }
            return nodes_[n];
        }

        // majority of the leaf counts; ties go to premise
        int predict(std::span<const double> x) const {
            const auto& c = leaf_for(x).counts;
            return c[1] > c[0] ? label_conclusion : label_premise;
        }

        const std::vector<TreeNode>& nodes() const { return nodes_; }
        std::size_t depth() const { return depth_from(0); }

    private:
        std::size_t depth_from(std::size_t n) const {
            if (nodes_[n].is_leaf()) return 0;
            return 1 + std::max(depth_from(static_cast<std::size_t>(nodes_[n].left)),
                                depth_from(static_cast<std::size_t>(nodes_[n].right)));
        }

        std::vector<TreeNode> nodes_;
    };

    inline double gini(std::size_t a, std::size_t b) {
        const double n = static_cast<double>(a + b);
        if (n == 0) return 0.0;
        const double pa = static_cast<double>(a) / n, pb = static_cast<double>(b) / n;
        return 1.0 - pa * pa - pb * pb;
    }

    namespace detail {

        class TreeBuilder {
        public:
            TreeBuilder(const std::vector<std::vector<double>>& x, const std::vector<int>& y, std::size_t max_depth,
                        Rng& rng)
                : x_(x), y_(y), max_depth_(max_depth == 0 ? std::numeric_limits<std::size_t>::max() : max_depth),
                  rng_(rng), width_(x.front().size()),
                  mtry_(static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(width_))))) {}

            std::vector<TreeNode> build(std::vector<std::size_t> rows) {
                grow(rows, 0);
                return std::move(nodes_);
            }

        private:
            struct Split {
                int feature = -1;
                double threshold = 0.0;
                double gain = -1.0;
            };

            int grow(std::vector<std::size_t>& rows, std::size_t depth) {
                const int id = static_cast<int>(nodes_.size());
                nodes_.emplace_back();
                std::array<std::size_t, 2> counts{0, 0};
                for (std::size_t r : rows) ++counts[static_cast<std::size_t>(y_[r])];
                nodes_[static_cast<std::size_t>(id)].counts = counts;
                if (depth >= max_depth_ || counts[0] == 0 || counts[1] == 0) return id;

                std::vector<std::size_t> candidates = rng_.sample_without_replacement(width_, mtry_);
                Split best = best_split(rows, candidates, counts);
                if (best.feature < 0) {
                    // the sampled features are constant here; fall back to all of them
                    candidates.resize(width_);
                    std::iota(candidates.begin(), candidates.end(), std::size_t{0});
                    best = best_split(rows, candidates, counts);
                }
                if (best.feature < 0) return id;

                std::vector<std::size_t> left, right;
                for (std::size_t r : rows) {
                    (x_[r][static_cast<std::size_t>(best.feature)] <= best.threshold ? left : right).push_back(r);
                }
                rows.clear();
                rows.shrink_to_fit();
                const int l = grow(left, depth + 1);
                const int r = grow(right, depth + 1);
                auto& node = nodes_[static_cast<std::size_t>(id)];
                node.feature = best.feature;
                node.threshold = best.threshold;
                node.left = l;
                node.right = r;
                return id;
            }

            // Best Gini gain over midpoints between distinct values. Zero-gain
            // splits are accepted so impure nodes keep splitting while any
            // feature still separates rows.
            Split best_split(const std::vector<std::size_t>& rows, const std::vector<std::size_t>& features,
                             const std::array<std::size_t, 2>& counts) const {
                Split best;
                const double parent = gini(counts[0], counts[1]);
                const double n = static_cast<double>(rows.size());
                std::vector<std::pair<double, int>> column(rows.size());
                for (std::size_t f : features) {
                    for (std::size_t i = 0; i < rows.size(); ++i) column[i] = {x_[rows[i]][f], y_[rows[i]]};
                    std::sort(column.begin(), column.end());
                    std::array<std::size_t, 2> left{0, 0};
                    for (std::size_t i = 0; i + 1 < column.size(); ++i) {
                        ++left[static_cast<std::size_t>(column[i].second)];
                        if (column[i].first == column[i + 1].first) continue;
                        const std::size_t nl = i + 1;
                        const std::array<std::size_t, 2> right{counts[0] - left[0], counts[1] - left[1]};
                        const double child = (static_cast<double>(nl) * gini(left[0], left[1]) +
                                              static_cast<double>(rows.size() - nl) * gini(right[0], right[1])) /
                                             n;
                        const double gain = parent - child;
                        if (gain > best.gain + 1e-12) {
                            best.feature = static_cast<int>(f);
                            best.threshold = 0.5 * (column[i].first + column[i + 1].first);
                            best.gain = gain;
                        }
                    }
                }
                return best;
            }

            const std::vector<std::vector<double>>& x_;
            const std::vector<int>& y_;
            std::size_t max_depth_;
            Rng& rng_;
            std::size_t width_;
            std::size_t mtry_;
            std::vector<TreeNode> nodes_;
        };

    }  // namespace detail

    class RandomForest {
    public:
        RandomForest() = default;
        RandomForest(std::size_t width, ForestConfig config, std::vector<DecisionTree> trees)
            : width_(width), config_(config), trees_(std::move(trees)) {}

        std::size_t width() const { return width_; }
        const ForestConfig& config() const { return config_; }
        const std::vector<DecisionTree>& trees() const { return trees_; }
        std::size_t size() const { return trees_.size(); }

        // per-class vote counts
        std::array<std::size_t, 2> votes(std::span<const double> x) const {
            if (x.size() != width_) {
                throw ShapeError("forest expects " + std::to_string(width_) + " features, got " +
                                 std::to_string(x.size()));
            }
            std::array<std::size_t, 2> v{0, 0};
            for (const auto& t : trees_) ++v[static_cast<std::size_t>(t.predict(x))];
            return v;
        }

        int predict(std::span<const double> x) const {
            const auto v = votes(x);
            return v[1] > v[0] ? label_conclusion : label_premise;
        }

    private:
        std::size_t width_ = 0;
        ForestConfig config_;
        std::vector<DecisionTree> trees_;
    };

    // Each tree draws its bootstrap sample and feature subsets from its own
    // generator seeded by mix_seed(seed, tree index), so the forest does not
    // depend on the order trees are built in.
    inline RandomForest train_forest(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                                     const ForestConfig& cfg) {
        if (x.empty() || x.size() != y.size()) throw InputError("train_forest: need one label per example");
        if (cfg.n_trees == 0) throw InputError("train_forest: n_trees must be positive");
        const std::size_t width = x.front().size();
        if (width == 0) throw InputError("train_forest: zero feature width");
        std::array<std::size_t, 2> counts{0, 0};
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i].size() != width) throw ShapeError("train_forest: ragged feature rows");
            if (y[i] != label_premise && y[i] != label_conclusion) throw InputError("train_forest: label must be 0 or 1");
            ++counts[static_cast<std::size_t>(y[i])];
        }
        if (counts[0] == 0 || counts[1] == 0) throw InputError("train_forest: training set has a single class");

        std::vector<DecisionTree> trees;
        trees.reserve(cfg.n_trees);
        for (std::size_t t = 0; t < cfg.n_trees; ++t) {
            Rng rng(mix_seed(cfg.seed, t));
            std::vector<std::size_t> rows(x.size());
            if (cfg.bootstrap) {
                for (auto& r : rows) r = rng.below(x.size());
            } else {
                std::iota(rows.begin(), rows.end(), std::size_t{0});
            }
            detail::TreeBuilder builder(x, y, cfg.max_depth, rng);
            trees.emplace_back(builder.build(std::move(rows)));
        }
        return RandomForest(width, cfg, std::move(trees));
    }

    inline nlohmann::json to_json(const RandomForest& f) {
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& t : f.trees()) {
            nlohmann::json nodes = nlohmann::json::array();
            for (const auto& n : t.nodes()) {
                nodes.push_back({n.feature, n.threshold, n.left, n.right, n.counts[0], n.counts[1]});
            }
            trees.push_back(std::move(nodes));
        }
        const auto& c = f.config();
        return {{"width", f.width()},
                {"n_trees", c.n_trees},
                {"max_depth", c.max_depth},
                {"seed", c.seed},
                {"bootstrap", c.bootstrap},
                {"trees", std::move(trees)}};
    }

    inline RandomForest forest_from_json(const nlohmann::json& j) {
        ForestConfig c;
        c.n_trees = j.at("n_trees").get<std::size_t>();
        c.max_depth = j.at("max_depth").get<std::size_t>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.bootstrap = j.value("bootstrap", true);
        const auto width = j.at("width").get<std::size_t>();
        std::vector<DecisionTree> trees;
        for (const auto& t : j.at("trees")) {
            std::vector<TreeNode> nodes;
            for (const auto& n : t) {
                TreeNode node;
                node.feature = n.at(0).get<int>();
                node.threshold = n.at(1).get<double>();
                node.left = n.at(2).get<int>();
                node.right = n.at(3).get<int>();
                node.counts = {n.at(4).get<std::size_t>(), n.at(5).get<std::size_t>()};
                nodes.push_back(node);
            }
            const auto count = static_cast<int>(nodes.size());
            for (const auto& node : nodes) {
                if (node.is_leaf()) continue;
                if (node.feature >= static_cast<int>(width) || node.left <= 0 || node.right <= 0 ||
                    node.left >= count || node.right >= count) {
                    throw InputError("forest file: malformed tree node");
                }
            }
            if (nodes.empty()) throw InputError("forest file: empty tree");
            trees.emplace_back(std::move(nodes));
        }
        return RandomForest(width, c, std::move(trees));
    }

    inline void save_forest(const std::string& path, const RandomForest& f) {
        std::ofstream os(path);
        if (!os) throw InputError("cannot write forest: " + path);
        os << to_json(f).dump() << '\n';
    }

    inline RandomForest load_forest(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw InputError("cannot read forest: " + path);
        try {
            return forest_from_json(nlohmann::json::parse(is));
        } catch (const nlohmann::json::exception& e) {
            throw InputError(path + ": " + e.what());
        }
    }

}  // namespace mlmn::parser
