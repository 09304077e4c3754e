#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "attnrec/errors.hpp"
#include "attnrec/matrix.hpp"
#include "attnrec/rng.hpp"

namespace attnrec {

struct GbtConfig {
    int n_estimators = 1900;
    int max_depth = 9;
    double learning_rate = 0.01;
    double subsample = 1.0;
    double colsample_bytree = 0.2;
    double reg_lambda = 1.0;
    double reg_alpha = 3.0;
    double min_child_weight = 1.0;
    std::uint64_t seed = 42;
    bool base_score_mean = true;  // otherwise base_score_fixed
    double base_score_fixed = 0.0;

    void validate() const {
        if (n_estimators < 0) throw DomainError("GbtConfig: n_estimators must be >= 0");
        if (max_depth < 0) throw DomainError("GbtConfig: max_depth must be >= 0");
        if (!(subsample > 0.0 && subsample <= 1.0))
            throw DomainError("GbtConfig: subsample must lie in (0,1]");
        if (!(colsample_bytree > 0.0 && colsample_bytree <= 1.0))
            throw DomainError("GbtConfig: colsample_bytree must lie in (0,1]");
        if (reg_lambda < 0.0) throw DomainError("GbtConfig: reg_lambda must be >= 0");
        if (reg_alpha < 0.0) throw DomainError("GbtConfig: reg_alpha must be >= 0");
    }
};

// L1 shrinkage toward zero.
inline double soft_threshold(double g, double a) {
    if (g > a) return g - a;
    if (g < -a) return g + a;
    return 0.0;
}

// Optimal second-order leaf weight with L1/L2 regularization.
inline double leaf_weight(double grad_sum, double hess_sum, double reg_lambda,
                          double reg_alpha) {
    return -soft_threshold(grad_sum, reg_alpha) / (hess_sum + reg_lambda);
}

// Unnormalized structure score of a leaf holding (G, H).
inline double split_score(double grad_sum, double hess_sum, double reg_lambda,
                          double reg_alpha) {
    const double s = soft_threshold(grad_sum, reg_alpha);
    return s * s / (hess_sum + reg_lambda);
}

struct SplitCandidate {
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

// Exact greedy search over one node: candidate thresholds are midpoints
// between consecutive distinct sorted values; ties break toward the lowest
// feature index, then the lowest threshold. Returns nullopt when no split has
// strictly positive gain or every split violates min_child_weight.
inline std::optional<SplitCandidate> best_split(const Matrix& x,
                                                const std::vector<std::size_t>& rows,
                                                const std::vector<std::size_t>& features,
                                                const std::vector<double>& g,
                                                const std::vector<double>& h,
                                                const GbtConfig& cfg) {
    double g_total = 0.0, h_total = 0.0;
    for (std::size_t r : rows) {
        g_total += g[r];
        h_total += h[r];
    }
    const double parent = split_score(g_total, h_total, cfg.reg_lambda, cfg.reg_alpha);

    SplitCandidate best;
    bool found = false;
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t f : features) {
        order.clear();
        order.reserve(rows.size());
        for (std::size_t r : rows) order.emplace_back(x(r, f), r);
        std::sort(order.begin(), order.end());
        double gl = 0.0, hl = 0.0;
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
            gl += g[order[k].second];
            hl += h[order[k].second];
            if (order[k].first == order[k + 1].first) continue;
            const double gr = g_total - gl;
            const double hr = h_total - hl;
            if (hl < cfg.min_child_weight || hr < cfg.min_child_weight) continue;
            const double gain = 0.5 * (split_score(gl, hl, cfg.reg_lambda, cfg.reg_alpha) +
                                       split_score(gr, hr, cfg.reg_lambda, cfg.reg_alpha) -
                                       parent);
            if (gain > 0.0 && (!found || gain > best.gain)) {
                best.feature = f;
                best.threshold = 0.5 * (order[k].first + order[k + 1].first);
                best.gain = gain;
                found = true;
            }
        }
    }
    if (!found) return std::nullopt;
    return best;
}

// Internal node when feature >= 0, otherwise a leaf carrying weight.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double weight = 0.0;

    bool is_leaf() const { return feature < 0; }
};

using Tree = std::vector<TreeNode>;  // stored in preorder, root at index 0

inline double tree_predict_row(const Tree& tree, const double* row) {
    int n = 0;
    while (!tree[static_cast<std::size_t>(n)].is_leaf()) {
        const auto& nd = tree[static_cast<std::size_t>(n)];
        n = row[nd.feature] < nd.threshold ? nd.left : nd.right;
    }
    return tree[static_cast<std::size_t>(n)].weight;
}

struct GbtEnsemble {
    double base_score = 0.0;
    double learning_rate = 1.0;
    std::size_t n_features = 0;
    std::vector<Tree> trees;
};

namespace gbt_detail {

// BFS-grown nodes carry child links in creation order; serialize and store in
// preorder so the in-memory layout matches the on-disk record.
inline void preorder_copy(const Tree& src, int idx, Tree& dst) {
    const auto pos = static_cast<int>(dst.size());
    dst.push_back(src[static_cast<std::size_t>(idx)]);
    if (!src[static_cast<std::size_t>(idx)].is_leaf()) {
        dst[static_cast<std::size_t>(pos)].left = static_cast<int>(dst.size());
        preorder_copy(src, src[static_cast<std::size_t>(idx)].left, dst);
        dst[static_cast<std::size_t>(pos)].right = static_cast<int>(dst.size());
        preorder_copy(src, src[static_cast<std::size_t>(idx)].right, dst);
    }
}

struct LevelStats {
    double g = 0.0;
    double h = 0.0;
    std::size_t count = 0;
};

}  // namespace gbt_detail

// One boosted regression tree, grown greedily to max_depth over the sampled
// rows/features. `order` holds, per feature, all row indices sorted by
// (value, row); rows outside the sample are skipped during scanning.
inline Tree grow_tree(const Matrix& x, const std::vector<double>& g,
                      const std::vector<double>& h,
                      const std::vector<std::vector<std::uint32_t>>& order,
                      const std::vector<char>& in_sample,
                      const std::vector<std::size_t>& features, const GbtConfig& cfg) {
    const std::size_t n = x.rows;
    Tree nodes(1);
    std::vector<int> node_of(n, -1);

    gbt_detail::LevelStats root{};
    for (std::size_t i = 0; i < n; ++i) {
        if (!in_sample[i]) continue;
        node_of[i] = 0;
        root.g += g[i];
        root.h += h[i];
        ++root.count;
    }
    std::vector<gbt_detail::LevelStats> stats = {root};  // indexed by node id

    std::size_t level_begin = 0, level_end = 1;
    for (int depth = 0; depth < cfg.max_depth && level_begin < level_end; ++depth) {
        const std::size_t n_level = level_end - level_begin;
        std::vector<SplitCandidate> best(n_level);
        std::vector<char> has_best(n_level, 0);

        // Every feature produces its per-node best independently; merging in
        // ascending feature order afterwards keeps the result identical
        // whether or not this loop runs in parallel.
        std::vector<std::vector<SplitCandidate>> feat_best(features.size());
        std::vector<std::vector<char>> feat_has(features.size());
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t fi = 0; fi < static_cast<std::ptrdiff_t>(features.size()); ++fi) {
            const std::size_t f = features[static_cast<std::size_t>(fi)];
            auto& fb = feat_best[static_cast<std::size_t>(fi)];
            auto& fh = feat_has[static_cast<std::size_t>(fi)];
            fb.assign(n_level, SplitCandidate{});
            fh.assign(n_level, 0);
            std::vector<double> g_run(n_level, 0.0), h_run(n_level, 0.0), last_val(n_level, 0.0);
            std::vector<std::size_t> cnt_run(n_level, 0);
            for (const std::uint32_t row : order[f]) {
                const int nd = node_of[row];
                if (nd < 0 || static_cast<std::size_t>(nd) < level_begin ||
                    static_cast<std::size_t>(nd) >= level_end)
                    continue;
                const std::size_t k = static_cast<std::size_t>(nd) - level_begin;
                const double v = x(row, f);
                const auto& tot = stats[static_cast<std::size_t>(nd)];
                if (cnt_run[k] > 0 && v != last_val[k] && cnt_run[k] < tot.count) {
                    const double gl = g_run[k], hl = h_run[k];
                    const double gr = tot.g - gl, hr = tot.h - hl;
                    if (hl >= cfg.min_child_weight && hr >= cfg.min_child_weight) {
                        const double parent =
                            split_score(tot.g, tot.h, cfg.reg_lambda, cfg.reg_alpha);
                        const double gain =
                            0.5 * (split_score(gl, hl, cfg.reg_lambda, cfg.reg_alpha) +
                                   split_score(gr, hr, cfg.reg_lambda, cfg.reg_alpha) - parent);
                        if (gain > 0.0 && (!fh[k] || gain > fb[k].gain)) {
                            fb[k] = {f, 0.5 * (last_val[k] + v), gain};
                            fh[k] = 1;
                        }
                    }
                }
                g_run[k] += g[row];
                h_run[k] += h[row];
                ++cnt_run[k];
                last_val[k] = v;
            }
        }
        for (std::size_t fi = 0; fi < features.size(); ++fi)
            for (std::size_t k = 0; k < n_level; ++k)
                if (feat_has[fi][k] && (!has_best[k] || feat_best[fi][k].gain > best[k].gain)) {
                    best[k] = feat_best[fi][k];
                    has_best[k] = 1;
                }

        const std::size_t next_begin = nodes.size();
        for (std::size_t k = 0; k < n_level; ++k) {
            if (!has_best[k]) continue;
            const int left = static_cast<int>(nodes.size());
            nodes.emplace_back();
            nodes.emplace_back();  // may reallocate; take the reference after
            auto& nd = nodes[level_begin + k];
            nd.feature = static_cast<int>(best[k].feature);
            nd.threshold = best[k].threshold;
            nd.left = left;
            nd.right = left + 1;
        }
        stats.resize(nodes.size());

        // Route rows to children, accumulating child stats in ascending row
        // order so leaf weights are reproducible sums.
        for (std::size_t i = 0; i < n; ++i) {
            const int nd = node_of[i];
            if (nd < 0 || static_cast<std::size_t>(nd) < level_begin ||
                static_cast<std::size_t>(nd) >= level_end)
                continue;
            const auto& node = nodes[static_cast<std::size_t>(nd)];
            if (node.is_leaf()) continue;
            const int child = x(i, static_cast<std::size_t>(node.feature)) < node.threshold
                                  ? node.left
                                  : node.right;
            node_of[i] = child;
            auto& cs = stats[static_cast<std::size_t>(child)];
            cs.g += g[i];
            cs.h += h[i];
            ++cs.count;
        }
        level_begin = next_begin;
        level_end = nodes.size();
    }

    for (std::size_t id = 0; id < nodes.size(); ++id)
        if (nodes[id].is_leaf())
            nodes[id].weight = leaf_weight(stats[id].g, stats[id].h, cfg.reg_lambda,
                                           cfg.reg_alpha);

    Tree preordered;
    preordered.reserve(nodes.size());
    gbt_detail::preorder_copy(nodes, 0, preordered);
    return preordered;
}

// Squared-error boosting: g = yhat - y, h = 1. Rows are subsampled per tree
// without replacement, features per tree without replacement, both from the
// seeded stream, so a seed pins the whole ensemble.
inline GbtEnsemble fit_gbt(const Matrix& x, const std::vector<double>& y,
                           const GbtConfig& cfg) {
    cfg.validate();
    if (x.rows == 0 || x.rows != y.size())
        throw DomainError("fit_gbt: need nonempty X with matching target count");
    const std::size_t n = x.rows;
    const std::size_t n_feat = x.cols;

    GbtEnsemble ens;
    ens.learning_rate = cfg.learning_rate;
    ens.n_features = n_feat;
    if (cfg.base_score_mean) {
        double s = 0.0;
        for (double v : y) s += v;
        ens.base_score = s / static_cast<double>(n);
    } else {
        ens.base_score = cfg.base_score_fixed;
    }

    // Global presort, one order per feature, shared by every tree.
    std::vector<std::vector<std::uint32_t>> order(n_feat);
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t ff = 0; ff < static_cast<std::ptrdiff_t>(n_feat); ++ff) {
        const auto f = static_cast<std::size_t>(ff);
        auto& ord = order[f];
        ord.resize(n);
        for (std::size_t i = 0; i < n; ++i) ord[i] = static_cast<std::uint32_t>(i);
        std::stable_sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) {
            return x(a, f) < x(b, f);
        });
    }

    std::vector<double> preds(n, ens.base_score);
    std::vector<double> g(n), h(n, 1.0);
    Rng rng(derive_seed(cfg.seed, "gbt"));

    const auto n_sub = cfg.subsample < 1.0
                           ? std::max<std::size_t>(1, static_cast<std::size_t>(
                                                          cfg.subsample * static_cast<double>(n)))
                           : n;
    const auto n_col =
        cfg.colsample_bytree < 1.0
            ? std::max<std::size_t>(1, static_cast<std::size_t>(cfg.colsample_bytree *
                                                                static_cast<double>(n_feat)))
            : n_feat;

    std::vector<std::size_t> all_features(n_feat);
    for (std::size_t f = 0; f < n_feat; ++f) all_features[f] = f;

    ens.trees.reserve(static_cast<std::size_t>(cfg.n_estimators));
    for (int round = 0; round < cfg.n_estimators; ++round) {
        for (std::size_t i = 0; i < n; ++i) g[i] = preds[i] - y[i];

        std::vector<char> in_sample(n, 1);
        if (n_sub < n) {
            std::fill(in_sample.begin(), in_sample.end(), 0);
            for (std::size_t i : rng.sample_indices(n, n_sub)) in_sample[i] = 1;
        }
        std::vector<std::size_t> feats =
            n_col < n_feat ? rng.sample_indices(n_feat, n_col) : all_features;

        Tree tree = grow_tree(x, g, h, order, in_sample, feats, cfg);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i)
            preds[static_cast<std::size_t>(i)] +=
                cfg.learning_rate *
                tree_predict_row(tree, x.row_ptr(static_cast<std::size_t>(i)));
        ens.trees.push_back(std::move(tree));
    }
    return ens;
}

inline std::vector<double> predict(const GbtEnsemble& ens, const Matrix& x) {
    if (x.cols != ens.n_features)
        throw DimensionError("predict: feature count " + std::to_string(x.cols) +
                             " does not match training count " + std::to_string(ens.n_features));
    std::vector<double> out(x.rows, ens.base_score);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(x.rows); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const double* row = x.row_ptr(i);
        double acc = 0.0;
        for (const auto& tree : ens.trees) acc += tree_predict_row(tree, row);
        out[i] += ens.learning_rate * acc;
    }
    return out;
}

namespace gbt_detail {

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace gbt_detail

// Self-describing text format: header, then one preorder node list per tree.
// %.17g round-trips doubles, so reload predicts bit-exactly.
inline void save_ensemble(const GbtEnsemble& ens, std::ostream& out) {
    out << "gbt 1\n";
    out << "n_features " << ens.n_features << "\n";
    out << "base_score " << gbt_detail::fmt_double(ens.base_score) << "\n";
    out << "learning_rate " << gbt_detail::fmt_double(ens.learning_rate) << "\n";
    out << "n_trees " << ens.trees.size() << "\n";
    for (std::size_t t = 0; t < ens.trees.size(); ++t) {
        out << "tree " << t << " " << ens.trees[t].size() << "\n";
        for (const auto& nd : ens.trees[t]) {
            if (nd.is_leaf())
                out << "leaf " << gbt_detail::fmt_double(nd.weight) << "\n";
            else
                out << "split " << nd.feature << " " << gbt_detail::fmt_double(nd.threshold)
                    << " " << nd.left << " " << nd.right << "\n";
        }
    }
}

inline void save_ensemble(const GbtEnsemble& ens, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    save_ensemble(ens, out);
}

inline GbtEnsemble load_ensemble(std::istream& in, const std::string& source = "<stream>") {
    auto fail = [&source](const std::string& why) {
        throw ParseError(source + ": " + why);
    };
    std::string tok;
    int version = 0;
    if (!(in >> tok >> version) || tok != "gbt" || version != 1)
        fail("not a gbt v1 ensemble file");
    GbtEnsemble ens;
    std::size_t n_trees = 0;
    if (!(in >> tok >> ens.n_features) || tok != "n_features") fail("expected n_features");
    if (!(in >> tok >> ens.base_score) || tok != "base_score") fail("expected base_score");
    if (!(in >> tok >> ens.learning_rate) || tok != "learning_rate")
        fail("expected learning_rate");
    if (!(in >> tok >> n_trees) || tok != "n_trees") fail("expected n_trees");
    ens.trees.resize(n_trees);
    for (std::size_t t = 0; t < n_trees; ++t) {
        std::size_t idx = 0, n_nodes = 0;
        if (!(in >> tok >> idx >> n_nodes) || tok != "tree" || idx != t)
            fail("expected tree " + std::to_string(t));
        auto& tree = ens.trees[t];
        tree.resize(n_nodes);
        for (std::size_t k = 0; k < n_nodes; ++k) {
            if (!(in >> tok)) fail("truncated node list");
            auto& nd = tree[k];
            if (tok == "leaf") {
                if (!(in >> nd.weight)) fail("malformed leaf node");
            } else if (tok == "split") {
                if (!(in >> nd.feature >> nd.threshold >> nd.left >> nd.right))
                    fail("malformed split node");
                // preorder: children always come after their parent
                if (nd.feature < 0 || nd.left <= static_cast<int>(k) ||
                    nd.right <= static_cast<int>(k) || nd.left >= static_cast<int>(n_nodes) ||
                    nd.right >= static_cast<int>(n_nodes))
                    fail("split node out of bounds");
            } else {
                fail("unknown node kind '" + tok + "'");
            }
        }
    }
    return ens;
}

inline GbtEnsemble load_ensemble(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("missing ensemble artifact: cannot open '" + path + "'");
    return load_ensemble(in, path);
}

}  // namespace attnrec
