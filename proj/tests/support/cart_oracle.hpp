#pragma once

// Brute-force exhaustive-split regression-tree oracle. Deliberately naive
// (O(n^2) candidate scans, recursive, no presorting, no shared code with the
// production grower) so it can serve as the independent ground truth for the
// boosted-tree equivalence checks.

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

namespace testsupport {

struct OracleParams {
    int max_depth = 9;
    double reg_lambda = 0.0;
    double reg_alpha = 0.0;
    double min_child_weight = 1.0;
};

struct OracleNode {
    bool leaf = true;
    int feature = -1;
    double threshold = 0.0;
    double weight = 0.0;
    std::unique_ptr<OracleNode> left, right;
};

inline double oracle_soft(double g, double a) {
    if (g > a) return g - a;
    if (g < -a) return g + a;
    return 0.0;
}

inline double oracle_score(double g, double h, const OracleParams& p) {
    const double s = oracle_soft(g, p.reg_alpha);
    return s * s / (h + p.reg_lambda);
}

// rows stay in ascending index order so every gradient sum matches the
// production accumulation order bit for bit.
inline std::unique_ptr<OracleNode> build_oracle_tree(
    const std::vector<std::vector<double>>& x, const std::vector<double>& g,
    const std::vector<double>& h, std::vector<std::size_t> rows, int depth,
    const OracleParams& p) {
    auto node = std::make_unique<OracleNode>();
    double g_total = 0.0, h_total = 0.0;
    for (std::size_t r : rows) {
        g_total += g[r];
        h_total += h[r];
    }

    int best_feature = -1;
    double best_threshold = 0.0, best_gain = 0.0;
    if (depth < p.max_depth) {
        const double parent = oracle_score(g_total, h_total, p);
        const std::size_t n_features = x[0].size();
        for (std::size_t f = 0; f < n_features; ++f) {
            std::vector<double> values;
            values.reserve(rows.size());
            for (std::size_t r : rows) values.push_back(x[r][f]);
            std::sort(values.begin(), values.end());
            values.erase(std::unique(values.begin(), values.end()), values.end());
            for (std::size_t k = 0; k + 1 < values.size(); ++k) {
                const double thr = 0.5 * (values[k] + values[k + 1]);
                double gl = 0.0, hl = 0.0;
                for (std::size_t r : rows)
                    if (x[r][f] < thr) {
                        gl += g[r];
                        hl += h[r];
                    }
                const double gr = g_total - gl, hr = h_total - hl;
                if (hl < p.min_child_weight || hr < p.min_child_weight) continue;
                const double gain =
                    0.5 * (oracle_score(gl, hl, p) + oracle_score(gr, hr, p) - parent);
                if (gain > 0.0 && gain > best_gain) {
                    best_gain = gain;
                    best_feature = static_cast<int>(f);
                    best_threshold = thr;
                }
            }
        }
    }

    if (best_feature < 0) {
        node->weight = -oracle_soft(g_total, p.reg_alpha) / (h_total + p.reg_lambda);
        return node;
    }
    node->leaf = false;
    node->feature = best_feature;
    node->threshold = best_threshold;
    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : rows) {
        if (x[r][static_cast<std::size_t>(best_feature)] < best_threshold)
            left_rows.push_back(r);
        else
            right_rows.push_back(r);
    }
    node->left = build_oracle_tree(x, g, h, std::move(left_rows), depth + 1, p);
    node->right = build_oracle_tree(x, g, h, std::move(right_rows), depth + 1, p);
    return node;
}

inline double oracle_predict(const OracleNode& node, const std::vector<double>& row) {
    if (node.leaf) return node.weight;
    return row[static_cast<std::size_t>(node.feature)] < node.threshold
               ? oracle_predict(*node.left, row)
               : oracle_predict(*node.right, row);
}

// Convex one-leaf objective G w + 0.5 (H + lambda) w^2 + alpha |w|, minimized
// numerically by ternary search; the independent check for the closed-form
// soft-thresholded leaf weight.
inline double minimize_leaf_objective(double g, double h, double reg_lambda,
                                      double reg_alpha) {
    auto objective = [&](double w) {
        return g * w + 0.5 * (h + reg_lambda) * w * w + reg_alpha * std::fabs(w);
    };
    double lo = -(std::fabs(g) + reg_alpha) / (h + reg_lambda) - 1.0;
    double hi = -lo;
    for (int it = 0; it < 300; ++it) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        if (objective(m1) <= objective(m2))
            hi = m2;
        else
            lo = m1;
    }
    return 0.5 * (lo + hi);
}

// Same objective minimized by a literal staged grid search (4001-point grid
// refined three times around the incumbent), resolution well below 1e-6.
inline double grid_minimize_leaf_objective(double g, double h, double reg_lambda,
                                           double reg_alpha) {
    auto objective = [&](double w) {
        return g * w + 0.5 * (h + reg_lambda) * w * w + reg_alpha * std::fabs(w);
    };
    double lo = -(std::fabs(g) + reg_alpha) / (h + reg_lambda) - 1.0;
    double hi = -lo;
    double best_w = 0.0;
    for (int stage = 0; stage < 3; ++stage) {
        const double step = (hi - lo) / 4000.0;
        double best_val = objective(lo);
        best_w = lo;
        for (int k = 1; k <= 4000; ++k) {
            const double w = lo + step * k;
            const double v = objective(w);
            if (v < best_val) {
                best_val = v;
                best_w = w;
            }
        }
        lo = best_w - step;
        hi = best_w + step;
    }
    return best_w;
}

}  // namespace testsupport
