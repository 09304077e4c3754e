#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "attnrec/gbt.hpp"
#include "attnrec/rng.hpp"
#include "support/cart_oracle.hpp"

using namespace attnrec;

namespace {

// Integer-valued features/targets keep every gradient sum exact in doubles,
// so oracle comparisons can demand bitwise equality.
struct TinyTask {
    Matrix x;
    std::vector<std::vector<double>> x_rows;
    std::vector<double> y;
};

TinyTask make_integer_task(std::uint64_t seed, std::size_t max_rows = 64,
                           std::size_t max_feats = 4) {
    Rng rng(derive_seed(seed, "gbt-task"));
    TinyTask t;
    const std::size_t n = 2 + rng.below(max_rows - 1);
    const std::size_t f = 1 + rng.below(max_feats);
    t.x = Matrix(n, f);
    t.x_rows.assign(n, std::vector<double>(f));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < f; ++j) {
            const double v = static_cast<double>(rng.below(10));
            t.x(i, j) = v;
            t.x_rows[i][j] = v;
        }
    for (std::size_t i = 0; i < n; ++i)
        t.y.push_back(static_cast<double>(1 + rng.below(5)));
    return t;
}

}  // namespace

TEST_CASE("soft_threshold and leaf_weight closed forms") {
    REQUIRE(leaf_weight(2.0, 4.0, 1.0, 0.0) == Catch::Approx(-0.4));
    REQUIRE(leaf_weight(2.0, 4.0, 1.0, 3.0) == 0.0);
    REQUIRE(leaf_weight(-5.0, 4.0, 1.0, 3.0) == Catch::Approx(0.4));
}

TEST_CASE("leaf_weight matches the numeric minimizer of the one-leaf objective") {
    // the spec's two L1 cases plus randomized trials
    REQUIRE(std::fabs(leaf_weight(2, 4, 1, 3) -
                      testsupport::minimize_leaf_objective(2, 4, 1, 3)) < 1e-6);
    REQUIRE(std::fabs(leaf_weight(-5, 4, 1, 3) -
                      testsupport::minimize_leaf_objective(-5, 4, 1, 3)) < 1e-6);
    Rng rng(123);
    for (int trial = 0; trial < 60; ++trial) {
        const double g = rng.uniform(-10.0, 10.0);
        const double h = rng.uniform(0.5, 20.0);
        const double lambda = rng.uniform(0.0, 5.0);
        const double alpha = rng.uniform(0.0, 5.0);
        const double closed = leaf_weight(g, h, lambda, alpha);
        const double numeric = testsupport::minimize_leaf_objective(g, h, lambda, alpha);
        REQUIRE(std::fabs(closed - numeric) < 1e-6);
    }
}

TEST_CASE("best_split: the spec's enumerated example") {
    // x = [1,2,3,4], y = [1,1,5,5]; depth-1 stump with lambda=1, alpha=0.
    Matrix x(4, 1);
    for (std::size_t i = 0; i < 4; ++i) x(i, 0) = static_cast<double>(i + 1);
    const std::vector<double> targets = {1, 1, 5, 5};
    const double base = 3.0;  // mean(y)
    std::vector<double> g(4), h(4, 1.0);
    for (std::size_t i = 0; i < 4; ++i) g[i] = base - targets[i];
    GbtConfig cfg;
    cfg.reg_lambda = 1.0;
    cfg.reg_alpha = 0.0;
    auto split = best_split(x, {0, 1, 2, 3}, {0}, g, h, cfg);
    REQUIRE(split.has_value());
    REQUIRE(split->feature == 0);
    REQUIRE(split->threshold == 2.5);

    // exhaustive check over the three candidate thresholds
    double best_gain = 0.0;
    double best_thr = 0.0;
    for (double thr : {1.5, 2.5, 3.5}) {
        double gl = 0, hl = 0, gr = 0, hr = 0;
        for (std::size_t i = 0; i < 4; ++i) {
            if (x(i, 0) < thr) {
                gl += g[i];
                hl += h[i];
            } else {
                gr += g[i];
                hr += h[i];
            }
        }
        auto score = [&](double G, double H) { return G * G / (H + cfg.reg_lambda); };
        const double gain =
            0.5 * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr));
        if (gain > best_gain) {
            best_gain = gain;
            best_thr = thr;
        }
    }
    REQUIRE(best_thr == 2.5);
    REQUIRE(split->gain == Catch::Approx(best_gain));
}

TEST_CASE("best_split: constant feature and zero gradients give no split") {
    Matrix x(4, 1, 2.0);
    std::vector<double> g = {1, -1, 2, -2}, h(4, 1.0);
    GbtConfig cfg;
    REQUIRE_FALSE(best_split(x, {0, 1, 2, 3}, {0}, g, h, cfg).has_value());

    Matrix x2(4, 1);
    for (std::size_t i = 0; i < 4; ++i) x2(i, 0) = static_cast<double>(i);
    std::vector<double> zeros(4, 0.0);
    cfg.reg_alpha = 0.0;
    REQUIRE_FALSE(best_split(x2, {0, 1, 2, 3}, {0}, zeros, h, cfg).has_value());
}

TEST_CASE("fit: zero rounds predicts the target mean everywhere") {
    TinyTask t = make_integer_task(1);
    GbtConfig cfg;
    cfg.n_estimators = 0;
    GbtEnsemble ens = fit_gbt(t.x, t.y, cfg);
    double mean = 0.0;
    for (double v : t.y) mean += v;
    mean /= static_cast<double>(t.y.size());
    auto preds = predict(ens, t.x);
    for (double p : preds) REQUIRE(p == mean);
}

TEST_CASE("fit: empty data is a domain error") {
    Matrix x(0, 3);
    REQUIRE_THROWS_AS(fit_gbt(x, {}, GbtConfig{}), DomainError);
}

TEST_CASE("single-tree fit equals the exhaustive-split oracle exactly") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        TinyTask t = make_integer_task(seed);
        GbtConfig cfg;
        cfg.n_estimators = 1;
        cfg.max_depth = 9;
        cfg.learning_rate = 1.0;
        cfg.subsample = 1.0;
        cfg.colsample_bytree = 1.0;
        cfg.reg_lambda = 0.0;
        cfg.reg_alpha = 0.0;
        cfg.base_score_mean = false;
        cfg.base_score_fixed = 3.0;  // integer base keeps all sums exact
        GbtEnsemble ens = fit_gbt(t.x, t.y, cfg);

        std::vector<double> g(t.y.size()), h(t.y.size(), 1.0);
        for (std::size_t i = 0; i < t.y.size(); ++i) g[i] = cfg.base_score_fixed - t.y[i];
        std::vector<std::size_t> rows(t.y.size());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        testsupport::OracleParams op;
        op.max_depth = 9;
        auto oracle = testsupport::build_oracle_tree(t.x_rows, g, h, rows, 0, op);

        auto preds = predict(ens, t.x);
        for (std::size_t i = 0; i < t.y.size(); ++i) {
            const double expected =
                cfg.base_score_fixed + testsupport::oracle_predict(*oracle, t.x_rows[i]);
            REQUIRE(preds[i] == expected);  // bitwise
        }
    }
}

TEST_CASE("training RMSE is non-increasing without subsampling") {
    Rng rng(77);
    const std::size_t n = 200, f = 5;
    Matrix x(n, f);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < f; ++j) x(i, j) = rng.uniform(-3.0, 3.0);
        y[i] = std::sin(x(i, 0)) + 0.5 * x(i, 1) + rng.uniform(-0.2, 0.2);
    }
    GbtConfig cfg;
    cfg.n_estimators = 40;
    cfg.max_depth = 3;
    cfg.learning_rate = 0.3;
    cfg.subsample = 1.0;
    cfg.colsample_bytree = 1.0;
    cfg.reg_lambda = 1.0;
    cfg.reg_alpha = 0.0;
    GbtEnsemble full = fit_gbt(x, y, cfg);

    auto rmse_at = [&](std::size_t rounds) {
        GbtEnsemble head = full;
        head.trees.resize(rounds);
        auto p = predict(head, x);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += (p[i] - y[i]) * (p[i] - y[i]);
        return std::sqrt(s / static_cast<double>(n));
    };
    double prev = rmse_at(0);
    for (std::size_t rounds = 1; rounds <= full.trees.size(); ++rounds) {
        const double cur = rmse_at(rounds);
        REQUIRE(cur <= prev + 1e-12);
        prev = cur;
    }
}

TEST_CASE("large reg_alpha zeroes every leaf") {
    TinyTask t = make_integer_task(5);
    GbtConfig cfg;
    cfg.n_estimators = 10;
    cfg.max_depth = 4;
    cfg.reg_alpha = 1e6;  // exceeds any |G| on this data
    cfg.reg_lambda = 0.0;
    GbtEnsemble ens = fit_gbt(t.x, t.y, cfg);
    auto preds = predict(ens, t.x);
    for (double p : preds) REQUIRE(p == ens.base_score);
}

TEST_CASE("fit is deterministic, including under row/column subsampling") {
    Rng rng(9);
    const std::size_t n = 120, f = 6;
    Matrix x(n, f);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < f; ++j) x(i, j) = rng.uniform(0.0, 1.0);
        y[i] = x(i, 2) * 4.0 + rng.uniform(-0.5, 0.5);
    }
    GbtConfig cfg;
    cfg.n_estimators = 12;
    cfg.max_depth = 4;
    cfg.subsample = 0.7;
    cfg.colsample_bytree = 0.5;
    cfg.seed = 4242;
    GbtEnsemble a = fit_gbt(x, y, cfg);
    GbtEnsemble b = fit_gbt(x, y, cfg);
    REQUIRE(a.trees.size() == b.trees.size());
    auto pa = predict(a, x), pb = predict(b, x);
    REQUIRE(pa == pb);  // bitwise

    cfg.seed = 4243;
    GbtEnsemble c = fit_gbt(x, y, cfg);
    REQUIRE(predict(c, x) != pa);  // a different stream samples differently
}

TEST_CASE("ensemble text serialization round-trips bit-exactly") {
    TinyTask t = make_integer_task(8, 40, 3);
    GbtConfig cfg;
    cfg.n_estimators = 7;
    cfg.max_depth = 3;
    cfg.learning_rate = 0.1;
    cfg.reg_lambda = 1.0;
    cfg.reg_alpha = 0.5;
    GbtEnsemble ens = fit_gbt(t.x, t.y, cfg);

    std::stringstream buf;
    save_ensemble(ens, buf);
    GbtEnsemble loaded = load_ensemble(buf, "<buffer>");
    REQUIRE(loaded.trees.size() == ens.trees.size());
    REQUIRE(loaded.base_score == ens.base_score);
    auto pa = predict(ens, t.x), pb = predict(loaded, t.x);
    REQUIRE(pa == pb);  // bitwise

    std::stringstream bad("gbt 2\n");
    REQUIRE_THROWS_AS(load_ensemble(bad, "<buffer>"), ParseError);
}

TEST_CASE("predict validates the feature count and handles empty ensembles") {
    GbtEnsemble ens;
    ens.base_score = 2.5;
    ens.n_features = 3;
    Matrix x(2, 3);
    auto p = predict(ens, x);
    REQUIRE(p == std::vector<double>{2.5, 2.5});

    Matrix wrong(2, 4);
    REQUIRE_THROWS_AS(predict(ens, wrong), DimensionError);

    // single leaf-only tree adds lr * weight
    ens.learning_rate = 0.5;
    Tree t(1);
    t[0].weight = 2.0;
    ens.trees.push_back(t);
    auto p2 = predict(ens, x);
    REQUIRE(p2[0] == Catch::Approx(2.5 + 0.5 * 2.0));
}

TEST_CASE("config validation rejects bad ranges") {
    GbtConfig cfg;
    cfg.subsample = 0.0;
    REQUIRE_THROWS_AS(cfg.validate(), DomainError);
    cfg = GbtConfig{};
    cfg.colsample_bytree = 1.5;
    REQUIRE_THROWS_AS(cfg.validate(), DomainError);
    cfg = GbtConfig{};
    cfg.reg_lambda = -1;
    REQUIRE_THROWS_AS(cfg.validate(), DomainError);
}
