#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "attnrec/autoencoder.hpp"
#include "attnrec/config.hpp"
#include "attnrec/dataio.hpp"
#include "attnrec/features.hpp"
#include "attnrec/gbt.hpp"
#include "attnrec/splitting.hpp"

namespace attnrec {

// Supervised row = concat[E_u(i), E_m(j), F_u(i), F_m(j)], target = rating.
struct SupervisedDataset {
    Matrix x;
    std::vector<double> y;
    std::vector<std::pair<int, int>> provenance;  // (user_id, movie_id)
    std::string role;                             // train | validation | test
};

inline SupervisedDataset build_dataset(const std::vector<RatingTriplet>& triplets,
                                       const Matrix& e_user, const Matrix& e_movie,
                                       const FeatureMatrix& f_user,
                                       const FeatureMatrix& f_movie,
                                       std::string role = "train") {
    const std::size_t d_eu = e_user.cols, d_em = e_movie.cols;
    const std::size_t d_fu = f_user.cols(), d_fm = f_movie.cols();
    SupervisedDataset ds;
    ds.role = std::move(role);
    ds.x = Matrix(triplets.size(), d_eu + d_em + d_fu + d_fm);
    ds.y.reserve(triplets.size());
    ds.provenance.reserve(triplets.size());
    for (std::size_t k = 0; k < triplets.size(); ++k) {
        const auto& t = triplets[k];
        if (t.user_id < 1 || static_cast<std::size_t>(t.user_id) > e_user.rows ||
            static_cast<std::size_t>(t.user_id) > f_user.rows())
            throw DomainError("build_dataset: user id out of range: " +
                              std::to_string(t.user_id));
        if (t.movie_id < 1 || static_cast<std::size_t>(t.movie_id) > e_movie.rows ||
            static_cast<std::size_t>(t.movie_id) > f_movie.rows())
            throw DomainError("build_dataset: movie id out of range: " +
                              std::to_string(t.movie_id));
        const auto u = static_cast<std::size_t>(t.user_id - 1);
        const auto m = static_cast<std::size_t>(t.movie_id - 1);
        double* row = ds.x.row_ptr(k);
        std::copy_n(e_user.row_ptr(u), d_eu, row);
        std::copy_n(e_movie.row_ptr(m), d_em, row + d_eu);
        std::copy_n(f_user.values.row_ptr(u), d_fu, row + d_eu + d_em);
        std::copy_n(f_movie.values.row_ptr(m), d_fm, row + d_eu + d_em + d_fu);
        ds.y.push_back(static_cast<double>(t.rating));
        ds.provenance.emplace_back(t.user_id, t.movie_id);
    }
    return ds;
}

inline SupervisedDataset build_dataset(const RatingData& ratings, const Matrix& e_user,
                                       const Matrix& e_movie, const FeatureMatrix& f_user,
                                       const FeatureMatrix& f_movie, std::string role = "train") {
    return build_dataset(ratings.triplets, e_user, e_movie, f_user, f_movie, std::move(role));
}

// Seeded uniform partition of the training triplets; the identical partition
// backs the autoencoder fits (cfg seed) and the GBT tuning split.
inline std::pair<RatingData, RatingData> split_validation(const RatingData& train,
                                                          double fraction,
                                                          std::uint64_t seed) {
    auto [kept, held] = split_validation_indices(train.triplets.size(), fraction, seed);
    RatingData tr, val;
    tr.n_users = val.n_users = train.n_users;
    tr.n_movies = val.n_movies = train.n_movies;
    tr.triplets.reserve(kept.size());
    val.triplets.reserve(held.size());
    for (std::size_t i : kept) tr.triplets.push_back(train.triplets[i]);
    for (std::size_t i : held) val.triplets.push_back(train.triplets[i]);
    return {std::move(tr), std::move(val)};
}

// RMSE with predictions clipped to the rating scale before scoring.
inline double evaluate_rmse(const std::vector<double>& predictions,
                            const std::vector<double>& targets, bool clip = true) {
    if (targets.empty()) throw DomainError("evaluate: empty test set");
    if (predictions.size() != targets.size())
        throw DimensionError("evaluate: prediction/target count mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        double p = predictions[i];
        if (clip) p = std::min(5.0, std::max(1.0, p));
        const double d = p - targets[i];
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(targets.size()));
}

inline double evaluate(const GbtEnsemble& ens, const SupervisedDataset& test, bool clip = true) {
    return evaluate_rmse(predict(ens, test.x), test.y, clip);
}

// --- dimension sweep ------------------------------------------------------

struct SweepPoint {
    int d = 0;
    double user_best_val = 0.0;
    double movie_best_val = 0.0;
};

struct SweepResult {
    std::vector<SweepPoint> points;
    int best_d_user = 0;
    int best_d_movie = 0;
};

// One autoencoder per side per dimension; reports the best validation M-RMSE
// reached by each and the argmin dimension per side.
inline SweepResult dimension_sweep(const std::vector<int>& dims, const AeConfig& base,
                                   const RatingData& train, const FeatureMatrix& f_user,
                                   const FeatureMatrix& f_movie) {
    if (dims.empty()) throw DomainError("dimension_sweep: dims must be nonempty");
    SweepResult result;
    double best_user = std::numeric_limits<double>::infinity();
    double best_movie = std::numeric_limits<double>::infinity();
    for (int d : dims) {
        AeConfig cfg = base;
        cfg.d = d;
        cfg.side = Side::user;
        FitResult user_fit = fit(train, f_user, cfg);
        cfg.side = Side::movie;
        FitResult movie_fit = fit(train, f_movie, cfg);
        result.points.push_back({d, user_fit.best_val_rmse, movie_fit.best_val_rmse});
        if (user_fit.best_val_rmse < best_user) {
            best_user = user_fit.best_val_rmse;
            result.best_d_user = d;
        }
        if (movie_fit.best_val_rmse < best_movie) {
            best_movie = movie_fit.best_val_rmse;
            result.best_d_movie = d;
        }
    }
    return result;
}

// --- hyperparameter grid ----------------------------------------------------

struct GridResult {
    std::vector<double> val_rmse;  // one per setup, in order
    std::size_t best_index = 0;    // argmin, ties -> first
};

inline GridResult hyperparameter_grid(const std::vector<GbtConfig>& setups,
                                      const SupervisedDataset& train,
                                      const SupervisedDataset& validation) {
    if (setups.empty()) throw DomainError("hyperparameter_grid: need at least one setup");
    GridResult result;
    result.val_rmse.reserve(setups.size());
    for (const auto& setup : setups) {
        GbtEnsemble ens = fit_gbt(train.x, train.y, setup);
        result.val_rmse.push_back(evaluate_rmse(predict(ens, validation.x), validation.y,
                                                /*clip=*/false));
    }
    for (std::size_t i = 1; i < result.val_rmse.size(); ++i)
        if (result.val_rmse[i] < result.val_rmse[result.best_index]) result.best_index = i;
    return result;
}

// --- experiment report ------------------------------------------------------

struct BaselineEntry {
    std::string name;
    double rmse;
};

// Published u1 test RMSEs this pipeline is compared against in reports.
inline const std::vector<BaselineEntry>& literature_baselines() {
    static const std::vector<BaselineEntry> table = {
        {"WMLFF", 0.928},    {"GLocal-K", 0.888},      {"MG-GAT", 0.890},
        {"GRAEM", 0.917},    {"GraphRec", 0.904},      {"FactorizedEAE", 0.920},
    };
    return table;
}

struct AeStageReport {
    double best_val_rmse = 0.0;
    int best_epoch = 0;
    double alpha = 0.0;
    bool alpha_in_paper_band = false;  // [0.5, 0.7], informational
    std::vector<EpochRecord> history;
};

struct ExperimentReport {
    nlohmann::json config_snapshot;
    std::string fold;
    std::uint64_t seed = 0;
    AeStageReport ae_user, ae_movie;
    std::vector<double> grid_val_rmse;
    std::size_t grid_best_index = 0;
    std::vector<nlohmann::json> grid_setups;
    double test_rmse = 0.0;
    std::size_t n_test = 0;
    SweepResult sweep;     // optional; empty points when the sweep stage did not run
    bool has_sweep = false;
};

namespace report_detail {

inline std::string fmt(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace report_detail

inline nlohmann::json report_to_json(const ExperimentReport& r) {
    nlohmann::json j;
    j["fold"] = r.fold;
    j["seed"] = r.seed;
    j["config"] = r.config_snapshot;
    auto side_json = [](const AeStageReport& s) {
        return nlohmann::json{{"best_val_rmse", s.best_val_rmse},
                              {"best_epoch", s.best_epoch},
                              {"alpha", s.alpha},
                              {"alpha_in_paper_band", s.alpha_in_paper_band}};
    };
    j["ae"] = {{"user", side_json(r.ae_user)}, {"movie", side_json(r.ae_movie)}};
    j["grid"] = {{"val_rmse", r.grid_val_rmse},
                 {"best_index", r.grid_best_index},
                 {"setups", r.grid_setups}};
    j["test_rmse"] = r.test_rmse;
    j["n_test"] = r.n_test;
    nlohmann::json baselines = nlohmann::json::array();
    for (const auto& b : literature_baselines())
        baselines.push_back({{"name", b.name},
                             {"rmse", b.rmse},
                             {"gap", r.test_rmse - b.rmse}});
    j["baselines"] = baselines;
    if (r.has_sweep) {
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : r.sweep.points)
            pts.push_back({{"d", p.d},
                           {"user_best_val", p.user_best_val},
                           {"movie_best_val", p.movie_best_val}});
        j["sweep"] = {{"points", pts},
                      {"best_d_user", r.sweep.best_d_user},
                      {"best_d_movie", r.sweep.best_d_movie}};
    }
    return j;
}

inline std::string render_report_text(const ExperimentReport& r) {
    using report_detail::fmt;
    std::string out;
    out += "================ experiment report ================\n";
    out += "fold: " + r.fold + "    seed: " + std::to_string(r.seed) + "\n";
    out += "\n-- autoencoder reconstruction (validation M-RMSE) --\n";
    auto side_block = [&out](const char* side, const AeStageReport& s) {
        out += std::string(side) + ": best_val_rmse=" + report_detail::fmt(s.best_val_rmse) +
               " at epoch " + std::to_string(s.best_epoch) +
               ", alpha=" + report_detail::fmt(s.alpha, 4) +
               (s.alpha_in_paper_band ? " (inside [0.5, 0.7])" : " (outside [0.5, 0.7])") + "\n";
    };
    side_block("user ", r.ae_user);
    side_block("movie", r.ae_movie);
    if (r.has_sweep) {
        out += "\n-- embedding dimension sweep (best validation M-RMSE) --\n";
        out += "dim     user      movie\n";
        for (const auto& p : r.sweep.points) {
            char line[96];
            std::snprintf(line, sizeof line, "%-6d  %s  %s\n", p.d,
                          fmt(p.user_best_val).c_str(), fmt(p.movie_best_val).c_str());
            out += line;
        }
        out += "argmin: user d=" + std::to_string(r.sweep.best_d_user) +
               ", movie d=" + std::to_string(r.sweep.best_d_movie) + "\n";
    }
    out += "\n-- boosted-tree grid (validation RMSE) --\n";
    for (std::size_t i = 0; i < r.grid_val_rmse.size(); ++i) {
        const auto& s = r.grid_setups[i];
        out += "setup " + std::to_string(i + 1) + ": n_estimators=" +
               std::to_string(s.value("n_estimators", 0)) + " -> " + fmt(r.grid_val_rmse[i]) +
               (i == r.grid_best_index ? "  [selected]" : "") + "\n";
    }
    out += "\n-- final evaluation --\n";
    out += "test RMSE (" + std::to_string(r.n_test) + " ratings, clipped to [1,5]): " +
           fmt(r.test_rmse) + "\n";
    out += "\n-- literature comparison (u1 test RMSE) --\n";
    out += "method            rmse    gap (this run - method)\n";
    for (const auto& b : literature_baselines()) {
        char line[96];
        std::snprintf(line, sizeof line, "%-16s  %.3f   %+.3f\n", b.name.c_str(), b.rmse,
                      r.test_rmse - b.rmse);
        out += line;
    }
    {
        char line[96];
        std::snprintf(line, sizeof line, "%-16s  %.3f\n", "this run", r.test_rmse);
        out += line;
    }
    out += "===================================================\n";
    return out;
}

// Plot-ready CSV: per-epoch losses of one autoencoder fit.
inline std::string history_csv(const std::vector<EpochRecord>& history) {
    std::string out = "epoch,train_rmse,val_rmse,alpha\n";
    char line[128];
    for (const auto& rec : history) {
        std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g\n", rec.epoch, rec.train_rmse,
                      rec.val_rmse, rec.alpha);
        out += line;
    }
    return out;
}

// Plot-ready CSV: best validation loss vs embedding dimension, both sides.
inline std::string sweep_csv(const SweepResult& sweep) {
    std::string out = "d,user_best_val,movie_best_val\n";
    char line[128];
    for (const auto& p : sweep.points) {
        std::snprintf(line, sizeof line, "%d,%.17g,%.17g\n", p.d, p.user_best_val,
                      p.movie_best_val);
        out += line;
    }
    return out;
}

}  // namespace attnrec
