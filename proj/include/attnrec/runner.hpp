#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "attnrec/checkpoint.hpp"
#include "attnrec/config.hpp"
#include "attnrec/pipeline.hpp"

namespace attnrec {

// Orchestrates the CLI stages over an output directory. Artifacts are cached
// on disk and validated by the stage hash embedded in their filenames, so a
// stale artifact from another configuration can never be picked up.
struct Runner {
    ExperimentConfig cfg;
    std::string data_dir;
    std::string out_dir;
    int verbosity = 1;

    void log(const std::string& line) const {
        if (verbosity > 0) std::fprintf(stdout, "%s\n", line.c_str());
    }

    // --- artifact paths ---------------------------------------------------

    std::string features_csv_path(Side side) const {
        return out_dir + "/features_" + side_name(side) + "_" +
               short_hash(features_stage_hash(cfg)) + ".csv";
    }
    std::string checkpoint_path(Side side) const {
        return out_dir + "/ae_" + side_name(side) + "_" +
               short_hash(ae_stage_hash(cfg, side)) + ".ckpt";
    }
    std::string curves_csv_path(Side side) const {
        return out_dir + "/curves_ae_" + side_name(side) + "_" +
               short_hash(ae_stage_hash(cfg, side)) + ".csv";
    }
    std::string embeddings_path(Side side) const {
        return out_dir + "/embed_" + side_name(side) + "_" +
               short_hash(ae_stage_hash(cfg, side)) + ".bin";
    }
    std::string ensemble_path() const {
        return out_dir + "/gbt_" + short_hash(gbt_stage_hash(cfg)) + ".txt";
    }
    std::string grid_meta_path() const {
        return out_dir + "/grid_" + short_hash(gbt_stage_hash(cfg)) + ".json";
    }
    std::string report_text_path() const {
        return out_dir + "/report_" + short_hash(report_stage_hash(cfg)) + ".txt";
    }
    std::string metrics_json_path() const {
        return out_dir + "/metrics_" + short_hash(report_stage_hash(cfg)) + ".json";
    }
    std::string sweep_csv_path() const {
        return out_dir + "/sweep_" + short_hash(ae_stage_hash(cfg, Side::user)) + ".csv";
    }
    std::string sweep_json_path() const {
        return out_dir + "/sweep_" + short_hash(ae_stage_hash(cfg, Side::user)) + ".json";
    }

    static bool exists(const std::string& path) { return std::filesystem::exists(path); }

    static void require_artifact(const std::string& path, const std::string& what,
                                 const std::string& produce_with) {
        if (!exists(path))
            throw IoError("missing " + what + " artifact '" + path + "': run `" + produce_with +
                          "` first");
    }

    void ensure_out_dir() const { std::filesystem::create_directories(out_dir); }

    // --- data loading -------------------------------------------------------

    struct DatasetBundle {
        RatingData train, test;
        std::vector<UserRecord> users;
        std::vector<MovieRecord> movies;
        std::vector<std::string> occupations, genres;
        FeatureMatrix f_user, f_movie;
    };

    DatasetBundle load_dataset() const {
        DatasetBundle b;
        auto [train, test] = load_split(data_dir, cfg.fold);
        b.train = std::move(train);
        b.test = std::move(test);
        b.occupations = parse_occupations(data_dir + "/u.occupation");
        b.genres = parse_genres(data_dir + "/u.genre");
        b.users = parse_users(data_dir + "/u.user", b.occupations);
        b.movies = parse_items(data_dir + "/u.item");
        b.f_user = encode_users(b.users, b.occupations);
        b.f_movie = encode_items(b.movies, b.genres, cfg.features);
        return b;
    }

    // --- stages -------------------------------------------------------------

    void run_prepare() const {
        ensure_out_dir();
        DatasetBundle b = load_dataset();
        write_feature_csv(b.f_user, features_csv_path(Side::user));
        write_feature_csv(b.f_movie, features_csv_path(Side::movie));
        log("[prepare] fold " + cfg.fold + ": " + std::to_string(b.train.triplets.size()) +
            " train / " + std::to_string(b.test.triplets.size()) + " test ratings, " +
            std::to_string(b.f_user.cols()) + "+" + std::to_string(b.f_movie.cols()) +
            " feature columns");
    }

    AeConfig side_config(Side side) const {
        AeConfig ae = cfg.ae;
        ae.side = side;
        ae.seed = cfg.seed;
        return ae;
    }

    FitResult run_train_ae(Side side, const DatasetBundle& b) const {
        ensure_out_dir();
        const std::string path = checkpoint_path(side);
        if (exists(path)) {
            log("[train-ae] reusing cached checkpoint " + path);
            return load_checkpoint(path);
        }
        const AeConfig ae = side_config(side);
        const FeatureMatrix& f = side == Side::user ? b.f_user : b.f_movie;
        log(std::string("[train-ae] ") + side_name(side) + " side: d=" + std::to_string(ae.d) +
            ", epochs=" + std::to_string(ae.epochs) +
            (ae.attention_enabled ? "" : " (attention disabled)"));
        FitResult result = fit(b.train, f, ae);
        save_checkpoint(result, path);
        std::ofstream curves(curves_csv_path(side), std::ios::binary);
        curves << history_csv(result.history);
        log("[train-ae] best val M-RMSE " + report_detail::fmt(result.best_val_rmse) +
            " at epoch " + std::to_string(result.best_epoch) + ", alpha " +
            report_detail::fmt(result.final_alpha, 4));
        return result;
    }

    // Embeddings are extracted from the same masked input the model trained
    // on (validation cells zeroed), so downstream features never see held-out
    // ratings.
    EmbeddingSet run_embed(Side side, const DatasetBundle& b) const {
        ensure_out_dir();
        const std::string path = embeddings_path(side);
        if (exists(path)) {
            log("[embed] reusing cached embeddings " + path);
            return load_embeddings(path);
        }
        require_artifact(checkpoint_path(side), std::string(side_name(side)) + " checkpoint",
                         "train-ae");
        FitResult ckpt = load_checkpoint(checkpoint_path(side));
        const AeConfig ae = ckpt.cfg;
        auto [kept, held] = split_validation_indices(b.train.triplets.size(),
                                                     ae.validation_fraction, ae.seed);
        const CellList train_cells = cells_for_side(b.train.triplets, kept, side);
        const std::size_t rows = side == Side::user ? static_cast<std::size_t>(b.train.n_users)
                                                    : static_cast<std::size_t>(b.train.n_movies);
        const std::size_t cols = side == Side::user ? static_cast<std::size_t>(b.train.n_movies)
                                                    : static_cast<std::size_t>(b.train.n_users);
        const Matrix r = dense_from_cells(train_cells, rows, cols);
        const FeatureMatrix& f = side == Side::user ? b.f_user : b.f_movie;
        EmbeddingSet emb = extract_embeddings(ckpt.params, r, f, ae);
        save_embeddings(emb, path);
        log(std::string("[embed] ") + side_name(side) + " embeddings " +
            std::to_string(emb.matrix.rows) + "x" + std::to_string(emb.matrix.cols));
        return emb;
    }

    struct SupervisedSplits {
        SupervisedDataset train, validation, test;
    };

    SupervisedSplits build_supervised(const DatasetBundle& b, const Matrix& e_user,
                                      const Matrix& e_movie) const {
        auto [train_part, val_part] =
            split_validation(b.train, cfg.ae.validation_fraction, cfg.seed);
        SupervisedSplits s;
        s.train = build_dataset(train_part, e_user, e_movie, b.f_user, b.f_movie, "train");
        s.validation =
            build_dataset(val_part, e_user, e_movie, b.f_user, b.f_movie, "validation");
        s.test = build_dataset(b.test, e_user, e_movie, b.f_user, b.f_movie, "test");
        return s;
    }

    void run_train_gbt(const DatasetBundle& b) const {
        ensure_out_dir();
        if (exists(ensemble_path()) && exists(grid_meta_path())) {
            log("[train-gbt] reusing cached ensemble " + ensemble_path());
            return;
        }
        require_artifact(embeddings_path(Side::user), "user embeddings", "embed");
        require_artifact(embeddings_path(Side::movie), "movie embeddings", "embed");
        EmbeddingSet e_user = load_embeddings(embeddings_path(Side::user));
        EmbeddingSet e_movie = load_embeddings(embeddings_path(Side::movie));
        SupervisedSplits s = build_supervised(b, e_user.matrix, e_movie.matrix);
        log("[train-gbt] grid over " + std::to_string(cfg.gbt_setups.size()) + " setups on " +
            std::to_string(s.train.y.size()) + " train / " +
            std::to_string(s.validation.y.size()) + " validation rows");
        GridResult grid = hyperparameter_grid(cfg.gbt_setups, s.train, s.validation);
        for (std::size_t i = 0; i < grid.val_rmse.size(); ++i)
            log("[train-gbt] setup " + std::to_string(i + 1) + ": n_estimators=" +
                std::to_string(cfg.gbt_setups[i].n_estimators) + " -> val RMSE " +
                report_detail::fmt(grid.val_rmse[i]) +
                (i == grid.best_index ? "  [selected]" : ""));

        const GbtConfig& best_setup = cfg.gbt_setups[grid.best_index];
        GbtEnsemble final_ens;
        if (cfg.refit_with_validation) {
            Matrix x_all(s.train.x.rows + s.validation.x.rows, s.train.x.cols);
            std::vector<double> y_all;
            y_all.reserve(s.train.y.size() + s.validation.y.size());
            std::copy(s.train.x.data.begin(), s.train.x.data.end(), x_all.data.begin());
            std::copy(s.validation.x.data.begin(), s.validation.x.data.end(),
                      x_all.data.begin() + static_cast<std::ptrdiff_t>(s.train.x.size()));
            y_all.insert(y_all.end(), s.train.y.begin(), s.train.y.end());
            y_all.insert(y_all.end(), s.validation.y.begin(), s.validation.y.end());
            final_ens = fit_gbt(x_all, y_all, best_setup);
        } else {
            final_ens = fit_gbt(s.train.x, s.train.y, best_setup);
        }
        save_ensemble(final_ens, ensemble_path());

        nlohmann::json meta;
        meta["val_rmse"] = grid.val_rmse;
        meta["best_index"] = grid.best_index;
        nlohmann::json setups = nlohmann::json::array();
        for (const auto& su : cfg.gbt_setups) setups.push_back(gbt_config_to_json(su));
        meta["setups"] = setups;
        std::ofstream out(grid_meta_path(), std::ios::binary);
        out << meta.dump(2) << "\n";
        log("[train-gbt] final ensemble: " + std::to_string(final_ens.trees.size()) + " trees");
    }

    ExperimentReport run_evaluate(const DatasetBundle& b) const {
        ensure_out_dir();
        require_artifact(ensemble_path(), "ensemble", "train-gbt");
        require_artifact(grid_meta_path(), "grid metadata", "train-gbt");
        require_artifact(checkpoint_path(Side::user), "user checkpoint", "train-ae");
        require_artifact(checkpoint_path(Side::movie), "movie checkpoint", "train-ae");
        require_artifact(embeddings_path(Side::user), "user embeddings", "embed");
        require_artifact(embeddings_path(Side::movie), "movie embeddings", "embed");

        GbtEnsemble ens = load_ensemble(ensemble_path());
        EmbeddingSet e_user = load_embeddings(embeddings_path(Side::user));
        EmbeddingSet e_movie = load_embeddings(embeddings_path(Side::movie));
        SupervisedSplits s = build_supervised(b, e_user.matrix, e_movie.matrix);

        ExperimentReport report;
        report.config_snapshot = experiment_config_to_json(cfg);
        report.fold = cfg.fold;
        report.seed = cfg.seed;

        auto fill_side = [this](Side side, AeStageReport& dst) {
            FitResult ckpt = load_checkpoint(checkpoint_path(side));
            dst.best_val_rmse = ckpt.best_val_rmse;
            dst.best_epoch = ckpt.best_epoch;
            dst.alpha = ckpt.final_alpha;
            dst.alpha_in_paper_band = ckpt.final_alpha >= 0.5 && ckpt.final_alpha <= 0.7;
            dst.history = ckpt.history;
        };
        fill_side(Side::user, report.ae_user);
        fill_side(Side::movie, report.ae_movie);

        nlohmann::json grid_meta;
        {
            std::ifstream in(grid_meta_path(), std::ios::binary);
            in >> grid_meta;
        }
        report.grid_val_rmse = grid_meta.at("val_rmse").get<std::vector<double>>();
        report.grid_best_index = grid_meta.at("best_index").get<std::size_t>();
        for (const auto& su : grid_meta.at("setups")) report.grid_setups.push_back(su);

        report.test_rmse = evaluate(ens, s.test, cfg.clip_predictions);
        report.n_test = s.test.y.size();

        if (exists(sweep_json_path())) {
            std::ifstream in(sweep_json_path(), std::ios::binary);
            nlohmann::json sj;
            in >> sj;
            for (const auto& p : sj.at("points"))
                report.sweep.points.push_back({p.at("d").get<int>(),
                                               p.at("user_best_val").get<double>(),
                                               p.at("movie_best_val").get<double>()});
            report.sweep.best_d_user = sj.at("best_d_user").get<int>();
            report.sweep.best_d_movie = sj.at("best_d_movie").get<int>();
            report.has_sweep = true;
        }

        {
            std::ofstream out(report_text_path(), std::ios::binary);
            out << render_report_text(report);
        }
        {
            std::ofstream out(metrics_json_path(), std::ios::binary);
            out << report_to_json(report).dump(2) << "\n";
        }
        log("[evaluate] test RMSE " + report_detail::fmt(report.test_rmse) + " over " +
            std::to_string(report.n_test) + " ratings");
        log("[evaluate] report: " + report_text_path());
        return report;
    }

    SweepResult run_sweep(const DatasetBundle& b) const {
        ensure_out_dir();
        AeConfig base = side_config(Side::user);
        if (cfg.sweep_epochs > 0) base.epochs = cfg.sweep_epochs;
        log("[sweep] dims: " + std::to_string(cfg.sweep_dims.size()) + " points, epochs=" +
            std::to_string(base.epochs));
        SweepResult sweep = dimension_sweep(cfg.sweep_dims, base, b.train, b.f_user, b.f_movie);
        {
            std::ofstream out(sweep_csv_path(), std::ios::binary);
            out << sweep_csv(sweep);
        }
        nlohmann::json sj;
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : sweep.points) {
            log("[sweep] d=" + std::to_string(p.d) + ": user " +
                report_detail::fmt(p.user_best_val) + ", movie " +
                report_detail::fmt(p.movie_best_val));
            pts.push_back({{"d", p.d},
                           {"user_best_val", p.user_best_val},
                           {"movie_best_val", p.movie_best_val}});
        }
        sj["points"] = pts;
        sj["best_d_user"] = sweep.best_d_user;
        sj["best_d_movie"] = sweep.best_d_movie;
        {
            std::ofstream out(sweep_json_path(), std::ios::binary);
            out << sj.dump(2) << "\n";
        }
        log("[sweep] argmin: user d=" + std::to_string(sweep.best_d_user) + ", movie d=" +
            std::to_string(sweep.best_d_movie));
        return sweep;
    }

    ExperimentReport run_all() const {
        DatasetBundle b = load_dataset();
        ensure_out_dir();
        write_feature_csv(b.f_user, features_csv_path(Side::user));
        write_feature_csv(b.f_movie, features_csv_path(Side::movie));
        run_train_ae(Side::user, b);
        run_train_ae(Side::movie, b);
        run_embed(Side::user, b);
        run_embed(Side::movie, b);
        run_train_gbt(b);
        return run_evaluate(b);
    }
};

}  // namespace attnrec
