#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "attnrec/autoencoder.hpp"
#include "attnrec/checkpoint.hpp"
#include "attnrec/features.hpp"
#include "attnrec/gbt.hpp"
#include "attnrec/rng.hpp"

namespace attnrec {

// Every knob of a full experiment. One top-level seed pins the validation
// split, both autoencoder trainings and the GBT sampling streams.
struct ExperimentConfig {
    std::string fold = "u1";
    std::uint64_t seed = 42;
    FeatureOptions features;
    AeConfig ae;  // side is assigned per run; seed mirrors the top-level seed
    std::vector<int> sweep_dims = {16, 32, 64, 128, 256};
    int sweep_epochs = 0;  // 0 = reuse ae.epochs
    std::vector<GbtConfig> gbt_setups;
    bool refit_with_validation = false;
    bool clip_predictions = true;

    ExperimentConfig() { gbt_setups = default_grid(); }

    // The published four-setup grid: only the round count varies.
    static std::vector<GbtConfig> default_grid() {
        std::vector<GbtConfig> setups;
        for (int rounds : {1300, 1500, 1700, 1900}) {
            GbtConfig c;
            c.n_estimators = rounds;
            c.max_depth = 9;
            c.learning_rate = 0.01;
            c.subsample = 1.0;
            c.colsample_bytree = 0.2;
            c.reg_lambda = 1.0;
            c.reg_alpha = 3.0;
            setups.push_back(c);
        }
        return setups;
    }

    void propagate_seed() {
        ae.seed = seed;
        for (auto& s : gbt_setups) s.seed = seed;
    }

    void validate() const {
        if (fold.size() != 2 || fold[0] != 'u' || fold[1] < '1' || fold[1] > '5')
            throw DomainError("config: fold must be one of u1..u5, got '" + fold + "'");
        ae.validate();
        if (sweep_dims.empty()) throw DomainError("config: sweep dims must be nonempty");
        if (gbt_setups.empty()) throw DomainError("config: need at least one GBT setup");
        for (const auto& s : gbt_setups) s.validate();
    }
};

inline nlohmann::json gbt_config_to_json(const GbtConfig& c) {
    nlohmann::json j{
        {"n_estimators", c.n_estimators},
        {"max_depth", c.max_depth},
        {"learning_rate", c.learning_rate},
        {"subsample", c.subsample},
        {"colsample_bytree", c.colsample_bytree},
        {"reg_lambda", c.reg_lambda},
        {"reg_alpha", c.reg_alpha},
        {"min_child_weight", c.min_child_weight},
    };
    if (c.base_score_mean)
        j["base_score"] = "mean";
    else
        j["base_score"] = c.base_score_fixed;
    return j;
}

inline GbtConfig gbt_config_from_json(const nlohmann::json& j) {
    GbtConfig c;
    c.n_estimators = j.value("n_estimators", c.n_estimators);
    c.max_depth = j.value("max_depth", c.max_depth);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.subsample = j.value("subsample", c.subsample);
    c.colsample_bytree = j.value("colsample_bytree", c.colsample_bytree);
    c.reg_lambda = j.value("reg_lambda", c.reg_lambda);
    c.reg_alpha = j.value("reg_alpha", c.reg_alpha);
    c.min_child_weight = j.value("min_child_weight", c.min_child_weight);
    if (j.contains("base_score")) {
        if (j["base_score"].is_string()) {
            if (j["base_score"].get<std::string>() != "mean")
                throw DomainError("config: base_score must be \"mean\" or a number");
            c.base_score_mean = true;
        } else {
            c.base_score_mean = false;
            c.base_score_fixed = j["base_score"].get<double>();
        }
    }
    return c;
}

inline nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["fold"] = cfg.fold;
    j["seed"] = cfg.seed;
    j["features"] = {{"year_unknown_column", cfg.features.year_unknown_column}};
    j["ae"] = ae_config_to_json(cfg.ae);
    j["ae"].erase("side");  // per-run detail, not configuration
    j["ae"].erase("seed");  // mirrors the top-level seed
    j["sweep"] = {{"dims", cfg.sweep_dims}, {"epochs", cfg.sweep_epochs}};
    nlohmann::json setups = nlohmann::json::array();
    for (const auto& s : cfg.gbt_setups) setups.push_back(gbt_config_to_json(s));
    j["gbt"] = {{"setups", setups}, {"refit_with_validation", cfg.refit_with_validation}};
    j["evaluate"] = {{"clip_predictions", cfg.clip_predictions}};
    return j;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.fold = j.value("fold", cfg.fold);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("features"))
        cfg.features.year_unknown_column =
            j["features"].value("year_unknown_column", cfg.features.year_unknown_column);
    if (j.contains("ae")) {
        const auto& a = j["ae"];
        cfg.ae.d = a.value("d", cfg.ae.d);
        cfg.ae.leaky_slope = a.value("leaky_slope", cfg.ae.leaky_slope);
        cfg.ae.epochs = a.value("epochs", cfg.ae.epochs);
        cfg.ae.attention_enabled = a.value("attention_enabled", cfg.ae.attention_enabled);
        cfg.ae.alpha_init = a.value("alpha_init", cfg.ae.alpha_init);
        cfg.ae.adam.learning_rate = a.value("learning_rate", cfg.ae.adam.learning_rate);
        cfg.ae.adam.beta1 = a.value("beta1", cfg.ae.adam.beta1);
        cfg.ae.adam.beta2 = a.value("beta2", cfg.ae.adam.beta2);
        cfg.ae.adam.eps = a.value("adam_eps", cfg.ae.adam.eps);
        cfg.ae.validation_fraction = a.value("validation_fraction", cfg.ae.validation_fraction);
        cfg.ae.layernorm_affine = a.value("layernorm_affine", cfg.ae.layernorm_affine);
        cfg.ae.layernorm_eps = a.value("layernorm_eps", cfg.ae.layernorm_eps);
        if (a.contains("embed_source")) {
            const auto s = a["embed_source"].get<std::string>();
            if (s == "post_attention" || s == "post")
                cfg.ae.embed_source = EmbedSource::post_attention;
            else if (s == "pre_attention" || s == "pre")
                cfg.ae.embed_source = EmbedSource::pre_attention;
            else
                throw DomainError("config: embed_source must be pre_attention or post_attention");
        }
    }
    if (j.contains("sweep")) {
        if (j["sweep"].contains("dims"))
            cfg.sweep_dims = j["sweep"]["dims"].get<std::vector<int>>();
        cfg.sweep_epochs = j["sweep"].value("epochs", cfg.sweep_epochs);
    }
    if (j.contains("gbt")) {
        if (j["gbt"].contains("setups")) {
            cfg.gbt_setups.clear();
            for (const auto& s : j["gbt"]["setups"]) cfg.gbt_setups.push_back(gbt_config_from_json(s));
        }
        cfg.refit_with_validation =
            j["gbt"].value("refit_with_validation", cfg.refit_with_validation);
    }
    if (j.contains("evaluate"))
        cfg.clip_predictions = j["evaluate"].value("clip_predictions", cfg.clip_predictions);
    cfg.propagate_seed();
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("unreadable config: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": invalid JSON config: " + e.what());
    }
    return experiment_config_from_json(j);
}

// --- stage hashes --------------------------------------------------------
// Artifact filenames embed these, so artifacts from different configurations
// can never be mixed silently.

inline std::string short_hash(std::uint64_t h) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", static_cast<std::uint32_t>(h ^ (h >> 32)));
    return buf;
}

inline std::uint64_t features_stage_hash(const ExperimentConfig& cfg) {
    return fnv1a64("features|" + cfg.fold + "|" +
                   std::to_string(cfg.features.year_unknown_column));
}

inline std::uint64_t ae_stage_hash(const ExperimentConfig& cfg, Side side) {
    AeConfig ae = cfg.ae;
    ae.side = side;
    ae.seed = cfg.seed;
    std::uint64_t h = features_stage_hash(cfg);
    return fnv1a64("ae|" + cfg.fold + "|" + std::to_string(cfg.seed) + "|" +
                   ae_config_hash(ae) + "|" + std::to_string(h));
}

inline std::uint64_t gbt_stage_hash(const ExperimentConfig& cfg) {
    nlohmann::json setups = nlohmann::json::array();
    for (const auto& s : cfg.gbt_setups) setups.push_back(gbt_config_to_json(s));
    return fnv1a64("gbt|" + std::to_string(ae_stage_hash(cfg, Side::user)) + "|" +
                   std::to_string(ae_stage_hash(cfg, Side::movie)) + "|" + setups.dump() + "|" +
                   std::to_string(cfg.refit_with_validation) + "|" + std::to_string(cfg.seed));
}

inline std::uint64_t report_stage_hash(const ExperimentConfig& cfg) {
    return fnv1a64("report|" + std::to_string(gbt_stage_hash(cfg)) + "|" +
                   std::to_string(cfg.clip_predictions));
}

}  // namespace attnrec
