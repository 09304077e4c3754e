#pragma once

#include <string>

#include <json.hpp>

#include "attnrec/autoencoder.hpp"
#include "attnrec/container.hpp"

namespace attnrec {

inline nlohmann::json ae_config_to_json(const AeConfig& cfg) {
    return nlohmann::json{
        {"d", cfg.d},
        {"leaky_slope", cfg.leaky_slope},
        {"epochs", cfg.epochs},
        {"seed", cfg.seed},
        {"attention_enabled", cfg.attention_enabled},
        {"alpha_init", cfg.alpha_init},
        {"learning_rate", cfg.adam.learning_rate},
        {"beta1", cfg.adam.beta1},
        {"beta2", cfg.adam.beta2},
        {"adam_eps", cfg.adam.eps},
        {"validation_fraction", cfg.validation_fraction},
        {"layernorm_affine", cfg.layernorm_affine},
        {"layernorm_eps", cfg.layernorm_eps},
        {"embed_source",
         cfg.embed_source == EmbedSource::post_attention ? "post_attention" : "pre_attention"},
        {"side", side_name(cfg.side)},
    };
}

inline AeConfig ae_config_from_json(const nlohmann::json& j) {
    AeConfig cfg;
    cfg.d = j.at("d").get<int>();
    cfg.leaky_slope = j.at("leaky_slope").get<double>();
    cfg.epochs = j.at("epochs").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.attention_enabled = j.at("attention_enabled").get<bool>();
    cfg.alpha_init = j.at("alpha_init").get<double>();
    cfg.adam.learning_rate = j.at("learning_rate").get<double>();
    cfg.adam.beta1 = j.at("beta1").get<double>();
    cfg.adam.beta2 = j.at("beta2").get<double>();
    cfg.adam.eps = j.at("adam_eps").get<double>();
    cfg.validation_fraction = j.at("validation_fraction").get<double>();
    cfg.layernorm_affine = j.at("layernorm_affine").get<bool>();
    cfg.layernorm_eps = j.at("layernorm_eps").get<double>();
    cfg.embed_source = j.at("embed_source").get<std::string>() == "post_attention"
                           ? EmbedSource::post_attention
                           : EmbedSource::pre_attention;
    cfg.side = j.at("side").get<std::string>() == "movie" ? Side::movie : Side::user;
    return cfg;
}

// Checkpoint = config + every parameter tensor + training history + seed.
// Loading reproduces extract_embeddings bit-exactly (tensors are stored raw).
inline void save_checkpoint(const FitResult& fit, const std::string& path) {
    nlohmann::json meta;
    meta["kind"] = "ae_checkpoint";
    meta["config"] = ae_config_to_json(fit.cfg);
    meta["seed"] = fit.seed;
    meta["best_epoch"] = fit.best_epoch;
    meta["best_val_rmse"] = fit.best_val_rmse;
    meta["final_alpha"] = fit.final_alpha;
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& rec : fit.history)
        hist.push_back({{"epoch", rec.epoch},
                        {"train_rmse", rec.train_rmse},
                        {"val_rmse", rec.val_rmse},
                        {"alpha", rec.alpha}});
    meta["history"] = hist;

    TensorContainer c;
    c.meta = meta.dump();
    auto params = const_cast<AeParams&>(fit.params).all();
    for (const auto* p : params) c.tensors.emplace_back(p->name, p->value);
    save_container(c, path);
}

inline FitResult load_checkpoint(const std::string& path) {
    TensorContainer c = load_container(path);
    nlohmann::json meta = nlohmann::json::parse(c.meta);
    if (meta.value("kind", "") != "ae_checkpoint")
        throw IoError(path + ": not an autoencoder checkpoint");
    FitResult fit;
    fit.cfg = ae_config_from_json(meta.at("config"));
    fit.seed = meta.at("seed").get<std::uint64_t>();
    fit.best_epoch = meta.at("best_epoch").get<int>();
    fit.best_val_rmse = meta.at("best_val_rmse").get<double>();
    fit.final_alpha = meta.at("final_alpha").get<double>();
    for (const auto& rec : meta.at("history"))
        fit.history.push_back({rec.at("epoch").get<int>(), rec.at("train_rmse").get<double>(),
                               rec.at("val_rmse").get<double>(), rec.at("alpha").get<double>()});

    fit.params.has_ln_affine = fit.cfg.layernorm_affine;
    fit.params.assign_canonical_names();
    for (auto* p : fit.params.all()) {
        const Matrix& m = c.get(p->name);
        p->value = m;
        p->grad = Matrix(m.rows, m.cols);
    }
    return fit;
}

// Embedding artifact: one tensor plus side/source bookkeeping.
inline void save_embeddings(const EmbeddingSet& emb, const std::string& path) {
    nlohmann::json meta;
    meta["kind"] = "embeddings";
    meta["side"] = side_name(emb.side);
    meta["config_hash"] = emb.config_hash;
    TensorContainer c;
    c.meta = meta.dump();
    c.tensors.emplace_back("embeddings", emb.matrix);
    save_container(c, path);
}

inline EmbeddingSet load_embeddings(const std::string& path) {
    TensorContainer c = load_container(path);
    nlohmann::json meta = nlohmann::json::parse(c.meta);
    if (meta.value("kind", "") != "embeddings")
        throw IoError(path + ": not an embeddings artifact");
    EmbeddingSet emb;
    emb.side = meta.at("side").get<std::string>() == "movie" ? Side::movie : Side::user;
    emb.config_hash = meta.at("config_hash").get<std::string>();
    emb.matrix = c.get("embeddings");
    return emb;
}

}  // namespace attnrec
