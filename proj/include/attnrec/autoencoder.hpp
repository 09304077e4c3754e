#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "attnrec/dataio.hpp"
#include "attnrec/features.hpp"
#include "attnrec/matrix.hpp"
#include "attnrec/ops.hpp"
#include "attnrec/optim.hpp"
#include "attnrec/rng.hpp"
#include "attnrec/splitting.hpp"

namespace attnrec {

enum class Side { user, movie };

inline const char* side_name(Side s) { return s == Side::user ? "user" : "movie"; }

enum class EmbedSource { pre_attention, post_attention };

struct AeConfig {
    int d = 64;
    double leaky_slope = 0.01;
    int epochs = 500;
    std::uint64_t seed = 42;
    bool attention_enabled = true;
    double alpha_init = 0.5;
    AdamConfig adam;
    double validation_fraction = 0.10;
    bool layernorm_affine = false;
    double layernorm_eps = 1e-8;
    EmbedSource embed_source = EmbedSource::post_attention;
    Side side = Side::user;

    void validate() const {
        if (d < 1) throw DomainError("AeConfig: d must be >= 1");
        if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
            throw DomainError("AeConfig: validation_fraction must lie in (0,1)");
        if (!(leaky_slope > 0.0 && leaky_slope < 1.0))
            throw DomainError("AeConfig: leaky_slope must lie in (0,1)");
        if (!(alpha_init > 0.0 && alpha_init < 1.0))
            throw DomainError("AeConfig: alpha_init must lie in (0,1)");
        if (epochs < 0) throw DomainError("AeConfig: epochs must be >= 0");
    }
};

// One observed rating in the model's orientation (rows = encoded entities).
struct Cell {
    std::size_t row;
    std::size_t col;
    double value;
};

using CellList = std::vector<Cell>;

// All learnable tensors of one autoencoder instance. The attention mix
// coefficient is stored pre-logistic so the blend stays convex by
// construction.
struct AeParams {
    ParamTensor enc1_w, enc1_b, enc2_w, enc2_b;
    ParamTensor attn_q_w, attn_k_w, attn_mix_raw;
    ParamTensor ln_gain, ln_bias;  // present only with layernorm_affine
    ParamTensor dec1_w, dec1_b, dec2_w, dec2_b;
    bool has_ln_affine = false;

    std::vector<ParamTensor*> all() {
        std::vector<ParamTensor*> v = {&enc1_w, &enc1_b, &enc2_w, &enc2_b,
                                       &attn_q_w, &attn_k_w, &attn_mix_raw};
        if (has_ln_affine) {
            v.push_back(&ln_gain);
            v.push_back(&ln_bias);
        }
        v.push_back(&dec1_w);
        v.push_back(&dec1_b);
        v.push_back(&dec2_w);
        v.push_back(&dec2_b);
        return v;
    }

    std::vector<const ParamTensor*> all() const {
        auto* self = const_cast<AeParams*>(this);
        std::vector<const ParamTensor*> v;
        for (auto* p : self->all()) v.push_back(p);
        return v;
    }

    double mix_alpha() const { return logistic(attn_mix_raw.value.data[0]); }

    void assign_canonical_names() {
        enc1_w.name = "enc1_w";
        enc1_b.name = "enc1_b";
        enc2_w.name = "enc2_w";
        enc2_b.name = "enc2_b";
        attn_q_w.name = "attn_q_w";
        attn_k_w.name = "attn_k_w";
        attn_mix_raw.name = "attn_mix_raw";
        ln_gain.name = "ln_gain";
        ln_bias.name = "ln_bias";
        dec1_w.name = "dec1_w";
        dec1_b.name = "dec1_b";
        dec2_w.name = "dec2_w";
        dec2_b.name = "dec2_b";
    }

    void zero_grads() {
        for (auto* p : all()) p->zero_grad();
    }

    bool all_finite() const {
        for (const auto* p : all())
            if (!p->value.all_finite()) return false;
        return true;
    }
};

// Glorot-uniform weights, zero biases, mix coefficient at alpha_init.
inline AeParams init_params(std::size_t n_cols_in, std::size_t d_features,
                            const AeConfig& cfg, Rng& rng) {
    const auto d = static_cast<std::size_t>(cfg.d);
    AeParams p;
    auto glorot = [&rng](ParamTensor& t) {
        const double limit = std::sqrt(6.0 / static_cast<double>(t.value.rows + t.value.cols));
        for (double& v : t.value.data) v = rng.uniform(-limit, limit);
    };
    p.enc1_w = ParamTensor(n_cols_in, d, "enc1_w");
    p.enc1_b = ParamTensor(1, d, "enc1_b");
    p.enc2_w = ParamTensor(d, d, "enc2_w");
    p.enc2_b = ParamTensor(1, d, "enc2_b");
    p.attn_q_w = ParamTensor(d_features, d, "attn_q_w");
    p.attn_k_w = ParamTensor(d_features, d, "attn_k_w");
    p.attn_mix_raw = ParamTensor(1, 1, "attn_mix_raw");
    p.dec1_w = ParamTensor(d, d, "dec1_w");
    p.dec1_b = ParamTensor(1, d, "dec1_b");
    p.dec2_w = ParamTensor(d, n_cols_in, "dec2_w");
    p.dec2_b = ParamTensor(1, n_cols_in, "dec2_b");
    glorot(p.enc1_w);
    glorot(p.enc2_w);
    glorot(p.attn_q_w);
    glorot(p.attn_k_w);
    glorot(p.dec1_w);
    glorot(p.dec2_w);
    p.attn_mix_raw.value.data[0] = logit(cfg.alpha_init);
    p.has_ln_affine = cfg.layernorm_affine;
    if (p.has_ln_affine) {
        p.ln_gain = ParamTensor(1, d, "ln_gain");
        p.ln_bias = ParamTensor(1, d, "ln_bias");
        p.ln_gain.value.fill(1.0);
    }
    return p;
}

// Intermediate activations kept for the backward pass.
struct AeForward {
    Matrix z1, h1, z2, e;          // encoder pre/post activations, latent E
    Matrix fq, fk, qp, kp;         // feature projections, before/after row L2
    Matrix scores, attn;           // similarity logits, softmax rows A
    Matrix av, mix, ln_out;        // A*V, convex blend, layer-norm output
    Matrix ehat;                   // embedding fed to the decoder
    Matrix d1, g1, d2, rhat;       // decoder pre/post activations
};

inline Matrix encode(const Matrix& r, const AeParams& p, const AeConfig& cfg,
                     AeForward* cache = nullptr) {
    if (r.cols != p.enc1_w.value.rows)
        throw DimensionError("encode: input " + shape_str(r) + " vs enc1_w " +
                             shape_str(p.enc1_w.value));
    Matrix z1 = matmul(r, p.enc1_w.value);
    add_row_vector_inplace(z1, p.enc1_b.value);
    Matrix h1 = leaky_relu(z1, cfg.leaky_slope);
    Matrix z2 = matmul(h1, p.enc2_w.value);
    add_row_vector_inplace(z2, p.enc2_b.value);
    Matrix e = leaky_relu(z2, cfg.leaky_slope);
    if (cache) {
        cache->z1 = std::move(z1);
        cache->h1 = std::move(h1);
        cache->z2 = std::move(z2);
        cache->e = e;
    }
    return e;
}

// Q' = l2norm(F Wq), K' = l2norm(F Wk), A = softmax(Q' K'^T),
// Ehat = LayerNorm(alpha A E + (1-alpha) E). With attention disabled the
// whole block is bypassed and Ehat == E bit for bit.
inline Matrix attend(const Matrix& e, const FeatureMatrix& f, const AeParams& p,
                     const AeConfig& cfg, AeForward* cache = nullptr) {
    if (!cfg.attention_enabled) {
        if (cache) cache->ehat = e;
        return e;
    }
    if (f.rows() != e.rows)
        throw DimensionError("attend: feature rows " + std::to_string(f.rows()) +
                             " vs embedding rows " + std::to_string(e.rows));
    if (f.cols() != p.attn_q_w.value.rows)
        throw DimensionError("attend: feature cols " + std::to_string(f.cols()) +
                             " vs attn_q_w " + shape_str(p.attn_q_w.value));
    Matrix fq = matmul(f.values, p.attn_q_w.value);
    Matrix fk = matmul(f.values, p.attn_k_w.value);
    Matrix qp = l2_normalize_rows(fq);
    Matrix kp = l2_normalize_rows(fk);
    Matrix scores = matmul_nt(qp, kp);
    Matrix attn = softmax_rows(scores);
    Matrix av = matmul(attn, e);
    const double alpha = p.mix_alpha();
    Matrix mixm(e.rows, e.cols);
    for (std::size_t i = 0; i < e.size(); ++i)
        mixm.data[i] = alpha * av.data[i] + (1.0 - alpha) * e.data[i];
    Matrix ln_out = layer_norm_rows(mixm, cfg.layernorm_eps);
    Matrix ehat = ln_out;
    if (p.has_ln_affine) {
        for (std::size_t i = 0; i < ehat.rows; ++i) {
            double* row = ehat.row_ptr(i);
            for (std::size_t j = 0; j < ehat.cols; ++j)
                row[j] = row[j] * p.ln_gain.value.data[j] + p.ln_bias.value.data[j];
        }
    }
    if (cache) {
        cache->fq = std::move(fq);
        cache->fk = std::move(fk);
        cache->qp = std::move(qp);
        cache->kp = std::move(kp);
        cache->scores = std::move(scores);
        cache->attn = std::move(attn);
        cache->av = std::move(av);
        cache->mix = std::move(mixm);
        cache->ln_out = std::move(ln_out);
        cache->ehat = ehat;
    }
    return ehat;
}

inline Matrix decode(const Matrix& ehat, const AeParams& p, const AeConfig& cfg,
                     AeForward* cache = nullptr) {
    if (ehat.cols != p.dec1_w.value.rows)
        throw DimensionError("decode: input " + shape_str(ehat) + " vs dec1_w " +
                             shape_str(p.dec1_w.value));
    Matrix d1 = matmul(ehat, p.dec1_w.value);
    add_row_vector_inplace(d1, p.dec1_b.value);
    Matrix g1 = leaky_relu(d1, cfg.leaky_slope);
    Matrix d2 = matmul(g1, p.dec2_w.value);
    add_row_vector_inplace(d2, p.dec2_b.value);
    Matrix rhat = leaky_relu(d2, cfg.leaky_slope);
    if (cache) {
        cache->d1 = std::move(d1);
        cache->g1 = std::move(g1);
        cache->d2 = std::move(d2);
        cache->rhat = rhat;
    }
    return rhat;
}

inline AeForward forward(const Matrix& r, const FeatureMatrix& f, const AeParams& p,
                         const AeConfig& cfg) {
    AeForward fw;
    Matrix e = encode(r, p, cfg, &fw);
    Matrix ehat = attend(e, f, p, cfg, &fw);
    decode(ehat, p, cfg, &fw);
    return fw;
}

// sqrt( sum over observed cells of (r - rhat)^2 / N ). Touches only the given
// cells, so masked entries of rhat cannot influence the value.
inline double masked_rmse(const CellList& cells, const Matrix& rhat) {
    if (cells.empty()) throw DomainError("masked_rmse: no observed cells");
    double sum = 0.0;
    for (const auto& c : cells) {
        const double diff = c.value - rhat(c.row, c.col);
        sum += diff * diff;
    }
    return std::sqrt(sum / static_cast<double>(cells.size()));
}

// Fills every parameter gradient for the masked-RMSE loss at the current
// parameters, reusing the forward caches. Returns the loss.
inline double backward(const Matrix& r, const FeatureMatrix& f, const CellList& cells,
                       const AeForward& fw, AeParams& p, const AeConfig& cfg) {
    p.zero_grads();
    const double loss = masked_rmse(cells, fw.rhat);
    if (loss == 0.0) return 0.0;  // gradient of sqrt at exact zero; leave grads zero

    const double n_cells = static_cast<double>(cells.size());
    Matrix d_rhat(fw.rhat.rows, fw.rhat.cols);
    for (const auto& c : cells)
        d_rhat(c.row, c.col) = (fw.rhat(c.row, c.col) - c.value) / (n_cells * loss);

    // decoder
    Matrix d_d2 = leaky_relu_backward(fw.d2, d_rhat, cfg.leaky_slope);
    p.dec2_w.grad = matmul_tn(fw.g1, d_d2);
    p.dec2_b.grad = col_sums(d_d2);
    Matrix d_g1 = matmul_nt(d_d2, p.dec2_w.value);
    Matrix d_d1 = leaky_relu_backward(fw.d1, d_g1, cfg.leaky_slope);
    p.dec1_w.grad = matmul_tn(fw.ehat, d_d1);
    p.dec1_b.grad = col_sums(d_d1);
    Matrix d_ehat = matmul_nt(d_d1, p.dec1_w.value);

    Matrix d_e;
    if (cfg.attention_enabled) {
        Matrix d_ln_out = std::move(d_ehat);
        if (p.has_ln_affine) {
            for (std::size_t i = 0; i < d_ln_out.rows; ++i) {
                const double* lo = fw.ln_out.row_ptr(i);
                double* g = d_ln_out.row_ptr(i);
                for (std::size_t j = 0; j < d_ln_out.cols; ++j) {
                    p.ln_gain.grad.data[j] += g[j] * lo[j];
                    p.ln_bias.grad.data[j] += g[j];
                    g[j] *= p.ln_gain.value.data[j];
                }
            }
        }
        Matrix d_mix = layer_norm_rows_backward(fw.mix, d_ln_out, cfg.layernorm_eps);
        const double alpha = p.mix_alpha();
        double d_alpha = 0.0;
        for (std::size_t i = 0; i < d_mix.size(); ++i)
            d_alpha += d_mix.data[i] * (fw.av.data[i] - fw.e.data[i]);
        p.attn_mix_raw.grad.data[0] = d_alpha * alpha * (1.0 - alpha);

        Matrix d_av = scaled(d_mix, alpha);
        Matrix d_a = matmul_nt(d_av, fw.e);
        Matrix d_scores = softmax_rows_backward(fw.attn, d_a);
        Matrix d_qp = matmul(d_scores, fw.kp);
        Matrix d_kp = matmul_tn(d_scores, fw.qp);
        Matrix d_fq = l2_normalize_rows_backward(fw.fq, d_qp);
        Matrix d_fk = l2_normalize_rows_backward(fw.fk, d_kp);
        p.attn_q_w.grad = matmul_tn(f.values, d_fq);
        p.attn_k_w.grad = matmul_tn(f.values, d_fk);

        // E feeds both the value matrix and the residual side of the blend.
        d_e = matmul_tn(fw.attn, d_av);
        axpy_inplace(d_e, 1.0 - alpha, d_mix);
    } else {
        d_e = std::move(d_ehat);
    }

    // encoder
    Matrix d_z2 = leaky_relu_backward(fw.z2, d_e, cfg.leaky_slope);
    p.enc2_w.grad = matmul_tn(fw.h1, d_z2);
    p.enc2_b.grad = col_sums(d_z2);
    Matrix d_h1 = matmul_nt(d_z2, p.enc2_w.value);
    Matrix d_z1 = leaky_relu_backward(fw.z1, d_h1, cfg.leaky_slope);
    p.enc1_w.grad = matmul_tn(r, d_z1);
    p.enc1_b.grad = col_sums(d_z1);
    return loss;
}

struct EpochRecord {
    int epoch;
    double train_rmse;
    double val_rmse;
    double alpha;
};

struct EmbeddingSet {
    Matrix matrix;
    Side side = Side::user;
    std::string config_hash;
};

struct FitResult {
    AeParams params;  // parameters with the best validation loss
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    double best_val_rmse = 0.0;
    double final_alpha = 0.0;  // alpha at the selected epoch
    std::uint64_t seed = 0;
    AeConfig cfg;
};

// Orientation helpers: the movie-side model trains on the transpose with the
// same observed triplets.
inline CellList cells_for_side(const std::vector<RatingTriplet>& triplets,
                               const std::vector<std::size_t>& indices, Side side) {
    CellList cells;
    cells.reserve(indices.size());
    for (std::size_t idx : indices) {
        const auto& t = triplets[idx];
        const auto u = static_cast<std::size_t>(t.user_id - 1);
        const auto m = static_cast<std::size_t>(t.movie_id - 1);
        if (side == Side::user)
            cells.push_back({u, m, static_cast<double>(t.rating)});
        else
            cells.push_back({m, u, static_cast<double>(t.rating)});
    }
    return cells;
}

inline Matrix dense_from_cells(const CellList& cells, std::size_t rows, std::size_t cols) {
    Matrix r(rows, cols);
    for (const auto& c : cells) r(c.row, c.col) = c.value;
    return r;
}

inline std::string ae_config_hash(const AeConfig& cfg) {
    std::string s = std::to_string(cfg.d) + "|" + std::to_string(cfg.leaky_slope) + "|" +
                    std::to_string(cfg.epochs) + "|" + std::to_string(cfg.seed) + "|" +
                    (cfg.attention_enabled ? "attn" : "plain") + "|" +
                    std::to_string(cfg.alpha_init) + "|" + std::to_string(cfg.adam.learning_rate) +
                    "|" + std::to_string(cfg.adam.beta1) + "|" + std::to_string(cfg.adam.beta2) +
                    "|" + std::to_string(cfg.adam.eps) + "|" +
                    std::to_string(cfg.validation_fraction) + "|" +
                    (cfg.layernorm_affine ? "affine" : "bare") + "|" +
                    (cfg.embed_source == EmbedSource::post_attention ? "post" : "pre") + "|" +
                    side_name(cfg.side);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(s)));
    return buf;
}

inline AeParams clone_params(const AeParams& p) { return p; }

// Full-batch training under masked RMSE. A seeded 10% of the triplets is held
// out: those cells are removed from the training mask *and* zeroed in the
// encoder input, and score the per-epoch validation M-RMSE used for best-epoch
// selection. History entry k holds the metrics after k optimizer steps.
inline FitResult fit(const RatingData& train, const FeatureMatrix& f, const AeConfig& cfg) {
    cfg.validate();
    if (train.triplets.empty()) throw DomainError("fit: empty training data");
    const std::size_t rows = cfg.side == Side::user ? static_cast<std::size_t>(train.n_users)
                                                    : static_cast<std::size_t>(train.n_movies);
    const std::size_t cols = cfg.side == Side::user ? static_cast<std::size_t>(train.n_movies)
                                                    : static_cast<std::size_t>(train.n_users);
    if (f.rows() != rows)
        throw DimensionError("fit: feature rows " + std::to_string(f.rows()) +
                             " do not match " + std::string(side_name(cfg.side)) + " count " +
                             std::to_string(rows));

    auto [kept, held] = split_validation_indices(train.triplets.size(),
                                                 cfg.validation_fraction, cfg.seed);
    const CellList train_cells = cells_for_side(train.triplets, kept, cfg.side);
    const CellList val_cells = cells_for_side(train.triplets, held, cfg.side);
    const Matrix r = dense_from_cells(train_cells, rows, cols);

    Rng rng(derive_seed(cfg.seed, std::string("ae-init-") + side_name(cfg.side)));
    AeParams params = init_params(cols, f.cols(), cfg, rng);

    AdamState opt;
    opt.cfg = cfg.adam;
    auto plist = params.all();
    opt.init(plist);

    FitResult result;
    result.cfg = cfg;
    result.seed = cfg.seed;
    result.history.reserve(static_cast<std::size_t>(cfg.epochs) + 1);
    double best = std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch <= cfg.epochs; ++epoch) {
        AeForward fw = forward(r, f, params, cfg);
        const double train_rmse = masked_rmse(train_cells, fw.rhat);
        const double val_rmse = masked_rmse(val_cells, fw.rhat);
        if (!std::isfinite(train_rmse) || !std::isfinite(val_rmse))
            throw TrainingError("fit: non-finite loss at epoch " + std::to_string(epoch));
        result.history.push_back({epoch, train_rmse, val_rmse, params.mix_alpha()});
        if (val_rmse < best) {
            best = val_rmse;
            result.best_epoch = epoch;
            result.best_val_rmse = val_rmse;
            result.final_alpha = params.mix_alpha();
            result.params = clone_params(params);
        }
        if (epoch == cfg.epochs) break;
        backward(r, f, train_cells, fw, params, cfg);
        adam_step(plist, opt);
    }
    return result;
}

// Post-attention embedding at the given parameters (or the raw latent code,
// per embed_source / the ablation flag).
inline EmbeddingSet extract_embeddings(const AeParams& params, const Matrix& r,
                                       const FeatureMatrix& f, const AeConfig& cfg) {
    AeForward fw;
    Matrix e = encode(r, params, cfg, &fw);
    EmbeddingSet out;
    out.side = cfg.side;
    out.config_hash = ae_config_hash(cfg);
    if (!cfg.attention_enabled || cfg.embed_source == EmbedSource::pre_attention)
        out.matrix = std::move(e);
    else
        out.matrix = attend(e, f, params, cfg, &fw);
    return out;
}

}  // namespace attnrec
