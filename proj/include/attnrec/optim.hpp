#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "attnrec/matrix.hpp"

namespace attnrec {

// A learnable tensor plus its gradient accumulator.
struct ParamTensor {
    Matrix value;
    Matrix grad;
    std::string name;

    ParamTensor() = default;
    ParamTensor(std::size_t r, std::size_t c, std::string n)
        : value(r, c), grad(r, c), name(std::move(n)) {}

    void zero_grad() { grad.fill(0.0); }
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// First/second moment accumulators, one pair per parameter, in registration
// order. step counts completed updates.
struct AdamState {
    AdamConfig cfg;
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    long long step = 0;

    void init(const std::vector<ParamTensor*>& params) {
        m.clear();
        v.clear();
        for (const auto* p : params) {
            m.emplace_back(p->value.rows, p->value.cols);
            v.emplace_back(p->value.rows, p->value.cols);
        }
        step = 0;
    }
};

// Standard bias-corrected adaptive-moment update. Throws TrainingError when a
// gradient is non-finite, naming the offending parameter.
inline void adam_step(const std::vector<ParamTensor*>& params, AdamState& st) {
    if (st.m.size() != params.size())
        throw TrainingError("adam_step: optimizer state not initialized for this parameter set");
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (!params[p]->grad.same_shape(params[p]->value))
            throw DimensionError("adam_step: grad/value shape mismatch for " + params[p]->name);
        for (double g : params[p]->grad.data)
            if (!std::isfinite(g))
                throw TrainingError("adam_step: non-finite gradient in parameter '" +
                                    params[p]->name + "'");
    }
    ++st.step;
    const double b1 = st.cfg.beta1, b2 = st.cfg.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(st.step));
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto& val = params[p]->value.data;
        const auto& grd = params[p]->grad.data;
        auto& mp = st.m[p].data;
        auto& vp = st.v[p].data;
        for (std::size_t i = 0; i < val.size(); ++i) {
            const double g = grd[i];
            mp[i] = b1 * mp[i] + (1.0 - b1) * g;
            vp[i] = b2 * vp[i] + (1.0 - b2) * g * g;
            const double mhat = mp[i] / bc1;
            const double vhat = vp[i] / bc2;
            val[i] -= st.cfg.learning_rate * mhat / (std::sqrt(vhat) + st.cfg.eps);
        }
    }
}

}  // namespace attnrec
