#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "attnrec/optim.hpp"

namespace attnrec {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    bool pass = false;
};

// Central finite differences against the analytic gradients already stored in
// each parameter's grad field. f() must re-evaluate the scalar loss from the
// current parameter values and must be deterministic. Parameters are restored
// exactly after probing (values are saved/assigned, never re-derived).
inline GradCheckReport grad_check(const std::function<double()>& f,
                                  const std::vector<ParamTensor*>& params,
                                  double h, double tol) {
    GradCheckReport report;
    for (auto* p : params) {
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double saved = p->value.data[i];
            p->value.data[i] = saved + h;
            const double f_plus = f();
            p->value.data[i] = saved - h;
            const double f_minus = f();
            p->value.data[i] = saved;
            const double fd = (f_plus - f_minus) / (2.0 * h);
            const double ga = p->grad.data[i];
            const double denom = std::max({std::fabs(ga), std::fabs(fd), 1e-8});
            const double rel = std::fabs(ga - fd) / denom;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = p->name;
                report.worst_index = i;
            }
        }
    }
    report.pass = report.max_rel_err < tol;
    return report;
}

}  // namespace attnrec
