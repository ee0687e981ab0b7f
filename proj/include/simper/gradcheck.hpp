#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "simper/errors.hpp"
#include "simper/tensor.hpp"

namespace simper {

// Central-difference gradient check. `f` must rebuild its graph from the
// current parameter values on every call; the analytic gradient comes from a
// single backward() sweep and is compared element by element against
// (f(x+h) - f(x-h)) / 2h.
//
// The reported error for one element is |ad - fd| / max(1, |ad|, |fd|), i.e.
// relative for large gradients and absolute for small ones, and the result is
// the maximum over all parameter elements.
inline double finite_diff_check(const std::function<Tensor()>& f, const std::vector<Tensor>& params,
                                double h) {
    if (h <= 0.0) throw contract_error("finite_diff_check: h must be positive");

    for (const Tensor& p : params) const_cast<Tensor&>(p).zero_grad();
    Tensor root = f();
    if (!std::isfinite(root.item())) throw numeric_error("finite_diff_check: non-finite objective");
    backward(root);

    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (const Tensor& p : params) {
        std::vector<double> g(p.numel(), 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = p.grad_at(i);
        analytic.push_back(std::move(g));
    }

    double worst = 0.0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor p = params[pi];
        for (std::size_t i = 0; i < p.numel(); ++i) {
            const double saved = p.values()[i];
            p.mutable_values()[i] = saved + h;
            const double fp = f().item();
            p.mutable_values()[i] = saved - h;
            const double fm = f().item();
            p.mutable_values()[i] = saved;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw numeric_error("finite_diff_check: non-finite objective");
            const double fd = (fp - fm) / (2.0 * h);
            const double ad = analytic[pi][i];
            const double denom = std::max({1.0, std::fabs(fd), std::fabs(ad)});
            worst = std::max(worst, std::fabs(fd - ad) / denom);
        }
    }
    return worst;
}

}  // namespace simper
