// Adam with bias correction, used by the baseline models.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "kantherm/errors.hpp"

namespace kantherm {

struct AdamHyper {
    double alpha = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long step = 0;
};

inline void adam_step(std::vector<double>& params, const std::vector<double>& grads,
                      AdamState& state, const AdamHyper& hyper) {
    if (params.size() != grads.size())
        throw shape_error("adam: params/grads size mismatch");
    if (state.m.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    } else if (state.m.size() != params.size()) {
        throw shape_error("adam: state size mismatch");
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        if (!std::isfinite(g))
            throw numeric_error("adam: non-finite gradient at parameter " + std::to_string(i) +
                                " (step " + std::to_string(state.step) + ")");
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= hyper.alpha * mhat / (std::sqrt(vhat) + hyper.eps);
    }
}

} // namespace kantherm
