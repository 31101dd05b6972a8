#pragma once

#include <cmath>

#include "msseg/net/unet.hpp"

namespace msseg::train {

/// Adam constants. The learning rate follows the training protocol; the
/// remaining values are the usual defaults.
struct AdamHyper {
    double learning_rate = 0.0005;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
        require(learning_rate > 0.0, "AdamHyper: learning_rate must be > 0");
        require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
                "AdamHyper: betas must be in [0, 1)");
        require(epsilon > 0.0, "AdamHyper: epsilon must be > 0");
    }
};

/// First and second moment estimates, one array per parameter.
template <typename S>
struct AdamState {
    net::ParameterStore<S> m;
    net::ParameterStore<S> v;

    static AdamState<S> zeros_like(const net::ParameterStore<S>& params) {
        return AdamState<S>{params.zeros_like(), params.zeros_like()};
    }
};

/// One Adam update with bias correction, in place. t is the 1-based step
/// index. Zero gradients on zero moments leave parameters bit-exactly
/// unchanged.
template <typename S>
void adam_step(net::ParameterStore<S>& params, const net::ParameterStore<S>& grads,
               AdamState<S>& state, long t, const AdamHyper& h) {
    h.validate();
    require(t >= 1, "adam_step: step index must be >= 1");
    params.check_same_shape(grads, "adam_step: gradients");
    params.check_same_shape(state.m, "adam_step: first moment");
    params.check_same_shape(state.v, "adam_step: second moment");

    const S b1 = static_cast<S>(h.beta1);
    const S b2 = static_cast<S>(h.beta2);
    const S lr = static_cast<S>(h.learning_rate);
    const S eps = static_cast<S>(h.epsilon);
    const S c1 = S(1) - static_cast<S>(std::pow(h.beta1, static_cast<double>(t)));
    const S c2 = S(1) - static_cast<S>(std::pow(h.beta2, static_cast<double>(t)));

    for (std::size_t i = 0; i < params.entries.size(); ++i) {
        auto& p = params.entries[i].values;
        const auto& g = grads.entries[i].values;
        auto& m = state.m.entries[i].values;
        auto& v = state.v.entries[i].values;
        m = b1 * m + (S(1) - b1) * g;
        v = b2 * v + (S(1) - b2) * g * g;
        p -= lr * (m / c1) / ((v / c2).sqrt() + eps);
    }
}

}  // namespace msseg::train
