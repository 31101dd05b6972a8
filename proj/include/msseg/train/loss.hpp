#pragma once

#include <cmath>

#include "msseg/tensor.hpp"
#include "msseg/volume.hpp"

namespace msseg::train {

/// Weighted cross entropy with ignore label. Lesion voxels weigh 3x the
/// non-lesion ones; voxels labelled 0.5 (rater disagreement) contribute
/// neither loss nor gradient.
struct LossConfig {
    double background_weight = 1.0;
    double lesion_weight = 3.0;
    double ignore_value = 0.5;
    double prob_floor = 1e-12;  // inside the log, against -inf on confident misses

    void validate() const {
        require(background_weight > 0.0 && lesion_weight > 0.0,
                "LossConfig: class weights must be > 0");
        require(prob_floor > 0.0, "LossConfig: prob_floor must be > 0");
    }
};

template <typename S>
struct LossResult {
    S loss = S(0);
    Tensor4<S> grad_logits;
    long contributing = 0;
};

/// loss = (1/Nc) * sum over contributing voxels of w(v) * (-log p_true(v)),
/// Nc = number of voxels with label != 0.5. The returned gradient is with
/// respect to the pre-softmax logits and is exactly zero at ignored voxels.
/// Where the probability floor clips the log, the (exact) gradient of the
/// clipped loss is zero as well. Nc == 0 yields loss 0 and zero gradient.
template <typename S>
LossResult<S> weighted_ce_loss(const Tensor4<S>& probs, const LabelVolume<S>& labels,
                               const LossConfig& cfg) {
    cfg.validate();
    require(probs.channels == 2, "weighted_ce_loss: expected 2 class channels, got " +
                                     std::to_string(probs.channels));
    require(probs.dims == labels.dims, "weighted_ce_loss: probs dims " + dims_str(probs.dims) +
                                           " vs labels dims " + dims_str(labels.dims));

    LossResult<S> r;
    r.grad_logits = Tensor4<S>(probs.channels, probs.dims);
    const std::size_t n = probs.voxels_per_channel();

    long contributing = 0;
    for (std::size_t v = 0; v < n; ++v) {
        if (labels.values[static_cast<Eigen::Index>(v)] == static_cast<S>(cfg.ignore_value))
            continue;
        ++contributing;
    }
    r.contributing = contributing;
    if (contributing == 0) return r;

    const S inv_n = S(1) / static_cast<S>(contributing);
    S loss = S(0);
    for (std::size_t v = 0; v < n; ++v) {
        const S label = labels.values[static_cast<Eigen::Index>(v)];
        if (label == static_cast<S>(cfg.ignore_value)) continue;
        const int true_class = label == S(1) ? 1 : 0;
        const S w = true_class == 1 ? static_cast<S>(cfg.lesion_weight)
                                    : static_cast<S>(cfg.background_weight);
        const S p_true = probs.data[static_cast<Eigen::Index>(
            static_cast<std::size_t>(true_class) * n + v)];
        const bool clipped = p_true < static_cast<S>(cfg.prob_floor);
        loss += w * -std::log(clipped ? static_cast<S>(cfg.prob_floor) : p_true);
        if (!clipped) {
            for (int c = 0; c < 2; ++c) {
                const S p = probs.data[static_cast<Eigen::Index>(static_cast<std::size_t>(c) * n + v)];
                const S delta = c == true_class ? S(1) : S(0);
                r.grad_logits.data[static_cast<Eigen::Index>(static_cast<std::size_t>(c) * n + v)] =
                    w * inv_n * (p - delta);
            }
        }
    }
    r.loss = loss * inv_n;
    return r;
}

}  // namespace msseg::train
