#pragma once

#include <vector>

#include "msseg/net/unet.hpp"
#include "msseg/volume.hpp"

namespace msseg::net {

/// Sliding-window geometry for full-volume inference.
struct SlidingWindowSpec {
    Dims3 size{64, 64, 64};
    Dims3 stride{32, 32, 32};

    void validate() const {
        require(size.positive() && stride.positive(), "SlidingWindowSpec: sizes must be >= 1");
        require(stride.nx <= size.nx && stride.ny <= size.ny && stride.nz <= size.nz,
                "SlidingWindowSpec: stride must be <= window size");
    }
};

/// Window start positions along one axis: multiples of the stride, with the
/// last window clamped to the boundary so every voxel is covered.
inline std::vector<int> window_starts(int extent, int size, int stride) {
    std::vector<int> starts;
    for (int s = 0;; s += stride) {
        if (s + size >= extent) {
            starts.push_back(extent - size);
            break;
        }
        starts.push_back(s);
    }
    return starts;
}

/// Full-volume class probabilities: forward passes over a sliding window,
/// probabilities averaged where windows overlap.
template <typename S>
Tensor4<S> predict_probabilities(const ParameterStore<S>& params, const UNetConfig& cfg,
                                 const Tensor4<S>& vol, const SlidingWindowSpec& window) {
    window.validate();
    cfg.check_input_dims(window.size);
    const Dims3 d = vol.dims;
    require(d.nx >= window.size.nx && d.ny >= window.size.ny && d.nz >= window.size.nz,
            "predict: volume " + dims_str(d) + " smaller than window " + dims_str(window.size));

    Tensor4<S> prob_sum(cfg.classes, d);
    Array<S> count = Array<S>::Zero(static_cast<Eigen::Index>(d.count()));

    const auto xs = window_starts(d.nx, window.size.nx, window.stride.nx);
    const auto ys = window_starts(d.ny, window.size.ny, window.stride.ny);
    const auto zs = window_starts(d.nz, window.size.nz, window.stride.nz);

    Tensor4<S> patch(vol.channels, window.size);
    for (int z0 : zs) {
        for (int y0 : ys) {
            for (int x0 : xs) {
                for (int c = 0; c < vol.channels; ++c)
                    for (int k = 0; k < window.size.nz; ++k)
                        for (int j = 0; j < window.size.ny; ++j)
                            for (int i = 0; i < window.size.nx; ++i)
                                patch.at(c, i, j, k) = vol.at(c, x0 + i, y0 + j, z0 + k);
                const Tensor4<S> probs = forward(params, cfg, patch);
                for (int c = 0; c < cfg.classes; ++c)
                    for (int k = 0; k < window.size.nz; ++k)
                        for (int j = 0; j < window.size.ny; ++j)
                            for (int i = 0; i < window.size.nx; ++i)
                                prob_sum.at(c, x0 + i, y0 + j, z0 + k) += probs.at(c, i, j, k);
                for (int k = 0; k < window.size.nz; ++k)
                    for (int j = 0; j < window.size.ny; ++j)
                        for (int i = 0; i < window.size.nx; ++i)
                            count[static_cast<Eigen::Index>(
                                flat_index(d, x0 + i, y0 + j, z0 + k))] += S(1);
            }
        }
    }

    for (int c = 0; c < cfg.classes; ++c) prob_sum.channel(c) /= count;
    return prob_sum;
}

/// Argmax over averaged class probabilities; ties break toward class 0
/// (non-lesion). A voxel is foreground iff its winning class is nonzero.
template <typename S>
BinaryMask argmax_mask(const Tensor4<S>& probs) {
    BinaryMask mask = BinaryMask::zeros(probs.dims);
    const std::size_t n = probs.voxels_per_channel();
    for (std::size_t v = 0; v < n; ++v) {
        int best = 0;
        S best_p = probs.data[static_cast<Eigen::Index>(v)];
        for (int c = 1; c < probs.channels; ++c) {
            const S p = probs.data[static_cast<Eigen::Index>(c * n + v)];
            if (p > best_p) {
                best_p = p;
                best = c;
            }
        }
        mask.values[static_cast<Eigen::Index>(v)] = best > 0 ? 1 : 0;
    }
    return mask;
}

/// Sliding-window segmentation of a full multi-channel volume.
template <typename S>
BinaryMask predict_volume(const ParameterStore<S>& params, const UNetConfig& cfg,
                          const MultiChannelVolume<S>& vol, const SlidingWindowSpec& window) {
    return argmax_mask(predict_probabilities(params, cfg, to_tensor(vol), window));
}

}  // namespace msseg::net
