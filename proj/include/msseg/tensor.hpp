#pragma once

#include <utility>

#include "msseg/volume.hpp"

namespace msseg {

/// Channel-major 4D feature map: each channel is a contiguous x-fastest
/// 3D block, channels concatenated. Backs every activation in the network.
template <typename Scalar>
struct Tensor4 {
    int channels = 0;
    Dims3 dims;
    Array<Scalar> data;

    Tensor4() = default;
    Tensor4(int c, Dims3 d)
        : channels(c),
          dims(d),
          data(Array<Scalar>::Zero(static_cast<Eigen::Index>(c) *
                                   static_cast<Eigen::Index>(d.count()))) {
        require(c >= 1, "Tensor4: channel count must be >= 1");
        require(d.positive(), "Tensor4: dims must be >= 1");
    }

    std::size_t voxels_per_channel() const { return dims.count(); }
    std::size_t size() const { return static_cast<std::size_t>(data.size()); }

    std::size_t index(int c, int x, int y, int z) const {
        return static_cast<std::size_t>(c) * dims.count() + flat_index(dims, x, y, z);
    }

    Scalar at(int c, int x, int y, int z) const { return data[static_cast<Eigen::Index>(index(c, x, y, z))]; }
    Scalar& at(int c, int x, int y, int z) { return data[static_cast<Eigen::Index>(index(c, x, y, z))]; }

    auto channel(int c) {
        return data.segment(static_cast<Eigen::Index>(c) * static_cast<Eigen::Index>(dims.count()),
                            static_cast<Eigen::Index>(dims.count()));
    }
    auto channel(int c) const {
        return data.segment(static_cast<Eigen::Index>(c) * static_cast<Eigen::Index>(dims.count()),
                            static_cast<Eigen::Index>(dims.count()));
    }
};

/// Stack a multi-channel volume into a network input tensor (channel order
/// preserved).
template <typename Scalar>
Tensor4<Scalar> to_tensor(const MultiChannelVolume<Scalar>& mcv) {
    Tensor4<Scalar> t(mcv.channel_count(), mcv.dims());
    for (int c = 0; c < mcv.channel_count(); ++c)
        t.channel(c) = mcv.channels[static_cast<std::size_t>(c)].voxels;
    return t;
}

}  // namespace msseg
