#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "msseg/common.hpp"

namespace msseg {

template <typename Scalar>
using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

/// One named scalar 3D field (a single MRI sequence). Voxels are stored
/// flat in x-fastest order. Immutable by convention once constructed.
template <typename Scalar>
struct Volume {
    Dims3 dims;
    Array<Scalar> voxels;
    std::string name;

    Volume() = default;
    Volume(Dims3 d, Array<Scalar> v, std::string n)
        : dims(d), voxels(std::move(v)), name(std::move(n)) {
        require(dims.positive(), "Volume: dims must be >= 1, got " + dims_str(dims));
        require(static_cast<std::size_t>(voxels.size()) == dims.count(),
                "Volume '" + name + "': voxel count " + std::to_string(voxels.size()) +
                    " does not match dims " + dims_str(dims));
    }

    Scalar at(int x, int y, int z) const { return voxels[flat_index(dims, x, y, z)]; }
    Scalar& at(int x, int y, int z) { return voxels[flat_index(dims, x, y, z)]; }
    std::size_t size() const { return dims.count(); }
};

/// Volume of the given dims with every voxel exactly 0.
template <typename Scalar>
Volume<Scalar> zero_like(Dims3 dims, std::string name) {
    require(dims.positive(), "zero_like: invalid dimensions " + dims_str(dims));
    return Volume<Scalar>(dims, Array<Scalar>::Zero(static_cast<Eigen::Index>(dims.count())),
                          std::move(name));
}

/// Min-max rescaling to [0, 1] over the whole volume. A constant volume
/// maps to all zeros, so a degenerate sequence looks like a dropped one.
template <typename Scalar>
Volume<Scalar> normalize(const Volume<Scalar>& v) {
    const Scalar lo = v.voxels.minCoeff();
    const Scalar hi = v.voxels.maxCoeff();
    if (lo == hi) return zero_like<Scalar>(v.dims, v.name);
    Array<Scalar> out = (v.voxels - lo) / (hi - lo);
    return Volume<Scalar>(v.dims, std::move(out), v.name);
}

/// Ordered set of named volumes on one shared grid (the T1/T2/PD/FLAIR stack).
template <typename Scalar>
struct MultiChannelVolume {
    std::vector<Volume<Scalar>> channels;

    MultiChannelVolume() = default;
    explicit MultiChannelVolume(std::vector<Volume<Scalar>> chs) : channels(std::move(chs)) {
        require(!channels.empty(), "MultiChannelVolume: no channels");
        const Dims3 d = channels.front().dims;
        for (std::size_t i = 0; i < channels.size(); ++i) {
            require(channels[i].dims == d,
                    "MultiChannelVolume: channel '" + channels[i].name + "' dims " +
                        dims_str(channels[i].dims) + " differ from " + dims_str(d));
            for (std::size_t j = i + 1; j < channels.size(); ++j)
                require(channels[i].name != channels[j].name,
                        "MultiChannelVolume: duplicate channel name '" + channels[i].name + "'");
        }
    }

    Dims3 dims() const { return channels.front().dims; }
    int channel_count() const { return static_cast<int>(channels.size()); }

    std::vector<std::string> channel_names() const {
        std::vector<std::string> names;
        names.reserve(channels.size());
        for (const auto& c : channels) names.push_back(c.name);
        return names;
    }

    int channel_index(const std::string& name) const {
        for (std::size_t i = 0; i < channels.size(); ++i)
            if (channels[i].name == name) return static_cast<int>(i);
        throw Error("MultiChannelVolume: unknown channel '" + name + "'");
    }
};

/// Per-channel whole-volume normalization of a stack.
template <typename Scalar>
MultiChannelVolume<Scalar> normalize(const MultiChannelVolume<Scalar>& mcv) {
    std::vector<Volume<Scalar>> out;
    out.reserve(mcv.channels.size());
    for (const auto& c : mcv.channels) out.push_back(normalize(c));
    return MultiChannelVolume<Scalar>(std::move(out));
}

inline constexpr double kIgnoreLabel = 0.5;

/// Merged two-rater ground truth: 0 consensus non-lesion, 1 consensus
/// lesion, 0.5 rater disagreement. All three constants are exact in
/// binary floating point.
template <typename Scalar>
struct LabelVolume {
    Dims3 dims;
    Array<Scalar> values;

    LabelVolume() = default;
    LabelVolume(Dims3 d, Array<Scalar> v) : dims(d), values(std::move(v)) {
        require(dims.positive(), "LabelVolume: dims must be >= 1");
        require(static_cast<std::size_t>(values.size()) == dims.count(),
                "LabelVolume: value count does not match dims " + dims_str(dims));
        for (Eigen::Index i = 0; i < values.size(); ++i)
            require(values[i] == Scalar(0) || values[i] == Scalar(0.5) || values[i] == Scalar(1),
                    "LabelVolume: value at flat index " + std::to_string(i) +
                        " is not one of {0, 0.5, 1}");
    }

    Scalar at(int x, int y, int z) const { return values[flat_index(dims, x, y, z)]; }
    std::size_t size() const { return dims.count(); }
};

/// Single-rater lesion mask, one byte per voxel, values exactly 0 or 1.
struct BinaryMask {
    Dims3 dims;
    Array<std::uint8_t> values;

    BinaryMask() = default;
    BinaryMask(Dims3 d, Array<std::uint8_t> v) : dims(d), values(std::move(v)) {
        require(dims.positive(), "BinaryMask: dims must be >= 1");
        require(static_cast<std::size_t>(values.size()) == dims.count(),
                "BinaryMask: value count does not match dims " + dims_str(dims));
        for (Eigen::Index i = 0; i < values.size(); ++i)
            require(values[i] <= 1, "BinaryMask: value at flat index " + std::to_string(i) +
                                        " is not 0 or 1");
    }

    static BinaryMask zeros(Dims3 d) {
        return BinaryMask(d, Array<std::uint8_t>::Zero(static_cast<Eigen::Index>(d.count())));
    }

    std::uint8_t at(int x, int y, int z) const { return values[flat_index(dims, x, y, z)]; }
    std::uint8_t& at(int x, int y, int z) { return values[flat_index(dims, x, y, z)]; }
    std::size_t size() const { return dims.count(); }
    long positive_count() const {
        long n = 0;
        for (Eigen::Index i = 0; i < values.size(); ++i) n += values[i];
        return n;
    }
};

/// Mask -> scalar volume with values {0, 1} (for file I/O and rendering).
template <typename Scalar>
Volume<Scalar> mask_to_volume(const BinaryMask& m, std::string name) {
    Array<Scalar> v(m.values.size());
    for (Eigen::Index i = 0; i < m.values.size(); ++i) v[i] = static_cast<Scalar>(m.values[i]);
    return Volume<Scalar>(m.dims, std::move(v), std::move(name));
}

/// Strict inverse of mask_to_volume; rejects anything not exactly 0 or 1.
template <typename Scalar>
BinaryMask volume_to_mask(const Volume<Scalar>& v) {
    Array<std::uint8_t> out(v.voxels.size());
    for (Eigen::Index i = 0; i < v.voxels.size(); ++i) {
        require(v.voxels[i] == Scalar(0) || v.voxels[i] == Scalar(1),
                "volume_to_mask: '" + v.name + "' has non-binary value at flat index " +
                    std::to_string(i));
        out[i] = static_cast<std::uint8_t>(v.voxels[i]);
    }
    return BinaryMask(v.dims, std::move(out));
}

template <typename Scalar>
Volume<Scalar> labels_to_volume(const LabelVolume<Scalar>& l, std::string name) {
    return Volume<Scalar>(l.dims, l.values, std::move(name));
}

template <typename Scalar>
LabelVolume<Scalar> volume_to_labels(const Volume<Scalar>& v) {
    return LabelVolume<Scalar>(v.dims, v.voxels);
}

}  // namespace msseg
