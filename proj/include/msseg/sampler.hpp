#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "msseg/rng.hpp"
#include "msseg/volume.hpp"

namespace msseg {

/// Fixed patch geometry plus the lesion-center bias probability p.
struct PatchSpec {
    Dims3 size{64, 64, 64};
    double lesion_center_prob = 0.99;

    void validate() const {
        require(size.positive(), "PatchSpec: patch size must be >= 1, got " + dims_str(size));
        require(lesion_center_prob >= 0.0 && lesion_center_prob <= 1.0,
                "PatchSpec: lesion_center_prob must be in [0, 1]");
    }
};

/// Precomputed lesion / non-lesion voxel index lists for one label volume.
/// Building this once per case keeps repeated draws cheap.
template <typename Scalar>
class CenterSampler {
public:
    explicit CenterSampler(const LabelVolume<Scalar>& labels) : dims_(labels.dims) {
        for (Eigen::Index i = 0; i < labels.values.size(); ++i) {
            if (labels.values[i] == Scalar(1))
                lesion_.push_back(static_cast<std::size_t>(i));
            else
                other_.push_back(static_cast<std::size_t>(i));
        }
    }

    /// Draw a center voxel: with probability p uniformly from lesion voxels,
    /// otherwise uniformly from non-lesion (label != 1) voxels. If the chosen
    /// class is empty, fall back to the other one, so sampling never
    /// deadlocks on lesion-free (or lesion-only) volumes. Not yet clamped.
    Coord3 draw_unclamped(double p, Rng& rng) const {
        const bool want_lesion = rng.uniform01() < p;
        const auto& primary = want_lesion ? lesion_ : other_;
        const auto& fallback = want_lesion ? other_ : lesion_;
        const auto& pool = primary.empty() ? fallback : primary;
        require(!pool.empty(), "CenterSampler: empty label volume");
        return coord_of(dims_, pool[rng.uniform_below(pool.size())]);
    }

    std::size_t lesion_count() const { return lesion_.size(); }
    Dims3 dims() const { return dims_; }

private:
    Dims3 dims_;
    std::vector<std::size_t> lesion_;
    std::vector<std::size_t> other_;
};

/// Patch origin convention: origin = clamp(center - floor(size/2), 0, dims - size).
inline Coord3 patch_origin(Coord3 center, Dims3 dims, Dims3 size) {
    auto clamp1 = [](int c, int half, int dim, int sz) {
        return std::clamp(c - half, 0, dim - sz);
    };
    return Coord3{clamp1(center.x, size.nx / 2, dims.nx, size.nx),
                  clamp1(center.y, size.ny / 2, dims.ny, size.ny),
                  clamp1(center.z, size.nz / 2, dims.nz, size.nz)};
}

/// Center after clamping the patch fully inside the volume.
inline Coord3 clamp_patch_center(Coord3 center, Dims3 dims, Dims3 size) {
    const Coord3 o = patch_origin(center, dims, size);
    return Coord3{o.x + size.nx / 2, o.y + size.ny / 2, o.z + size.nz / 2};
}

/// One biased center draw, clamped so the patch lies inside the volume.
template <typename Scalar>
Coord3 sample_patch_center(const LabelVolume<Scalar>& labels, const PatchSpec& spec, Rng& rng) {
    spec.validate();
    require(labels.dims.nx >= spec.size.nx && labels.dims.ny >= spec.size.ny &&
                labels.dims.nz >= spec.size.nz,
            "sample_patch_center: volume " + dims_str(labels.dims) + " smaller than patch " +
                dims_str(spec.size));
    CenterSampler<Scalar> sampler(labels);
    return clamp_patch_center(sampler.draw_unclamped(spec.lesion_center_prob, rng), labels.dims,
                              spec.size);
}

/// Copy the spec-sized patch around `center` out of the input stack and the
/// label volume. Patch voxel (i,j,k) equals source voxel origin + (i,j,k).
template <typename Scalar>
std::pair<MultiChannelVolume<Scalar>, LabelVolume<Scalar>> extract_patch(
    const MultiChannelVolume<Scalar>& input, const LabelVolume<Scalar>& labels, Coord3 center,
    const PatchSpec& spec) {
    spec.validate();
    const Dims3 dims = input.dims();
    require(labels.dims == dims, "extract_patch: label dims " + dims_str(labels.dims) +
                                     " differ from input dims " + dims_str(dims));
    require(dims.nx >= spec.size.nx && dims.ny >= spec.size.ny && dims.nz >= spec.size.nz,
            "extract_patch: volume " + dims_str(dims) + " smaller than patch " +
                dims_str(spec.size));
    const Dims3 size = spec.size;
    const Coord3 o = patch_origin(center, dims, size);

    auto copy_block = [&](const Array<Scalar>& src) {
        Array<Scalar> dst(static_cast<Eigen::Index>(size.count()));
        for (int k = 0; k < size.nz; ++k)
            for (int j = 0; j < size.ny; ++j) {
                const std::size_t s = flat_index(dims, o.x, o.y + j, o.z + k);
                const std::size_t d = flat_index(size, 0, j, k);
                for (int i = 0; i < size.nx; ++i)
                    dst[static_cast<Eigen::Index>(d + i)] = src[static_cast<Eigen::Index>(s + i)];
            }
        return dst;
    };

    std::vector<Volume<Scalar>> channels;
    channels.reserve(input.channels.size());
    for (const auto& c : input.channels)
        channels.emplace_back(size, copy_block(c.voxels), c.name);
    LabelVolume<Scalar> label_patch(size, copy_block(labels.values));
    return {MultiChannelVolume<Scalar>(std::move(channels)), std::move(label_patch)};
}

}  // namespace msseg
