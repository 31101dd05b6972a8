#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "msseg/rng.hpp"
#include "msseg/volume.hpp"

namespace msseg::phantom {

/// How one channel renders lesions: flat background intensity plus a signed
/// contrast inside lesion voxels. Mimics the contrast behaviour of the four
/// sequences (hyperintense on T2/FLAIR, hypointense on T1, near-flat on PD).
struct ChannelSpec {
    std::string name;
    double background = 0.0;
    double lesion_contrast = 0.0;
};

struct PhantomConfig {
    Dims3 dims{32, 32, 32};
    std::vector<ChannelSpec> channels{
        {"T1", 0.60, -0.30},
        {"T2", 0.30, 0.30},
        {"PD", 0.40, 0.05},
        {"FLAIR", 0.20, 0.60},
    };
    int lesion_count_min = 2;
    int lesion_count_max = 4;
    double lesion_radius_min = 2.0;
    double lesion_radius_max = 4.0;
    double noise_sigma = 0.02;
    double rater_flip_prob = 0.2;  // per boundary voxel, rater B disagrees
    std::uint64_t seed = 0;
    int placement_retries = 2000;

    void validate() const {
        require(dims.positive(), "PhantomConfig: dims must be >= 1");
        require(!channels.empty(), "PhantomConfig: no channels");
        require(lesion_count_min >= 0 && lesion_count_max >= lesion_count_min,
                "PhantomConfig: bad lesion count range");
        require(lesion_radius_min >= 1.0 && lesion_radius_max >= lesion_radius_min,
                "PhantomConfig: lesion radii must be >= 1");
        require(noise_sigma >= 0.0, "PhantomConfig: noise_sigma must be >= 0");
        require(rater_flip_prob >= 0.0 && rater_flip_prob < 1.0,
                "PhantomConfig: rater_flip_prob must be in [0, 1)");
    }
};

struct Lesion {
    double cx = 0, cy = 0, cz = 0;
    double radius = 0;
};

template <typename S>
struct PhantomResult {
    MultiChannelVolume<S> volume;
    BinaryMask gt_a;  // exact lesion mask
    BinaryMask gt_b;  // gt_a with boundary voxels flipped
    std::vector<Lesion> lesions;
};

namespace detail {

/// Ellipsoidal "brain" region: semi-axes 0.45 * dims around the grid center.
inline double brain_norm(const Dims3& d, double x, double y, double z) {
    const double cx = (d.nx - 1) / 2.0, cy = (d.ny - 1) / 2.0, cz = (d.nz - 1) / 2.0;
    const double ax = 0.45 * d.nx, ay = 0.45 * d.ny, az = 0.45 * d.nz;
    const double ux = (x - cx) / ax, uy = (y - cy) / ay, uz = (z - cz) / az;
    return ux * ux + uy * uy + uz * uz;
}

inline bool sphere_inside_brain(const Dims3& d, const Lesion& s) {
    // every voxel of the sphere must sit strictly inside the ellipsoid shell
    const int x0 = static_cast<int>(std::floor(s.cx - s.radius));
    const int x1 = static_cast<int>(std::ceil(s.cx + s.radius));
    const int y0 = static_cast<int>(std::floor(s.cy - s.radius));
    const int y1 = static_cast<int>(std::ceil(s.cy + s.radius));
    const int z0 = static_cast<int>(std::floor(s.cz - s.radius));
    const int z1 = static_cast<int>(std::ceil(s.cz + s.radius));
    if (x0 < 1 || y0 < 1 || z0 < 1 || x1 >= d.nx - 1 || y1 >= d.ny - 1 || z1 >= d.nz - 1)
        return false;
    const double r2 = s.radius * s.radius;
    for (int z = z0; z <= z1; ++z)
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double dx = x - s.cx, dy = y - s.cy, dz = z - s.cz;
                if (dx * dx + dy * dy + dz * dz > r2) continue;
                if (brain_norm(d, x, y, z) >= 0.95) return false;
            }
    return true;
}

}  // namespace detail

/// Boundary of the foreground under 6-connectivity: foreground voxels with a
/// background face-neighbor plus background voxels with a foreground
/// face-neighbor. Rater disagreement is confined to this set.
inline std::vector<std::size_t> boundary_voxels(const BinaryMask& mask) {
    static constexpr int offs[6][3] = {{1, 0, 0},  {-1, 0, 0}, {0, 1, 0},
                                       {0, -1, 0}, {0, 0, 1},  {0, 0, -1}};
    std::vector<std::size_t> out;
    for (int z = 0; z < mask.dims.nz; ++z)
        for (int y = 0; y < mask.dims.ny; ++y)
            for (int x = 0; x < mask.dims.nx; ++x) {
                const std::uint8_t v = mask.at(x, y, z);
                bool boundary = false;
                for (const auto& o : offs) {
                    const int nx = x + o[0], ny = y + o[1], nz = z + o[2];
                    if (nx < 0 || ny < 0 || nz < 0 || nx >= mask.dims.nx || ny >= mask.dims.ny ||
                        nz >= mask.dims.nz)
                        continue;
                    if (mask.at(nx, ny, nz) != v) {
                        boundary = true;
                        break;
                    }
                }
                if (boundary) out.push_back(flat_index(mask.dims, x, y, z));
            }
    return out;
}

/// Deterministic synthetic subject: non-overlapping spherical lesions inside
/// an ellipsoidal brain, rendered into each channel with its configured
/// contrast plus zero-mean Gaussian noise. gt_a is the exact lesion mask;
/// gt_b flips each boundary voxel of gt_a independently with
/// cfg.rater_flip_prob. Same seed, same phantom, bit for bit.
template <typename S>
PhantomResult<S> generate_phantom(const PhantomConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const Dims3 d = cfg.dims;

    // Place lesions: uniform centers and radii, bounded retry budget.
    const int target = cfg.lesion_count_min +
                       static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(
                           cfg.lesion_count_max - cfg.lesion_count_min + 1)));
    std::vector<Lesion> lesions;
    int attempts = 0;
    while (static_cast<int>(lesions.size()) < target) {
        require(attempts++ < cfg.placement_retries,
                "generate_phantom: could not place " + std::to_string(target) +
                    " lesions inside the brain region after " +
                    std::to_string(cfg.placement_retries) + " attempts");
        Lesion s;
        s.radius = rng.uniform(cfg.lesion_radius_min, cfg.lesion_radius_max);
        s.cx = rng.uniform(0.0, d.nx - 1.0);
        s.cy = rng.uniform(0.0, d.ny - 1.0);
        s.cz = rng.uniform(0.0, d.nz - 1.0);
        if (!detail::sphere_inside_brain(d, s)) continue;
        bool overlaps = false;
        for (const auto& other : lesions) {
            const double dx = s.cx - other.cx, dy = s.cy - other.cy, dz = s.cz - other.cz;
            const double dist = std::sqrt(dx * dx + dy * dy + dz * dz);
            if (dist <= s.radius + other.radius + 1.5) {  // keep components separated
                overlaps = true;
                break;
            }
        }
        if (!overlaps) lesions.push_back(s);
    }

    BinaryMask gt_a = BinaryMask::zeros(d);
    for (const auto& s : lesions) {
        const double r2 = s.radius * s.radius;
        const int x0 = std::max(0, static_cast<int>(std::floor(s.cx - s.radius)));
        const int x1 = std::min(d.nx - 1, static_cast<int>(std::ceil(s.cx + s.radius)));
        const int y0 = std::max(0, static_cast<int>(std::floor(s.cy - s.radius)));
        const int y1 = std::min(d.ny - 1, static_cast<int>(std::ceil(s.cy + s.radius)));
        const int z0 = std::max(0, static_cast<int>(std::floor(s.cz - s.radius)));
        const int z1 = std::min(d.nz - 1, static_cast<int>(std::ceil(s.cz + s.radius)));
        for (int z = z0; z <= z1; ++z)
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const double dx = x - s.cx, dy = y - s.cy, dz = z - s.cz;
                    if (dx * dx + dy * dy + dz * dz <= r2) gt_a.at(x, y, z) = 1;
                }
    }

    // Render channels (noise drawn in channel order, voxel order).
    std::vector<Volume<S>> channels;
    channels.reserve(cfg.channels.size());
    for (const auto& spec : cfg.channels) {
        Array<S> v(static_cast<Eigen::Index>(d.count()));
        for (std::size_t i = 0; i < d.count(); ++i) {
            double value = spec.background;
            if (gt_a.values[static_cast<Eigen::Index>(i)]) value += spec.lesion_contrast;
            if (cfg.noise_sigma > 0.0) value += rng.normal(0.0, cfg.noise_sigma);
            v[static_cast<Eigen::Index>(i)] = static_cast<S>(value);
        }
        channels.emplace_back(d, std::move(v), spec.name);
    }

    // Rater B: independent flips on gt_a's component boundaries.
    BinaryMask gt_b = gt_a;
    for (std::size_t idx : boundary_voxels(gt_a)) {
        if (rng.uniform01() < cfg.rater_flip_prob) {
            auto& v = gt_b.values[static_cast<Eigen::Index>(idx)];
            v = v ? 0 : 1;
        }
    }

    return PhantomResult<S>{MultiChannelVolume<S>(std::move(channels)), std::move(gt_a),
                            std::move(gt_b), std::move(lesions)};
}

}  // namespace msseg::phantom
