#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "msseg/volume.hpp"

namespace msseg::metrics {

/// Voxel-level confusion counts; tp+fp+fn+tn equals the voxel total.
struct ConfusionCounts {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long tn = 0;

    long total() const { return tp + fp + fn + tn; }
};

inline ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
    require(pred.dims == gt.dims, "confusion: dimension mismatch " + dims_str(pred.dims) +
                                      " vs " + dims_str(gt.dims));
    ConfusionCounts c;
    for (Eigen::Index i = 0; i < pred.values.size(); ++i) {
        const bool p = pred.values[i] != 0;
        const bool g = gt.values[i] != 0;
        if (p && g)
            ++c.tp;
        else if (p && !g)
            ++c.fp;
        else if (!p && g)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

/// Degenerate-input conventions (the dataset's evaluator never defines
/// them, so they are fixed here and echoed into every report):
///   dice/jaccard with empty pred AND empty gt -> 1.0 (perfect agreement)
///   ppv with empty pred -> undefined; tpr with empty gt -> undefined
///   lfpr with empty pred -> 0.0;      ltpr with empty gt -> undefined
inline constexpr const char* kDegenerateConventions =
    "dice,jaccard: empty pred and empty gt -> 1.0; ppv: empty pred -> undefined; "
    "tpr: empty gt -> undefined; lfpr: empty pred -> 0.0; ltpr: empty gt -> undefined";

inline double dice(const ConfusionCounts& c) {
    const long denom = 2 * c.tp + c.fp + c.fn;
    if (denom == 0) return 1.0;  // both masks empty
    return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

inline double jaccard(const ConfusionCounts& c) {
    const long denom = c.tp + c.fp + c.fn;
    if (denom == 0) return 1.0;  // both masks empty
    return static_cast<double>(c.tp) / static_cast<double>(denom);
}

inline std::optional<double> ppv(const ConfusionCounts& c) {
    const long denom = c.tp + c.fp;
    if (denom == 0) return std::nullopt;  // empty prediction
    return static_cast<double>(c.tp) / static_cast<double>(denom);
}

inline std::optional<double> tpr(const ConfusionCounts& c) {
    const long denom = c.tp + c.fn;
    if (denom == 0) return std::nullopt;  // empty ground truth
    return static_cast<double>(c.tp) / static_cast<double>(denom);
}

/// Neighborhood offsets for 6 (face), 18 (face+edge) or 26 (full cube)
/// connectivity.
inline std::vector<Coord3> connectivity_offsets(int connectivity) {
    require(connectivity == 6 || connectivity == 18 || connectivity == 26,
            "connectivity must be one of 6, 18, 26; got " + std::to_string(connectivity));
    const int max_manhattan = connectivity == 6 ? 1 : (connectivity == 18 ? 2 : 3);
    std::vector<Coord3> offsets;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const int m = std::abs(dx) + std::abs(dy) + std::abs(dz);
                if (m >= 1 && m <= max_manhattan) offsets.push_back(Coord3{dx, dy, dz});
            }
    return offsets;
}

/// Connected components of the foreground. Labels are 1..count assigned in
/// first-visit order of an x-fastest scan, so the labeling is deterministic.
struct ComponentLabeling {
    Dims3 dims;
    std::vector<std::int32_t> labels;               // 0 = background
    int count = 0;
    std::vector<std::vector<std::size_t>> components;  // per-component voxel indices
};

inline ComponentLabeling connected_components(const BinaryMask& mask, int connectivity) {
    const auto offsets = connectivity_offsets(connectivity);
    ComponentLabeling out;
    out.dims = mask.dims;
    out.labels.assign(mask.size(), 0);

    std::vector<std::size_t> stack;
    for (std::size_t seed = 0; seed < mask.size(); ++seed) {
        if (mask.values[static_cast<Eigen::Index>(seed)] == 0 || out.labels[seed] != 0) continue;
        const std::int32_t label = ++out.count;
        out.components.emplace_back();
        auto& voxels = out.components.back();
        stack.assign(1, seed);
        out.labels[seed] = label;
        while (!stack.empty()) {
            const std::size_t cur = stack.back();
            stack.pop_back();
            voxels.push_back(cur);
            const Coord3 p = coord_of(mask.dims, cur);
            for (const auto& d : offsets) {
                const int x = p.x + d.x, y = p.y + d.y, z = p.z + d.z;
                if (x < 0 || y < 0 || z < 0 || x >= mask.dims.nx || y >= mask.dims.ny ||
                    z >= mask.dims.nz)
                    continue;
                const std::size_t q = flat_index(mask.dims, x, y, z);
                if (mask.values[static_cast<Eigen::Index>(q)] != 0 && out.labels[q] == 0) {
                    out.labels[q] = label;
                    stack.push_back(q);
                }
            }
        }
    }
    return out;
}

/// Lesion-based sensitivity: fraction of ground-truth components touched by
/// at least one predicted voxel. Undefined when gt has no lesions.
inline std::optional<double> ltpr(const BinaryMask& pred, const BinaryMask& gt,
                                  int connectivity) {
    require(pred.dims == gt.dims, "ltpr: dimension mismatch");
    const ComponentLabeling gtc = connected_components(gt, connectivity);
    if (gtc.count == 0) return std::nullopt;
    int hit = 0;
    for (const auto& comp : gtc.components) {
        for (std::size_t v : comp) {
            if (pred.values[static_cast<Eigen::Index>(v)] != 0) {
                ++hit;
                break;
            }
        }
    }
    return static_cast<double>(hit) / static_cast<double>(gtc.count);
}

/// Lesion-based false-positive rate: fraction of predicted components with
/// zero ground-truth overlap. An empty prediction has no false positives.
inline double lfpr(const BinaryMask& pred, const BinaryMask& gt, int connectivity) {
    require(pred.dims == gt.dims, "lfpr: dimension mismatch");
    const ComponentLabeling pc = connected_components(pred, connectivity);
    if (pc.count == 0) return 0.0;
    int false_pos = 0;
    for (const auto& comp : pc.components) {
        bool overlaps = false;
        for (std::size_t v : comp) {
            if (gt.values[static_cast<Eigen::Index>(v)] != 0) {
                overlaps = true;
                break;
            }
        }
        if (!overlaps) ++false_pos;
    }
    return static_cast<double>(false_pos) / static_cast<double>(pc.count);
}

/// The six challenge metrics against one rater.
struct RaterScores {
    std::optional<double> dsc, jaccard, ppv, tpr, lfpr, ltpr;

    static constexpr std::array<const char*, 6> names() {
        return {"DSC", "Jaccard", "PPV", "TPR", "LFPR", "LTPR"};
    }
    std::array<std::optional<double>, 6> values() const {
        return {dsc, jaccard, ppv, tpr, lfpr, ltpr};
    }
};

inline RaterScores score_against(const BinaryMask& pred, const BinaryMask& gt, int connectivity) {
    const ConfusionCounts c = confusion(pred, gt);
    RaterScores s;
    s.dsc = dice(c);
    s.jaccard = jaccard(c);
    s.ppv = ppv(c);
    s.tpr = tpr(c);
    s.lfpr = lfpr(pred, gt, connectivity);
    s.ltpr = ltpr(pred, gt, connectivity);
    return s;
}

/// Per-rater metrics plus their arithmetic average. A metric's average is
/// defined only when both per-rater values are.
struct MetricsReport {
    RaterScores rater_a;
    RaterScores rater_b;
    RaterScores average;
    int connectivity = 26;
    std::string conventions = kDegenerateConventions;
};

inline std::optional<double> average_defined(std::optional<double> a, std::optional<double> b) {
    if (a && b) return 0.5 * (*a + *b);
    return std::nullopt;
}

/// Every metric computed independently against both raters, then averaged.
inline MetricsReport evaluate_two_raters(const BinaryMask& pred, const BinaryMask& gt_a,
                                         const BinaryMask& gt_b, int connectivity) {
    require(pred.dims == gt_a.dims && pred.dims == gt_b.dims,
            "evaluate_two_raters: dimension mismatch");
    MetricsReport r;
    r.connectivity = connectivity;
    r.rater_a = score_against(pred, gt_a, connectivity);
    r.rater_b = score_against(pred, gt_b, connectivity);
    r.average.dsc = average_defined(r.rater_a.dsc, r.rater_b.dsc);
    r.average.jaccard = average_defined(r.rater_a.jaccard, r.rater_b.jaccard);
    r.average.ppv = average_defined(r.rater_a.ppv, r.rater_b.ppv);
    r.average.tpr = average_defined(r.rater_a.tpr, r.rater_b.tpr);
    r.average.lfpr = average_defined(r.rater_a.lfpr, r.rater_b.lfpr);
    r.average.ltpr = average_defined(r.rater_a.ltpr, r.rater_b.ltpr);
    return r;
}

}  // namespace msseg::metrics
