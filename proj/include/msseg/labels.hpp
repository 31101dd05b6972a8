#pragma once

#include "msseg/volume.hpp"

namespace msseg {

/// Merge two expert masks into the three-valued training label volume:
/// 1 where both say lesion, 0 where both say non-lesion, 0.5 where they
/// contradict. Symmetric in (a, b).
template <typename Scalar>
LabelVolume<Scalar> merge_masks(const BinaryMask& a, const BinaryMask& b) {
    require(a.dims == b.dims, "merge_masks: dimension mismatch " + dims_str(a.dims) + " vs " +
                                  dims_str(b.dims));
    Array<Scalar> out(a.values.size());
    for (Eigen::Index i = 0; i < a.values.size(); ++i) {
        if (a.values[i] == b.values[i])
            out[i] = static_cast<Scalar>(a.values[i]);
        else
            out[i] = Scalar(0.5);
    }
    return LabelVolume<Scalar>(a.dims, std::move(out));
}

}  // namespace msseg
