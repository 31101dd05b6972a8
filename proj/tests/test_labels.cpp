#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "msseg/labels.hpp"
#include "msseg/rng.hpp"

using namespace msseg;

namespace {

BinaryMask random_mask(Dims3 d, double p, Rng& rng) {
    BinaryMask m = BinaryMask::zeros(d);
    for (Eigen::Index i = 0; i < m.values.size(); ++i) m.values[i] = rng.uniform01() < p ? 1 : 0;
    return m;
}

}  // namespace

TEST_CASE("merge rules: agree-1, agree-0, contradict") {
    BinaryMask a = BinaryMask::zeros(Dims3{3, 1, 1});
    BinaryMask b = BinaryMask::zeros(Dims3{3, 1, 1});
    a.values << 1, 1, 0;
    b.values << 1, 0, 0;
    const auto merged = merge_masks<double>(a, b);
    CHECK(merged.values[0] == 1.0);
    CHECK(merged.values[1] == 0.5);
    CHECK(merged.values[2] == 0.0);
}

TEST_CASE("merge is rater-symmetric and counts disagreement exactly") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        const Dims3 d{4, 3, 2};
        const auto a = random_mask(d, 0.4, rng);
        const auto b = random_mask(d, 0.4, rng);
        const auto ab = merge_masks<double>(a, b);
        const auto ba = merge_masks<double>(b, a);
        CHECK((ab.values == ba.values).all());

        long hamming = 0;
        long halves = 0;
        for (Eigen::Index i = 0; i < ab.values.size(); ++i) {
            hamming += a.values[i] != b.values[i] ? 1 : 0;
            halves += ab.values[i] == 0.5 ? 1 : 0;
        }
        CHECK(halves == hamming);
    }
}

TEST_CASE("merge of a mask with itself has no 0.5 values") {
    Rng rng(23);
    const auto a = random_mask(Dims3{4, 4, 4}, 0.3, rng);
    const auto merged = merge_masks<double>(a, a);
    for (Eigen::Index i = 0; i < merged.values.size(); ++i) CHECK(merged.values[i] != 0.5);
}

TEST_CASE("merge rejects dimension mismatch") {
    const auto a = BinaryMask::zeros(Dims3{2, 2, 2});
    const auto b = BinaryMask::zeros(Dims3{2, 2, 3});
    CHECK_THROWS_AS(merge_masks<double>(a, b), Error);
}
