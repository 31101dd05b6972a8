#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "msseg/rng.hpp"
#include "msseg/seqdrop.hpp"

using namespace msseg;

namespace {

MultiChannelVolume<double> test_patch(Dims3 d, Rng& rng) {
    std::vector<Volume<double>> chs;
    for (const char* name : {"T1", "T2", "PD", "FLAIR"}) {
        Array<double> a(static_cast<Eigen::Index>(d.count()));
        for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = rng.uniform(0.01, 1.0);
        chs.emplace_back(d, std::move(a), name);
    }
    return MultiChannelVolume<double>(std::move(chs));
}

}  // namespace

TEST_CASE("keep-all policy leaves the patch identical") {
    Rng rng(1);
    const auto patch = test_patch(Dims3{3, 3, 3}, rng);
    const auto policy = DropoutPolicy::keep_all(4);
    Rng draw(2);
    const auto [dropped, preserved] = apply_sequence_dropout(patch, policy, draw);
    CHECK(preserved == std::vector<std::string>{"T1", "T2", "PD", "FLAIR"});
    for (int c = 0; c < 4; ++c)
        CHECK((dropped.channels[c].voxels == patch.channels[c].voxels).all());
}

TEST_CASE("all mass at n=1: exactly one channel survives, the rest are zero") {
    Rng rng(3);
    const auto patch = test_patch(Dims3{2, 2, 2}, rng);
    DropoutPolicy policy{{1.0, 0.0, 0.0, 0.0}};
    Rng draw(4);
    for (int trial = 0; trial < 200; ++trial) {
        const auto [dropped, preserved] = apply_sequence_dropout(patch, policy, draw);
        REQUIRE(preserved.size() == 1);
        int zero_channels = 0;
        for (int c = 0; c < 4; ++c) {
            const auto& ch = dropped.channels[c];
            if (ch.name == preserved[0]) {
                CHECK((ch.voxels == patch.channels[c].voxels).all());
            } else {
                CHECK((ch.voxels == 0.0).all());
                ++zero_channels;
            }
        }
        CHECK(zero_channels == 3);
    }
}

TEST_CASE("default uniform policy: preserve counts and subsets over 10,000 draws") {
    Rng rng(5);
    const auto patch = test_patch(Dims3{2, 2, 2}, rng);
    const auto policy = DropoutPolicy::uniform(4);
    Rng draw(424242);
    const int draws = 10000;

    std::map<int, int> count_by_n;
    std::map<std::vector<std::string>, int> count_by_subset;
    for (int i = 0; i < draws; ++i) {
        const auto [dropped, preserved] = apply_sequence_dropout(patch, policy, draw);
        count_by_n[static_cast<int>(preserved.size())]++;
        count_by_subset[preserved]++;
        // preserved channels bit-identical, dropped channels exactly zero
        for (int c = 0; c < 4; ++c) {
            const bool kept = std::find(preserved.begin(), preserved.end(),
                                        dropped.channels[c].name) != preserved.end();
            if (kept)
                CHECK((dropped.channels[c].voxels == patch.channels[c].voxels).all());
            else
                CHECK(dropped.channels[c].voxels.abs().sum() == 0.0);
        }
    }

    for (int n = 1; n <= 4; ++n) {
        const double freq = static_cast<double>(count_by_n[n]) / draws;
        CHECK(freq == doctest::Approx(0.25).epsilon(0.08));  // 0.25 +- 0.02 absolute
        CHECK(std::abs(freq - 0.25) <= 0.02);
    }

    // Within each n, subsets should be uniform: chi-square at significance
    // 0.01. Critical values: df=3 -> 11.345, df=5 -> 15.086.
    auto chi_square = [&](int n, int subsets, double critical) {
        std::vector<int> observed;
        for (const auto& [subset, count] : count_by_subset)
            if (static_cast<int>(subset.size()) == n) observed.push_back(count);
        REQUIRE(static_cast<int>(observed.size()) == subsets);
        double total = 0.0;
        for (int o : observed) total += o;
        const double expected = total / subsets;
        double chi2 = 0.0;
        for (int o : observed) chi2 += (o - expected) * (o - expected) / expected;
        CHECK(chi2 < critical);
    };
    chi_square(1, 4, 11.345);
    chi_square(2, 6, 15.086);
    chi_square(3, 4, 11.345);
}

TEST_CASE("at least one channel preserved over 1e6 fuzzed draws") {
    Rng rng(6);
    for (int trial = 0; trial < 1000000; ++trial) {
        const int channels = 1 + static_cast<int>(rng.uniform_below(6));
        std::vector<double> w(static_cast<std::size_t>(channels));
        double total = 0.0;
        for (auto& x : w) {
            x = rng.uniform01();
            total += x;
        }
        if (total == 0.0) w[0] = 1.0;
        const auto keep = draw_preserved_set(DropoutPolicy{w}, channels, rng);
        CHECK(!keep.empty());
        CHECK(static_cast<int>(keep.size()) <= channels);
    }
}

TEST_CASE("dropout with a fixed rng state is deterministic") {
    Rng rng(7);
    const auto patch = test_patch(Dims3{2, 2, 2}, rng);
    const auto policy = DropoutPolicy::uniform(4);
    Rng r1(42), r2(42);
    for (int i = 0; i < 50; ++i) {
        const auto [d1, p1] = apply_sequence_dropout(patch, policy, r1);
        const auto [d2, p2] = apply_sequence_dropout(patch, policy, r2);
        CHECK(p1 == p2);
        for (int c = 0; c < 4; ++c) CHECK((d1.channels[c].voxels == d2.channels[c].voxels).all());
    }
}

TEST_CASE("policy dimension must match the channel count") {
    Rng rng(8);
    const auto patch = test_patch(Dims3{2, 2, 2}, rng);
    DropoutPolicy bad{{1.0, 1.0}};
    Rng draw(9);
    CHECK_THROWS_AS(apply_sequence_dropout(patch, bad, draw), Error);
}

TEST_CASE("uniform_strict never draws keep-all") {
    const auto policy = DropoutPolicy::uniform_strict(4);
    Rng rng(10);
    for (int i = 0; i < 5000; ++i) {
        const auto keep = draw_preserved_set(policy, 4, rng);
        CHECK(static_cast<int>(keep.size()) < 4);
    }
}

TEST_CASE("mask_missing: identity, zeroing, idempotence, errors") {
    Rng rng(11);
    const auto vol = test_patch(Dims3{3, 2, 2}, rng);

    const auto all = mask_missing(vol, {"T1", "T2", "PD", "FLAIR"});
    for (int c = 0; c < 4; ++c) CHECK((all.channels[c].voxels == vol.channels[c].voxels).all());

    const auto no_flair = mask_missing(vol, {"T1", "T2", "PD"});
    CHECK((no_flair.channels[3].voxels == 0.0).all());
    for (int c = 0; c < 3; ++c)
        CHECK((no_flair.channels[c].voxels == vol.channels[c].voxels).all());

    const auto twice = mask_missing(no_flair, {"T1", "T2", "PD"});
    for (int c = 0; c < 4; ++c)
        CHECK((twice.channels[c].voxels == no_flair.channels[c].voxels).all());

    CHECK_THROWS_AS(mask_missing(vol, {"T9"}), Error);
    CHECK_THROWS_AS(mask_missing(vol, std::set<std::string>{}), Error);
}

TEST_CASE("mask_missing commutes with normalization of preserved channels") {
    Rng rng(12);
    const auto vol = test_patch(Dims3{4, 4, 4}, rng);
    const std::set<std::string> avail{"T2", "FLAIR"};
    const auto a = mask_missing(normalize(vol), avail);
    const auto b = normalize(mask_missing(vol, avail));
    // dropped channels are all-zero either way; preserved ones normalize the
    // same because masking does not touch them
    for (int c = 0; c < 4; ++c)
        CHECK((a.channels[c].voxels - b.channels[c].voxels).abs().maxCoeff() == 0.0);
}
