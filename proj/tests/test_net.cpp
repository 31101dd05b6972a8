#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "msseg/net/checkpoint.hpp"
#include "msseg/net/unet.hpp"
#include "msseg/rng.hpp"

using namespace msseg;
using namespace msseg::net;

namespace {

Tensor4<double> random_input(int channels, Dims3 d, Rng& rng) {
    Tensor4<double> t(channels, d);
    for (Eigen::Index i = 0; i < t.data.size(); ++i) t.data[i] = rng.uniform(0.0, 1.0);
    return t;
}

UNetConfig tiny_config() {
    UNetConfig cfg;
    cfg.levels = 2;
    cfg.root_features = 2;
    cfg.in_channels = 2;
    cfg.classes = 2;
    cfg.convs_per_level = 2;
    return cfg;
}

}  // namespace

TEST_CASE("init: determinism, zero biases, He variance") {
    UNetConfig cfg;
    cfg.levels = 2;
    cfg.root_features = 8;
    cfg.in_channels = 8;

    Rng r1(5), r2(5);
    const auto a = init_parameters<double>(cfg, r1);
    const auto b = init_parameters<double>(cfg, r2);
    REQUIRE(a.entries.size() == b.entries.size());
    for (std::size_t i = 0; i < a.entries.size(); ++i)
        CHECK((a.entries[i].values == b.entries[i].values).all());

    for (const auto& e : a.entries) {
        if (e.name.ends_with(".bias")) CHECK((e.values == 0.0).all());
        if (e.name.ends_with(".prelu")) CHECK((e.values == 0.25).all());
    }

    // enc0.conv1: 8 -> 8 channels, 3^3 kernel -> 1728 entries, fan_in 216
    const auto& w = a["enc0.conv1.weight"];
    REQUIRE(w.size() >= 1000);
    const double mean = w.mean();
    const double var = (w - mean).square().sum() / static_cast<double>(w.size() - 1);
    const double expected = 2.0 / 216.0;
    CHECK(var > 0.8 * expected);
    CHECK(var < 1.2 * expected);
}

TEST_CASE("forward shape contract and softmax normalization") {
    Rng rng(7);
    const auto cfg = tiny_config();
    const auto params = init_parameters<double>(cfg, rng);
    const auto x = random_input(2, Dims3{8, 8, 8}, rng);
    const auto probs = forward(params, cfg, x);
    CHECK(probs.channels == 2);
    CHECK(probs.dims == x.dims);

    const std::size_t n = probs.voxels_per_channel();
    for (std::size_t v = 0; v < n; ++v) {
        double sum = 0.0;
        for (int c = 0; c < 2; ++c) {
            const double p = probs.data[static_cast<Eigen::Index>(c * n + v)];
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
            sum += p;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("shape contract holds over random valid configs") {
    Rng rng(8);
    for (int trial = 0; trial < 8; ++trial) {
        UNetConfig cfg;
        cfg.levels = 1 + static_cast<int>(rng.uniform_below(3));
        cfg.root_features = 1 + static_cast<int>(rng.uniform_below(3));
        cfg.in_channels = 1 + static_cast<int>(rng.uniform_below(3));
        cfg.convs_per_level = 1 + static_cast<int>(rng.uniform_below(2));
        const int f = cfg.pool_factor();
        const Dims3 d{f * (1 + static_cast<int>(rng.uniform_below(2))),
                      f * (1 + static_cast<int>(rng.uniform_below(2))),
                      f * (1 + static_cast<int>(rng.uniform_below(2)))};
        const auto params = init_parameters<double>(cfg, rng);
        const auto x = random_input(cfg.in_channels, d, rng);
        const auto probs = forward(params, cfg, x);
        CHECK(probs.dims == d);
        CHECK(probs.channels == cfg.classes);
    }
}

TEST_CASE("forward is bit-stable across repeated evaluation") {
    Rng rng(9);
    const auto cfg = tiny_config();
    const auto params = init_parameters<double>(cfg, rng);
    const auto x = random_input(2, Dims3{8, 8, 8}, rng);
    const auto p1 = forward(params, cfg, x);
    const auto p2 = forward(params, cfg, x);
    CHECK((p1.data == p2.data).all());
}

TEST_CASE("divisibility and shape errors") {
    Rng rng(10);
    const auto cfg = tiny_config();
    const auto params = init_parameters<double>(cfg, rng);
    const auto bad_dims = random_input(2, Dims3{7, 8, 8}, rng);
    CHECK_THROWS_AS(forward(params, cfg, bad_dims), Error);
    const auto bad_channels = random_input(3, Dims3{8, 8, 8}, rng);
    CHECK_THROWS_AS(forward(params, cfg, bad_channels), Error);

    UNetConfig other = cfg;
    other.root_features = 3;
    const auto wrong_params = init_parameters<double>(other, rng);
    CHECK_THROWS_AS(forward(wrong_params, cfg, random_input(2, Dims3{8, 8, 8}, rng)), Error);
}

TEST_CASE("center voxel of a constant input matches the scalar-path oracle") {
    // levels=1 network on a constant input: away from the padding border,
    // every conv tap sees the same value, so the whole network collapses to
    // a per-channel affine map. The oracle below evaluates that scalar
    // recursion straight from the parameter store.
    Rng rng(11);
    UNetConfig cfg;
    cfg.levels = 1;
    cfg.root_features = 3;
    cfg.in_channels = 2;
    cfg.convs_per_level = 2;
    const auto params = init_parameters<double>(cfg, rng);

    const Dims3 d{7, 7, 7};
    Tensor4<double> x(2, d);
    const double v0 = 0.37, v1 = -0.81;
    x.channel(0).setConstant(v0);
    x.channel(1).setConstant(v1);

    // scalar recursion through the conv blocks
    std::vector<double> values{v0, v1};
    for (int b = 0; b < cfg.convs_per_level; ++b) {
        const std::string prefix = "enc0.conv" + std::to_string(b);
        const auto& w = params[prefix + ".weight"];
        const auto& bias = params[prefix + ".bias"];
        const auto& slopes = params[prefix + ".prelu"];
        const int ci = static_cast<int>(values.size());
        const int co = cfg.root_features;
        std::vector<double> next(static_cast<std::size_t>(co));
        for (int o = 0; o < co; ++o) {
            double acc = bias[o];
            for (int i = 0; i < ci; ++i) {
                double wsum = 0.0;
                for (int k = 0; k < 27; ++k) wsum += w[(o * ci + i) * 27 + k];
                acc += wsum * values[static_cast<std::size_t>(i)];
            }
            next[static_cast<std::size_t>(o)] = acc > 0.0 ? acc : slopes[o] * acc;
        }
        values = std::move(next);
    }
    const auto& hw = params["head.weight"];
    const auto& hb = params["head.bias"];
    std::vector<double> logits(2);
    for (int o = 0; o < 2; ++o) {
        double acc = hb[o];
        for (int i = 0; i < cfg.root_features; ++i)
            acc += hw[o * cfg.root_features + i] * values[static_cast<std::size_t>(i)];
        logits[static_cast<std::size_t>(o)] = acc;
    }
    const double m = std::max(logits[0], logits[1]);
    const double e0 = std::exp(logits[0] - m), e1 = std::exp(logits[1] - m);
    const double oracle_p0 = e0 / (e0 + e1);

    const auto probs = forward(params, cfg, x);
    CHECK(probs.at(0, 3, 3, 3) == doctest::Approx(oracle_p0).epsilon(1e-12));
}

TEST_CASE("linearity probe: slope-1 PReLU makes a levels-1 network affine") {
    Rng rng(12);
    UNetConfig cfg;
    cfg.levels = 1;
    cfg.root_features = 3;
    cfg.in_channels = 2;
    cfg.convs_per_level = 2;
    auto params = init_parameters<double>(cfg, rng);
    for (auto& e : params.entries)
        if (e.name.ends_with(".prelu")) e.values.setConstant(1.0);

    const Dims3 d{6, 5, 4};
    const auto x = random_input(2, d, rng);
    Tensor4<double> zero(2, d);
    Tensor4<double> ax = x;
    const double a = 1.7;
    ax.data *= a;

    const auto f_x = forward_logits(params, cfg, x);
    const auto f_ax = forward_logits(params, cfg, ax);
    const auto f_0 = forward_logits(params, cfg, zero);
    const Array<double> lhs = f_ax.data - f_0.data;
    const Array<double> rhs = a * (f_x.data - f_0.data);
    CHECK((lhs - rhs).abs().maxCoeff() < 1e-8);
}

TEST_CASE("linearity probe: zero-bias slope-1 deeper net is positively homogeneous") {
    // with all biases zero and identity activations, conv/pool/tconv/concat
    // all commute with positive scaling, so f(a*x) == a*f(x)
    Rng rng(13);
    const auto cfg = tiny_config();
    auto params = init_parameters<double>(cfg, rng);
    for (auto& e : params.entries) {
        if (e.name.ends_with(".prelu")) e.values.setConstant(1.0);
        if (e.name.ends_with(".bias")) e.values.setZero();
    }
    const auto x = random_input(2, Dims3{8, 8, 8}, rng);
    Tensor4<double> ax = x;
    const double a = 2.3;
    ax.data *= a;
    const auto f_x = forward_logits(params, cfg, x);
    const auto f_ax = forward_logits(params, cfg, ax);
    CHECK((f_ax.data - a * f_x.data).abs().maxCoeff() < 1e-8);
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    Rng rng(14);
    const auto cfg = tiny_config();
    const auto params = init_parameters<double>(cfg, rng);
    CheckpointMeta meta;
    meta.config = cfg;
    meta.channel_names = {"T1", "FLAIR"};
    meta.seed = 123;

    const auto dir = std::filesystem::temp_directory_path() /
                     ("msseg_ckpt_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    write_checkpoint(params, meta, dir);
    const auto [loaded, loaded_meta] = read_checkpoint<double>(dir);
    REQUIRE(loaded.entries.size() == params.entries.size());
    for (std::size_t i = 0; i < params.entries.size(); ++i) {
        CHECK(loaded.entries[i].name == params.entries[i].name);
        CHECK((loaded.entries[i].values == params.entries[i].values).all());
    }
    CHECK(loaded_meta.channel_names == meta.channel_names);
    CHECK(loaded_meta.seed == 123);
    CHECK(loaded_meta.config.root_features == cfg.root_features);
    std::filesystem::remove_all(dir);
}
