#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "msseg/net/predict.hpp"
#include "msseg/net/unet.hpp"
#include "msseg/phantom.hpp"
#include "msseg/sampler.hpp"
#include "msseg/seqdrop.hpp"
#include "msseg/train/adam.hpp"
#include "msseg/train/loss.hpp"

namespace msseg::app {

/// One JSON document per run, sections phantom / sampler / seqdrop / net /
/// train / predict / metrics. Any subset of fields may be present; the rest
/// keep their defaults. CLI flags override config fields and the effective
/// merged config is echoed into every run manifest.
struct AppConfig {
    phantom::PhantomConfig phantom;
    int phantom_count = 1;

    PatchSpec patch;

    bool seqdrop_enabled = true;
    // Unnormalized mass for preserving n = i+1 channels; empty means uniform
    // over n in {1..C}.
    std::vector<double> seqdrop_preserve_weights;

    net::UNetConfig net;

    int epochs = 1000;
    int steps_per_epoch = 100;
    int batch_size = 1;
    std::uint64_t seed = 0;
    train::LossConfig loss;
    train::AdamHyper adam;

    net::SlidingWindowSpec window;

    int connectivity = 26;
};

/// Parse a config document, starting from defaults. Unknown keys are
/// rejected so typos fail loudly.
AppConfig config_from_json(const nlohmann::json& j);

/// Defaults when no --config is given; otherwise read and parse the file.
AppConfig load_config(const std::filesystem::path& path);

/// Full effective-config echo (every field, resolved).
nlohmann::json config_to_json(const AppConfig& cfg);

/// The dropout policy the training arm actually uses: keep-all when
/// sequence dropout is disabled, otherwise the configured (or uniform)
/// preserve-count distribution.
DropoutPolicy effective_policy(const AppConfig& cfg, int channels);

}  // namespace msseg::app
