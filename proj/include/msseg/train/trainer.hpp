#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "msseg/labels.hpp"
#include "msseg/net/unet.hpp"
#include "msseg/sampler.hpp"
#include "msseg/seqdrop.hpp"
#include "msseg/train/adam.hpp"
#include "msseg/train/loss.hpp"

namespace msseg::train {

/// One training subject: normalized input stack plus merged labels.
template <typename S>
struct TrainCase {
    std::string id;
    MultiChannelVolume<S> input;
    LabelVolume<S> labels;
};

/// Training loop knobs. An epoch is steps_per_epoch optimizer steps; patch
/// sampling is stochastic, so there is no natural dataset pass.
struct TrainConfig {
    int epochs = 1000;
    int steps_per_epoch = 100;
    int batch_size = 1;
    PatchSpec patch;
    DropoutPolicy policy;
    std::uint64_t seed = 0;

    void validate() const {
        require(epochs >= 1 && steps_per_epoch >= 1 && batch_size >= 1,
                "TrainConfig: epochs, steps_per_epoch and batch_size must be >= 1");
        patch.validate();
    }
};

template <typename S>
struct TrainSample {
    Tensor4<S> input;
    LabelVolume<S> labels;
};

/// Gradient of the mean batch loss with respect to every parameter.
/// Backward is linear in the logit gradient, so each sample's gradient is
/// scaled by 1/batch and accumulated.
template <typename S>
std::pair<S, net::ParameterStore<S>> compute_gradients(const net::ParameterStore<S>& params,
                                                       const net::UNetConfig& cfg,
                                                       std::span<const TrainSample<S>> batch,
                                                       const LossConfig& loss_cfg) {
    require(!batch.empty(), "compute_gradients: empty batch");
    net::ParameterStore<S> grads = params.zeros_like();
    const S inv_b = S(1) / static_cast<S>(batch.size());
    S mean_loss = S(0);
    for (const auto& sample : batch) {
        net::ForwardTrace<S> trace;
        const Tensor4<S> logits = net::forward_logits(params, cfg, sample.input, &trace);
        const Tensor4<S> probs = net::softmax_channels(logits);
        LossResult<S> lr = weighted_ce_loss(probs, sample.labels, loss_cfg);
        mean_loss += lr.loss * inv_b;
        lr.grad_logits.data *= inv_b;
        net::backward(params, cfg, trace, lr.grad_logits, grads);
    }
    for (const auto& e : grads.entries)
        for (Eigen::Index i = 0; i < e.values.size(); ++i)
            require(std::isfinite(static_cast<double>(e.values[i])),
                    "compute_gradients: non-finite gradient in parameter '" + e.name + "'");
    return {mean_loss, std::move(grads)};
}

/// Which channels survived sequence dropout for one drawn sample.
struct PreservedRecord {
    long step = 0;   // 1-based global optimizer step
    int sample = 0;  // index within the batch
    std::string case_id;
    std::vector<std::string> preserved;
};

template <typename S>
struct TrainResult {
    net::ParameterStore<S> params;
    std::vector<double> epoch_loss;
    std::vector<double> step_loss;
    std::vector<PreservedRecord> preserved_log;
};

/// Full training loop: biased patch sampling, sequence dropout, forward,
/// weighted cross entropy, backprop, Adam. Deterministic given (cases,
/// configs, seed): every random draw comes from a stream derived from
/// (seed, step, sample), so the result does not depend on evaluation order.
template <typename S>
TrainResult<S> train(const std::vector<TrainCase<S>>& cases, const net::UNetConfig& net_cfg,
                     const TrainConfig& train_cfg, const LossConfig& loss_cfg,
                     const AdamHyper& adam_hyper) {
    require(!cases.empty(), "train: empty dataset");
    net_cfg.validate();
    train_cfg.validate();
    loss_cfg.validate();
    adam_hyper.validate();
    net_cfg.check_input_dims(train_cfg.patch.size);
    for (const auto& c : cases) {
        require(c.input.channel_count() == net_cfg.in_channels,
                "train: case '" + c.id + "' has " + std::to_string(c.input.channel_count()) +
                    " channels, config expects " + std::to_string(net_cfg.in_channels));
        require(c.input.dims() == c.labels.dims, "train: case '" + c.id + "' label dims mismatch");
        require(c.input.channel_names() == cases.front().input.channel_names(),
                "train: case '" + c.id + "' channel names differ from case '" +
                    cases.front().id + "'");
        train_cfg.policy.validate(net_cfg.in_channels);
    }

    Rng init_rng(derive_seed(train_cfg.seed, 0, 0));
    net::ParameterStore<S> params = net::init_parameters<S>(net_cfg, init_rng);
    AdamState<S> state = AdamState<S>::zeros_like(params);

    std::vector<CenterSampler<S>> samplers;
    samplers.reserve(cases.size());
    for (const auto& c : cases) samplers.emplace_back(c.labels);

    TrainResult<S> result;
    long t = 0;
    for (int epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
        double epoch_sum = 0.0;
        for (int step = 1; step <= train_cfg.steps_per_epoch; ++step) {
            ++t;
            std::vector<TrainSample<S>> batch;
            batch.reserve(static_cast<std::size_t>(train_cfg.batch_size));
            for (int s = 0; s < train_cfg.batch_size; ++s) {
                Rng rng(derive_seed(train_cfg.seed, static_cast<std::uint64_t>(t),
                                    static_cast<std::uint64_t>(s) + 1));
                const auto ci = rng.uniform_below(cases.size());
                const auto& c = cases[ci];
                const Coord3 center =
                    clamp_patch_center(samplers[ci].draw_unclamped(
                                           train_cfg.patch.lesion_center_prob, rng),
                                       c.labels.dims, train_cfg.patch.size);
                auto [patch, label_patch] =
                    extract_patch(c.input, c.labels, center, train_cfg.patch);
                auto [dropped, preserved] =
                    apply_sequence_dropout(patch, train_cfg.policy, rng);
                result.preserved_log.push_back({t, s, c.id, preserved});
                batch.push_back({to_tensor(dropped), std::move(label_patch)});
            }

            auto [loss, grads] = compute_gradients<S>(
                params, net_cfg, std::span<const TrainSample<S>>(batch), loss_cfg);
            if (!std::isfinite(static_cast<double>(loss)))
                throw Error("train: non-finite loss at epoch " + std::to_string(epoch) +
                            ", step " + std::to_string(step) + " (global step " +
                            std::to_string(t) + ")");
            adam_step(params, grads, state, t, adam_hyper);
            result.step_loss.push_back(static_cast<double>(loss));
            epoch_sum += static_cast<double>(loss);
        }
        result.epoch_loss.push_back(epoch_sum / train_cfg.steps_per_epoch);
    }
    result.params = std::move(params);
    return result;
}

}  // namespace msseg::train
