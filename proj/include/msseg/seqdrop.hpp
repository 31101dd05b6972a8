#pragma once

#include <algorithm>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "msseg/rng.hpp"
#include "msseg/volume.hpp"

namespace msseg {

/// Distribution over how many channels are preserved per training sample.
/// preserve_weights[i] is the (unnormalized) mass for preserving n = i+1
/// channels; n = 0 is structurally impossible. Given n, the preserved
/// subset is uniform over all size-n subsets.
struct DropoutPolicy {
    std::vector<double> preserve_weights;

    /// Uniform over n in {1..C}, keep-all included. Table 1 evaluates the
    /// dropout network with no missing sequence, so the full stack is a
    /// trained case under this default.
    static DropoutPolicy uniform(int channels) {
        return DropoutPolicy{std::vector<double>(static_cast<std::size_t>(channels), 1.0)};
    }

    /// Literal reading of 0 < n < C: keep-all never drawn. Requires C >= 2.
    static DropoutPolicy uniform_strict(int channels) {
        require(channels >= 2, "DropoutPolicy::uniform_strict needs >= 2 channels");
        std::vector<double> w(static_cast<std::size_t>(channels), 1.0);
        w.back() = 0.0;
        return DropoutPolicy{std::move(w)};
    }

    /// All mass at n = C: dropout disabled (the baseline training arm).
    static DropoutPolicy keep_all(int channels) {
        std::vector<double> w(static_cast<std::size_t>(channels), 0.0);
        w.back() = 1.0;
        return DropoutPolicy{std::move(w)};
    }

    void validate(int channels) const {
        require(static_cast<int>(preserve_weights.size()) == channels,
                "DropoutPolicy: weight vector has " + std::to_string(preserve_weights.size()) +
                    " entries for " + std::to_string(channels) + " channels");
        double total = 0.0;
        for (double w : preserve_weights) {
            require(w >= 0.0, "DropoutPolicy: negative weight");
            total += w;
        }
        require(total > 0.0, "DropoutPolicy: all weights zero");
    }
};

/// Draw the preserved channel index set: n from the policy, then a uniform
/// size-n subset via partial Fisher-Yates. Returned indices are sorted.
inline std::vector<int> draw_preserved_set(const DropoutPolicy& policy, int channels, Rng& rng) {
    policy.validate(channels);
    const int n = 1 + static_cast<int>(rng.categorical(policy.preserve_weights));
    std::vector<int> idx(static_cast<std::size_t>(channels));
    for (int i = 0; i < channels; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < n; ++i) {
        const auto j = i + static_cast<int>(rng.uniform_below(
                               static_cast<std::uint64_t>(channels - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(n));
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// Train-time sequence dropout: preserved channels are bit-identical to the
/// input, dropped channels become all-zero volumes. Channel order and count
/// are unchanged. Returns the preserved channel names for the run log.
template <typename Scalar>
std::pair<MultiChannelVolume<Scalar>, std::vector<std::string>> apply_sequence_dropout(
    const MultiChannelVolume<Scalar>& patch, const DropoutPolicy& policy, Rng& rng) {
    const int C = patch.channel_count();
    const std::vector<int> keep = draw_preserved_set(policy, C, rng);

    std::vector<bool> preserved(static_cast<std::size_t>(C), false);
    for (int i : keep) preserved[static_cast<std::size_t>(i)] = true;

    std::vector<Volume<Scalar>> out;
    std::vector<std::string> names;
    out.reserve(static_cast<std::size_t>(C));
    for (int c = 0; c < C; ++c) {
        const auto& ch = patch.channels[static_cast<std::size_t>(c)];
        if (preserved[static_cast<std::size_t>(c)]) {
            out.push_back(ch);
            names.push_back(ch.name);
        } else {
            out.push_back(zero_like<Scalar>(ch.dims, ch.name));
        }
    }
    return {MultiChannelVolume<Scalar>(std::move(out)), std::move(names)};
}

/// Deployment rule: channels in `available` pass through unchanged, all
/// others are replaced by zero volumes. Idempotent.
template <typename Scalar>
MultiChannelVolume<Scalar> mask_missing(const MultiChannelVolume<Scalar>& vol,
                                        const std::set<std::string>& available) {
    require(!available.empty(), "mask_missing: empty available set");
    const auto names = vol.channel_names();
    for (const auto& a : available)
        require(std::find(names.begin(), names.end(), a) != names.end(),
                "mask_missing: unknown channel '" + a + "'");

    std::vector<Volume<Scalar>> out;
    out.reserve(vol.channels.size());
    for (const auto& ch : vol.channels) {
        if (available.count(ch.name))
            out.push_back(ch);
        else
            out.push_back(zero_like<Scalar>(ch.dims, ch.name));
    }
    return MultiChannelVolume<Scalar>(std::move(out));
}

}  // namespace msseg
