#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "msseg/net/ops.hpp"
#include "msseg/rng.hpp"
#include "msseg/tensor.hpp"

namespace msseg::net {

/// Architecture knobs. `levels` counts resolution levels per path (the
/// deepest one is the bottleneck), so spatial dims must be divisible by
/// 2^(levels-1). Channel width at level l is root_features * 2^l. Every
/// conv is 3x3x3 same-padding followed by bias and per-channel PReLU;
/// down is 2x2x2 max pool, up is 2x2x2 stride-2 transposed conv with a
/// skip concatenation, and the head is a 1x1x1 conv to `classes` channels.
struct UNetConfig {
    int levels = 3;
    int root_features = 96;
    int in_channels = 4;
    int classes = 2;
    int convs_per_level = 2;
    double prelu_init_slope = 0.25;

    int level_features(int level) const { return root_features << level; }
    int pool_factor() const { return 1 << (levels - 1); }

    void validate() const {
        require(levels >= 1, "UNetConfig: levels must be >= 1");
        require(root_features >= 1, "UNetConfig: root_features must be >= 1");
        require(in_channels >= 1, "UNetConfig: in_channels must be >= 1");
        require(classes >= 2, "UNetConfig: classes must be >= 2");
        require(convs_per_level >= 1, "UNetConfig: convs_per_level must be >= 1");
    }

    bool dims_divisible(Dims3 d) const {
        const int f = pool_factor();
        return d.nx % f == 0 && d.ny % f == 0 && d.nz % f == 0;
    }

    void check_input_dims(Dims3 d) const {
        require(dims_divisible(d), "input dims " + dims_str(d) + " must be divisible by 2^(levels-1) = " +
                                       std::to_string(pool_factor()));
    }
};

/// Named, shaped parameter arrays in a stable creation order. Also reused
/// for gradients and Adam moments (same names and shapes).
template <typename S>
struct ParameterStore {
    struct Entry {
        std::string name;
        std::vector<int> shape;
        Array<S> values;
    };

    std::vector<Entry> entries;
    std::unordered_map<std::string, std::size_t> by_name;

    Array<S>& add(const std::string& name, std::vector<int> shape) {
        require(!by_name.count(name), "ParameterStore: duplicate parameter '" + name + "'");
        std::size_t n = 1;
        for (int s : shape) {
            require(s >= 1, "ParameterStore: bad shape for '" + name + "'");
            n *= static_cast<std::size_t>(s);
        }
        by_name[name] = entries.size();
        entries.push_back({name, std::move(shape), Array<S>::Zero(static_cast<Eigen::Index>(n))});
        return entries.back().values;
    }

    bool has(const std::string& name) const { return by_name.count(name) > 0; }

    Array<S>& operator[](const std::string& name) {
        const auto it = by_name.find(name);
        require(it != by_name.end(), "ParameterStore: unknown parameter '" + name + "'");
        return entries[it->second].values;
    }
    const Array<S>& operator[](const std::string& name) const {
        const auto it = by_name.find(name);
        require(it != by_name.end(), "ParameterStore: unknown parameter '" + name + "'");
        return entries[it->second].values;
    }

    std::size_t total_size() const {
        std::size_t n = 0;
        for (const auto& e : entries) n += static_cast<std::size_t>(e.values.size());
        return n;
    }

    /// Zero-valued store with the same names and shapes.
    ParameterStore<S> zeros_like() const {
        ParameterStore<S> out;
        for (const auto& e : entries) out.add(e.name, e.shape);
        return out;
    }

    void check_same_shape(const ParameterStore<S>& other, const std::string& what) const {
        require(entries.size() == other.entries.size(), what + ": parameter count mismatch");
        for (std::size_t i = 0; i < entries.size(); ++i) {
            require(entries[i].name == other.entries[i].name &&
                        entries[i].shape == other.entries[i].shape,
                    what + ": shape mismatch at parameter '" + entries[i].name + "'");
        }
    }
};

namespace detail {

struct BlockDef {
    std::string prefix;  // e.g. "enc0.conv1"
    ConvShape shape;
};

/// The architecture walk, shared by parameter creation, forward and
/// backward so the three can never disagree.
struct Plan {
    std::vector<std::vector<BlockDef>> enc;  // [level][block]
    std::vector<ConvShape> up;               // tconv into level l, index l in [0, levels-2]
    std::vector<std::vector<BlockDef>> dec;  // [level][block], levels-1 entries used
    ConvShape head;

    static Plan make(const UNetConfig& cfg) {
        Plan p;
        p.enc.resize(static_cast<std::size_t>(cfg.levels));
        for (int l = 0; l < cfg.levels; ++l) {
            const int width = cfg.level_features(l);
            int cin = l == 0 ? cfg.in_channels : cfg.level_features(l - 1);
            for (int i = 0; i < cfg.convs_per_level; ++i) {
                p.enc[static_cast<std::size_t>(l)].push_back(
                    {"enc" + std::to_string(l) + ".conv" + std::to_string(i),
                     ConvShape{width, cin, 3, 3, 3}});
                cin = width;
            }
        }
        p.up.resize(static_cast<std::size_t>(std::max(0, cfg.levels - 1)));
        p.dec.resize(static_cast<std::size_t>(std::max(0, cfg.levels - 1)));
        for (int l = cfg.levels - 2; l >= 0; --l) {
            const int width = cfg.level_features(l);
            p.up[static_cast<std::size_t>(l)] = ConvShape{width, cfg.level_features(l + 1), 2, 2, 2};
            int cin = 2 * width;  // skip + upsampled
            for (int i = 0; i < cfg.convs_per_level; ++i) {
                p.dec[static_cast<std::size_t>(l)].push_back(
                    {"dec" + std::to_string(l) + ".conv" + std::to_string(i),
                     ConvShape{width, cin, 3, 3, 3}});
                cin = width;
            }
        }
        p.head = ConvShape{cfg.classes, cfg.level_features(0), 1, 1, 1};
        return p;
    }
};

template <typename S>
void add_conv_block(ParameterStore<S>& store, const BlockDef& b, bool prelu) {
    store.add(b.prefix + ".weight", {b.shape.co, b.shape.ci, b.shape.kz, b.shape.ky, b.shape.kx});
    store.add(b.prefix + ".bias", {b.shape.co});
    if (prelu) store.add(b.prefix + ".prelu", {b.shape.co});
}

}  // namespace detail

/// Empty (all-zero) parameter store with the full set of names and shapes
/// for `cfg`. Creation order is the architecture walk order.
template <typename S>
ParameterStore<S> make_parameter_store(const UNetConfig& cfg) {
    cfg.validate();
    const auto plan = detail::Plan::make(cfg);
    ParameterStore<S> store;
    for (const auto& level : plan.enc)
        for (const auto& b : level) detail::add_conv_block(store, b, true);
    for (int l = cfg.levels - 2; l >= 0; --l) {
        const auto& sh = plan.up[static_cast<std::size_t>(l)];
        store.add("up" + std::to_string(l) + ".weight", {sh.co, sh.ci, sh.kz, sh.ky, sh.kx});
        store.add("up" + std::to_string(l) + ".bias", {sh.co});
        for (const auto& b : plan.dec[static_cast<std::size_t>(l)])
            detail::add_conv_block(store, b, true);
    }
    store.add("head.weight", {plan.head.co, plan.head.ci, 1, 1, 1});
    store.add("head.bias", {plan.head.co});
    return store;
}

/// He-style init: conv and transposed-conv kernels drawn zero-mean normal
/// with variance 2 / fan_in (fan_in = ci * kx * ky * kz), biases zero,
/// PReLU slopes at cfg.prelu_init_slope. Deterministic given the stream.
template <typename S>
ParameterStore<S> init_parameters(const UNetConfig& cfg, Rng& rng) {
    ParameterStore<S> store = make_parameter_store<S>(cfg);
    for (auto& e : store.entries) {
        if (e.name.ends_with(".bias")) continue;
        if (e.name.ends_with(".prelu")) {
            e.values.setConstant(static_cast<S>(cfg.prelu_init_slope));
            continue;
        }
        // weight: shape is {co, ci, kz, ky, kx}
        std::size_t fan_in = 1;
        for (std::size_t i = 1; i < e.shape.size(); ++i)
            fan_in *= static_cast<std::size_t>(e.shape[i]);
        const double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
        for (Eigen::Index i = 0; i < e.values.size(); ++i)
            e.values[i] = static_cast<S>(rng.normal(0.0, sd));
    }
    return store;
}

/// Everything the backward pass needs from one forward evaluation.
template <typename S>
struct ForwardTrace {
    // Encoder: per level, per block, the block input and the pre-activation.
    std::vector<std::vector<Tensor4<S>>> enc_in, enc_pre;
    std::vector<Tensor4<S>> enc_out;                  // post-activation at each level
    std::vector<std::vector<std::size_t>> pool_arg;   // per down-transition
    // Decoder: tconv input, concatenated tensor, then conv block traces.
    std::vector<Tensor4<S>> up_in, cat;
    std::vector<std::vector<Tensor4<S>>> dec_in, dec_pre;
    Tensor4<S> head_in;
};

template <typename S>
void check_params_match(const ParameterStore<S>& params, const UNetConfig& cfg) {
    const ParameterStore<S> expected = make_parameter_store<S>(cfg);
    expected.check_same_shape(params, "network parameters vs config");
}

/// Forward pass up to the pre-softmax logits. When `trace` is non-null the
/// intermediates needed by `backward` are recorded.
template <typename S>
Tensor4<S> forward_logits(const ParameterStore<S>& params, const UNetConfig& cfg,
                          const Tensor4<S>& x, ForwardTrace<S>* trace = nullptr) {
    cfg.validate();
    require(x.channels == cfg.in_channels,
            "forward: input has " + std::to_string(x.channels) + " channels, config expects " +
                std::to_string(cfg.in_channels));
    cfg.check_input_dims(x.dims);
    check_params_match(params, cfg);
    const auto plan = detail::Plan::make(cfg);

    if (trace) {
        trace->enc_in.assign(static_cast<std::size_t>(cfg.levels), {});
        trace->enc_pre.assign(static_cast<std::size_t>(cfg.levels), {});
        trace->enc_out.clear();
        trace->pool_arg.assign(static_cast<std::size_t>(cfg.levels - 1), {});
        trace->up_in.assign(static_cast<std::size_t>(cfg.levels - 1), Tensor4<S>{});
        trace->cat.assign(static_cast<std::size_t>(cfg.levels - 1), Tensor4<S>{});
        trace->dec_in.assign(static_cast<std::size_t>(cfg.levels - 1), {});
        trace->dec_pre.assign(static_cast<std::size_t>(cfg.levels - 1), {});
    }

    auto run_block = [&](const detail::BlockDef& b, Tensor4<S>& t,
                         std::vector<Tensor4<S>>* trace_in, std::vector<Tensor4<S>>* trace_pre) {
        Tensor4<S> pre(b.shape.co, t.dims);
        conv_forward(t, params[b.prefix + ".weight"], params[b.prefix + ".bias"], b.shape, pre);
        if (trace_in) trace_in->push_back(t);
        Tensor4<S> post(b.shape.co, t.dims);
        prelu_forward(pre, params[b.prefix + ".prelu"], post);
        if (trace_pre) trace_pre->push_back(std::move(pre));
        t = std::move(post);
    };

    std::vector<Tensor4<S>> enc_out;
    Tensor4<S> t = x;
    for (int l = 0; l < cfg.levels; ++l) {
        for (const auto& b : plan.enc[static_cast<std::size_t>(l)])
            run_block(b, t, trace ? &trace->enc_in[static_cast<std::size_t>(l)] : nullptr,
                      trace ? &trace->enc_pre[static_cast<std::size_t>(l)] : nullptr);
        enc_out.push_back(t);
        if (l + 1 < cfg.levels) {
            Tensor4<S> pooled(t.channels, Dims3{t.dims.nx / 2, t.dims.ny / 2, t.dims.nz / 2});
            std::vector<std::size_t> arg;
            maxpool2_forward(t, pooled, arg);
            if (trace) trace->pool_arg[static_cast<std::size_t>(l)] = std::move(arg);
            t = std::move(pooled);
        }
    }
    if (trace) trace->enc_out = enc_out;

    for (int l = cfg.levels - 2; l >= 0; --l) {
        const auto& sh = plan.up[static_cast<std::size_t>(l)];
        if (trace) trace->up_in[static_cast<std::size_t>(l)] = t;
        Tensor4<S> upped(sh.co, Dims3{t.dims.nx * 2, t.dims.ny * 2, t.dims.nz * 2});
        tconv2_forward(t, params["up" + std::to_string(l) + ".weight"],
                       params["up" + std::to_string(l) + ".bias"], sh, upped);
        Tensor4<S> merged = concat_channels(enc_out[static_cast<std::size_t>(l)], upped);
        if (trace) trace->cat[static_cast<std::size_t>(l)] = merged;
        t = std::move(merged);
        for (const auto& b : plan.dec[static_cast<std::size_t>(l)])
            run_block(b, t, trace ? &trace->dec_in[static_cast<std::size_t>(l)] : nullptr,
                      trace ? &trace->dec_pre[static_cast<std::size_t>(l)] : nullptr);
    }

    if (trace) trace->head_in = t;
    Tensor4<S> logits(cfg.classes, t.dims);
    conv_forward(t, params["head.weight"], params["head.bias"], plan.head, logits);
    return logits;
}

/// Per-voxel class probabilities (softmax over the logits).
template <typename S>
Tensor4<S> forward(const ParameterStore<S>& params, const UNetConfig& cfg, const Tensor4<S>& x) {
    return softmax_channels(forward_logits(params, cfg, x));
}

/// Reverse-mode gradients of a scalar objective through the whole network,
/// given d(objective)/d(logits). Accumulates into `grads` (callers zero it
/// once per batch). Returns nothing; gradient w.r.t. the input is discarded.
template <typename S>
void backward(const ParameterStore<S>& params, const UNetConfig& cfg,
              const ForwardTrace<S>& trace, const Tensor4<S>& grad_logits,
              ParameterStore<S>& grads) {
    const auto plan = detail::Plan::make(cfg);
    grads.check_same_shape(params, "gradient store vs parameters");

    auto block_backward = [&](const detail::BlockDef& b, const Tensor4<S>& block_in,
                              const Tensor4<S>& pre, const Tensor4<S>& g_post) {
        Tensor4<S> g_pre(pre.channels, pre.dims);
        prelu_backward(pre, params[b.prefix + ".prelu"], g_post, g_pre,
                       grads[b.prefix + ".prelu"]);
        Tensor4<S> g_in(block_in.channels, block_in.dims);
        conv_backward(block_in, params[b.prefix + ".weight"], b.shape, g_pre, g_in,
                      grads[b.prefix + ".weight"], grads[b.prefix + ".bias"]);
        return g_in;
    };

    // Head.
    Tensor4<S> g(trace.head_in.channels, trace.head_in.dims);
    conv_backward(trace.head_in, params["head.weight"], plan.head, grad_logits, g,
                  grads["head.weight"], grads["head.bias"]);

    // Decoder levels, shallowest first in the forward, so reverse here.
    std::vector<Tensor4<S>> g_enc_out(static_cast<std::size_t>(cfg.levels));
    for (int l = 0; l < cfg.levels - 1; ++l) {
        const auto ul = static_cast<std::size_t>(l);
        for (int i = cfg.convs_per_level - 1; i >= 0; --i) {
            const auto& b = plan.dec[ul][static_cast<std::size_t>(i)];
            g = block_backward(b, trace.dec_in[ul][static_cast<std::size_t>(i)],
                               trace.dec_pre[ul][static_cast<std::size_t>(i)], g);
        }
        // g is now the gradient at the concatenated tensor [skip | upsampled].
        const Tensor4<S>& skip = trace.enc_out[ul];
        Tensor4<S> g_skip(skip.channels, skip.dims);
        Tensor4<S> g_up(g.channels - skip.channels, g.dims);
        split_channels_grad(g, g_skip, g_up);
        g_enc_out[ul] = std::move(g_skip);

        const auto& sh = plan.up[ul];
        Tensor4<S> g_up_in(trace.up_in[ul].channels, trace.up_in[ul].dims);
        tconv2_backward(trace.up_in[ul], params["up" + std::to_string(l) + ".weight"], sh, g_up,
                        g_up_in, grads["up" + std::to_string(l) + ".weight"],
                        grads["up" + std::to_string(l) + ".bias"]);
        // up_in[l] is the output of decoder level l+1 (or the bottleneck when
        // l+1 == levels-1), so this is the incoming gradient for the next walk.
        g = std::move(g_up_in);
    }

    // Encoder, deepest level first. The bottleneck receives only g (from the
    // first up step); shallower levels receive pool-backward(g) + skip grad.
    for (int l = cfg.levels - 1; l >= 0; --l) {
        const auto ul = static_cast<std::size_t>(l);
        Tensor4<S> g_out;
        if (l == cfg.levels - 1) {
            g_out = std::move(g);
        } else {
            const Tensor4<S>& below = trace.enc_out[ul];  // dims of this level
            Tensor4<S> g_pool(below.channels, below.dims);
            maxpool2_backward(g, trace.pool_arg[ul], g_pool);
            g_out = std::move(g_pool);
            g_out.data += g_enc_out[ul].data;  // skip-connection gradient
        }
        for (int i = cfg.convs_per_level - 1; i >= 0; --i) {
            const auto& b = plan.enc[ul][static_cast<std::size_t>(i)];
            g_out = block_backward(b, trace.enc_in[ul][static_cast<std::size_t>(i)],
                                   trace.enc_pre[ul][static_cast<std::size_t>(i)], g_out);
        }
        g = std::move(g_out);  // gradient into the pool of the level above
    }
}

}  // namespace msseg::net
