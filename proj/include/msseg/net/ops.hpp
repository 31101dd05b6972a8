#pragma once

#include <vector>

#include "msseg/tensor.hpp"

namespace msseg::net {

/// Conv weight geometry. Layout of the flat array is
/// w[co][ci][dz][dy][dx], x fastest, matching volume storage.
struct ConvShape {
    int co = 0;
    int ci = 0;
    int kx = 0;
    int ky = 0;
    int kz = 0;

    std::size_t size() const {
        return static_cast<std::size_t>(co) * static_cast<std::size_t>(ci) *
               static_cast<std::size_t>(kx) * static_cast<std::size_t>(ky) *
               static_cast<std::size_t>(kz);
    }
    std::size_t index(int o, int i, int dz, int dy, int dx) const {
        return ((static_cast<std::size_t>(o) * static_cast<std::size_t>(ci) +
                 static_cast<std::size_t>(i)) *
                    static_cast<std::size_t>(kz) * static_cast<std::size_t>(ky) *
                    static_cast<std::size_t>(kx) +
                (static_cast<std::size_t>(dz) * static_cast<std::size_t>(ky) +
                 static_cast<std::size_t>(dy)) *
                    static_cast<std::size_t>(kx) +
                static_cast<std::size_t>(dx));
    }
};

/// Same-padding stride-1 3D convolution with an odd kernel. Output voxel
/// (x,y,z) of channel co accumulates w[co][ci][dz][dy][dx] *
/// in[ci](x+dx-rx, y+dy-ry, z+dz-rz) over in-bounds taps, plus bias.
template <typename S>
void conv_forward(const Tensor4<S>& in, const Array<S>& w, const Array<S>& b,
                  const ConvShape& shape, Tensor4<S>& out) {
    require(shape.kx % 2 == 1 && shape.ky % 2 == 1 && shape.kz % 2 == 1,
            "conv_forward: kernel dims must be odd");
    require(in.channels == shape.ci && out.channels == shape.co && in.dims == out.dims,
            "conv_forward: tensor/weight shape mismatch");
    require(static_cast<std::size_t>(w.size()) == shape.size() && b.size() == shape.co,
            "conv_forward: weight/bias size mismatch");
    const int rx = shape.kx / 2, ry = shape.ky / 2, rz = shape.kz / 2;
    const Dims3 d = in.dims;

    for (int co = 0; co < shape.co; ++co) out.channel(co).setConstant(b[co]);

    for (int co = 0; co < shape.co; ++co) {
        for (int ci = 0; ci < shape.ci; ++ci) {
            for (int kz = 0; kz < shape.kz; ++kz) {
                const int dz = kz - rz;
                for (int ky = 0; ky < shape.ky; ++ky) {
                    const int dy = ky - ry;
                    for (int kx = 0; kx < shape.kx; ++kx) {
                        const int dx = kx - rx;
                        const S wv = w[static_cast<Eigen::Index>(shape.index(co, ci, kz, ky, kx))];
                        const int z0 = std::max(0, -dz), z1 = std::min(d.nz, d.nz - dz);
                        const int y0 = std::max(0, -dy), y1 = std::min(d.ny, d.ny - dy);
                        const int x0 = std::max(0, -dx), x1 = std::min(d.nx, d.nx - dx);
                        for (int z = z0; z < z1; ++z) {
                            for (int y = y0; y < y1; ++y) {
                                S* orow = out.data.data() + out.index(co, x0, y, z);
                                const S* irow =
                                    in.data.data() + in.index(ci, x0 + dx, y + dy, z + dz);
                                for (int x = 0; x < x1 - x0; ++x) orow[x] += wv * irow[x];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Gradients of conv_forward. grad_in is overwritten; grad_w and grad_b
/// are accumulated into (callers zero them once per batch).
template <typename S>
void conv_backward(const Tensor4<S>& in, const Array<S>& w, const ConvShape& shape,
                   const Tensor4<S>& grad_out, Tensor4<S>& grad_in, Array<S>& grad_w,
                   Array<S>& grad_b) {
    const int rx = shape.kx / 2, ry = shape.ky / 2, rz = shape.kz / 2;
    const Dims3 d = in.dims;
    grad_in.data.setZero();

    for (int co = 0; co < shape.co; ++co)
        grad_b[co] += grad_out.channel(co).sum();

    for (int co = 0; co < shape.co; ++co) {
        for (int ci = 0; ci < shape.ci; ++ci) {
            for (int kz = 0; kz < shape.kz; ++kz) {
                const int dz = kz - rz;
                for (int ky = 0; ky < shape.ky; ++ky) {
                    const int dy = ky - ry;
                    for (int kx = 0; kx < shape.kx; ++kx) {
                        const int dx = kx - rx;
                        const S wv = w[static_cast<Eigen::Index>(shape.index(co, ci, kz, ky, kx))];
                        S gw = S(0);
                        const int z0 = std::max(0, -dz), z1 = std::min(d.nz, d.nz - dz);
                        const int y0 = std::max(0, -dy), y1 = std::min(d.ny, d.ny - dy);
                        const int x0 = std::max(0, -dx), x1 = std::min(d.nx, d.nx - dx);
                        for (int z = z0; z < z1; ++z) {
                            for (int y = y0; y < y1; ++y) {
                                const S* grow =
                                    grad_out.data.data() + grad_out.index(co, x0, y, z);
                                const S* irow =
                                    in.data.data() + in.index(ci, x0 + dx, y + dy, z + dz);
                                S* girow =
                                    grad_in.data.data() + grad_in.index(ci, x0 + dx, y + dy, z + dz);
                                for (int x = 0; x < x1 - x0; ++x) {
                                    gw += grow[x] * irow[x];
                                    girow[x] += wv * grow[x];
                                }
                            }
                        }
                        grad_w[static_cast<Eigen::Index>(shape.index(co, ci, kz, ky, kx))] += gw;
                    }
                }
            }
        }
    }
}

/// PReLU with one learnable slope per channel: f(v) = v for v > 0, a_c * v
/// otherwise.
template <typename S>
void prelu_forward(const Tensor4<S>& in, const Array<S>& slopes, Tensor4<S>& out) {
    require(slopes.size() == in.channels, "prelu_forward: slope count mismatch");
    for (int c = 0; c < in.channels; ++c) {
        const S a = slopes[c];
        out.channel(c) = (in.channel(c) > S(0)).select(in.channel(c), a * in.channel(c));
    }
}

template <typename S>
void prelu_backward(const Tensor4<S>& pre, const Array<S>& slopes, const Tensor4<S>& grad_out,
                    Tensor4<S>& grad_in, Array<S>& grad_slopes) {
    for (int c = 0; c < pre.channels; ++c) {
        const S a = slopes[c];
        auto z = pre.channel(c);
        auto g = grad_out.channel(c);
        grad_in.channel(c) = (z > S(0)).select(g, a * g);
        grad_slopes[c] += ((z > S(0)).select(Array<S>::Zero(z.size()), z * g)).sum();
    }
}

/// 2x2x2 max pooling with stride 2. Requires even spatial dims. The flat
/// source index of each maximum is recorded for the backward pass; ties go
/// to the first candidate in (dz, dy, dx) scan order.
template <typename S>
void maxpool2_forward(const Tensor4<S>& in, Tensor4<S>& out, std::vector<std::size_t>& argmax) {
    const Dims3 d = in.dims;
    require(d.nx % 2 == 0 && d.ny % 2 == 0 && d.nz % 2 == 0,
            "maxpool2_forward: dims " + dims_str(d) + " not divisible by 2");
    require(out.channels == in.channels && out.dims == Dims3{d.nx / 2, d.ny / 2, d.nz / 2},
            "maxpool2_forward: bad output tensor");
    argmax.assign(out.size(), 0);
    for (int c = 0; c < in.channels; ++c) {
        for (int z = 0; z < out.dims.nz; ++z) {
            for (int y = 0; y < out.dims.ny; ++y) {
                for (int x = 0; x < out.dims.nx; ++x) {
                    S best = in.at(c, 2 * x, 2 * y, 2 * z);
                    std::size_t best_idx = in.index(c, 2 * x, 2 * y, 2 * z);
                    for (int dz = 0; dz < 2; ++dz)
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx) {
                                const S v = in.at(c, 2 * x + dx, 2 * y + dy, 2 * z + dz);
                                if (v > best) {
                                    best = v;
                                    best_idx = in.index(c, 2 * x + dx, 2 * y + dy, 2 * z + dz);
                                }
                            }
                    const std::size_t oi = out.index(c, x, y, z);
                    out.data[static_cast<Eigen::Index>(oi)] = best;
                    argmax[oi] = best_idx;
                }
            }
        }
    }
}

template <typename S>
void maxpool2_backward(const Tensor4<S>& grad_out, const std::vector<std::size_t>& argmax,
                       Tensor4<S>& grad_in) {
    grad_in.data.setZero();
    for (std::size_t i = 0; i < grad_out.size(); ++i)
        grad_in.data[static_cast<Eigen::Index>(argmax[i])] +=
            grad_out.data[static_cast<Eigen::Index>(i)];
}

/// 2x2x2 stride-2 transposed convolution (output dims doubled). Each output
/// voxel q receives exactly one input voxel p = q/2 through tap q mod 2:
/// out[co](q) = b[co] + sum_ci w[co][ci][qz&1][qy&1][qx&1] * in[ci](q>>1).
template <typename S>
void tconv2_forward(const Tensor4<S>& in, const Array<S>& w, const Array<S>& b,
                    const ConvShape& shape, Tensor4<S>& out) {
    require(shape.kx == 2 && shape.ky == 2 && shape.kz == 2, "tconv2_forward: kernel must be 2x2x2");
    require(in.channels == shape.ci && out.channels == shape.co, "tconv2_forward: channel mismatch");
    require(out.dims == Dims3{in.dims.nx * 2, in.dims.ny * 2, in.dims.nz * 2},
            "tconv2_forward: output dims must be twice input dims");
    for (int co = 0; co < shape.co; ++co) {
        auto oc = out.channel(co);
        oc.setConstant(b[co]);
        for (int ci = 0; ci < shape.ci; ++ci) {
            for (int z = 0; z < out.dims.nz; ++z) {
                for (int y = 0; y < out.dims.ny; ++y) {
                    for (int x = 0; x < out.dims.nx; ++x) {
                        const S wv = w[static_cast<Eigen::Index>(
                            shape.index(co, ci, z & 1, y & 1, x & 1))];
                        oc[static_cast<Eigen::Index>(flat_index(out.dims, x, y, z))] +=
                            wv * in.at(ci, x / 2, y / 2, z / 2);
                    }
                }
            }
        }
    }
}

template <typename S>
void tconv2_backward(const Tensor4<S>& in, const Array<S>& w, const ConvShape& shape,
                     const Tensor4<S>& grad_out, Tensor4<S>& grad_in, Array<S>& grad_w,
                     Array<S>& grad_b) {
    grad_in.data.setZero();
    for (int co = 0; co < shape.co; ++co) {
        grad_b[co] += grad_out.channel(co).sum();
        for (int ci = 0; ci < shape.ci; ++ci) {
            for (int z = 0; z < grad_out.dims.nz; ++z) {
                for (int y = 0; y < grad_out.dims.ny; ++y) {
                    for (int x = 0; x < grad_out.dims.nx; ++x) {
                        const auto wi =
                            static_cast<Eigen::Index>(shape.index(co, ci, z & 1, y & 1, x & 1));
                        const S g = grad_out.at(co, x, y, z);
                        const S iv = in.at(ci, x / 2, y / 2, z / 2);
                        grad_w[wi] += g * iv;
                        grad_in.at(ci, x / 2, y / 2, z / 2) += w[wi] * g;
                    }
                }
            }
        }
    }
}

/// Channel concatenation [a | b] on one grid.
template <typename S>
Tensor4<S> concat_channels(const Tensor4<S>& a, const Tensor4<S>& b) {
    require(a.dims == b.dims, "concat_channels: dims mismatch");
    Tensor4<S> out(a.channels + b.channels, a.dims);
    out.data.head(a.data.size()) = a.data;
    out.data.tail(b.data.size()) = b.data;
    return out;
}

template <typename S>
void split_channels_grad(const Tensor4<S>& grad_cat, Tensor4<S>& grad_a, Tensor4<S>& grad_b) {
    grad_a.data = grad_cat.data.head(grad_a.data.size());
    grad_b.data = grad_cat.data.tail(grad_b.data.size());
}

/// Voxelwise softmax over channels (max-subtracted for stability).
template <typename S>
Tensor4<S> softmax_channels(const Tensor4<S>& logits) {
    Tensor4<S> probs(logits.channels, logits.dims);
    const std::size_t n = logits.voxels_per_channel();
    const std::size_t stride = n;
    for (std::size_t v = 0; v < n; ++v) {
        S m = logits.data[static_cast<Eigen::Index>(v)];
        for (int c = 1; c < logits.channels; ++c)
            m = std::max(m, logits.data[static_cast<Eigen::Index>(c * stride + v)]);
        S total = S(0);
        for (int c = 0; c < logits.channels; ++c) {
            const S e = std::exp(logits.data[static_cast<Eigen::Index>(c * stride + v)] - m);
            probs.data[static_cast<Eigen::Index>(c * stride + v)] = e;
            total += e;
        }
        for (int c = 0; c < logits.channels; ++c)
            probs.data[static_cast<Eigen::Index>(c * stride + v)] /= total;
    }
    return probs;
}

}  // namespace msseg::net
