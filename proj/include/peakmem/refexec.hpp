/* Copyright 2026 The peakmem Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "peakmem/graph.hpp"

namespace peakmem {

/// Small reference executor. Spatial ops use CHW layout, stride 1 for
/// convolutions, and "same" (default) or "valid" padding from attrs.
namespace refexec {

class ExecError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Tensor {
    std::vector<std::int64_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::int64_t> s) : shape(std::move(s)), data(static_cast<std::size_t>(count(shape)), 0.0) {}
    Tensor(std::vector<std::int64_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
        if (static_cast<std::int64_t>(data.size()) != count(shape)) throw ExecError("tensor data length mismatch");
    }

    static std::int64_t count(const std::vector<std::int64_t>& s) {
        std::int64_t n = 1;
        for (auto d : s) n *= d;
        return n;
    }
    double& at3(std::int64_t c, std::int64_t y, std::int64_t x) {
        return data[static_cast<std::size_t>((c * shape[1] + y) * shape[2] + x)];
    }
    double at3(std::int64_t c, std::int64_t y, std::int64_t x) const {
        return data[static_cast<std::size_t>((c * shape[1] + y) * shape[2] + x)];
    }
};

using TensorMap = std::map<NodeId, Tensor>;

namespace detail {

inline std::string where(const Node& n) { return " (node " + std::to_string(n.id) + ")"; }

inline void require_chw(const Tensor& t, const Node& n) {
    if (t.shape.size() != 3) throw ExecError("shape mismatch: spatial op expects CHW input" + where(n));
}

inline std::int64_t pad_for(const Node& n, std::int64_t k) {
    const std::string mode = n.attr_or<std::string>("padding", "same");
    if (mode == "valid") return 0;
    if (mode != "same") throw ExecError("unsupported padding '" + mode + "'" + where(n));
    if (k % 2 == 0) throw ExecError("same padding needs an odd kernel" + where(n));
    return k / 2;
}

/// out[o] (+)= sum over c in [c_begin, c_end) of w[o][c] * x[c - x_offset].
inline Tensor conv2d(const Tensor& x, const Tensor& w, std::int64_t c_begin, std::int64_t c_end, const Node& n) {
    require_chw(x, n);
    if (w.shape.size() != 4) throw ExecError("shape mismatch: conv weight must be [out,in,kh,kw]" + where(n));
    const std::int64_t kh = w.shape[2], kw = w.shape[3];
    const std::int64_t pad_y = pad_for(n, kh), pad_x = pad_for(n, kw);
    const std::int64_t cin = c_end - c_begin;
    if (x.shape[0] != cin) throw ExecError("shape mismatch: input channels" + where(n));
    const std::int64_t h = x.shape[1] + 2 * pad_y - kh + 1;
    const std::int64_t wd = x.shape[2] + 2 * pad_x - kw + 1;
    const std::int64_t cout = w.shape[0];
    Tensor y({cout, h, wd});
    for (std::int64_t o = 0; o < cout; ++o)
        for (std::int64_t r = 0; r < h; ++r)
            for (std::int64_t q = 0; q < wd; ++q) {
                double acc = 0.0;
                for (std::int64_t c = 0; c < cin; ++c)
                    for (std::int64_t a = 0; a < kh; ++a)
                        for (std::int64_t b = 0; b < kw; ++b) {
                            const std::int64_t yy = r + a - pad_y, xx = q + b - pad_x;
                            if (yy < 0 || xx < 0 || yy >= x.shape[1] || xx >= x.shape[2]) continue;
                            const auto widx = ((o * w.shape[1] + (c + c_begin)) * kh + a) * kw + b;
                            acc += w.data[static_cast<std::size_t>(widx)] * x.at3(c, yy, xx);
                        }
                y.at3(o, r, q) = acc;
            }
    return y;
}

/// Per-channel convolution using weight rows [c_begin, c_begin + x.channels).
inline Tensor depthwise2d(const Tensor& x, const Tensor& w, std::int64_t c_begin, const Node& n) {
    require_chw(x, n);
    if (w.shape.size() != 3) throw ExecError("shape mismatch: depthwise weight must be [c,kh,kw]" + where(n));
    const std::int64_t kh = w.shape[1], kw = w.shape[2];
    const std::int64_t pad_y = pad_for(n, kh), pad_x = pad_for(n, kw);
    const std::int64_t ch = x.shape[0];
    if (c_begin + ch > w.shape[0]) throw ExecError("shape mismatch: depthwise channels" + where(n));
    const std::int64_t h = x.shape[1] + 2 * pad_y - kh + 1;
    const std::int64_t wd = x.shape[2] + 2 * pad_x - kw + 1;
    Tensor y({ch, h, wd});
    for (std::int64_t c = 0; c < ch; ++c)
        for (std::int64_t r = 0; r < h; ++r)
            for (std::int64_t q = 0; q < wd; ++q) {
                double acc = 0.0;
                for (std::int64_t a = 0; a < kh; ++a)
                    for (std::int64_t b = 0; b < kw; ++b) {
                        const std::int64_t yy = r + a - pad_y, xx = q + b - pad_x;
                        if (yy < 0 || xx < 0 || yy >= x.shape[1] || xx >= x.shape[2]) continue;
                        const auto widx = ((c + c_begin) * kh + a) * kw + b;
                        acc += w.data[static_cast<std::size_t>(widx)] * x.at3(c, yy, xx);
                    }
                y.at3(c, r, q) = acc;
            }
    return y;
}

inline Tensor concat(const std::vector<const Tensor*>& parts, std::int64_t axis, const Node& n) {
    if (parts.empty()) throw ExecError("concat without inputs" + where(n));
    std::vector<std::int64_t> shape = parts.front()->shape;
    if (axis < 0 || axis >= static_cast<std::int64_t>(shape.size())) throw ExecError("bad concat axis" + where(n));
    shape[axis] = 0;
    for (const Tensor* t : parts) {
        if (t->shape.size() != shape.size()) throw ExecError("shape mismatch: concat rank" + where(n));
        for (std::size_t d = 0; d < shape.size(); ++d)
            if (static_cast<std::int64_t>(d) != axis && t->shape[d] != parts.front()->shape[d])
                throw ExecError("shape mismatch: concat dims" + where(n));
        shape[axis] += t->shape[axis];
    }
    std::int64_t outer = 1, inner = 1;
    for (std::int64_t d = 0; d < axis; ++d) outer *= shape[d];
    for (std::size_t d = static_cast<std::size_t>(axis) + 1; d < shape.size(); ++d) inner *= shape[d];
    Tensor y(shape);
    std::size_t pos = 0;
    for (std::int64_t o = 0; o < outer; ++o)
        for (const Tensor* t : parts) {
            const auto len = static_cast<std::size_t>(t->shape[axis] * inner);
            const auto src = static_cast<std::size_t>(o) * len;
            std::copy(t->data.begin() + static_cast<std::ptrdiff_t>(src),
                      t->data.begin() + static_cast<std::ptrdiff_t>(src + len), y.data.begin() + static_cast<std::ptrdiff_t>(pos));
            pos += len;
        }
    return y;
}

/// Writes `part` into `dst` at channel offset `begin` along `axis`.
inline void write_slice(Tensor& dst, const Tensor& part, std::int64_t axis, std::int64_t begin, const Node& n) {
    if (part.shape.size() != dst.shape.size()) throw ExecError("shape mismatch: slice rank" + where(n));
    std::int64_t outer = 1, inner = 1;
    for (std::int64_t d = 0; d < axis; ++d) outer *= dst.shape[d];
    for (std::size_t d = static_cast<std::size_t>(axis) + 1; d < dst.shape.size(); ++d) inner *= dst.shape[d];
    const std::int64_t len = part.shape[axis] * inner;
    for (std::int64_t o = 0; o < outer; ++o)
        for (std::int64_t k = 0; k < len; ++k)
            dst.data[static_cast<std::size_t>(o * dst.shape[axis] * inner + begin * inner + k)] =
                part.data[static_cast<std::size_t>(o * len + k)];
}

inline Tensor avg_pool(const Tensor& x, const Node& n) {
    require_chw(x, n);
    const std::int64_t k = n.attr_or<std::int64_t>("kernel", 1);
    const std::int64_t stride = n.attr_or<std::int64_t>("stride", k);
    if (k <= 0 || stride <= 0) throw ExecError("bad pool kernel" + where(n));
    const std::int64_t h = (x.shape[1] - k) / stride + 1;
    const std::int64_t w = (x.shape[2] - k) / stride + 1;
    Tensor y({x.shape[0], h, w});
    for (std::int64_t c = 0; c < x.shape[0]; ++c)
        for (std::int64_t r = 0; r < h; ++r)
            for (std::int64_t q = 0; q < w; ++q) {
                double acc = 0.0;
                for (std::int64_t a = 0; a < k; ++a)
                    for (std::int64_t b = 0; b < k; ++b) acc += x.at3(c, r * stride + a, q * stride + b);
                y.at3(c, r, q) = acc / static_cast<double>(k * k);
            }
    return y;
}

}  // namespace detail

/// Evaluates every node in topological order. Source nodes take their value
/// from `inputs`; conv and depthwise conv nodes (and partial ops, through
/// their `weight_node` attr) read `weights`. Returns every node's output.
inline TensorMap execute(const Graph& g, const TensorMap& inputs, const TensorMap& weights) {
    TensorMap values;
    std::map<std::size_t, Tensor> group_buffers;

    auto weight_for = [&](const Node& n, NodeId key) -> const Tensor& {
        auto it = weights.find(key);
        if (it == weights.end()) throw ExecError("missing weight" + detail::where(n));
        return it->second;
    };

    for (NodeIndex i : g.topo_order()) {
        const Node& n = g.node(i);
        std::vector<const Tensor*> in;
        for (NodeIndex p : g.preds(i)) in.push_back(&values.at(g.id_of(p)));
        auto single = [&]() -> const Tensor& {
            if (in.size() != 1) throw ExecError("expected exactly one input" + detail::where(n));
            return *in.front();
        };

        Tensor out;
        if (in.empty()) {
            auto it = inputs.find(n.id);
            if (it == inputs.end()) throw ExecError("missing input tensor" + detail::where(n));
            out = it->second;
        } else {
            switch (n.op) {
                case OpKind::conv: {
                    const Tensor& x = single();
                    out = detail::conv2d(x, weight_for(n, n.id), 0, x.shape.at(0), n);
                    break;
                }
                case OpKind::depthwise_conv: out = detail::depthwise2d(single(), weight_for(n, n.id), 0, n); break;
                case OpKind::concat:
                    if (n.alloc_group) {
                        out = group_buffers.at(*g.group_of(i));
                    } else {
                        out = detail::concat(in, n.attr_or<std::int64_t>("axis", 0), n);
                    }
                    break;
                case OpKind::add:
                    if (n.alloc_group) {
                        out = group_buffers.at(*g.group_of(i));
                    } else {
                        out = *in.front();
                        for (std::size_t k = 1; k < in.size(); ++k) {
                            if (in[k]->shape != out.shape) throw ExecError("shape mismatch: add" + detail::where(n));
                            for (std::size_t e = 0; e < out.data.size(); ++e) out.data[e] += in[k]->data[e];
                        }
                    }
                    break;
                case OpKind::relu:
                    out = single();
                    for (auto& v : out.data) v = v > 0.0 ? v : 0.0;
                    break;
                case OpKind::identity:
                case OpKind::output: out = single(); break;
                case OpKind::pool: out = detail::avg_pool(single(), n); break;
                case OpKind::partial_conv: {
                    const auto gi = *g.group_of(i);
                    const NodeId wid = n.attr_or<NodeId>("weight_node", -1);
                    const auto begin = n.attr_or<std::int64_t>("in_channel_begin", 0);
                    const auto end = n.attr_or<std::int64_t>("in_channel_end", 0);
                    Tensor part = detail::conv2d(single(), weight_for(n, wid), begin, end, n);
                    auto [it, fresh] = group_buffers.try_emplace(gi, Tensor(part.shape));
                    if (it->second.shape != part.shape) throw ExecError("shape mismatch: partial conv" + detail::where(n));
                    for (std::size_t e = 0; e < part.data.size(); ++e) it->second.data[e] += part.data[e];
                    out = std::move(part);
                    break;
                }
                case OpKind::partial_depthwise_conv: {
                    const auto gi = *g.group_of(i);
                    const NodeId wid = n.attr_or<NodeId>("weight_node", -1);
                    const auto begin = n.attr_or<std::int64_t>("out_channel_begin", 0);
                    const Node& rep = g.node(g.groups()[gi].representative);
                    const auto axis = rep.attr_or<std::int64_t>("axis", 0);
                    Tensor part = detail::depthwise2d(single(), weight_for(n, wid), begin, n);
                    auto [it, fresh] = group_buffers.try_emplace(gi, Tensor(rep.output_shape));
                    detail::write_slice(it->second, part, axis, begin, n);
                    out = std::move(part);
                    break;
                }
                default:
                    throw ExecError("unsupported op '" + std::string(to_string(n.op)) + "'" + detail::where(n));
            }
        }
        if (out.shape != n.output_shape) throw ExecError("shape mismatch: output differs from declared shape" + detail::where(n));
        values.emplace(n.id, std::move(out));
    }
    return values;
}

struct EquivalenceReport {
    double max_abs_diff = 0.0;
    double tolerance = 0.0;
    std::size_t trials = 0;
    bool pass = false;
};

/// Random weights for every conv / depthwise conv of `g`, scaled by fan-in.
inline TensorMap random_weights(const Graph& g, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    TensorMap w;
    for (NodeIndex i = 0; i < g.size(); ++i) {
        const Node& n = g.node(i);
        if (n.op != OpKind::conv && n.op != OpKind::depthwise_conv) continue;
        if (g.indegree(i) != 1) throw ExecError("expected exactly one input" + detail::where(n));
        const Node& in = g.node(g.preds(i).front());
        const auto k = n.attr_or<std::int64_t>("kernel", 1);
        std::vector<std::int64_t> shape;
        if (n.op == OpKind::conv)
            shape = {n.output_shape.at(0), in.output_shape.at(0), k, k};
        else
            shape = {n.output_shape.at(0), k, k};
        Tensor t(shape);
        const double scale = 1.0 / std::sqrt(static_cast<double>(Tensor::count(shape) / shape[0]));
        for (auto& v : t.data) v = normal(rng) * scale;
        w.emplace(n.id, std::move(t));
    }
    return w;
}

/// Runs both graphs on `trials` seeded random inputs and reports the largest
/// absolute difference over their sink tensors.
inline EquivalenceReport equivalence_check(const Graph& g, const Graph& g2, std::size_t trials, double tolerance,
                                           std::uint64_t seed = 0) {
    std::vector<NodeId> outs, outs2;
    for (NodeIndex s : g.sinks()) outs.push_back(g.id_of(s));
    for (NodeIndex s : g2.sinks()) outs2.push_back(g2.id_of(s));
    if (outs != outs2) throw ExecError("output node sets differ");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    EquivalenceReport rep;
    rep.tolerance = tolerance;
    rep.trials = trials;
    for (std::size_t t = 0; t < trials; ++t) {
        TensorMap weights = random_weights(g, rng);
        TensorMap inputs;
        for (NodeIndex s : g.sources()) {
            Tensor x(g.node(s).output_shape);
            for (auto& v : x.data) v = normal(rng);
            inputs.emplace(g.id_of(s), std::move(x));
        }
        const TensorMap a = execute(g, inputs, weights);
        const TensorMap b = execute(g2, inputs, weights);
        for (NodeId id : outs) {
            const Tensor& ta = a.at(id);
            const Tensor& tb = b.at(id);
            if (ta.shape != tb.shape) throw ExecError("output shapes differ at node " + std::to_string(id));
            for (std::size_t e = 0; e < ta.data.size(); ++e)
                rep.max_abs_diff = std::max(rep.max_abs_diff, std::abs(ta.data[e] - tb.data[e]));
        }
    }
    rep.pass = rep.max_abs_diff <= tolerance;
    return rep;
}

}  // namespace refexec
}  // namespace peakmem
