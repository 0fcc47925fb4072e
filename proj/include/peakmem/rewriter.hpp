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

#include <algorithm>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "peakmem/graph.hpp"

namespace peakmem {

enum class RewriteKind { channel_wise_conv, kernel_wise_depthconv };

inline std::string_view to_string(RewriteKind k) {
    return k == RewriteKind::channel_wise_conv ? "channel_wise_conv" : "kernel_wise_depthconv";
}

struct ChannelRange {
    std::int64_t begin = 0;
    std::int64_t end = 0;

    friend bool operator==(const ChannelRange&, const ChannelRange&) = default;
};

/// A concat whose only consumer is a conv or depthwise conv reading nothing
/// else. Branches are in concat input order.
struct RewriteMatch {
    RewriteKind kind = RewriteKind::channel_wise_conv;
    NodeId concat_id = 0;
    NodeId op_id = 0;
    std::vector<NodeId> branch_inputs;
    std::vector<std::int64_t> branch_channels;
    std::vector<ChannelRange> weight_split_plan;  // slice of W's input (conv) or output (depthconv) channels
    std::int64_t axis = 0;
};

namespace detail {

inline std::optional<RewriteMatch> match_at(const Graph& g, NodeIndex c) {
    const Node& cat = g.node(c);
    if (!cat.is_view() || g.indegree(c) < 2 || g.outdegree(c) != 1) return std::nullopt;
    const NodeIndex o = g.succs(c).front();
    const Node& op = g.node(o);
    if (op.op != OpKind::conv && op.op != OpKind::depthwise_conv) return std::nullopt;
    if (op.alloc_group || g.indegree(o) != 1) return std::nullopt;

    const std::int64_t axis = cat.attr_or<std::int64_t>("axis", 0);
    const auto rank = static_cast<std::int64_t>(cat.output_shape.size());
    if (axis < 0 || axis >= rank) return std::nullopt;

    RewriteMatch m;
    m.kind = op.op == OpKind::conv ? RewriteKind::channel_wise_conv : RewriteKind::kernel_wise_depthconv;
    m.concat_id = cat.id;
    m.op_id = op.id;
    m.axis = axis;
    std::int64_t offset = 0;
    for (NodeIndex x : g.preds(c)) {
        const Node& in = g.node(x);
        if (static_cast<std::int64_t>(in.output_shape.size()) != rank) return std::nullopt;
        for (std::int64_t d = 0; d < rank; ++d)
            if (d != axis && in.output_shape[d] != cat.output_shape[d]) return std::nullopt;
        const std::int64_t ch = in.output_shape[axis];
        m.branch_inputs.push_back(in.id);
        m.branch_channels.push_back(ch);
        m.weight_split_plan.push_back(ChannelRange{offset, offset + ch});
        offset += ch;
    }
    if (offset != cat.output_shape[axis]) return std::nullopt;
    if (m.kind == RewriteKind::kernel_wise_depthconv &&
        (static_cast<std::int64_t>(op.output_shape.size()) != rank || op.output_shape[axis] != offset))
        return std::nullopt;
    return m;
}

inline std::string fresh_group_name(const Graph& g, NodeId op_id) {
    std::set<std::string> taken;
    for (const auto& grp : g.groups()) taken.insert(grp.group_id);
    std::string base = "rewrite." + std::to_string(op_id);
    std::string name = base;
    for (int k = 1; taken.count(name); ++k) name = base + "." + std::to_string(k);
    return name;
}

}  // namespace detail

/// All concat+conv and concat+depthconv regions, ordered by concat id. A
/// concat with more than one consumer never matches.
inline std::vector<RewriteMatch> match_patterns(const Graph& g) {
    std::vector<RewriteMatch> out;
    for (NodeIndex c = 0; c < g.size(); ++c)
        if (auto m = detail::match_at(g, c)) out.push_back(std::move(*m));
    return out;
}

/// Replaces the matched region with one partial op per branch, all writing a
/// shared alloc group, plus a collector that takes over the original op's id
/// and consumers: an accumulating `add` for conv, an in-place `concat` for
/// depthwise conv.
inline Graph apply_rewrite(const Graph& g, const RewriteMatch& m) {
    auto c = g.find(m.concat_id);
    auto o = g.find(m.op_id);
    if (!c || !o) throw GraphError("stale match: concat " + std::to_string(m.concat_id) + " no longer present");
    auto current = detail::match_at(g, *c);
    if (!current || current->op_id != m.op_id || current->branch_inputs != m.branch_inputs)
        throw GraphError("stale match: region at concat " + std::to_string(m.concat_id) + " has changed");

    const Node& op = g.node(*o);
    const std::string group = detail::fresh_group_name(g, op.id);
    const bool conv = m.kind == RewriteKind::channel_wise_conv;

    std::vector<Node> nodes;
    for (const Node& n : g.nodes())
        if (n.id != m.concat_id && n.id != m.op_id) nodes.push_back(n);

    std::vector<Edge> edges;
    for (const auto& e : g.edges())
        if (e.second != m.concat_id && e.first != m.concat_id) edges.push_back(e);

    NodeId next_id = g.max_id() + 1;
    for (std::size_t i = 0; i < m.branch_inputs.size(); ++i) {
        Node p;
        p.id = next_id++;
        p.dtype_bytes = op.dtype_bytes;
        p.attrs = op.attrs;
        p.attrs["weight_node"] = op.id;
        p.alloc_group = group;
        const ChannelRange r = m.weight_split_plan[i];
        if (conv) {
            p.op = OpKind::partial_conv;
            p.output_shape = op.output_shape;
            p.attrs["in_channel_begin"] = r.begin;
            p.attrs["in_channel_end"] = r.end;
        } else {
            p.op = OpKind::partial_depthwise_conv;
            p.output_shape = op.output_shape;
            p.output_shape[static_cast<std::size_t>(m.axis)] = r.end - r.begin;
            p.attrs["out_channel_begin"] = r.begin;
            p.attrs["out_channel_end"] = r.end;
        }
        edges.emplace_back(m.branch_inputs[i], p.id);
        edges.emplace_back(p.id, op.id);
        nodes.push_back(std::move(p));
    }

    Node collector;
    collector.id = op.id;
    collector.op = conv ? OpKind::add : OpKind::concat;
    collector.output_shape = op.output_shape;
    collector.dtype_bytes = op.dtype_bytes;
    collector.attrs = nlohmann::json::object();
    if (!conv) collector.attrs["axis"] = m.axis;
    collector.alloc_group = group;
    nodes.push_back(std::move(collector));

    return Graph(g.name(), std::move(nodes), std::move(edges));
}

struct RewriteResult {
    Graph graph;
    std::vector<RewriteMatch> applied;
};

/// Applies every match in topological order of its concat, repeating until
/// no pattern is left.
inline RewriteResult rewrite_all(const Graph& g) {
    RewriteResult out{g, {}};
    while (true) {
        auto matches = match_patterns(out.graph);
        if (matches.empty()) break;
        std::vector<std::size_t> topo_pos(out.graph.size());
        for (std::size_t k = 0; k < out.graph.topo_order().size(); ++k) topo_pos[out.graph.topo_order()[k]] = k;
        std::stable_sort(matches.begin(), matches.end(), [&](const RewriteMatch& a, const RewriteMatch& b) {
            return topo_pos[out.graph.index_of(a.concat_id)] < topo_pos[out.graph.index_of(b.concat_id)];
        });
        for (const auto& m : matches) {
            out.graph = apply_rewrite(out.graph, m);
            out.applied.push_back(m);
        }
    }
    return out;
}

inline nlohmann::json to_json(const std::vector<RewriteMatch>& applied) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& m : applied)
        out.push_back({{"kind", std::string(to_string(m.kind))},
                       {"concat", m.concat_id},
                       {"branches", m.branch_inputs.size()}});
    return out;
}

}  // namespace peakmem
