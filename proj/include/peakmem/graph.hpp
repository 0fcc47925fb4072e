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
#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "peakmem/node_set.hpp"

namespace peakmem {

using Bytes = std::uint64_t;
using NodeId = std::int64_t;
using Edge = std::pair<NodeId, NodeId>;

/// Thrown for malformed or inconsistent graphs. `what()` starts with a short
/// machine-readable tag ("self-edge", "cycle detected", ...).
class GraphError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

enum class OpKind {
    conv,
    depthwise_conv,
    concat,
    add,
    relu,
    pool,
    identity,
    input,
    output,
    partial_conv,
    partial_depthwise_conv,
    opaque,
};

inline constexpr std::array<std::pair<OpKind, std::string_view>, 12> kOpKindNames{{
    {OpKind::conv, "conv"},
    {OpKind::depthwise_conv, "depthwise_conv"},
    {OpKind::concat, "concat"},
    {OpKind::add, "add"},
    {OpKind::relu, "relu"},
    {OpKind::pool, "pool"},
    {OpKind::identity, "identity"},
    {OpKind::input, "input"},
    {OpKind::output, "output"},
    {OpKind::partial_conv, "partial_conv"},
    {OpKind::partial_depthwise_conv, "partial_depthwise_conv"},
    {OpKind::opaque, "opaque"},
}};

inline std::string_view to_string(OpKind op) {
    for (const auto& [k, name] : kOpKindNames)
        if (k == op) return name;
    return "opaque";
}

inline std::optional<OpKind> op_kind_from_string(std::string_view s) {
    for (const auto& [k, name] : kOpKindNames)
        if (name == s) return k;
    return std::nullopt;
}

struct Node {
    NodeId id = 0;
    OpKind op = OpKind::opaque;
    std::vector<std::int64_t> output_shape;
    std::int64_t dtype_bytes = 1;
    nlohmann::json attrs = nlohmann::json::object();
    std::optional<std::string> alloc_group;

    std::int64_t num_elements() const {
        std::int64_t n = 1;
        for (auto d : output_shape) n *= d;
        return n;
    }

    /// Size of the tensor this node logically produces, ignoring views and groups.
    Bytes logical_bytes() const {
        Bytes total = static_cast<Bytes>(dtype_bytes);
        for (auto d : output_shape) {
            const auto dim = static_cast<Bytes>(d);
            if (dim != 0 && total > std::numeric_limits<Bytes>::max() / dim)
                throw GraphError("tensor size overflow: node " + std::to_string(id));
            total *= dim;
        }
        return total;
    }

    bool is_view() const { return op == OpKind::concat && !alloc_group.has_value(); }

    template <typename T>
    T attr_or(const std::string& key, T fallback) const {
        auto it = attrs.find(key);
        if (it == attrs.end()) return fallback;
        return it->template get<T>();
    }
};

/// Bytes a node's own execution puts in memory. Concat views and alloc-group
/// members contribute nothing directly; groups are charged separately.
inline Bytes tensor_bytes(const Node& n) {
    if (n.op == OpKind::concat || n.alloc_group.has_value()) return 0;
    return n.logical_bytes();
}

/// A shared output buffer written by several nodes (partial ops) and released
/// with the representative (collector) node's tensor.
struct AllocGroup {
    std::string group_id;
    Bytes total_bytes = 0;
    std::vector<NodeIndex> members;  // ascending, includes the representative
    NodeIndex representative = 0;
};

/// Immutable, validated DAG. Nodes are stored in ascending id order; a
/// NodeIndex is the position in that order.
class Graph {
  public:
    Graph(std::string name, std::vector<Node> nodes, std::vector<Edge> edges)
        : name_(std::move(name)), nodes_(std::move(nodes)), edges_(std::move(edges)) {
        build();
    }

    const std::string& name() const { return name_; }
    std::size_t size() const { return nodes_.size(); }
    const std::vector<Node>& nodes() const { return nodes_; }
    const Node& node(NodeIndex i) const { return nodes_[i]; }
    const std::vector<Edge>& edges() const { return edges_; }

    std::optional<NodeIndex> find(NodeId id) const {
        auto it = std::lower_bound(nodes_.begin(), nodes_.end(), id,
                                   [](const Node& n, NodeId v) { return n.id < v; });
        if (it == nodes_.end() || it->id != id) return std::nullopt;
        return static_cast<NodeIndex>(it - nodes_.begin());
    }
    NodeIndex index_of(NodeId id) const {
        auto i = find(id);
        if (!i) throw GraphError("unknown node id " + std::to_string(id));
        return *i;
    }
    NodeId id_of(NodeIndex i) const { return nodes_[i].id; }

    /// Predecessors in edge-list order (concat inputs keep their document order).
    const std::vector<NodeIndex>& preds(NodeIndex i) const { return preds_[i]; }
    /// Successors in ascending index order.
    const std::vector<NodeIndex>& succs(NodeIndex i) const { return succs_[i]; }
    std::size_t indegree(NodeIndex i) const { return preds_[i].size(); }
    std::size_t outdegree(NodeIndex i) const { return succs_[i].size(); }

    const std::vector<NodeIndex>& sources() const { return sources_; }
    const std::vector<NodeIndex>& sinks() const { return sinks_; }
    const std::vector<NodeIndex>& topo_order() const { return topo_; }

    const std::vector<AllocGroup>& groups() const { return groups_; }
    std::optional<std::size_t> group_of(NodeIndex i) const {
        if (group_index_[i] < 0) return std::nullopt;
        return static_cast<std::size_t>(group_index_[i]);
    }

    Bytes tensor_bytes(NodeIndex i) const { return peakmem::tensor_bytes(nodes_[i]); }

    NodeId max_id() const { return nodes_.back().id; }

  private:
    void build() {
        if (nodes_.empty()) throw GraphError("empty graph: at least one node required");
        std::sort(nodes_.begin(), nodes_.end(), [](const Node& a, const Node& b) { return a.id < b.id; });
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            const Node& n = nodes_[k];
            if (n.id < 0) throw GraphError("negative id: " + std::to_string(n.id));
            if (k > 0 && nodes_[k - 1].id == n.id) throw GraphError("duplicate id: " + std::to_string(n.id));
            if (n.output_shape.empty()) throw GraphError("missing shape: node " + std::to_string(n.id));
            for (auto d : n.output_shape)
                if (d <= 0) throw GraphError("non-positive shape: node " + std::to_string(n.id));
            if (n.dtype_bytes <= 0) throw GraphError("non-positive dtype_bytes: node " + std::to_string(n.id));
            if (!n.attrs.is_object()) throw GraphError("attrs must be an object: node " + std::to_string(n.id));
            for (const auto& [key, value] : n.attrs.items())
                if (!value.is_number() && !value.is_string())
                    throw GraphError("attr '" + key + "' must be a number or string: node " + std::to_string(n.id));
            if ((n.op == OpKind::partial_conv || n.op == OpKind::partial_depthwise_conv) && !n.alloc_group)
                throw GraphError("partial op without alloc_group: node " + std::to_string(n.id));
            (void)n.logical_bytes();
        }

        const std::size_t n = nodes_.size();
        preds_.assign(n, {});
        succs_.assign(n, {});
        std::set<std::pair<NodeIndex, NodeIndex>> seen;
        for (const auto& [src, dst] : edges_) {
            auto s = find(src);
            auto d = find(dst);
            if (!s || !d)
                throw GraphError("dangling edge: [" + std::to_string(src) + "," + std::to_string(dst) + "]");
            if (*s == *d) throw GraphError("self-edge: [" + std::to_string(src) + "," + std::to_string(dst) + "]");
            if (!seen.emplace(*s, *d).second)
                throw GraphError("duplicate edge: [" + std::to_string(src) + "," + std::to_string(dst) + "]");
            preds_[*d].push_back(*s);
            succs_[*s].push_back(*d);
        }
        for (auto& s : succs_) std::sort(s.begin(), s.end());

        for (NodeIndex i = 0; i < n; ++i) {
            if (preds_[i].empty()) sources_.push_back(i);
            if (succs_[i].empty()) sinks_.push_back(i);
            if (nodes_[i].op == OpKind::input && !preds_[i].empty())
                throw GraphError("input node with predecessors: node " + std::to_string(nodes_[i].id));
        }

        std::vector<std::size_t> indeg(n);
        for (NodeIndex i = 0; i < n; ++i) indeg[i] = preds_[i].size();
        std::vector<NodeIndex> ready(sources_.rbegin(), sources_.rend());
        while (!ready.empty()) {
            NodeIndex u = ready.back();
            ready.pop_back();
            topo_.push_back(u);
            for (NodeIndex v : succs_[u])
                if (--indeg[v] == 0) ready.push_back(v);
        }
        if (topo_.size() != n) throw GraphError("cycle detected");

        build_groups();
    }

    void build_groups() {
        const std::size_t n = nodes_.size();
        group_index_.assign(n, -1);
        std::map<std::string, std::vector<NodeIndex>> by_name;
        for (NodeIndex i = 0; i < n; ++i)
            if (nodes_[i].alloc_group) by_name[*nodes_[i].alloc_group].push_back(i);

        for (auto& [gid, members] : by_name) {
            std::vector<NodeIndex> reps;
            for (NodeIndex m : members) {
                bool feeds_member = std::any_of(succs_[m].begin(), succs_[m].end(), [&](NodeIndex s) {
                    return nodes_[s].alloc_group == nodes_[m].alloc_group;
                });
                if (!feeds_member) reps.push_back(m);
            }
            if (reps.size() != 1) throw GraphError("alloc group '" + gid + "' has no unique representative");
            const NodeIndex rep = reps.front();
            for (NodeIndex m : members) {
                if (m == rep) continue;
                const auto& rp = preds_[rep];
                if (std::find(rp.begin(), rp.end(), m) == rp.end())
                    throw GraphError("alloc group '" + gid + "': member " + std::to_string(nodes_[m].id) +
                                     " is not a predecessor of representative " + std::to_string(nodes_[rep].id));
            }
            AllocGroup g;
            g.group_id = gid;
            g.members = members;
            g.representative = rep;
            g.total_bytes = nodes_[rep].logical_bytes();
            for (NodeIndex m : members) group_index_[m] = static_cast<int>(groups_.size());
            groups_.push_back(std::move(g));
        }
    }

    std::string name_;
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::vector<std::vector<NodeIndex>> preds_;
    std::vector<std::vector<NodeIndex>> succs_;
    std::vector<NodeIndex> sources_;
    std::vector<NodeIndex> sinks_;
    std::vector<NodeIndex> topo_;
    std::vector<AllocGroup> groups_;
    std::vector<int> group_index_;
};

/// Fluent construction for code-built graphs (tests, rewriter).
class GraphBuilder {
  public:
    explicit GraphBuilder(std::string name = "graph") : name_(std::move(name)) {}

    GraphBuilder& node(NodeId id, OpKind op, std::vector<std::int64_t> shape, std::int64_t dtype_bytes = 1,
                       nlohmann::json attrs = nlohmann::json::object(),
                       std::optional<std::string> alloc_group = std::nullopt) {
        nodes_.push_back(Node{id, op, std::move(shape), dtype_bytes, std::move(attrs), std::move(alloc_group)});
        return *this;
    }
    GraphBuilder& node(Node n) {
        nodes_.push_back(std::move(n));
        return *this;
    }
    /// Shorthand for an opaque node holding `bytes` one-byte elements.
    GraphBuilder& sized(NodeId id, std::int64_t bytes, OpKind op = OpKind::opaque) {
        return node(id, op, {bytes}, 1);
    }
    GraphBuilder& edge(NodeId src, NodeId dst) {
        edges_.emplace_back(src, dst);
        return *this;
    }
    Graph build() const { return Graph(name_, nodes_, edges_); }

  private:
    std::string name_;
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
};

/// Unscheduled nodes whose predecessors are all in `scheduled`.
inline NodeSet zero_indegree(const NodeSet& scheduled, const Graph& g) {
    NodeSet z(g.size());
    for (NodeIndex i = 0; i < g.size(); ++i) {
        const bool done = scheduled.contains(i);
        bool preds_done = true;
        for (NodeIndex p : g.preds(i)) {
            if (!scheduled.contains(p)) {
                preds_done = false;
                break;
            }
        }
        if (done && !preds_done)
            throw GraphError("scheduled set is not a downset: node " + std::to_string(g.id_of(i)));
        if (!done && preds_done) z.insert(i);
    }
    return z;
}

}  // namespace peakmem
