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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "peakmem/graph.hpp"
#include "peakmem/node_set.hpp"

namespace peakmem {

/// Consumers of a node's tensor after looking through concat views. A view
/// with no consumers of its own is a graph output, which pins its inputs for
/// the rest of the run (`pinned`).
struct EffectiveConsumers {
    std::vector<NodeIndex> nodes;  // ascending
    bool pinned = false;
};

inline EffectiveConsumers effective_consumers(const Graph& g, NodeIndex producer) {
    EffectiveConsumers out;
    NodeSet seen(g.size());
    std::vector<NodeIndex> stack(g.succs(producer).begin(), g.succs(producer).end());
    while (!stack.empty()) {
        NodeIndex c = stack.back();
        stack.pop_back();
        if (seen.contains(c)) continue;
        seen.insert(c);
        if (g.node(c).is_view()) {
            if (g.succs(c).empty()) out.pinned = true;
            for (NodeIndex s : g.succs(c)) stack.push_back(s);
        } else {
            out.nodes.push_back(c);
        }
    }
    std::sort(out.nodes.begin(), out.nodes.end());
    return out;
}

/// One allocatable region: either a plain node output or an alloc group.
struct Buffer {
    NodeIndex owner = 0;             // node whose consumers define the lifetime
    Bytes bytes = 0;
    std::vector<NodeIndex> writers;  // nodes whose first execution allocates it
    NodeSet writer_mask;
    std::vector<NodeIndex> consumers;
    NodeSet consumer_mask;
    bool pinned = false;    // never released (graph output)
    bool resident = false;  // live from step 0
};

/// Precomputed allocation/release tables for incremental accounting.
///
/// A buffer is live after a downset D has executed iff it is resident or some
/// writer is in D, and it is pinned or some effective consumer is outside D.
class LivenessModel {
  public:
    explicit LivenessModel(const Graph& g, std::span<const NodeIndex> resident_at_start = {})
        : graph_(&g), buffer_of_(g.size()), releases_(g.size()) {
        const std::size_t n = g.size();
        std::vector<int> group_buffer(g.groups().size(), -1);
        for (NodeIndex i = 0; i < n; ++i) {
            const Node& node = g.node(i);
            if (auto gi = g.group_of(i)) {
                if (group_buffer[*gi] < 0) {
                    const AllocGroup& grp = g.groups()[*gi];
                    group_buffer[*gi] = static_cast<int>(buffers_.size());
                    buffers_.push_back(make_buffer(grp.representative, grp.total_bytes, grp.members));
                }
                buffer_of_[i] = static_cast<std::size_t>(group_buffer[*gi]);
            } else if (!node.is_view()) {
                buffer_of_[i] = buffers_.size();
                buffers_.push_back(make_buffer(i, g.tensor_bytes(i), {i}));
            }
        }
        for (NodeIndex i = 0; i < n; ++i)
            if (g.node(i).op == OpKind::input && buffer_of_[i]) buffers_[*buffer_of_[i]].resident = true;
        for (NodeIndex r : resident_at_start)
            if (buffer_of_.at(r)) buffers_[*buffer_of_[r]].resident = true;

        for (std::size_t b = 0; b < buffers_.size(); ++b) {
            if (buffers_[b].resident) initial_bytes_ += buffers_[b].bytes;
            if (buffers_[b].pinned) continue;
            for (NodeIndex c : buffers_[b].consumers) releases_[c].push_back(b);
        }
    }

    const Graph& graph() const { return *graph_; }
    const std::vector<Buffer>& buffers() const { return buffers_; }
    /// Buffer that node `i` writes, if any (views write nothing).
    std::optional<std::size_t> buffer_of(NodeIndex i) const { return buffer_of_[i]; }
    /// Buffers for which `i` is one of the effective consumers.
    const std::vector<std::size_t>& releases(NodeIndex i) const { return releases_[i]; }
    /// Bytes live before anything executes.
    Bytes initial_bytes() const { return initial_bytes_; }

    /// Bytes newly allocated when `u` executes right after downset `done`.
    Bytes alloc_bytes(const NodeSet& done, NodeIndex u) const {
        if (!buffer_of_[u]) return 0;
        const Buffer& b = buffers_[*buffer_of_[u]];
        if (b.resident) return 0;
        for (NodeIndex w : b.writers)
            if (done.contains(w)) return 0;
        return b.bytes;
    }

    /// Bytes released after `u` executes; `done_with_u` already contains u.
    Bytes freed_bytes(const NodeSet& done_with_u, NodeIndex u) const {
        Bytes freed = 0;
        for (std::size_t bi : releases_[u]) {
            const Buffer& b = buffers_[bi];
            if (b.consumer_mask.is_subset_of(done_with_u)) freed += b.bytes;
        }
        return freed;
    }

  private:
    Buffer make_buffer(NodeIndex owner, Bytes bytes, const std::vector<NodeIndex>& writers) const {
        const Graph& g = *graph_;
        Buffer b;
        b.owner = owner;
        b.bytes = bytes;
        b.writers = writers;
        b.writer_mask = NodeSet(g.size());
        for (NodeIndex w : writers) b.writer_mask.insert(w);
        auto eff = effective_consumers(g, owner);
        b.consumers = std::move(eff.nodes);
        b.consumer_mask = NodeSet(g.size());
        for (NodeIndex c : b.consumers) b.consumer_mask.insert(c);
        b.pinned = eff.pinned || b.consumers.empty();
        return b;
    }

    const Graph* graph_;
    std::vector<Buffer> buffers_;
    std::vector<std::optional<std::size_t>> buffer_of_;
    std::vector<std::vector<std::size_t>> releases_;
    Bytes initial_bytes_ = 0;
};

/// Live bytes after executing `prefix`, computed from scratch: every tensor
/// and group is examined against the executed set with no incremental state.
inline Bytes recompute_live(const Graph& g, std::span<const NodeId> prefix,
                            std::span<const NodeIndex> resident_at_start = {}) {
    const std::size_t n = g.size();
    NodeSet done(n);
    for (NodeId id : prefix) {
        auto i = g.find(id);
        if (!i) throw GraphError("prefix references unknown node " + std::to_string(id));
        if (done.contains(*i)) throw GraphError("prefix repeats node " + std::to_string(id));
        for (NodeIndex p : g.preds(*i))
            if (!done.contains(p)) throw GraphError("prefix not topological at node " + std::to_string(id));
        done.insert(*i);
    }

    NodeSet resident(n);
    for (NodeIndex r : resident_at_start) resident.insert(r);
    for (NodeIndex i = 0; i < n; ++i)
        if (g.node(i).op == OpKind::input) resident.insert(i);

    auto still_needed = [&](NodeIndex owner) {
        auto eff = effective_consumers(g, owner);
        if (eff.pinned || eff.nodes.empty()) return true;
        for (NodeIndex c : eff.nodes)
            if (!done.contains(c)) return true;
        return false;
    };

    Bytes live = 0;
    for (NodeIndex i = 0; i < n; ++i) {
        const Node& node = g.node(i);
        if (node.is_view() || node.alloc_group) continue;
        if ((done.contains(i) || resident.contains(i)) && still_needed(i)) live += g.tensor_bytes(i);
    }
    for (const AllocGroup& grp : g.groups()) {
        bool started = false;
        for (NodeIndex m : grp.members) started = started || done.contains(m) || resident.contains(m);
        if (started && still_needed(grp.representative)) live += grp.total_bytes;
    }
    return live;
}

}  // namespace peakmem
