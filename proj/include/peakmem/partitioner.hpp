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
#include <future>
#include <optional>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "peakmem/graph.hpp"
#include "peakmem/node_set.hpp"
#include "peakmem/pipeline.hpp"
#include "peakmem/schedule.hpp"

namespace peakmem {

inline constexpr std::size_t kDefaultMinPartitionSize = 8;

/// Nodes lying on every source-to-sink path, in topological order. Multiple
/// sources or sinks are joined through virtual endpoints, which are never
/// reported. Computed as the dominators of the (virtual) sink.
inline std::vector<NodeId> find_cut_nodes(const Graph& g) {
    const std::size_t n = g.size();
    const NodeIndex vsrc = static_cast<NodeIndex>(n);
    std::vector<NodeSet> dom(n + 1, NodeSet(n + 1));

    dom[vsrc].insert(vsrc);
    for (NodeIndex v : g.topo_order()) {
        NodeSet d(n + 1);
        if (g.preds(v).empty()) {
            d = dom[vsrc];
        } else {
            d = dom[g.preds(v).front()];
            for (NodeIndex p : g.preds(v)) d &= dom[p];
        }
        d.insert(v);
        dom[v] = std::move(d);
    }
    NodeSet sink_dom = dom[g.sinks().front()];
    for (NodeIndex s : g.sinks()) sink_dom &= dom[s];

    std::vector<NodeId> cuts;
    for (NodeIndex v : g.topo_order())
        if (sink_dom.contains(v)) cuts.push_back(g.id_of(v));
    return cuts;
}

struct Subgraph {
    std::vector<NodeId> nodes;    // ascending
    std::optional<NodeId> entry;  // boundary shared with the previous subgraph
    std::optional<NodeId> exit;   // boundary shared with the next subgraph
};

struct Partition {
    std::vector<Subgraph> subgraphs;
};

namespace detail {

/// A cut can delimit subgraphs only if its bytes belong to it alone: concat
/// views and non-representative group members share storage across the cut.
inline bool can_split_at(const Graph& g, NodeIndex v) {
    if (g.node(v).is_view()) return false;
    if (auto gi = g.group_of(v)) return g.groups()[*gi].representative == v;
    return true;
}

}  // namespace detail

/// Splits the graph at boundary cut nodes. Consecutive boundaries delimit a
/// subgraph holding both boundaries and everything between them; subgraphs
/// smaller than `min_size` nodes are merged into a neighbour.
inline Partition partition(const Graph& g, std::size_t min_size = kDefaultMinPartitionSize) {
    const std::size_t n = g.size();
    std::vector<NodeIndex> bounds;
    for (NodeId id : find_cut_nodes(g)) {
        const NodeIndex v = g.index_of(id);
        if (detail::can_split_at(g, v)) bounds.push_back(v);
    }

    // ancestors[v]: every node with a path to v.
    std::vector<NodeSet> ancestors(n, NodeSet(n));
    for (NodeIndex v : g.topo_order())
        for (NodeIndex p : g.preds(v)) {
            ancestors[v] |= ancestors[p];
            ancestors[v].insert(p);
        }

    NodeSet is_bound(n);
    for (NodeIndex b : bounds) is_bound.insert(b);

    struct Piece {
        NodeSet members;
        std::optional<NodeIndex> entry;
        std::optional<NodeIndex> exit;
    };
    std::vector<Piece> pieces(bounds.size() + 1, Piece{NodeSet(n), std::nullopt, std::nullopt});
    for (std::size_t k = 0; k < bounds.size(); ++k) {
        pieces[k].members.insert(bounds[k]);
        pieces[k].exit = bounds[k];
        pieces[k + 1].members.insert(bounds[k]);
        pieces[k + 1].entry = bounds[k];
    }
    for (NodeIndex v = 0; v < n; ++v) {
        if (is_bound.contains(v)) continue;
        std::size_t before = 0;
        for (NodeIndex b : bounds)
            if (ancestors[v].contains(b)) ++before;
        pieces[before].members.insert(v);
    }

    // A piece that holds only its boundary adds nothing.
    std::vector<Piece> kept;
    for (auto& p : pieces)
        if (p.members.count() > 1 || (bounds.empty() && !p.members.empty())) kept.push_back(std::move(p));
    if (kept.empty()) {
        Piece whole{NodeSet(n), std::nullopt, std::nullopt};
        for (NodeIndex v = 0; v < n; ++v) whole.members.insert(v);
        kept.push_back(std::move(whole));
    }

    auto merge = [](Piece a, const Piece& b) {
        a.members |= b.members;
        a.exit = b.exit;
        return a;
    };
    std::vector<Piece> merged;
    for (std::size_t k = 0; k < kept.size(); ++k) {
        if (!merged.empty() && merged.back().members.count() < min_size)
            merged.back() = merge(std::move(merged.back()), kept[k]);
        else
            merged.push_back(std::move(kept[k]));
    }
    if (merged.size() > 1 && merged.back().members.count() < min_size) {
        Piece last = std::move(merged.back());
        merged.pop_back();
        merged.back() = merge(std::move(merged.back()), last);
    }

    Partition out;
    for (std::size_t k = 0; k < merged.size(); ++k) {
        Subgraph s;
        merged[k].members.for_each([&](NodeIndex v) { s.nodes.push_back(g.id_of(v)); });
        if (k > 0 && merged[k].entry) s.entry = g.id_of(*merged[k].entry);
        if (k + 1 < merged.size() && merged[k].exit) s.exit = g.id_of(*merged[k].exit);
        out.subgraphs.push_back(std::move(s));
    }
    return out;
}

/// The subgraph induced by `ids` (edge order preserved).
inline Graph induced_subgraph(const Graph& g, const std::vector<NodeId>& ids, std::string name) {
    NodeSet keep(g.size());
    std::vector<Node> nodes;
    for (NodeId id : ids) {
        keep.insert(g.index_of(id));
        nodes.push_back(g.node(g.index_of(id)));
    }
    std::vector<Edge> edges;
    for (const auto& e : g.edges())
        if (keep.contains(g.index_of(e.first)) && keep.contains(g.index_of(e.second))) edges.push_back(e);
    return Graph(std::move(name), std::move(nodes), std::move(edges));
}

struct PartitionReport {
    std::size_t nodes = 0;
    Bytes peak_bytes = 0;
};

struct CombinedRun {
    Outcome outcome;
    std::vector<PartitionReport> partitions;
    std::vector<BudgetState> budget_searches;  // one per subgraph when adaptive
};

/// Schedules each subgraph independently and concatenates the orders. A
/// subgraph's entry boundary is live from its first step and is dropped
/// from its order when concatenating. Reported peak is the largest subgraph
/// peak, which the evaluation of the combined order must reproduce.
inline CombinedRun conquer_and_combine(const Graph& g, const Partition& p, const SchedulerConfig& cfg,
                                       unsigned jobs = 1) {
    struct Piece {
        Graph graph;
        std::vector<NodeIndex> resident;
    };
    std::vector<Piece> pieces;
    for (std::size_t k = 0; k < p.subgraphs.size(); ++k) {
        const Subgraph& s = p.subgraphs[k];
        Graph sub = induced_subgraph(g, s.nodes, g.name() + "/part" + std::to_string(k));
        std::vector<NodeIndex> resident;
        if (s.entry) resident.push_back(sub.index_of(*s.entry));
        pieces.push_back(Piece{std::move(sub), std::move(resident)});
    }

    std::vector<ScheduleRun> runs(pieces.size());
    if (jobs <= 1) {
        for (std::size_t k = 0; k < pieces.size(); ++k) runs[k] = run_scheduler(pieces[k].graph, cfg, pieces[k].resident);
    } else {
        for (std::size_t start = 0; start < pieces.size(); start += jobs) {
            std::vector<std::future<ScheduleRun>> batch;
            for (std::size_t k = start; k < std::min(pieces.size(), start + jobs); ++k)
                batch.push_back(std::async(std::launch::async, [&, k] {
                    return run_scheduler(pieces[k].graph, cfg, pieces[k].resident);
                }));
            for (std::size_t k = 0; k < batch.size(); ++k) runs[start + k] = batch[k].get();
        }
    }

    CombinedRun out;
    Solution combined;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        out.outcome.stats += runs[k].outcome.stats;
        if (runs[k].budget_search) out.budget_searches.push_back(*runs[k].budget_search);
        if (!runs[k].outcome.has_solution()) {
            out.outcome.result = runs[k].outcome.result;
            return out;
        }
        const Solution& sol = runs[k].outcome.solution();
        out.partitions.push_back(PartitionReport{pieces[k].graph.size(), sol.peak_bytes});
        combined.peak_bytes = std::max(combined.peak_bytes, sol.peak_bytes);
        auto first = sol.schedule.order.begin();
        if (p.subgraphs[k].entry) {
            if (sol.schedule.order.empty() || sol.schedule.order.front() != *p.subgraphs[k].entry)
                throw std::logic_error("subgraph order does not start at its entry boundary");
            ++first;
        }
        combined.schedule.order.insert(combined.schedule.order.end(), first, sol.schedule.order.end());
    }
    auto ev = evaluate_schedule(combined.schedule, g);
    if (ev.peak_bytes != combined.peak_bytes)
        throw std::logic_error("combined peak " + std::to_string(ev.peak_bytes) + " differs from subgraph maximum " +
                               std::to_string(combined.peak_bytes));
    combined.trace = std::move(ev.trace);
    out.outcome.result = std::move(combined);
    return out;
}

inline nlohmann::json to_json(const std::vector<PartitionReport>& parts) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : parts) out.push_back({{"nodes", r.nodes}, {"peak_bytes", r.peak_bytes}});
    return out;
}

}  // namespace peakmem
