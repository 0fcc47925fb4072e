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
#include <deque>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "peakmem/graph.hpp"
#include "peakmem/liveness.hpp"

namespace peakmem {

class ScheduleError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Execution order of every node of a graph, by node id.
struct Schedule {
    std::vector<NodeId> order;

    friend bool operator==(const Schedule&, const Schedule&) = default;
};

struct TraceRow {
    std::size_t step = 0;
    NodeId node = 0;
    Bytes live_after_alloc = 0;
    Bytes live_after_free = 0;
    Bytes peak_so_far = 0;

    friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

using FootprintTrace = std::vector<TraceRow>;

struct Evaluation {
    Bytes peak_bytes = 0;
    FootprintTrace trace;
};

/// Converts an id order to indices, checking it is a topological permutation.
inline std::vector<NodeIndex> to_indices(const Schedule& s, const Graph& g) {
    if (s.order.size() != g.size())
        throw ScheduleError("order not a permutation of V: expected " + std::to_string(g.size()) + " nodes, got " +
                            std::to_string(s.order.size()));
    NodeSet done(g.size());
    std::vector<NodeIndex> out;
    out.reserve(s.order.size());
    for (NodeId id : s.order) {
        auto i = g.find(id);
        if (!i || done.contains(*i)) throw ScheduleError("order not a permutation of V at node " + std::to_string(id));
        for (NodeIndex p : g.preds(*i))
            if (!done.contains(p)) throw ScheduleError("non-topological order at node " + std::to_string(id));
        done.insert(*i);
        out.push_back(*i);
    }
    return out;
}

/// Peak live bytes of `s` plus a per-step footprint trace. Peak is taken
/// right after each node's output is allocated, before its inputs are freed.
inline Evaluation evaluate_schedule(const Schedule& s, const Graph& g, const LivenessModel& model) {
    const auto order = to_indices(s, g);
    Evaluation ev;
    NodeSet done(g.size());
    Bytes live = model.initial_bytes();
    Bytes peak = live;
    for (std::size_t step = 0; step < order.size(); ++step) {
        const NodeIndex u = order[step];
        live += model.alloc_bytes(done, u);
        peak = std::max(peak, live);
        const Bytes after_alloc = live;
        done.insert(u);
        live -= model.freed_bytes(done, u);
        ev.trace.push_back(TraceRow{step, g.id_of(u), after_alloc, live, peak});
    }
    ev.peak_bytes = peak;
    return ev;
}

inline Evaluation evaluate_schedule(const Schedule& s, const Graph& g,
                                    std::span<const NodeIndex> resident_at_start = {}) {
    return evaluate_schedule(s, g, LivenessModel(g, resident_at_start));
}

/// FIFO Kahn ordering. Initial sources and each batch of newly readied
/// successors are enqueued in ascending id order.
inline Schedule kahn_schedule(const Graph& g) {
    std::vector<std::size_t> indeg(g.size());
    std::deque<NodeIndex> queue;
    for (NodeIndex i = 0; i < g.size(); ++i) {
        indeg[i] = g.indegree(i);
        if (indeg[i] == 0) queue.push_back(i);
    }
    Schedule s;
    s.order.reserve(g.size());
    while (!queue.empty()) {
        const NodeIndex u = queue.front();
        queue.pop_front();
        s.order.push_back(g.id_of(u));
        for (NodeIndex v : g.succs(u))  // succs are ascending
            if (--indeg[v] == 0) queue.push_back(v);
    }
    return s;
}

inline nlohmann::json to_json(const TraceRow& r) {
    return {{"step", r.step},
            {"node", r.node},
            {"live_after_alloc", r.live_after_alloc},
            {"live_after_free", r.live_after_free},
            {"peak_so_far", r.peak_so_far}};
}

inline nlohmann::json trace_to_json(const FootprintTrace& trace) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : trace) out.push_back(to_json(r));
    return out;
}

inline std::string trace_to_csv(const FootprintTrace& trace) {
    std::ostringstream os;
    os << "step,node,live_after_alloc,live_after_free,peak_so_far\n";
    for (const auto& r : trace)
        os << r.step << ',' << r.node << ',' << r.live_after_alloc << ',' << r.live_after_free << ',' << r.peak_so_far
           << '\n';
    return os.str();
}

}  // namespace peakmem
