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
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "peakmem/graph.hpp"
#include "peakmem/liveness.hpp"
#include "peakmem/schedule.hpp"

namespace peakmem {

class MemsimError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct ArenaSlot {
    NodeId node = 0;  // owner; the representative for an alloc group
    Bytes offset = 0;
    Bytes size = 0;
    std::size_t first_step = 0;
    std::size_t last_step = 0;  // inclusive
};

struct ArenaAssignment {
    std::vector<ArenaSlot> slots;  // placement order
    Bytes arena_size = 0;
};

namespace detail {

/// Buffers of the arena model. Unlike the footprint model, concats are
/// copied into a buffer of their own, so lifetimes follow direct edges.
inline std::vector<ArenaSlot> arena_lifetimes(const Graph& g, const std::vector<NodeIndex>& order) {
    const std::size_t n = g.size();
    std::vector<std::size_t> step(n);
    for (std::size_t t = 0; t < order.size(); ++t) step[order[t]] = t;

    auto lifetime = [&](const std::vector<NodeIndex>& writers, NodeIndex owner, Bytes size) {
        ArenaSlot s;
        s.node = g.id_of(owner);
        s.size = size;
        s.first_step = std::numeric_limits<std::size_t>::max();
        bool resident = false;
        std::vector<NodeIndex> readers;
        for (NodeIndex w : writers) {
            s.first_step = std::min(s.first_step, step[w]);
            resident = resident || g.node(w).op == OpKind::input;
            s.last_step = std::max(s.last_step, step[w]);
            for (NodeIndex c : g.succs(w))
                if (std::find(writers.begin(), writers.end(), c) == writers.end()) readers.push_back(c);
        }
        if (resident) s.first_step = 0;
        if (readers.empty()) s.last_step = n;
        for (NodeIndex c : readers) s.last_step = std::max(s.last_step, step[c]);
        return s;
    };

    std::vector<ArenaSlot> slots;
    for (NodeIndex i = 0; i < n; ++i) {
        const Node& node = g.node(i);
        if (auto gi = g.group_of(i)) {
            const AllocGroup& grp = g.groups()[*gi];
            if (grp.representative == i) slots.push_back(lifetime(grp.members, i, grp.total_bytes));
        } else {
            const Bytes size = node.is_view() ? node.logical_bytes() : g.tensor_bytes(i);
            slots.push_back(lifetime({i}, i, size));
        }
    }
    std::erase_if(slots, [](const ArenaSlot& s) { return s.size == 0; });
    std::sort(slots.begin(), slots.end(), [](const ArenaSlot& a, const ArenaSlot& b) {
        return a.first_step != b.first_step ? a.first_step < b.first_step : a.node < b.node;
    });
    return slots;
}

}  // namespace detail

/// First-fit offset assignment in allocation order: each buffer takes the
/// lowest offset clear of every placed buffer whose lifetime overlaps its own.
namespace detail {

// Places slots in the given order, each at the lowest offset that does not
// collide with an already placed slot whose lifetime overlaps.
inline Bytes place_slots(std::vector<ArenaSlot>& slots, const std::vector<std::size_t>& order) {
    std::vector<std::size_t> placed;
    std::vector<std::pair<Bytes, Bytes>> busy;  // [offset, end)
    Bytes arena = 0;
    for (std::size_t k : order) {
        ArenaSlot& cur = slots[k];
        busy.clear();
        for (std::size_t j : placed) {
            const ArenaSlot& o = slots[j];
            if (o.first_step <= cur.last_step && cur.first_step <= o.last_step)
                busy.emplace_back(o.offset, o.offset + o.size);
        }
        std::sort(busy.begin(), busy.end());
        Bytes offset = 0;
        for (const auto& [lo, hi] : busy) {
            if (offset + cur.size <= lo) break;
            offset = std::max(offset, hi);
        }
        cur.offset = offset;
        arena = std::max(arena, offset + cur.size);
        placed.push_back(k);
    }
    return arena;
}

}  // namespace detail

// Tries first-fit in lifetime order and greedy-by-size, keeps the smaller
// arena (lifetime order on ties). Slots are reported in lifetime order.
inline ArenaAssignment arena_assign(const Schedule& s, const Graph& g) {
    const auto order = to_indices(s, g);
    ArenaAssignment out;
    out.slots = detail::arena_lifetimes(g, order);

    std::vector<std::size_t> by_start(out.slots.size());
    std::iota(by_start.begin(), by_start.end(), std::size_t{0});
    std::vector<std::size_t> by_size = by_start;
    std::stable_sort(by_size.begin(), by_size.end(),
                     [&](std::size_t a, std::size_t b) { return out.slots[a].size > out.slots[b].size; });

    auto sized = out.slots;
    const Bytes size_arena = detail::place_slots(sized, by_size);
    out.arena_size = detail::place_slots(out.slots, by_start);
    if (size_arena < out.arena_size) {
        out.slots = std::move(sized);
        out.arena_size = size_arena;
    }
    return out;
}

inline nlohmann::json to_json(const ArenaAssignment& a) {
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& s : a.slots) tensors.push_back({{"node", s.node}, {"offset", s.offset}, {"size", s.size}});
    return {{"arena_size", a.arena_size}, {"tensors", tensors}};
}

struct TrafficReport {
    Bytes bytes_written_offchip = 0;
    Bytes bytes_read_offchip = 0;
    std::uint64_t spill_events = 0;
    Bytes capacity = 0;

    Bytes total() const { return bytes_written_offchip + bytes_read_offchip; }
};

namespace detail {

/// Footprint-model buffers each step touches: the buffers read (looking
/// through concat views) plus the buffer written.
inline std::vector<std::vector<std::size_t>> working_sets(const Graph& g, const LivenessModel& model,
                                                          const std::vector<NodeIndex>& order) {
    std::vector<std::vector<std::size_t>> sets;
    for (NodeIndex u : order) {
        std::vector<std::size_t> ws;
        std::vector<NodeIndex> stack(g.preds(u).begin(), g.preds(u).end());
        while (!stack.empty()) {
            NodeIndex p = stack.back();
            stack.pop_back();
            if (g.node(p).is_view())
                stack.insert(stack.end(), g.preds(p).begin(), g.preds(p).end());
            else if (auto b = model.buffer_of(p))
                ws.push_back(*b);
        }
        if (auto b = model.buffer_of(u)) ws.push_back(*b);
        std::sort(ws.begin(), ws.end());
        ws.erase(std::unique(ws.begin(), ws.end()), ws.end());
        sets.push_back(std::move(ws));
    }
    return sets;
}

inline Bytes set_bytes(const LivenessModel& model, const std::vector<std::size_t>& ws) {
    Bytes total = 0;
    for (std::size_t b : ws) total += model.buffers()[b].bytes;
    return total;
}

}  // namespace detail

/// Largest single-step working set of `s`; the least feasible capacity.
inline Bytes min_capacity(const Schedule& s, const Graph& g) {
    const LivenessModel model(g);
    Bytes best = 0;
    for (const auto& ws : detail::working_sets(g, model, to_indices(s, g)))
        best = std::max(best, detail::set_bytes(model, ws));
    return best;
}

/// Clairvoyant off-chip simulation. Before each step its working set is
/// brought on-chip; when space runs out the resident buffer with the
/// farthest next use (lowest owner id on ties) is evicted. The first eviction
/// of a buffer writes it off-chip, each re-fault reads it back, and dead
/// buffers are dropped at no cost. Graph outputs stay needed to the end.
inline TrafficReport belady_traffic(const Schedule& s, const Graph& g, Bytes capacity) {
    const LivenessModel model(g);
    const auto order = to_indices(s, g);
    const auto sets = detail::working_sets(g, model, order);
    const std::size_t n = order.size();
    const auto& buffers = model.buffers();
    const std::size_t nb = buffers.size();

    for (std::size_t t = 0; t < n; ++t)
        if (detail::set_bytes(model, sets[t]) > capacity)
            throw MemsimError("node working set exceeds capacity at node " + std::to_string(g.id_of(order[t])));

    std::vector<std::vector<std::size_t>> uses(nb);  // ascending steps
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t b : sets[t]) uses[b].push_back(t);
    for (std::size_t b = 0; b < nb; ++b)
        if (buffers[b].pinned) uses[b].push_back(n);

    std::vector<std::size_t> cursor(nb, 0);
    std::vector<char> on_chip(nb, 0), in_offchip(nb, 0);
    Bytes used = 0;
    for (std::size_t b = 0; b < nb; ++b)
        if (buffers[b].resident) {
            on_chip[b] = 1;
            used += buffers[b].bytes;
        }

    auto next_use = [&](std::size_t b) {
        return cursor[b] < uses[b].size() ? uses[b][cursor[b]] : std::numeric_limits<std::size_t>::max();
    };

    TrafficReport rep;
    rep.capacity = capacity;
    std::vector<char> needed(nb, 0);
    for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t b : sets[t]) needed[b] = 1;
        Bytes incoming = 0;
        for (std::size_t b : sets[t])
            if (!on_chip[b]) incoming += buffers[b].bytes;

        while (used + incoming > capacity) {
            std::size_t victim = nb;
            for (std::size_t b = 0; b < nb; ++b) {
                if (!on_chip[b] || needed[b]) continue;
                if (victim == nb || next_use(b) > next_use(victim) ||
                    (next_use(b) == next_use(victim) && buffers[b].owner < buffers[victim].owner))
                    victim = b;
            }
            if (victim == nb) throw std::logic_error("no evictable buffer");
            on_chip[victim] = 0;
            used -= buffers[victim].bytes;
            ++rep.spill_events;
            if (!in_offchip[victim]) {
                in_offchip[victim] = 1;
                rep.bytes_written_offchip += buffers[victim].bytes;
            }
        }

        for (std::size_t b : sets[t]) {
            if (!on_chip[b]) {
                // Anything not on-chip that was produced before is off-chip.
                if (in_offchip[b]) rep.bytes_read_offchip += buffers[b].bytes;
                on_chip[b] = 1;
                used += buffers[b].bytes;
            }
            ++cursor[b];
            needed[b] = 0;
        }
        for (std::size_t b : sets[t])
            if (next_use(b) == std::numeric_limits<std::size_t>::max() && on_chip[b]) {
                on_chip[b] = 0;
                used -= buffers[b].bytes;
            }
    }
    return rep;
}

inline nlohmann::json to_json(const TrafficReport& r) {
    return {{"bytes_written_offchip", r.bytes_written_offchip},
            {"bytes_read_offchip", r.bytes_read_offchip},
            {"spill_events", r.spill_events},
            {"capacity", r.capacity}};
}

struct SweepRange {
    Bytes lo = 0;
    Bytes hi = 0;
    Bytes step = 1;
};

/// Parses "lo:hi:step".
inline SweepRange parse_sweep(const std::string& text) {
    SweepRange r;
    char c1 = 0, c2 = 0;
    std::istringstream in(text);
    if (!(in >> r.lo >> c1 >> r.hi >> c2 >> r.step) || c1 != ':' || c2 != ':' || !in.eof())
        throw std::invalid_argument("sweep must be lo:hi:step");
    if (r.step == 0 || r.lo > r.hi) throw std::invalid_argument("sweep needs step > 0 and lo <= hi");
    return r;
}

/// Traffic at each capacity of the range; capacities below the largest
/// working set are infeasible and skipped.
inline std::vector<TrafficReport> capacity_sweep(const Schedule& s, const Graph& g, const SweepRange& r) {
    const Bytes floor = min_capacity(s, g);
    std::vector<TrafficReport> out;
    for (Bytes c = r.lo; c <= r.hi; c += r.step) {
        if (c >= floor) out.push_back(belady_traffic(s, g, c));
        if (r.hi - c < r.step) break;
    }
    return out;
}

inline std::string sweep_to_csv(const std::vector<TrafficReport>& rows) {
    std::string out = "capacity,bytes_read,bytes_written\n";
    for (const auto& r : rows)
        out += std::to_string(r.capacity) + "," + std::to_string(r.bytes_read_offchip) + "," +
               std::to_string(r.bytes_written_offchip) + "\n";
    return out;
}

}  // namespace peakmem
