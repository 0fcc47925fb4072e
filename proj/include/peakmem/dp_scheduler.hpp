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

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <variant>
#include <vector>

#include "peakmem/graph.hpp"
#include "peakmem/liveness.hpp"
#include "peakmem/node_set.hpp"
#include "peakmem/schedule.hpp"

namespace peakmem {

struct Solution {
    Schedule schedule;
    Bytes peak_bytes = 0;
    FootprintTrace trace;
};

struct NoSolution {
    Bytes budget = 0;
    std::size_t step = 0;  // search step at which every candidate had been pruned
};

struct Timeout {
    std::size_t step = 0;
    std::chrono::nanoseconds elapsed{0};
};

/// Counters collected during a search.
struct SearchStats {
    std::uint64_t candidate_extensions = 0;  // (memo entry, frontier node) pairs examined
    std::uint64_t memo_entries = 0;          // distinct signatures summed over all steps
    std::uint64_t pruned = 0;                // extensions rejected by the budget
    std::size_t widest_step = 0;             // largest single-step memo table

    SearchStats& operator+=(const SearchStats& o) {
        candidate_extensions += o.candidate_extensions;
        memo_entries += o.memo_entries;
        pruned += o.pruned;
        widest_step = std::max(widest_step, o.widest_step);
        return *this;
    }
};

struct Outcome {
    std::variant<Solution, NoSolution, Timeout> result;
    SearchStats stats;

    bool has_solution() const { return std::holds_alternative<Solution>(result); }
    const Solution& solution() const { return std::get<Solution>(result); }
    bool is_no_solution() const { return std::holds_alternative<NoSolution>(result); }
    bool is_timeout() const { return std::holds_alternative<Timeout>(result); }
};

struct DpOptions {
    std::optional<Bytes> budget;
    std::optional<std::chrono::nanoseconds> step_time_limit;
    /// Nodes whose buffers are already live when the search starts.
    std::vector<NodeIndex> resident_at_start;
};

/// Frontier after executing `u`: `z` minus u plus successors of u whose
/// predecessors are all in `done_with_u`.
inline NodeSet next_frontier(const Graph& g, const NodeSet& z, const NodeSet& done_with_u, NodeIndex u) {
    NodeSet next = z;
    next.erase(u);
    for (NodeIndex v : g.succs(u)) {
        bool ready = true;
        for (NodeIndex p : g.preds(v)) {
            if (!done_with_u.contains(p)) {
                ready = false;
                break;
            }
        }
        if (ready) next.insert(v);
    }
    return next;
}

namespace detail {

/// Signature as a single-word bitset (graphs of at most 64 nodes).
struct WordSignature {
    using Key = std::uint64_t;
    using Hash = std::hash<std::uint64_t>;
    static Key make(const NodeSet& z) { return z.words().empty() ? 0 : z.words().front(); }
};

struct IdListHash {
    std::size_t operator()(const std::vector<NodeIndex>& v) const {
        std::size_t h = v.size();
        for (NodeIndex x : v) h ^= x + 0x9e3779b9u + (h << 6) + (h >> 2);
        return h;
    }
};

/// Signature as the sorted list of frontier node indices.
struct IdListSignature {
    using Key = std::vector<NodeIndex>;
    using Hash = IdListHash;
    static Key make(const NodeSet& z) { return z.to_vector(); }
};

struct MemoEntry {
    NodeSet frontier;
    NodeSet done;
    std::vector<NodeIndex> partial;
    Bytes live = 0;
    Bytes peak = 0;
};

template <typename Signature>
Outcome run_dp(const Graph& g, const DpOptions& opts) {
    using Clock = std::chrono::steady_clock;
    using Table = std::unordered_map<typename Signature::Key, MemoEntry, typename Signature::Hash>;

    const std::size_t n = g.size();
    const LivenessModel model(g, opts.resident_at_start);
    Outcome out;
    SearchStats& stats = out.stats;

    Table current;
    {
        MemoEntry root;
        root.done = NodeSet(n);
        root.frontier = zero_indegree(root.done, g);
        root.live = model.initial_bytes();
        root.peak = root.live;
        if (opts.budget && root.peak > *opts.budget) {
            out.result = NoSolution{*opts.budget, 0};
            return out;
        }
        current.emplace(Signature::make(root.frontier), std::move(root));
    }
    stats.memo_entries = 1;
    stats.widest_step = 1;

    for (std::size_t step = 0; step < n; ++step) {
        const auto started = Clock::now();
        Table next;
        std::uint64_t since_check = 0;
        for (const auto& [key, entry] : current) {
            for (NodeIndex u : entry.frontier.to_vector()) {
                ++stats.candidate_extensions;
                NodeSet done = entry.done;
                const Bytes after_alloc = entry.live + model.alloc_bytes(done, u);
                const Bytes peak = std::max(entry.peak, after_alloc);
                if (opts.budget && peak > *opts.budget) {
                    ++stats.pruned;
                    continue;
                }
                done.insert(u);
                const Bytes live = after_alloc - model.freed_bytes(done, u);
                NodeSet frontier = next_frontier(g, entry.frontier, done, u);
                auto sig = Signature::make(frontier);

                auto it = next.find(sig);
                if (it != next.end()) {
                    MemoEntry& held = it->second;
                    if (peak > held.peak) continue;
                    std::vector<NodeIndex> candidate = entry.partial;
                    candidate.push_back(u);
                    // Equal peaks: keep the lexicographically smaller prefix.
                    if (peak == held.peak && !(candidate < held.partial)) continue;
                    held.partial = std::move(candidate);
                    held.live = live;
                    held.peak = peak;
                    held.done = std::move(done);
                    held.frontier = std::move(frontier);
                } else {
                    MemoEntry fresh;
                    fresh.partial = entry.partial;
                    fresh.partial.push_back(u);
                    fresh.live = live;
                    fresh.peak = peak;
                    fresh.done = std::move(done);
                    fresh.frontier = std::move(frontier);
                    next.emplace(std::move(sig), std::move(fresh));
                }

                if (opts.step_time_limit && ++since_check >= 64) {
                    since_check = 0;
                    const auto elapsed = Clock::now() - started;
                    if (elapsed >= *opts.step_time_limit) {
                        out.result = Timeout{step, std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed)};
                        return out;
                    }
                }
            }
        }
        if (opts.step_time_limit) {
            const auto elapsed = Clock::now() - started;
            if (elapsed >= *opts.step_time_limit) {
                out.result = Timeout{step, std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed)};
                return out;
            }
        }
        if (next.empty()) {
            out.result = NoSolution{opts.budget.value_or(0), step};
            return out;
        }
        stats.memo_entries += next.size();
        stats.widest_step = std::max(stats.widest_step, next.size());
        current = std::move(next);
    }

    if (current.size() != 1) throw std::logic_error("dp: final memo table must hold exactly one entry");
    const MemoEntry& final_entry = current.begin()->second;
    Solution sol;
    for (NodeIndex i : final_entry.partial) sol.schedule.order.push_back(g.id_of(i));
    auto ev = evaluate_schedule(sol.schedule, g, model);
    if (ev.peak_bytes != final_entry.peak) throw std::logic_error("dp: incremental peak disagrees with evaluation");
    sol.peak_bytes = final_entry.peak;
    sol.trace = std::move(ev.trace);
    out.result = std::move(sol);
    return out;
}

}  // namespace detail

/// Memoized search over frontier (zero-indegree) sets. Each step keeps, per
/// frontier, the prefix with the least peak; ties go to the lexicographically
/// smaller prefix. Without a budget the result is optimal over all
/// topological orders. With a budget, extensions whose peak exceeds it are
/// dropped.
inline Outcome schedule_dp(const Graph& g, const DpOptions& opts = {}) {
    if (opts.budget && *opts.budget == 0) throw std::invalid_argument("budget must be positive");
    if (g.size() <= 64) return detail::run_dp<detail::WordSignature>(g, opts);
    return detail::run_dp<detail::IdListSignature>(g, opts);
}

/// Same search, forcing the sorted-id-list signature regardless of size.
inline Outcome schedule_dp_id_list(const Graph& g, const DpOptions& opts = {}) {
    if (opts.budget && *opts.budget == 0) throw std::invalid_argument("budget must be positive");
    return detail::run_dp<detail::IdListSignature>(g, opts);
}

}  // namespace peakmem
