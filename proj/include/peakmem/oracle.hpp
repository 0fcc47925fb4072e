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

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "peakmem/graph.hpp"
#include "peakmem/liveness.hpp"
#include "peakmem/schedule.hpp"

namespace peakmem {

inline constexpr std::size_t kMaxOracleNodes = 14;

/// Lazily yields every topological ordering of a graph exactly once, in
/// lexicographic order of node ids.
class ScheduleEnumerator {
  public:
    ScheduleEnumerator(const Graph& g, std::uint64_t limit = std::numeric_limits<std::uint64_t>::max())
        : g_(&g), limit_(limit), indeg_(g.size()) {
        for (NodeIndex i = 0; i < g.size(); ++i) indeg_[i] = g.indegree(i);
    }

    /// Next ordering, or nullopt when exhausted or the limit is reached.
    std::optional<Schedule> next() {
        if (emitted_ >= limit_ || finished_) return std::nullopt;
        const std::size_t n = g_->size();
        if (!started_) {
            started_ = true;
            if (!descend()) return finish();
        } else {
            // Backtrack to the deepest level with an untried alternative.
            while (true) {
                if (path_.empty()) return finish();
                const NodeIndex last = path_.back();
                undo(last);
                if (auto alt = first_ready_after(last)) {
                    apply(*alt);
                    if (descend()) break;
                }
            }
        }
        if (path_.size() != n) return finish();
        ++emitted_;
        Schedule s;
        for (NodeIndex i : path_) s.order.push_back(g_->id_of(i));
        return s;
    }

    std::uint64_t emitted() const { return emitted_; }

  private:
    std::optional<Schedule> finish() {
        finished_ = true;
        return std::nullopt;
    }

    std::optional<NodeIndex> first_ready_after(NodeIndex after) const {
        for (NodeIndex i = after + 1; i < g_->size(); ++i)
            if (!placed(i) && indeg_[i] == 0) return i;
        return std::nullopt;
    }

    bool placed(NodeIndex i) const { return placed_.size() > i && placed_[i]; }

    void apply(NodeIndex u) {
        if (placed_.size() < g_->size()) placed_.assign(g_->size(), false);
        placed_[u] = true;
        path_.push_back(u);
        for (NodeIndex v : g_->succs(u)) --indeg_[v];
    }

    void undo(NodeIndex u) {
        path_.pop_back();
        placed_[u] = false;
        for (NodeIndex v : g_->succs(u)) ++indeg_[v];
    }

    /// Greedily extends with the smallest ready node until complete.
    bool descend() {
        if (placed_.size() < g_->size()) placed_.assign(g_->size(), false);
        while (path_.size() < g_->size()) {
            bool found = false;
            for (NodeIndex i = 0; i < g_->size(); ++i) {
                if (!placed_[i] && indeg_[i] == 0) {
                    apply(i);
                    found = true;
                    break;
                }
            }
            if (!found) return false;
        }
        return true;
    }

    const Graph* g_;
    std::uint64_t limit_;
    std::uint64_t emitted_ = 0;
    bool started_ = false;
    bool finished_ = false;
    std::vector<std::size_t> indeg_;
    std::vector<bool> placed_;
    std::vector<NodeIndex> path_;
};

inline ScheduleEnumerator enumerate_schedules(const Graph& g,
                                              std::uint64_t limit = std::numeric_limits<std::uint64_t>::max()) {
    return ScheduleEnumerator(g, limit);
}

// The enumerator borrows the graph.
ScheduleEnumerator enumerate_schedules(Graph&&, std::uint64_t = 0) = delete;

struct BruteForceResult {
    Schedule schedule;
    Bytes peak_bytes = 0;
    std::uint64_t orderings = 0;
};

namespace detail {

/// Exhaustive depth-first search over topological orders with its own
/// counter-based accounting (remaining consumers per buffer).
class BruteForceSearch {
  public:
    BruteForceSearch(const Graph& g, std::span<const NodeIndex> resident)
        : g_(g), model_(g, resident), indeg_(g.size()), placed_(g.size(), false) {
        for (NodeIndex i = 0; i < g.size(); ++i) indeg_[i] = g.indegree(i);
        const auto& bufs = model_.buffers();
        written_.assign(bufs.size(), 0);
        remaining_.resize(bufs.size());
        for (std::size_t b = 0; b < bufs.size(); ++b) {
            written_[b] = bufs[b].resident ? 1 : 0;
            remaining_[b] = bufs[b].consumers.size();
        }
    }

    BruteForceResult run() {
        best_peak_ = std::numeric_limits<Bytes>::max();
        dfs(model_.initial_bytes(), model_.initial_bytes());
        BruteForceResult r;
        for (NodeIndex i : best_) r.schedule.order.push_back(g_.id_of(i));
        r.peak_bytes = best_peak_;
        r.orderings = orderings_;
        return r;
    }

  private:
    void dfs(Bytes live, Bytes peak) {
        if (path_.size() == g_.size()) {
            ++orderings_;
            if (peak < best_peak_) {  // strict: first (lexicographically smallest) wins ties
                best_peak_ = peak;
                best_ = path_;
            }
            return;
        }
        for (NodeIndex u = 0; u < g_.size(); ++u) {
            if (placed_[u] || indeg_[u] != 0) continue;
            Bytes next_live = live;
            auto buf = model_.buffer_of(u);
            if (buf && written_[*buf]++ == 0) next_live += model_.buffers()[*buf].bytes;
            const Bytes next_peak = std::max(peak, next_live);
            for (std::size_t b : model_.releases(u))
                if (--remaining_[b] == 0) next_live -= model_.buffers()[b].bytes;
            placed_[u] = true;
            path_.push_back(u);
            for (NodeIndex v : g_.succs(u)) --indeg_[v];

            dfs(next_live, next_peak);

            for (NodeIndex v : g_.succs(u)) ++indeg_[v];
            path_.pop_back();
            placed_[u] = false;
            for (std::size_t b : model_.releases(u)) ++remaining_[b];
            if (buf) --written_[*buf];
        }
    }

    const Graph& g_;
    LivenessModel model_;
    std::vector<std::size_t> indeg_;
    std::vector<bool> placed_;
    std::vector<std::size_t> written_;
    std::vector<std::size_t> remaining_;
    std::vector<NodeIndex> path_;
    std::vector<NodeIndex> best_;
    Bytes best_peak_ = 0;
    std::uint64_t orderings_ = 0;
};

}  // namespace detail

/// Minimum peak over every topological order; ties go to the
/// lexicographically smallest order. Limited to kMaxOracleNodes nodes.
inline BruteForceResult brute_force_optimal(const Graph& g, std::span<const NodeIndex> resident_at_start = {}) {
    if (g.size() > kMaxOracleNodes)
        throw std::invalid_argument("graph too large for the exhaustive oracle: " + std::to_string(g.size()) +
                                    " nodes (limit " + std::to_string(kMaxOracleNodes) + ")");
    return detail::BruteForceSearch(g, resident_at_start).run();
}

}  // namespace peakmem
