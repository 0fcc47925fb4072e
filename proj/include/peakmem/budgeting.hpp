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
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "peakmem/dp_scheduler.hpp"
#include "peakmem/graph.hpp"
#include "peakmem/liveness.hpp"
#include "peakmem/schedule.hpp"

namespace peakmem {

enum class BudgetFlag { no_solution, timeout, solution };

inline std::string_view to_string(BudgetFlag f) {
    switch (f) {
        case BudgetFlag::no_solution: return "no_solution";
        case BudgetFlag::timeout: return "timeout";
        case BudgetFlag::solution: return "solution";
    }
    return "no_solution";
}

struct BudgetState {
    Bytes tau_max = 0;  // hard budget: peak of the Kahn order
    Bytes tau_old = 0;
    Bytes tau_new = 0;
    Bytes lo = 0;
    Bytes hi = 0;
    BudgetFlag flag = BudgetFlag::no_solution;
    std::chrono::nanoseconds step_time_limit{0};
    std::size_t iterations = 0;
    bool fallback = false;
};

struct AdaptiveResult {
    Schedule schedule;
    Bytes peak_bytes = 0;
    FootprintTrace trace;
    BudgetState state;
    SearchStats stats;
};

/// Bisects a soft budget between a trivial lower bound and the Kahn peak,
/// running the pruned search at each probe. 'no solution' raises the lower
/// bracket, 'timeout' lowers the upper one, and the first solution found is
/// returned. Exhausting the bracket or `max_iterations` falls back to the
/// Kahn order.
inline AdaptiveResult adaptive_schedule(const Graph& g, std::chrono::nanoseconds step_time_limit,
                                        std::size_t max_iterations = 64,
                                        std::span<const NodeIndex> resident_at_start = {}) {
    if (step_time_limit.count() < 0) throw std::invalid_argument("step time limit must be non-negative");

    const LivenessModel model(g, resident_at_start);
    const Schedule kahn = kahn_schedule(g);
    const Evaluation kahn_eval = evaluate_schedule(kahn, g, model);

    AdaptiveResult out;
    BudgetState& st = out.state;
    st.tau_max = kahn_eval.peak_bytes;
    st.step_time_limit = step_time_limit;
    st.hi = st.tau_max;
    st.lo = model.initial_bytes();
    for (const Buffer& b : model.buffers()) st.lo = std::max(st.lo, b.bytes);
    st.lo = std::min(st.lo, st.hi);
    st.tau_old = st.tau_new = st.tau_max;

    DpOptions opts;
    opts.step_time_limit = step_time_limit;
    opts.resident_at_start.assign(resident_at_start.begin(), resident_at_start.end());

    Bytes tau = st.hi;
    while (st.iterations < max_iterations && st.lo <= st.hi && tau > 0) {
        st.tau_old = st.tau_new;
        st.tau_new = tau;
        opts.budget = tau;
        Outcome run = schedule_dp(g, opts);
        ++st.iterations;
        out.stats += run.stats;

        if (run.has_solution()) {
            st.flag = BudgetFlag::solution;
            const Solution& sol = run.solution();
            out.schedule = sol.schedule;
            out.peak_bytes = sol.peak_bytes;
            out.trace = sol.trace;
            return out;
        }
        if (run.is_no_solution()) {
            st.flag = BudgetFlag::no_solution;
            st.lo = tau + 1;
        } else {
            st.flag = BudgetFlag::timeout;
            if (tau == 0) break;
            st.hi = tau - 1;
        }
        if (st.lo > st.hi) break;
        tau = st.lo + (st.hi - st.lo) / 2;
    }

    st.fallback = true;
    out.schedule = kahn;
    out.peak_bytes = kahn_eval.peak_bytes;
    out.trace = kahn_eval.trace;
    return out;
}

inline nlohmann::json to_json(const BudgetState& st) {
    return {{"tau_max", st.tau_max},
            {"iterations", st.iterations},
            {"final_tau", st.tau_new},
            {"fallback", st.fallback}};
}

}  // namespace peakmem
