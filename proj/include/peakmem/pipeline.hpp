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
#include <optional>
#include <span>
#include <string_view>

#include "peakmem/budgeting.hpp"
#include "peakmem/dp_scheduler.hpp"
#include "peakmem/oracle.hpp"
#include "peakmem/schedule.hpp"

namespace peakmem {

enum class Algorithm { dp, kahn, brute };

inline std::string_view to_string(Algorithm a) {
    switch (a) {
        case Algorithm::dp: return "dp";
        case Algorithm::kahn: return "kahn";
        case Algorithm::brute: return "brute";
    }
    return "dp";
}

inline std::optional<Algorithm> algorithm_from_string(std::string_view s) {
    if (s == "dp") return Algorithm::dp;
    if (s == "kahn") return Algorithm::kahn;
    if (s == "brute") return Algorithm::brute;
    return std::nullopt;
}

struct SchedulerConfig {
    Algorithm algorithm = Algorithm::dp;
    bool adaptive = false;  // dp only
    std::optional<Bytes> budget;
    std::optional<std::chrono::nanoseconds> step_time_limit;
    std::size_t max_iterations = 64;
};

struct ScheduleRun {
    Outcome outcome;
    std::optional<BudgetState> budget_search;
};

/// Schedules one graph (or subgraph) with the configured algorithm.
inline ScheduleRun run_scheduler(const Graph& g, const SchedulerConfig& cfg,
                                 std::span<const NodeIndex> resident_at_start = {}) {
    ScheduleRun run;
    switch (cfg.algorithm) {
        case Algorithm::kahn: {
            Solution sol;
            sol.schedule = kahn_schedule(g);
            auto ev = evaluate_schedule(sol.schedule, g, resident_at_start);
            sol.peak_bytes = ev.peak_bytes;
            sol.trace = std::move(ev.trace);
            run.outcome.result = std::move(sol);
            break;
        }
        case Algorithm::brute: {
            auto bf = brute_force_optimal(g, resident_at_start);
            Solution sol;
            sol.schedule = bf.schedule;
            auto ev = evaluate_schedule(sol.schedule, g, resident_at_start);
            sol.peak_bytes = ev.peak_bytes;
            sol.trace = std::move(ev.trace);
            run.outcome.result = std::move(sol);
            run.outcome.stats.candidate_extensions = bf.orderings;
            break;
        }
        case Algorithm::dp: {
            if (cfg.adaptive) {
                auto limit = cfg.step_time_limit.value_or(std::chrono::seconds(1));
                auto ar = adaptive_schedule(g, limit, cfg.max_iterations, resident_at_start);
                run.outcome.result = Solution{ar.schedule, ar.peak_bytes, ar.trace};
                run.outcome.stats = ar.stats;
                run.budget_search = ar.state;
            } else {
                DpOptions opts;
                opts.budget = cfg.budget;
                opts.step_time_limit = cfg.step_time_limit;
                opts.resident_at_start.assign(resident_at_start.begin(), resident_at_start.end());
                run.outcome = schedule_dp(g, opts);
            }
            break;
        }
    }
    return run;
}

}  // namespace peakmem
