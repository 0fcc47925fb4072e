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
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "peakmem/peakmem.hpp"

namespace peakmem::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kScheduling = 2, kIo = 3 };

/// Carries an exit code and a structured detail out of a subcommand.
class Failure : public std::runtime_error {
  public:
    Failure(ExitCode code, const std::string& what, nlohmann::json detail = nullptr)
        : std::runtime_error(what), code_(code), detail_(std::move(detail)) {}
    ExitCode code() const { return code_; }
    const nlohmann::json& detail() const { return detail_; }

  private:
    ExitCode code_;
    nlohmann::json detail_;
};

struct Options {
    std::string input;
    std::string output;
    std::string algorithm = "dp";
    bool adaptive = false;
    std::optional<Bytes> budget_bytes;
    std::optional<std::int64_t> step_timeout_ms;
    bool rewrite = false;
    bool partition = false;
    std::size_t min_partition_size = kDefaultMinPartitionSize;
    std::optional<Bytes> capacity_bytes;
    std::string sweep;
    std::uint64_t seed = 0;
    std::string format = "json";
    unsigned jobs = 1;
    std::size_t trials = 10;
    double tolerance = 1e-4;
};

inline Graph load_graph(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Failure(kIo, "cannot read input", {{"path", path}});
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return parse_graph(buf.str());
    } catch (const nlohmann::json::exception& e) {
        throw Failure(kValidation, "malformed JSON", e.what());
    } catch (const GraphError& e) {
        throw Failure(kValidation, "invalid graph", e.what());
    }
}

struct PipelineResult {
    Graph graph;
    std::vector<RewriteMatch> rewrites;
    Solution solution;
    SearchStats stats;
    std::optional<std::vector<PartitionReport>> partitions;
    std::vector<BudgetState> budget_searches;
};

/// parse, then rewrite, then partition, then schedule.
inline PipelineResult run_pipeline(const Options& o) {
    PipelineResult r{load_graph(o.input), {}, {}, {}, std::nullopt, {}};
    if (o.rewrite) {
        auto rw = rewrite_all(r.graph);
        r.graph = std::move(rw.graph);
        r.rewrites = std::move(rw.applied);
    }

    SchedulerConfig cfg;
    cfg.algorithm = *algorithm_from_string(o.algorithm);
    cfg.adaptive = o.adaptive;
    cfg.budget = o.budget_bytes;
    if (o.step_timeout_ms) cfg.step_time_limit = std::chrono::milliseconds(*o.step_timeout_ms);
    if (cfg.budget && *cfg.budget == 0) throw Failure(kValidation, "budget must be positive");

    Outcome outcome;
    try {
        if (o.partition) {
            auto cr = conquer_and_combine(r.graph, partition(r.graph, o.min_partition_size), cfg, o.jobs);
            outcome = std::move(cr.outcome);
            r.partitions = std::move(cr.partitions);
            r.budget_searches = std::move(cr.budget_searches);
        } else {
            auto run = run_scheduler(r.graph, cfg);
            outcome = std::move(run.outcome);
            if (run.budget_search) r.budget_searches.push_back(*run.budget_search);
        }
    } catch (const std::invalid_argument& e) {
        throw Failure(kValidation, "invalid scheduling request", e.what());
    }
    r.stats = outcome.stats;
    if (const auto* ns = std::get_if<NoSolution>(&outcome.result))
        throw Failure(kScheduling, "no solution", {{"budget_bytes", ns->budget}, {"step", ns->step}});
    if (const auto* to = std::get_if<Timeout>(&outcome.result))
        throw Failure(kScheduling, "timeout", {{"step", to->step}});
    r.solution = outcome.solution();
    return r;
}

inline nlohmann::json schedule_json(const Options& o, const PipelineResult& r) {
    nlohmann::json j;
    j["order"] = r.solution.schedule.order;
    j["peak_bytes"] = r.solution.peak_bytes;
    j["algorithm"] = o.algorithm;
    if (o.budget_bytes) j["budget_bytes"] = *o.budget_bytes;
    j["trace"] = trace_to_json(r.solution.trace);
    if (!r.budget_searches.empty()) {
        if (o.partition) {
            nlohmann::json all = nlohmann::json::array();
            for (const auto& st : r.budget_searches) all.push_back(to_json(st));
            j["budget_search"] = all;
        } else {
            j["budget_search"] = to_json(r.budget_searches.front());
        }
    }
    if (r.partitions) j["partitions"] = to_json(*r.partitions);
    if (o.rewrite) j["rewrites"] = to_json(r.rewrites);
    return j;
}

inline std::string render(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline std::string cmd_validate(const Options& o) {
    Graph g = load_graph(o.input);
    return render({{"valid", true},
                   {"name", g.name()},
                   {"nodes", g.size()},
                   {"edges", g.edges().size()},
                   {"groups", g.groups().size()}});
}

inline std::string cmd_schedule(const Options& o) {
    auto r = run_pipeline(o);
    if (o.format == "csv") return trace_to_csv(r.solution.trace);
    return render(schedule_json(o, r));
}

inline std::string cmd_trace(const Options& o) {
    auto r = run_pipeline(o);
    if (o.format == "csv") return trace_to_csv(r.solution.trace);
    return render(trace_to_json(r.solution.trace));
}

inline std::string cmd_arena(const Options& o) {
    auto r = run_pipeline(o);
    auto j = to_json(arena_assign(r.solution.schedule, r.graph));
    j["peak_bytes"] = r.solution.peak_bytes;
    return render(j);
}

inline std::string cmd_offchip(const Options& o) {
    auto r = run_pipeline(o);
    try {
        if (!o.sweep.empty()) {
            auto rows = capacity_sweep(r.solution.schedule, r.graph, parse_sweep(o.sweep));
            if (o.format == "json") {
                nlohmann::json all = nlohmann::json::array();
                for (const auto& row : rows) all.push_back(to_json(row));
                return render(all);
            }
            return sweep_to_csv(rows);
        }
        if (!o.capacity_bytes) throw Failure(kValidation, "offchip needs --capacity-bytes or --sweep");
        auto rep = belady_traffic(r.solution.schedule, r.graph, *o.capacity_bytes);
        if (o.format == "csv") return sweep_to_csv({rep});
        return render(to_json(rep));
    } catch (const MemsimError& e) {
        throw Failure(kValidation, "capacity too small", e.what());
    } catch (const std::invalid_argument& e) {
        throw Failure(kValidation, "bad sweep", e.what());
    }
}

inline std::string cmd_verify_rewrite(const Options& o) {
    Graph g = load_graph(o.input);
    auto rw = rewrite_all(g);
    refexec::EquivalenceReport rep;
    try {
        rep = refexec::equivalence_check(g, rw.graph, o.trials, o.tolerance, o.seed);
    } catch (const refexec::ExecError& e) {
        throw Failure(kValidation, "execution failed", e.what());
    }
    nlohmann::json j{{"rewrites", to_json(rw.applied)},
                     {"nodes_before", g.size()},
                     {"nodes_after", rw.graph.size()},
                     {"trials", rep.trials},
                     {"tolerance", rep.tolerance},
                     {"max_abs_diff", rep.max_abs_diff},
                     {"pass", rep.pass}};
    if (!rep.pass) throw Failure(kValidation, "rewrite changed outputs", j);
    return render(j);
}

inline std::string cmd_oracle(const Options& o) {
    Graph g = load_graph(o.input);
    BruteForceResult bf;
    try {
        bf = brute_force_optimal(g);
    } catch (const std::invalid_argument& e) {
        throw Failure(kValidation, "graph too large for the oracle", e.what());
    }
    return render({{"order", bf.schedule.order}, {"peak_bytes", bf.peak_bytes}, {"orderings", bf.orderings}});
}

inline void write_error(std::ostream& err, const std::string& what, const nlohmann::json& detail) {
    err << nlohmann::json{{"error", what}, {"detail", detail}}.dump() << "\n";
}

/// Runs one invocation. Results go to `--output` when given, else `out`.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Peak-memory-aware scheduling for neural-network dataflow graphs", "peakmem"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--input", o.input, "graph JSON")->required();
        sub->add_option("--output", o.output, "write the result here instead of stdout");
        sub->add_option("--seed", o.seed, "seed for all randomness");
        sub->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    };
    auto add_sched = [&](CLI::App* sub) {
        sub->add_option("--algorithm", o.algorithm, "dp, kahn or brute")->check(CLI::IsMember({"dp", "kahn", "brute"}));
        sub->add_flag("--adaptive", o.adaptive, "adaptive soft budgeting (dp)");
        sub->add_option("--budget-bytes", o.budget_bytes, "prune partial schedules above this peak");
        sub->add_option("--step-timeout-ms", o.step_timeout_ms, "wall-clock limit per search step")
            ->check(CLI::NonNegativeNumber);
        sub->add_flag("--rewrite", o.rewrite, "apply identity graph rewriting first");
        sub->add_flag("--partition", o.partition, "divide at cut nodes and conquer");
        sub->add_option("--min-partition-size", o.min_partition_size, "smallest subgraph kept separate");
        sub->add_option("--jobs", o.jobs, "subgraphs scheduled concurrently")->check(CLI::PositiveNumber);
    };

    auto* validate = app.add_subcommand("validate", "check a graph file");
    add_common(validate);
    auto* schedule = app.add_subcommand("schedule", "compute a schedule");
    add_common(schedule);
    add_sched(schedule);
    auto* trace = app.add_subcommand("trace", "footprint trace of the schedule");
    add_common(trace);
    add_sched(trace);
    auto* arena = app.add_subcommand("arena", "static arena offsets for the schedule");
    add_common(arena);
    add_sched(arena);
    auto* offchip = app.add_subcommand("offchip", "off-chip traffic under clairvoyant eviction");
    add_common(offchip);
    add_sched(offchip);
    offchip->add_option("--capacity-bytes", o.capacity_bytes, "on-chip capacity");
    offchip->add_option("--sweep", o.sweep, "capacity range lo:hi:step (CSV by default)");
    auto* verify = app.add_subcommand("verify-rewrite", "check rewriting preserves outputs");
    add_common(verify);
    verify->add_option("--trials", o.trials, "random trials");
    verify->add_option("--tolerance", o.tolerance, "max absolute difference");
    auto* oracle = app.add_subcommand("oracle", "exhaustive optimum for small graphs");
    add_common(oracle);
    oracle->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        write_error(err, "bad arguments", e.what());
        return kValidation;
    }
    if (offchip->parsed() && !o.sweep.empty() && offchip->count("--format") == 0) o.format = "csv";

    try {
        std::string text;
        if (validate->parsed()) text = cmd_validate(o);
        else if (schedule->parsed()) text = cmd_schedule(o);
        else if (trace->parsed()) text = cmd_trace(o);
        else if (arena->parsed()) text = cmd_arena(o);
        else if (offchip->parsed()) text = cmd_offchip(o);
        else if (verify->parsed()) text = cmd_verify_rewrite(o);
        else text = cmd_oracle(o);

        if (o.output.empty()) {
            out << text;
        } else {
            std::ofstream f(o.output, std::ios::binary | std::ios::trunc);
            if (!f || !(f << text)) throw Failure(kIo, "cannot write output", {{"path", o.output}});
        }
        return kOk;
    } catch (const Failure& f) {
        write_error(err, f.what(), f.detail());
        return f.code();
    } catch (const std::exception& e) {
        write_error(err, "internal error", e.what());
        return kScheduling;
    }
}

}  // namespace peakmem::cli
