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


#include <cmath>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace peakmem {
namespace {

using namespace std::chrono_literals;
using testing::load_fixture;

TEST(Adaptive, ChainConvergesInOneIteration) {
    Graph g = load_fixture("long_chain.json");
    auto r = adaptive_schedule(g, 1s);
    EXPECT_EQ(r.state.iterations, 1u);
    EXPECT_EQ(r.state.tau_new, r.state.tau_max);
    EXPECT_FALSE(r.state.fallback);
    EXPECT_EQ(r.state.flag, BudgetFlag::solution);
    EXPECT_EQ(r.peak_bytes, 17u);
}

TEST(Adaptive, ZeroStepLimitFallsBackToKahn) {
    std::mt19937_64 rng(99);
    Graph g = testing::random_dag(rng, 20, 0.6);
    auto r = adaptive_schedule(g, 0ns);
    EXPECT_TRUE(r.state.fallback);
    EXPECT_EQ(r.schedule.order, kahn_schedule(g).order);
    EXPECT_EQ(r.peak_bytes, r.state.tau_max);
    EXPECT_EQ(r.peak_bytes, evaluate_schedule(kahn_schedule(g), g).peak_bytes);
    EXPECT_LE(r.state.iterations, static_cast<std::size_t>(std::ceil(std::log2(double(r.state.tau_max)))) + 1);
}

TEST(Adaptive, MatchesOptimumOnRandomGraphs) {
    auto corpus = testing::optimality_corpus(7, 40);
    for (const Graph& g : corpus) {
        auto r = adaptive_schedule(g, 5s);
        EXPECT_FALSE(r.state.fallback);
        EXPECT_EQ(r.peak_bytes, schedule_dp(g, {}).solution().peak_bytes);
        EXPECT_LE(r.peak_bytes, r.state.tau_max);
        EXPECT_LE(r.state.lo, r.state.hi);
        EXPECT_LE(r.state.hi, r.state.tau_max);
    }
}

TEST(Adaptive, RejectsNegativeLimit) {
    EXPECT_THROW(adaptive_schedule(load_fixture("chain.json"), -1ns), std::invalid_argument);
}

TEST(Adaptive, JsonShape) {
    auto r = adaptive_schedule(load_fixture("two_chain.json"), 1s);
    auto j = to_json(r.state);
    EXPECT_EQ(j, (nlohmann::json{{"tau_max", 100}, {"iterations", 1}, {"final_tau", 100}, {"fallback", false}}));
    EXPECT_EQ(r.peak_bytes, 61u);
}

TEST(Budget, ExploredCandidatesGrowWithTau) {
    auto corpus = testing::optimality_corpus(17, 25);
    for (const Graph& g : corpus) {
        const Bytes opt = schedule_dp(g, {}).solution().peak_bytes;
        const Bytes kahn = evaluate_schedule(kahn_schedule(g), g).peak_bytes;
        std::uint64_t prev = 0;
        for (Bytes tau = std::max<Bytes>(1, opt / 2); tau <= kahn + 2; tau += std::max<Bytes>(1, opt / 8)) {
            DpOptions o;
            o.budget = tau;
            auto out = schedule_dp(g, o);
            EXPECT_GE(out.stats.candidate_extensions, prev) << "tau " << tau;
            prev = out.stats.candidate_extensions;
            EXPECT_EQ(out.has_solution(), tau >= opt);
            if (out.has_solution()) {
                EXPECT_EQ(out.solution().peak_bytes, opt);
            }
        }
    }
}

TEST(Pipeline, AlgorithmNames) {
    EXPECT_EQ(algorithm_from_string("kahn"), Algorithm::kahn);
    EXPECT_EQ(algorithm_from_string("bogus"), std::nullopt);
    EXPECT_EQ(to_string(Algorithm::brute), "brute");
}

}  // namespace
}  // namespace peakmem
