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


#include <gtest/gtest.h>

#include "test_support.hpp"

namespace peakmem {
namespace {

using testing::load_fixture;

std::uint64_t count_all(const Graph& g) {
    auto e = enumerate_schedules(g);
    std::uint64_t n = 0;
    while (e.next()) ++n;
    return n;
}

TEST(Enumerate, Counts) {
    EXPECT_EQ(count_all(load_fixture("chain.json")), 1u);
    EXPECT_EQ(count_all(load_fixture("diamond.json")), 2u);
    EXPECT_EQ(count_all(testing::fan_graph(6)), 24u);  // 4 independent middle nodes
    EXPECT_EQ(count_all(load_fixture("two_chain.json")), 6u);
}

TEST(Enumerate, LexicographicAndUnique) {
    Graph g = load_fixture("stacked_diamonds.json");
    auto e = enumerate_schedules(g);
    std::vector<std::vector<NodeId>> seen;
    while (auto s = e.next()) {
        EXPECT_NO_THROW(evaluate_schedule(*s, g));
        seen.push_back(s->order);
    }
    EXPECT_EQ(seen.size(), 4u);
    EXPECT_TRUE(std::is_sorted(seen.begin(), seen.end()));
    EXPECT_EQ(std::adjacent_find(seen.begin(), seen.end()), seen.end());
}

TEST(Enumerate, StopsAtLimit) {
    const Graph g = testing::fan_graph(7);
    auto e = enumerate_schedules(g, 10);
    std::uint64_t n = 0;
    while (e.next()) ++n;
    EXPECT_EQ(n, 10u);
    EXPECT_EQ(e.emitted(), 10u);
}

TEST(Enumerate, CountMatchesLinearExtensionDp) {
    std::mt19937_64 rng(21);
    for (int k = 0; k < 60; ++k) {
        Graph g = testing::random_dag(rng, 3 + k % 7, 0.3);
        EXPECT_EQ(count_all(g), testing::count_linear_extensions(g));
    }
}

TEST(BruteForce, Examples) {
    auto two = brute_force_optimal(load_fixture("two_chain.json"));
    EXPECT_EQ(two.peak_bytes, 61u);
    EXPECT_EQ(two.orderings, 6u);
    EXPECT_EQ(brute_force_optimal(load_fixture("chain.json")).peak_bytes, 8u);
    auto dia = brute_force_optimal(load_fixture("diamond.json"));
    EXPECT_EQ(dia.peak_bytes, 35u);
    EXPECT_EQ(dia.schedule.order, (std::vector<NodeId>{0, 1, 2, 3}));
    EXPECT_EQ(evaluate_schedule(Schedule{{0, 2, 1, 3}}, load_fixture("diamond.json")).peak_bytes, 35u);
}

TEST(BruteForce, NeverAboveAnyEnumeratedSchedule) {
    std::mt19937_64 rng(3);
    for (int k = 0; k < 20; ++k) {
        Graph g = testing::random_dag(rng, 7, 0.3, true);
        auto best = brute_force_optimal(g);
        auto e = enumerate_schedules(g);
        Bytes lowest = std::numeric_limits<Bytes>::max();
        while (auto s = e.next()) {
            const Bytes p = evaluate_schedule(*s, g).peak_bytes;
            EXPECT_LE(best.peak_bytes, p);
            lowest = std::min(lowest, p);
        }
        EXPECT_EQ(best.peak_bytes, lowest);
        EXPECT_EQ(evaluate_schedule(best.schedule, g).peak_bytes, best.peak_bytes);
    }
}

TEST(BruteForce, RejectsLargeGraphs) {
    EXPECT_THROW(brute_force_optimal(testing::fan_graph(15)), std::invalid_argument);
}

}  // namespace
}  // namespace peakmem
