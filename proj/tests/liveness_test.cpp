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

Graph chain3() { return GraphBuilder("chain").sized(0, 3).sized(1, 5).sized(2, 2).edge(0, 1).edge(1, 2).build(); }

Graph diamond() {
    return GraphBuilder("diamond")
        .sized(0, 10)
        .sized(1, 20)
        .sized(2, 5)
        .sized(3, 8)
        .edge(0, 1)
        .edge(0, 2)
        .edge(1, 3)
        .edge(2, 3)
        .build();
}

TEST(RecomputeLive, ChainPrefixes) {
    Graph g = chain3();
    EXPECT_EQ(recompute_live(g, std::vector<NodeId>{}), 0u);
    EXPECT_EQ(recompute_live(g, std::vector<NodeId>{0}), 3u);
    EXPECT_EQ(recompute_live(g, std::vector<NodeId>{0, 1}), 5u);
    // C is the graph output and stays live.
    EXPECT_EQ(recompute_live(g, std::vector<NodeId>{0, 1, 2}), 2u);
}

TEST(RecomputeLive, DiamondKeepsSharedInput) {
    EXPECT_EQ(recompute_live(diamond(), std::vector<NodeId>{0, 1}), 30u);
}

TEST(RecomputeLive, RejectsNonTopologicalPrefix) {
    EXPECT_THROW(recompute_live(diamond(), std::vector<NodeId>{1}), GraphError);
    EXPECT_THROW(recompute_live(diamond(), std::vector<NodeId>{0, 0}), GraphError);
    EXPECT_THROW(recompute_live(diamond(), std::vector<NodeId>{9}), GraphError);
}

TEST(Liveness, InputNodesAreLiveFromTheStart) {
    Graph g = GraphBuilder("in").sized(0, 7, OpKind::input).sized(1, 3).sized(2, 4).edge(0, 1).edge(1, 2).build();
    EXPECT_EQ(recompute_live(g, std::vector<NodeId>{}), 7u);
    LivenessModel m(g);
    EXPECT_EQ(m.initial_bytes(), 7u);
    auto ev = evaluate_schedule(Schedule{{0, 1, 2}}, g);
    EXPECT_EQ(ev.trace[0].live_after_alloc, 7u);  // executing the input allocates nothing
    EXPECT_EQ(ev.peak_bytes, 10u);
}

TEST(Liveness, OutputNodeKeepsItsOwnBytes) {
    Graph g = GraphBuilder("out").sized(0, 5).sized(1, 2, OpKind::output).edge(0, 1).build();
    auto ev = evaluate_schedule(Schedule{{0, 1}}, g);
    EXPECT_EQ(ev.peak_bytes, 7u);
    EXPECT_EQ(ev.trace.back().live_after_free, 2u);
}

TEST(Liveness, ConcatExtendsInputLifetimes) {
    // x0, x1 -> concat -> y ; x0 also feeds z before y.
    Graph g = GraphBuilder("cat")
                  .sized(0, 4)
                  .sized(1, 6)
                  .node(2, OpKind::concat, {10}, 1, {{"axis", 0}})
                  .sized(3, 1)
                  .sized(4, 2)
                  .edge(0, 2)
                  .edge(1, 2)
                  .edge(2, 3)
                  .edge(0, 4)
                  .build();
    auto eff = effective_consumers(g, 0);
    EXPECT_EQ(eff.nodes, (std::vector<NodeIndex>{3, 4}));
    EXPECT_FALSE(eff.pinned);
    EXPECT_EQ(recompute_live(g, std::vector<NodeId>{0, 1, 2}), 10u);
    EXPECT_EQ(recompute_live(g, std::vector<NodeId>{0, 1, 2, 4}), 12u);
    EXPECT_EQ(recompute_live(g, std::vector<NodeId>{0, 1, 2, 4, 3}), 3u);
}

TEST(Liveness, ConcatSinkPinsItsInputs) {
    Graph g =
        GraphBuilder("pin").sized(0, 4).sized(1, 6).node(2, OpKind::concat, {10}, 1).edge(0, 2).edge(1, 2).build();
    EXPECT_TRUE(effective_consumers(g, 0).pinned);
    EXPECT_EQ(recompute_live(g, std::vector<NodeId>{0, 1, 2}), 10u);
}

TEST(Liveness, IncrementalMatchesRecomputeOnFixtures) {
    for (const auto& name : testing::fixture_names()) {
        for (bool rewrite : {false, true}) {
            Graph g = testing::load_fixture(name);
            if (rewrite) g = rewrite_all(g).graph;
            const Schedule s = kahn_schedule(g);
            auto ev = evaluate_schedule(s, g);
            for (std::size_t t = 0; t < s.order.size(); ++t) {
                std::span<const NodeId> prefix(s.order.data(), t + 1);
                EXPECT_EQ(ev.trace[t].live_after_free, recompute_live(g, prefix)) << name << " step " << t;
            }
        }
    }
}

}  // namespace
}  // namespace peakmem
