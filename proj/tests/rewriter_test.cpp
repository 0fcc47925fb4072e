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

Graph concat_feeding(OpKind consumer, bool extra_pool = false) {
    GraphBuilder b("m");
    b.node(0, OpKind::opaque, {2, 3, 3}, 4)
        .node(1, OpKind::opaque, {3, 3, 3}, 4)
        .node(2, OpKind::concat, {5, 3, 3}, 4, {{"axis", 0}})
        .node(3, consumer, {consumer == OpKind::conv ? 4 : 5, 3, 3}, 4)
        .edge(0, 2)
        .edge(1, 2)
        .edge(2, 3);
    if (extra_pool) b.node(4, OpKind::pool, {5, 3, 3}, 4).edge(2, 4);
    return b.build();
}

TEST(Match, ConvPattern) {
    auto m = match_patterns(concat_feeding(OpKind::conv));
    ASSERT_EQ(m.size(), 1u);
    EXPECT_EQ(m[0].kind, RewriteKind::channel_wise_conv);
    EXPECT_EQ(m[0].concat_id, 2);
    EXPECT_EQ(m[0].op_id, 3);
    EXPECT_EQ(m[0].branch_inputs, (std::vector<NodeId>{0, 1}));
    EXPECT_EQ(m[0].branch_channels, (std::vector<std::int64_t>{2, 3}));
    EXPECT_EQ(m[0].weight_split_plan, (std::vector<ChannelRange>{{0, 2}, {2, 5}}));
}

TEST(Match, DepthconvPattern) {
    auto m = match_patterns(concat_feeding(OpKind::depthwise_conv));
    ASSERT_EQ(m.size(), 1u);
    EXPECT_EQ(m[0].kind, RewriteKind::kernel_wise_depthconv);
}

TEST(Match, SharedConcatBlocksRewrite) {
    EXPECT_TRUE(match_patterns(concat_feeding(OpKind::conv, true)).empty());
}

TEST(Match, SingleInputConcatIsIgnored) {
    Graph g = GraphBuilder("one")
                  .node(0, OpKind::opaque, {2, 3, 3}, 4)
                  .node(1, OpKind::concat, {2, 3, 3}, 4)
                  .node(2, OpKind::conv, {4, 3, 3}, 4)
                  .edge(0, 1)
                  .edge(1, 2)
                  .build();
    EXPECT_TRUE(match_patterns(g).empty());
}

TEST(Match, InconsistentShapesAreIgnored) {
    Graph g = GraphBuilder("bad")
                  .node(0, OpKind::opaque, {2, 3, 3}, 4)
                  .node(1, OpKind::opaque, {3, 4, 3}, 4)
                  .node(2, OpKind::concat, {5, 3, 3}, 4)
                  .node(3, OpKind::conv, {4, 3, 3}, 4)
                  .edge(0, 2)
                  .edge(1, 2)
                  .edge(2, 3)
                  .build();
    EXPECT_TRUE(match_patterns(g).empty());
}

TEST(Apply, ConvBecomesPartialsPlusAccumulator) {
    Graph g = concat_feeding(OpKind::conv);
    Graph r = apply_rewrite(g, match_patterns(g).front());
    EXPECT_EQ(r.size(), g.size() + 1);
    const Node& collector = r.node(r.index_of(3));
    EXPECT_EQ(collector.op, OpKind::add);
    ASSERT_EQ(r.groups().size(), 1u);
    EXPECT_EQ(r.groups()[0].total_bytes, 4u * 9 * 4);
    EXPECT_EQ(r.groups()[0].representative, r.index_of(3));
    const Node& p0 = r.node(r.index_of(4));
    EXPECT_EQ(p0.op, OpKind::partial_conv);
    EXPECT_EQ(p0.attr_or<std::int64_t>("in_channel_begin", -1), 0);
    EXPECT_EQ(p0.attr_or<std::int64_t>("in_channel_end", -1), 2);
    EXPECT_EQ(p0.attr_or<NodeId>("weight_node", -1), 3);
    EXPECT_FALSE(r.find(2).has_value());
}

TEST(Apply, DepthconvBecomesSlicesPlusInPlaceConcat) {
    Graph g = concat_feeding(OpKind::depthwise_conv);
    Graph r = apply_rewrite(g, match_patterns(g).front());
    const Node& collector = r.node(r.index_of(3));
    EXPECT_EQ(collector.op, OpKind::concat);
    EXPECT_TRUE(collector.alloc_group.has_value());
    EXPECT_FALSE(collector.is_view());
    EXPECT_EQ(r.node(r.index_of(5)).output_shape, (std::vector<std::int64_t>{3, 3, 3}));
}

TEST(Apply, CollectorKeepsConsumers) {
    Graph g = load_fixture("conv_pattern.json");
    Graph r = rewrite_all(g).graph;
    const NodeIndex op = r.index_of(5);
    ASSERT_EQ(r.succs(op).size(), 1u);
    EXPECT_EQ(r.id_of(r.succs(op).front()), 6);
}

TEST(Apply, StaleMatchIsRejected) {
    Graph g = concat_feeding(OpKind::conv);
    auto m = match_patterns(g).front();
    Graph r = apply_rewrite(g, m);
    EXPECT_THROW(apply_rewrite(r, m), GraphError);
}

TEST(RewriteAll, NodeCountGrowsByBranchesMinusOne) {
    Graph g = GraphBuilder("two")
                  .node(0, OpKind::opaque, {2, 2, 2}, 4)
                  .node(1, OpKind::opaque, {2, 2, 2}, 4)
                  .node(2, OpKind::opaque, {2, 2, 2}, 4)
                  .node(3, OpKind::concat, {6, 2, 2}, 4)
                  .node(4, OpKind::conv, {2, 2, 2}, 4)
                  .node(5, OpKind::opaque, {1, 2, 2}, 4)
                  .node(6, OpKind::opaque, {1, 2, 2}, 4)
                  .node(7, OpKind::concat, {2, 2, 2}, 4)
                  .node(8, OpKind::depthwise_conv, {2, 2, 2}, 4)
                  .edge(0, 3).edge(1, 3).edge(2, 3).edge(3, 4)
                  .edge(5, 7).edge(6, 7).edge(7, 8)
                  .build();
    auto r = rewrite_all(g);
    EXPECT_EQ(r.applied.size(), 2u);
    EXPECT_EQ(r.graph.size(), g.size() + 2 + 1);
    EXPECT_TRUE(match_patterns(r.graph).empty());
}

TEST(RewriteAll, NoPatternIsIdentity) {
    Graph g = load_fixture("two_chain.json");
    auto r = rewrite_all(g);
    EXPECT_TRUE(r.applied.empty());
    EXPECT_EQ(to_json(r.graph), to_json(g));
}

TEST(RewriteAll, SwiftnetLikeGrowsFrom62To92) {
    Graph g = load_fixture("swiftnet_like.json");
    EXPECT_EQ(g.size(), 62u);
    auto r = rewrite_all(g);
    EXPECT_EQ(r.graph.size(), 92u);
    EXPECT_EQ(r.applied.size(), 8u);
}

TEST(RewriteAll, IsDeterministic) {
    Graph g = load_fixture("swiftnet_like.json");
    EXPECT_EQ(to_json(rewrite_all(g).graph), to_json(rewrite_all(g).graph));
}

TEST(RegionCost, ConvRegionFallsTo6144) {
    Graph g = load_fixture("region_cost.json");
    EXPECT_EQ(schedule_dp(g, {}).solution().peak_bytes, 10240u);
    Graph r = rewrite_all(g).graph;
    EXPECT_EQ(schedule_dp(r, {}).solution().peak_bytes, 6144u);
    EXPECT_EQ(brute_force_optimal(r).peak_bytes, 6144u);
}

TEST(RegionCost, DepthconvRegionStrictlyImproves) {
    Graph g = load_fixture("depthconv_region.json");
    const Bytes before = schedule_dp(g, {}).solution().peak_bytes;
    const Bytes after = schedule_dp(rewrite_all(g).graph, {}).solution().peak_bytes;
    EXPECT_EQ(before, 4096u + 4096u + 8192u);
    EXPECT_EQ(after, 4096u + 8192u);
}

TEST(RewriteJson, ReportShape) {
    auto r = rewrite_all(load_fixture("region_cost.json"));
    EXPECT_EQ(to_json(r.applied),
              nlohmann::json::parse(R"([{"kind":"channel_wise_conv","concat":2,"branches":2}])"));
}

}  // namespace
}  // namespace peakmem
