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


#include <filesystem>

#include <gtest/gtest.h>

#include "peakmem/cli.hpp"
#include "test_support.hpp"

namespace peakmem {
namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "peakmem");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string fx(const std::string& name) { return testing::fixture_path(name); }

TEST(Cli, ScheduleChainDp) {
    auto r = invoke({"schedule", "--input", fx("chain.json"), "--algorithm", "dp"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["peak_bytes"], 8);
    EXPECT_EQ(j["algorithm"], "dp");
    EXPECT_EQ(j["order"], nlohmann::json::parse("[0,1,2]"));
    EXPECT_EQ(j["trace"].size(), 3u);
    EXPECT_FALSE(j.contains("budget_bytes"));
}

TEST(Cli, ScheduleTwoChainKahn) {
    auto r = invoke({"schedule", "--input", fx("two_chain.json"), "--algorithm", "kahn"});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(nlohmann::json::parse(r.out)["peak_bytes"], 100);
}

TEST(Cli, FullPipelineReportsEveryStage) {
    auto r = invoke({"schedule", "--input", fx("swiftnet_like.json"), "--rewrite", "--partition", "--adaptive",
                     "--step-timeout-ms", "1000"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["order"].size(), 92u);
    EXPECT_EQ(j["rewrites"].size(), 8u);
    EXPECT_GE(j["partitions"].size(), 2u);
    EXPECT_TRUE(j["budget_search"].is_array());
    std::size_t covered = 0;
    for (const auto& p : j["partitions"]) covered += p["nodes"].get<std::size_t>();
    EXPECT_EQ(covered, 92u + j["partitions"].size() - 1);
}

TEST(Cli, BudgetFailureExitsWithTwo) {
    auto r = invoke({"schedule", "--input", fx("two_chain.json"), "--budget-bytes", "60"});
    EXPECT_EQ(r.code, 2);
    auto e = nlohmann::json::parse(r.err);
    EXPECT_EQ(e["error"], "no solution");
    EXPECT_EQ(e["detail"]["budget_bytes"], 60);
}

TEST(Cli, BudgetIsEchoed) {
    auto r = invoke({"schedule", "--input", fx("two_chain.json"), "--budget-bytes", "61"});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(nlohmann::json::parse(r.out)["budget_bytes"], 61);
}

TEST(Cli, ValidationErrorsExitWithOne) {
    auto dir = std::filesystem::temp_directory_path() / "peakmem_cli_test";
    std::filesystem::create_directories(dir);
    auto bad = dir / "bad.json";
    std::ofstream(bad) << R"({"nodes":[{"id":0,"op":"opaque","output_shape":[1],"dtype_bytes":1}],"edges":[[0,0]]})";
    auto r = invoke({"validate", "--input", bad.string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("self-edge"), std::string::npos);
    EXPECT_EQ(invoke({"schedule", "--input", fx("chain.json"), "--algorithm", "magic"}).code, 1);
    EXPECT_EQ(invoke({"frobnicate"}).code, 1);
}

TEST(Cli, MissingInputExitsWithThree) {
    auto r = invoke({"validate", "--input", "/nonexistent/graph.json"});
    EXPECT_EQ(r.code, 3);
    EXPECT_EQ(nlohmann::json::parse(r.err)["error"], "cannot read input");
}

TEST(Cli, ValidateReportsCounts) {
    auto r = invoke({"validate", "--input", fx("diamond.json")});
    ASSERT_EQ(r.code, 0);
    auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["nodes"], 4);
    EXPECT_EQ(j["edges"], 4);
}

TEST(Cli, TraceCsv) {
    auto r = invoke({"trace", "--input", fx("chain.json"), "--format", "csv"});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "step,node,live_after_alloc,live_after_free,peak_so_far\n0,0,3,3,3\n1,1,8,5,8\n2,2,7,2,8\n");
}

TEST(Cli, ArenaAndOffchip) {
    auto a = invoke({"arena", "--input", fx("chain.json")});
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(nlohmann::json::parse(a.out)["arena_size"], 8);

    auto o = invoke({"offchip", "--input", fx("two_chain.json"), "--capacity-bytes", "60"});
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_EQ(nlohmann::json::parse(o.out)["bytes_written_offchip"], 10);

    auto s = invoke({"offchip", "--input", fx("two_chain.json"), "--sweep", "60:62:1"});
    ASSERT_EQ(s.code, 0);
    EXPECT_EQ(s.out, "capacity,bytes_read,bytes_written\n60,10,10\n61,0,0\n62,0,0\n");

    EXPECT_EQ(invoke({"offchip", "--input", fx("two_chain.json"), "--capacity-bytes", "52"}).code, 1);
    EXPECT_EQ(invoke({"offchip", "--input", fx("two_chain.json")}).code, 1);
}

TEST(Cli, VerifyRewrite) {
    auto r = invoke({"verify-rewrite", "--input", fx("conv_pattern.json"), "--seed", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto j = nlohmann::json::parse(r.out);
    EXPECT_TRUE(j["pass"].get<bool>());
    EXPECT_EQ(j["nodes_after"], 10);
}

TEST(Cli, Oracle) {
    auto r = invoke({"oracle", "--input", fx("two_chain.json")});
    ASSERT_EQ(r.code, 0);
    auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["peak_bytes"], 61);
    EXPECT_EQ(j["orderings"], 6);
    EXPECT_EQ(invoke({"oracle", "--input", fx("swiftnet_like.json")}).code, 1);
}

TEST(Cli, OutputFile) {
    auto path = std::filesystem::temp_directory_path() / "peakmem_cli_out.json";
    std::filesystem::remove(path);
    auto r = invoke({"schedule", "--input", fx("chain.json"), "--output", path.string()});
    ASSERT_EQ(r.code, 0);
    EXPECT_TRUE(r.out.empty());
    std::ifstream in(path);
    EXPECT_EQ(nlohmann::json::parse(in)["peak_bytes"], 8);
    EXPECT_EQ(invoke({"schedule", "--input", fx("chain.json"), "--output", "/nonexistent/dir/x.json"}).code, 3);
}

TEST(Cli, RepeatedRunsAreIdentical) {
    for (const auto& name : testing::fixture_names()) {
        std::vector<std::string> args{"schedule", "--input", fx(name), "--rewrite", "--partition",
                                      "--min-partition-size", "2"};
        EXPECT_EQ(invoke(args).out, invoke(args).out) << name;
    }
}

TEST(Cli, HelpExitsCleanly) {
    auto r = invoke({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("schedule"), std::string::npos);
}

}  // namespace
}  // namespace peakmem
