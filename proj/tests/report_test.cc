// Copyright 2026 The simdb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "simdb/report.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace simdb {
namespace {

SimulationReport SmallReport() {
  SimulationReport r;
  r.slices = {{600, 3, 1, 2, 0}, {630, 5, 0, 0, 1}};
  MemoryRow m;
  m.time = 600;
  m.usage = {100, 20, 30, 4};
  m.free = 46;
  r.memory = {m};
  GatewayRow g;
  g.time = 600.5;
  g.counts = {3, 1, 0};
  g.queues = {2, 0, 0};
  g.t2 = 7;
  g.t3 = 9;
  r.gateways = {g};
  r.trace = {{1, "Q1", 12, TaskState::kBlocked, 1}};
  r.summary.completed = 8;
  return r;
}

std::string ReadFile(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(ReportTest, CsvLayouts) {
  const SimulationReport r = SmallReport();
  EXPECT_EQ(ThroughputCsv(r),
            "slice_start_s,completed,completed_degraded,failed_oom,failed_timeout\n"
            "600,3,1,2,0\n630,5,0,0,1\n");
  EXPECT_EQ(MemoryCsv(r),
            "time_s,buffer_pool,compilation,execution,plan_cache,free\n"
            "600,100,20,30,4,46\n");
  EXPECT_EQ(GatewaysCsv(r),
            "time_s,S,M,L,queue0,queue1,queue2,t2_bytes,t3_bytes\n"
            "600.5,3,1,0,2,0,0,7,9\n");
  EXPECT_EQ(TraceCsv(r),
            "time_s,task_id,memory_bytes,state,held_tiers\n"
            "1,Q1,12,BLOCKED,0\n");
}

TEST(ReportTest, HeldTierLabels) {
  EXPECT_EQ(HeldTiersLabel(0), "-");
  EXPECT_EQ(HeldTiersLabel(1), "0");
  EXPECT_EQ(HeldTiersLabel(3), "012");
}

TEST(ReportTest, SliceMean) {
  EXPECT_DOUBLE_EQ(MeanSliceThroughput(SmallReport()), 4);
  EXPECT_DOUBLE_EQ(MeanSliceThroughput(SimulationReport{}), 0);
}

TEST(ReportTest, SummaryCarriesVersionAndTotals) {
  const nlohmann::json j = SummaryJson(SmallReport());
  EXPECT_EQ(j["format_version"], kFormatVersion);
  EXPECT_EQ(j["totals"]["completed"], 8);
  EXPECT_EQ(j["window"]["slices"], 2);
  EXPECT_TRUE(j["config"].contains("engine"));
}

TEST(ReportTest, CompareRatioAndDeltas) {
  CompareResult c{SmallReport(), SmallReport()};
  c.throttled.summary.completed = 12;
  c.throttled.summary.failed_oom = 1;
  c.unthrottled.summary.failed_oom = 4;
  c.unthrottled.summary.failed_timeout = 1;
  const nlohmann::json j = CompareJson(c);
  EXPECT_DOUBLE_EQ(j["throughput_ratio"].get<double>(), 1.5);
  EXPECT_EQ(j["failure_delta"]["oom"], -3);
  EXPECT_EQ(j["failure_delta"]["total"], -4);
  EXPECT_EQ(j["slices"].size(), 2u);

  c.unthrottled.summary.completed = 0;
  c.throttled.summary.completed = 0;
  EXPECT_DOUBLE_EQ(CompareJson(c)["throughput_ratio"].get<double>(), 1.0);
  c.throttled.summary.completed = 3;
  EXPECT_TRUE(CompareJson(c)["throughput_ratio"].is_null());
}

TEST(ReportTest, WritesRunFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "simdb_report_test";
  std::filesystem::remove_all(dir);
  SimulationReport r = SmallReport();
  WriteRunFiles(r, dir);
  for (const char* name : {"summary.json", "throughput.csv", "memory.csv",
                           "gateways.csv", "trace.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
  }
  EXPECT_EQ(ReadFile(dir / "memory.csv"), MemoryCsv(r));
  EXPECT_EQ(nlohmann::json::parse(ReadFile(dir / "summary.json")), SummaryJson(r));

  std::filesystem::remove_all(dir);
  r.trace.clear();
  WriteRunFiles(r, dir);
  EXPECT_FALSE(std::filesystem::exists(dir / "trace.csv"));
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace simdb
