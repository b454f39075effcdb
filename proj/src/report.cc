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

#include <fstream>
#include <stdexcept>

#include <fmt/format.h>

namespace simdb {

using nlohmann::json;

std::string HeldTiersLabel(int held_tiers) {
  if (held_tiers <= 0) return "-";
  std::string s;
  for (int i = 0; i < held_tiers; ++i) s.push_back(static_cast<char>('0' + i));
  return s;
}

std::string ThroughputCsv(const SimulationReport& report) {
  std::string out = "slice_start_s,completed,completed_degraded,failed_oom,failed_timeout\n";
  for (const SliceCounts& s : report.slices) {
    out += fmt::format("{},{},{},{},{}\n", FormatNumber(s.start), s.completed,
                       s.completed_degraded, s.failed_oom, s.failed_timeout);
  }
  return out;
}

std::string MemoryCsv(const SimulationReport& report) {
  std::string out = "time_s,buffer_pool,compilation,execution,plan_cache,free\n";
  for (const MemoryRow& m : report.memory) {
    out += fmt::format("{},{},{},{},{},{}\n", FormatNumber(m.time), m.usage[0],
                       m.usage[1], m.usage[2], m.usage[3], m.free);
  }
  return out;
}

std::string GatewaysCsv(const SimulationReport& report) {
  std::string out = "time_s,S,M,L,queue0,queue1,queue2,t2_bytes,t3_bytes\n";
  for (const GatewayRow& g : report.gateways) {
    out += fmt::format("{},{},{},{},{},{},{},{},{}\n", FormatNumber(g.time),
                       g.counts.small, g.counts.medium, g.counts.large, g.queues[0],
                       g.queues[1], g.queues[2], g.t2, g.t3);
  }
  return out;
}

std::string TraceCsv(const SimulationReport& report) {
  std::string out = "time_s,task_id,memory_bytes,state,held_tiers\n";
  for (const TraceRow& r : report.trace) {
    out += fmt::format("{},{},{},{},{}\n", FormatNumber(r.time), r.task, r.memory_bytes,
                       ToString(r.state), HeldTiersLabel(r.held_tiers));
  }
  return out;
}

double MeanSliceThroughput(const SimulationReport& report) {
  if (report.slices.empty()) return 0;
  double total = 0;
  for (const SliceCounts& s : report.slices) total += static_cast<double>(s.completed);
  return total / static_cast<double>(report.slices.size());
}

json SummaryJson(const SimulationReport& report) {
  const ReportSummary& s = report.summary;
  const EngineSettings& e = report.config.engine;
  json peaks;
  for (std::size_t i = 0; i < kComponentCount; ++i) {
    peaks[ToString(kAllComponents[i])] = s.peak_bytes[i];
  }
  return {
      {"format_version", kFormatVersion},
      {"scenario", report.scenario},
      {"config", ToJson(report.config)},
      {"window",
       {{"warmup_s", e.warmup_s},
        {"duration_s", e.duration_s},
        {"slice_s", e.slice_s},
        {"slices", report.slices.size()}}},
      {"totals",
       {{"submitted", s.submitted},
        {"completed", s.completed},
        {"completed_degraded", s.completed_degraded},
        {"failed_oom", s.failed_oom},
        {"failed_oom_compile", s.failed_oom_compile},
        {"failed_oom_grant", s.failed_oom_grant},
        {"failed_timeout", s.failed_timeout},
        {"gateway_acquisitions", s.gateway_acquisitions}}},
      {"throughput", {{"mean_completed_per_slice", MeanSliceThroughput(report)}}},
      {"latency_s",
       {{"mean", s.mean_latency_s},
        {"p50", s.p50_latency_s},
        {"p95", s.p95_latency_s},
        {"p99", s.p99_latency_s}}},
      {"peak_bytes", peaks},
  };
}

CompareResult RunComparison(const ScenarioConfig& config) {
  ScenarioConfig on = config;
  on.throttling = true;
  ScenarioConfig off = config;
  off.throttling = false;
  return {RunScenario(on), RunScenario(off)};
}

json CompareJson(const CompareResult& r) {
  auto side = [](const SimulationReport& rep) {
    const ReportSummary& s = rep.summary;
    return json{{"completed", s.completed},
                {"completed_degraded", s.completed_degraded},
                {"failed_oom", s.failed_oom},
                {"failed_timeout", s.failed_timeout},
                {"failed_total", s.failed_oom + s.failed_timeout},
                {"mean_completed_per_slice", MeanSliceThroughput(rep)}};
  };
  const ReportSummary& on = r.throttled.summary;
  const ReportSummary& off = r.unthrottled.summary;
  json ratio;
  if (off.completed > 0) {
    ratio = static_cast<double>(on.completed) / static_cast<double>(off.completed);
  } else if (on.completed == 0) {
    ratio = 1.0;
  }
  json slices = json::array();
  for (std::size_t i = 0; i < r.throttled.slices.size(); ++i) {
    slices.push_back({{"slice_start_s", r.throttled.slices[i].start},
                      {"throttled", r.throttled.slices[i].completed},
                      {"unthrottled", i < r.unthrottled.slices.size()
                                          ? r.unthrottled.slices[i].completed
                                          : 0}});
  }
  return {
      {"format_version", kFormatVersion},
      {"seed", r.throttled.config.seed},
      {"throughput_ratio", ratio},
      {"throttled", side(r.throttled)},
      {"unthrottled", side(r.unthrottled)},
      {"failure_delta",
       {{"oom", on.failed_oom - off.failed_oom},
        {"timeout", on.failed_timeout - off.failed_timeout},
        {"total", (on.failed_oom + on.failed_timeout) -
                      (off.failed_oom + off.failed_timeout)}}},
      {"slices", slices},
  };
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void WriteRunFiles(const SimulationReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  WriteTextFile(dir / "summary.json", SummaryJson(report).dump(2) + "\n");
  WriteTextFile(dir / "throughput.csv", ThroughputCsv(report));
  WriteTextFile(dir / "memory.csv", MemoryCsv(report));
  WriteTextFile(dir / "gateways.csv", GatewaysCsv(report));
  if (!report.trace.empty()) WriteTextFile(dir / "trace.csv", TraceCsv(report));
}

}  // namespace simdb
