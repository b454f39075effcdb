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

#include "simdb/workload.h"

#include <algorithm>
#include <cmath>

#include "simdb/error.h"

namespace simdb {

const char* ToString(GrowthShape shape) {
  switch (shape) {
    case GrowthShape::kLinear:
      return "linear";
    case GrowthShape::kFrontLoaded:
      return "front_loaded";
    case GrowthShape::kBackLoaded:
      return "back_loaded";
  }
  return "?";
}

GrowthShape ParseGrowthShape(const std::string& text) {
  if (text == "linear") return GrowthShape::kLinear;
  if (text == "front_loaded") return GrowthShape::kFrontLoaded;
  if (text == "back_loaded") return GrowthShape::kBackLoaded;
  throw ConfigError("growth_shape", "unknown shape '" + text + "'");
}

double GrowthFraction(GrowthShape shape, double progress) {
  const double p = std::clamp(progress, 0.0, 1.0);
  switch (shape) {
    case GrowthShape::kLinear:
      return p;
    case GrowthShape::kFrontLoaded:
      // 75% of the peak in the first quarter.
      return p <= 0.25 ? 3 * p : 0.75 + (p - 0.25) / 3;
    case GrowthShape::kBackLoaded:
      // 25% of the peak in the first three quarters.
      return p <= 0.75 ? p / 3 : 0.25 + 3 * (p - 0.75);
  }
  return p;
}

namespace {

void CheckRange(const Range& r, const std::string& field, bool positive) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi) {
    throw ConfigError(field, "range must satisfy lo <= hi");
  }
  if (positive ? !(r.lo > 0) : !(r.lo >= 0)) {
    throw ConfigError(field, positive ? "must be positive" : "must be non-negative");
  }
}

}  // namespace

void WorkloadSpec::Validate() const {
  if (classes.empty()) throw ConfigError("workload.classes", "no query classes");
  if (client.clients < 1) throw ConfigError("workload.clients", "must be at least 1");
  CheckRange(client.think_s, "workload.think_s", false);
  double total = 0;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const QueryClass& c = classes[i];
    const std::string base = "workload.classes[" + std::to_string(i) + "]";
    if (!(c.weight > 0)) throw ConfigError(base + ".weight", "must be positive");
    total += c.weight;
    CheckRange(c.compile_s, base + ".compile_s", true);
    CheckRange(c.peak_compile_bytes, base + ".peak_compile_bytes", true);
    CheckRange(c.exec_s, base + ".exec_s", true);
    CheckRange(c.exec_grant_bytes, base + ".exec_grant_bytes", false);
    CheckRange(c.working_set_bytes, base + ".working_set_bytes", false);
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("workload.classes", "weights must sum to 1");
  }
}

WorkloadSpec SalesDefault(int clients) {
  WorkloadSpec spec;
  spec.preset = "sales";
  const Range compile{10, 90};
  const Range exec{30, 600};
  // Log-uniform peaks averaging ~287 MiB: 30 clients ask for ~2.1x of 4 GiB.
  const Range peak{96.0 * kMiB, 640.0 * kMiB};
  const Range grant{80.0 * kMiB, 200.0 * kMiB};
  const Range working_set{16.0 * kMiB, 64.0 * kMiB};
  spec.classes = {
      {"sales_linear", 0.4, compile, peak, GrowthShape::kLinear, exec, grant,
       working_set},
      {"sales_front", 0.3, compile, peak, GrowthShape::kFrontLoaded, exec, grant,
       working_set},
      {"sales_back", 0.3, compile, peak, GrowthShape::kBackLoaded, exec, grant,
       working_set},
  };
  spec.client = {clients, {0, 5}, true};
  return spec;
}

WorkloadSpec LightDefault(int clients) {
  WorkloadSpec spec;
  spec.preset = "light";
  spec.classes = {{"light", 1.0, {2, 6}, {256.0 * kKiB, 2.0 * kMiB},
                   GrowthShape::kLinear, {5, 20}, {1.0 * kMiB, 4.0 * kMiB},
                   {4.0 * kMiB, 16.0 * kMiB}}};
  spec.client = {clients, {0, 5}, true};
  return spec;
}

WorkloadSpec PresetByName(const std::string& name, int clients) {
  if (name == "sales") return SalesDefault(clients);
  if (name == "light") return LightDefault(clients);
  throw ConfigError("workload.preset", "unknown preset '" + name + "'");
}

std::vector<Bytes> QuerySample::CompileCurve(Seconds step_s) const {
  const auto steps = static_cast<std::size_t>(
      std::max(1.0, std::ceil(compile_s / step_s - 1e-9)));
  std::vector<Bytes> curve(steps);
  for (std::size_t k = 1; k <= steps; ++k) {
    const double f = GrowthFraction(growth_shape, static_cast<double>(k) / steps);
    curve[k - 1] = static_cast<Bytes>(
        std::llround(static_cast<double>(peak_compile_bytes) * f));
  }
  curve.back() = peak_compile_bytes;
  for (std::size_t k = 1; k < steps; ++k) curve[k] = std::max(curve[k], curve[k - 1]);
  return curve;
}

double MeanPeakCompileBytes(const WorkloadSpec& spec) {
  double mean = 0;
  for (const auto& c : spec.classes) {
    const double lo = c.peak_compile_bytes.lo;
    const double hi = c.peak_compile_bytes.hi;
    const double class_mean = hi > lo ? (hi - lo) / std::log(hi / lo) : lo;
    mean += c.weight * class_mean;
  }
  return mean;
}

std::uint64_t DeriveSeed(std::uint64_t master_seed, std::uint64_t index) {
  // splitmix64 finalizer over the pair.
  std::uint64_t z = master_seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ClientStream::ClientStream(std::uint64_t master_seed, std::uint64_t client_index)
    : engine_(DeriveSeed(master_seed, client_index)) {}

double ClientStream::NextUnit() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double ClientStream::Uniform(const Range& r) {
  const double u = NextUnit();
  return r.lo == r.hi ? r.lo : r.lo + (r.hi - r.lo) * u;
}

double ClientStream::LogUniform(const Range& r) {
  const double u = NextUnit();
  if (r.lo == r.hi) return r.lo;
  return std::exp(std::log(r.lo) + (std::log(r.hi) - std::log(r.lo)) * u);
}

QuerySample ClientStream::NextQuery(const WorkloadSpec& spec) {
  QuerySample q;
  const double pick = NextUnit();
  double cumulative = 0;
  q.class_index = spec.classes.size() - 1;
  for (std::size_t i = 0; i < spec.classes.size(); ++i) {
    cumulative += spec.classes[i].weight;
    if (pick < cumulative) {
      q.class_index = i;
      break;
    }
  }
  const QueryClass& c = spec.classes[q.class_index];
  q.growth_shape = c.growth_shape;
  q.compile_s = Uniform(c.compile_s);
  q.peak_compile_bytes = static_cast<Bytes>(std::llround(LogUniform(c.peak_compile_bytes)));
  q.exec_s = Uniform(c.exec_s);
  q.exec_grant_bytes = static_cast<Bytes>(std::llround(Uniform(c.exec_grant_bytes)));
  q.working_set_bytes = static_cast<Bytes>(std::llround(Uniform(c.working_set_bytes)));
  return q;
}

Seconds ClientStream::NextThink(const ClientModel& client) {
  return Uniform(client.think_s);
}

}  // namespace simdb
