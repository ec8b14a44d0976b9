//  Copyright (c) 2026 The mvattn Authors
//
//  Licensed under the Apache License, Version 2.0 (the "License");
//  you may not use this file except in compliance with the License.
//  You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
//  Unless required by applicable law or agreed to in writing, software
//  distributed under the License is distributed on an "AS IS" BASIS,
//  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//  See the License for the specific language governing permissions and
//  limitations under the License.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "mvattn/bench.hpp"
#include "mvattn/error.hpp"

namespace mvattn::bench {

using nlohmann::json;

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

}  // namespace

Format format_from_string(const std::string& s) {
  if (s == "json") return Format::json;
  if (s == "csv") return Format::csv;
  throw InvalidArgument("unknown report format '" + s + "' (expected json or csv)");
}

std::string report_to_json(const Report& report) {
  json results = json::array();
  for (const BenchResult& r : report.results) {
    const BenchCase& c = r.bench_case;
    results.push_back({{"variant", attention::to_string(c.variant)},
                       {"N", c.n},
                       {"S", c.s},
                       {"C", c.c},
                       {"K", c.k},
                       {"repetitions", c.repetitions},
                       {"warmup", c.warmup},
                       {"seed", c.seed},
                       {"skipped", r.skipped},
                       {"skip_reason", r.skip_reason},
                       {"median_time_s", r.median_time_s},
                       {"min_time_s", r.min_time_s},
                       {"modeled_bytes", r.modeled_score_memory_bytes},
                       {"flops", r.flops}});
  }
  json fits = json::array();
  for (const ScalingFit& f : report.fits) {
    fits.push_back({{"variant", attention::to_string(f.variant)},
                    {"time_slope", f.time_slope},
                    {"flops_slope", f.flops_slope},
                    {"points", f.points}});
  }
  const json doc{{"environment",
                  {{"cpu_model", report.environment.cpu_model},
                   {"threads", report.environment.threads},
                   {"logical_cpus", report.environment.logical_cpus},
                   {"simd", report.environment.simd}}},
                 {"results", results},
                 {"fits", fits},
                 {"nondeterministic_fields", {"environment", "median_time_s", "min_time_s", "time_slope"}}};
  return doc.dump(2) + "\n";
}

Report report_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    Report report;
    const json& env = doc.at("environment");
    report.environment = {env.at("cpu_model").get<std::string>(), env.at("threads").get<unsigned>(),
                          env.at("logical_cpus").get<unsigned>(), env.at("simd").get<std::string>()};
    for (const json& jr : doc.at("results")) {
      BenchResult r;
      r.bench_case = {attention::variant_from_string(jr.at("variant").get<std::string>()),
                      jr.at("N").get<std::size_t>(),
                      jr.at("S").get<std::size_t>(),
                      jr.at("C").get<std::size_t>(),
                      jr.at("K").get<std::size_t>(),
                      jr.at("repetitions").get<std::size_t>(),
                      jr.at("warmup").get<std::size_t>(),
                      jr.at("seed").get<std::uint64_t>()};
      r.skipped = jr.at("skipped").get<bool>();
      r.skip_reason = jr.at("skip_reason").get<std::string>();
      r.median_time_s = jr.at("median_time_s").get<double>();
      r.min_time_s = jr.at("min_time_s").get<double>();
      r.modeled_score_memory_bytes = jr.at("modeled_bytes").get<std::uint64_t>();
      r.flops = jr.at("flops").get<std::uint64_t>();
      report.results.push_back(std::move(r));
    }
    for (const json& jf : doc.at("fits")) {
      report.fits.push_back({attention::variant_from_string(jf.at("variant").get<std::string>()),
                             jf.at("time_slope").get<double>(), jf.at("flops_slope").get<double>(),
                             jf.at("points").get<std::size_t>()});
    }
    return report;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed bench report: ") + e.what());
  }
}

std::string report_to_csv(const Report& report) {
  std::ostringstream out;
  out << kCsvHeader << "\n";
  for (const BenchResult& r : report.results) {
    const BenchCase& c = r.bench_case;
    out << attention::to_string(c.variant) << ',' << c.n << ',' << c.s << ',' << c.c << ',' << c.k << ',';
    if (r.skipped) {
      out << ',';
    } else {
      out << fmt("%.9g", r.median_time_s * 1e3) << ',' << fmt("%.9g", r.min_time_s * 1e3);
    }
    out << ',' << r.flops << ',' << r.modeled_score_memory_bytes << "\n";
  }
  return out.str();
}

void emit_report(const Report& report, Format format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << (format == Format::json ? report_to_json(report) : report_to_csv(report));
  out.flush();
  if (!out) throw IoError("failed writing '" + path + "'");
}

CheckOutcome check_report(const Report& report, const CheckLimits& limits) {
  CheckOutcome out;
  auto record = [&out](bool ok, const std::string& msg) {
    out.lines.push_back(std::string(ok ? "PASS " : "FAIL ") + msg);
    if (!ok) out.passed = false;
  };

  for (const BenchResult& r : report.results)
    if (r.skipped)
      out.lines.push_back(std::string("SKIP ") + attention::to_string(r.bench_case.variant) +
                          " S=" + std::to_string(r.bench_case.s) + ": " + r.skip_reason);

  for (const ScalingFit& f : report.fits) {
    const std::string name = attention::to_string(f.variant);
    if (f.points < 3) {
      record(false, name + " slope: only " + std::to_string(f.points) + " timed sizes (need 3)");
      continue;
    }
    const double theory = f.variant == Variant::dense ? 4.0 : f.variant == Variant::row_wise ? 3.0 : f.flops_slope;
    record(std::abs(f.time_slope - theory) <= limits.slope_tolerance,
           name + " time slope " + fmt("%.3f", f.time_slope) + " vs theory " + fmt("%.3f", theory) + " (+-" +
               fmt("%.2f", limits.slope_tolerance) + ")");
    if (f.variant != Variant::epipolar)
      record(f.flops_slope == theory || std::abs(f.flops_slope - theory) < 1e-9,
             name + " flop slope " + fmt("%.6f", f.flops_slope) + " == " + fmt("%.0f", theory));
  }

  // Per-S pairings of dense and row_wise.
  std::map<std::size_t, const BenchResult*> dense, row;
  for (const BenchResult& r : report.results) {
    if (r.bench_case.variant == Variant::dense) dense[r.bench_case.s] = &r;
    if (r.bench_case.variant == Variant::row_wise) row[r.bench_case.s] = &r;
  }
  for (const auto& [s, d] : dense) {
    const auto it = row.find(s);
    if (it == row.end()) continue;
    const BenchResult* rw = it->second;
    record(d->flops == rw->flops * s, "flops(dense)/flops(row_wise) == S at S=" + std::to_string(s));
    if (s >= limits.speedup_min_s && !d->skipped && !rw->skipped) {
      const double speedup = d->median_time_s / rw->median_time_s;
      record(speedup >= limits.speedup_floor, "row_wise speedup at S=" + std::to_string(s) + ": " +
                                                  fmt("%.1f", speedup) + "x (floor " +
                                                  fmt("%.1f", limits.speedup_floor) + "x)");
    }
  }

  // Median time should not decrease with S; one inversion is reported as noise.
  std::map<Variant, std::vector<const BenchResult*>> by_variant;
  for (const BenchResult& r : report.results)
    if (!r.skipped) by_variant[r.bench_case.variant].push_back(&r);
  for (auto& [var, rs] : by_variant) {
    std::sort(rs.begin(), rs.end(), [](auto* a, auto* b) { return a->bench_case.s < b->bench_case.s; });
    std::size_t inversions = 0;
    for (std::size_t i = 1; i < rs.size(); ++i)
      if (rs[i]->median_time_s < rs[i - 1]->median_time_s) ++inversions;
    const std::string name = attention::to_string(var);
    if (inversions == 1) out.lines.push_back("NOTE " + name + ": one timing inversion across S (flagged as noise)");
    record(inversions <= 1, name + " median time non-decreasing in S (" + std::to_string(inversions) + " inversions)");
  }
  return out;
}

}  // namespace mvattn::bench
