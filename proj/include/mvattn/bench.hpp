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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mvattn/attention.hpp"

namespace mvattn::bench {

using attention::Variant;

struct BenchCase {
  Variant variant = Variant::row_wise;
  std::size_t n = 6;
  std::size_t s = 16;
  std::size_t c = 32;
  std::size_t k = 16;  // epipolar samples per other view
  std::size_t repetitions = 3;
  std::size_t warmup = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BenchResult {
  BenchCase bench_case;
  bool skipped = false;
  std::string skip_reason;
  double median_time_s = 0.0;
  double min_time_s = 0.0;
  std::uint64_t modeled_score_memory_bytes = 0;
  std::uint64_t flops = 0;
};

struct Environment {
  std::string cpu_model;
  unsigned threads = 1;       // threads used for timing
  unsigned logical_cpus = 0;  // std::thread::hardware_concurrency()
  std::string simd;           // active kernel table
};

struct ScalingFit {
  Variant variant = Variant::row_wise;
  double time_slope = 0.0;   // least-squares slope of log(median time) vs log S
  double flops_slope = 0.0;  // same fit over the analytic flop column
  std::size_t points = 0;
};

struct Report {
  Environment environment;
  std::vector<BenchResult> results;
  std::vector<ScalingFit> fits;
};

/// Peak score-matrix footprint in bytes of float32:
///   dense    (N S^2)^2
///   row_wise (N S)^2          (one row of the sweep live at a time)
///   epipolar N S^2 (S + (N - 1) K)
std::uint64_t modeled_memory(Variant v, std::uint64_t n, std::uint64_t s, std::uint64_t c, std::uint64_t k);

struct RunOptions {
  /// Cases whose modeled memory exceeds this are skipped, not run.
  std::uint64_t memory_ceiling_bytes = default_memory_ceiling();
  /// Worker threads inside the timed kernel. Timing is single-threaded by
  /// default so that fitted slopes track arithmetic complexity.
  unsigned threads = 1;

  /// MVATTN_BENCH_MEMORY_CEILING (bytes) when set, else 8 GiB. Throws
  /// InvalidArgument when the variable is not a plain byte count.
  static std::uint64_t default_memory_ceiling();
};

/// Times the attention core (projections excluded) on a seeded fixture:
/// `warmup` untimed runs, then `repetitions` timed runs.
BenchResult run_case(const BenchCase& bench_case, const RunOptions& opts = {});

/// Runs every (variant, S) pair in order and fits log-log slopes per variant.
/// Needs at least three S values.
Report sweep(std::span<const Variant> variants, std::span<const std::size_t> sizes, std::size_t n, std::size_t c,
             std::size_t k, std::size_t repetitions = 3, std::size_t warmup = 1, const RunOptions& opts = {});

/// Least-squares slope of log(y) against log(x).
double fit_loglog_slope(std::span<const double> x, std::span<const double> y);

Environment current_environment(unsigned threads);

// Report formats
inline constexpr const char* kCsvHeader = "variant,N,S,C,K,median_ms,min_ms,flops,modeled_bytes";

enum class Format { json, csv };

Format format_from_string(const std::string& s);
std::string report_to_json(const Report& report);
Report report_from_json(const std::string& text);
std::string report_to_csv(const Report& report);
/// Throws IoError when the path cannot be written.
void emit_report(const Report& report, Format format, const std::string& path);

// Acceptance-style checks over a finished report.
struct CheckLimits {
  double slope_tolerance = 0.5;
  double speedup_floor = 8.0;
  std::size_t speedup_min_s = 64;  // the floor applies at S >= this
};

struct CheckOutcome {
  bool passed = true;
  std::vector<std::string> lines;  // one human-readable line per check
};

/// dense/row_wise time slopes within tolerance of 4 and 3, epipolar within
/// tolerance of its own analytic flop slope; flops(dense)/flops(row_wise) = S
/// exactly; row_wise at least `speedup_floor` times faster than dense for
/// S >= speedup_min_s; at most one timing inversion per variant.
CheckOutcome check_report(const Report& report, const CheckLimits& limits = {});

}  // namespace mvattn::bench
