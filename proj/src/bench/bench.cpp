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
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <string>
#include <thread>

#include "mvattn/bench.hpp"
#include "mvattn/error.hpp"
#include "mvattn/kernels.hpp"

namespace mvattn::bench {
namespace {

volatile float g_sink = 0.0f;

std::vector<geometry::CameraModel> bench_cameras(std::size_t n) {
  if (n == geometry::kRigAzimuthOffsets.size()) {
    const auto rig = geometry::CanonicalRig::make(0.0, 1.0);
    return {rig.views().begin(), rig.views().end()};
  }
  std::vector<geometry::CameraModel> cams;
  for (std::size_t i = 0; i < n; ++i)
    cams.push_back(geometry::CameraModel::orthographic(1.0, 360.0 * double(i) / double(n)));
  return cams;
}

std::string read_cpu_model() {
  std::ifstream in("/proc/cpuinfo");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        std::string name = line.substr(colon + 1);
        name.erase(0, name.find_first_not_of(" \t"));
        return name;
      }
    }
  }
  return "unknown";
}

}  // namespace

void BenchCase::validate() const {
  if (n == 0 || s == 0 || c == 0) throw InvalidArgument("bench case needs positive N, S and C");
  if (variant == Variant::epipolar && k == 0) throw InvalidArgument("epipolar bench case needs K >= 1");
  if (repetitions < 3) throw InvalidArgument("bench case needs at least 3 repetitions");
}

std::uint64_t modeled_memory(Variant v, std::uint64_t n, std::uint64_t s, std::uint64_t c, std::uint64_t k) {
  if (n == 0 || s == 0 || c == 0) throw InvalidArgument("modeled_memory needs positive sizes");
  constexpr std::uint64_t kFloatBytes = 4;
  switch (v) {
    case Variant::dense: {
      const std::uint64_t t = n * s * s;
      return kFloatBytes * t * t;
    }
    case Variant::row_wise: {
      const std::uint64_t t = n * s;
      return kFloatBytes * t * t;
    }
    case Variant::epipolar:
      if (k == 0) throw InvalidArgument("modeled_memory: epipolar needs K >= 1");
      return kFloatBytes * n * s * s * (s + (n - 1) * k);
  }
  throw InvalidArgument("unknown variant");
}

std::uint64_t RunOptions::default_memory_ceiling() {
  if (const char* env = std::getenv("MVATTN_BENCH_MEMORY_CEILING")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && env[0] != '-') return v;
    throw InvalidArgument(std::string("MVATTN_BENCH_MEMORY_CEILING must be a byte count, got '") + env + "'");
  }
  return 8ull << 30;
}

BenchResult run_case(const BenchCase& bc, const RunOptions& opts) {
  bc.validate();
  BenchResult res;
  res.bench_case = bc;
  res.flops = attention::flop_count(bc.variant, bc.n, bc.s, bc.c, std::max<std::size_t>(bc.k, 1));
  res.modeled_score_memory_bytes = modeled_memory(bc.variant, bc.n, bc.s, bc.c, std::max<std::size_t>(bc.k, 1));
  if (res.modeled_score_memory_bytes > opts.memory_ceiling_bytes) {
    res.skipped = true;
    res.skip_reason = "modeled memory " + std::to_string(res.modeled_score_memory_bytes) + " B exceeds ceiling " +
                      std::to_string(opts.memory_ceiling_bytes) + " B";
    return res;
  }

  const auto q = attention::FeatureGrid::random(bc.n, bc.s, bc.c, bc.seed);
  const auto k = attention::FeatureGrid::random(bc.n, bc.s, bc.c, bc.seed + 1);
  const auto v = attention::FeatureGrid::random(bc.n, bc.s, bc.c, bc.seed + 2);
  const auto cfg = attention::AttentionConfig::single_head(bc.c);
  const auto cameras = bench_cameras(bc.n);
  const attention::ExecPolicy exec{opts.threads};

  auto once = [&] {
    attention::FeatureGrid out;
    switch (bc.variant) {
      case Variant::dense: out = attention::dense_core(q, k, v, cfg); break;
      case Variant::row_wise: out = attention::row_wise_core(q, k, v, cfg, exec); break;
      case Variant::epipolar: out = attention::epipolar_core(q, k, v, cameras, bc.k, cfg, exec); break;
    }
    g_sink = g_sink + out.data()[0];
  };

  for (std::size_t i = 0; i < bc.warmup; ++i) once();
  std::vector<double> times;
  times.reserve(bc.repetitions);
  for (std::size_t i = 0; i < bc.repetitions; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    once();
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  std::sort(times.begin(), times.end());
  const std::size_t mid = times.size() / 2;
  res.median_time_s = times.size() % 2 == 1 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
  res.min_time_s = times.front();
  return res;
}

double fit_loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("slope fit needs at least two matching points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw InvalidArgument("log-log fit needs positive values");
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw InvalidArgument("slope fit needs distinct x values");
  return (n * sxy - sx * sy) / denom;
}

Environment current_environment(unsigned threads) {
  return {read_cpu_model(), threads, std::thread::hardware_concurrency(), std::string(kernels::active().name)};
}

Report sweep(std::span<const Variant> variants, std::span<const std::size_t> sizes, std::size_t n, std::size_t c,
             std::size_t k, std::size_t repetitions, std::size_t warmup, const RunOptions& opts) {
  if (sizes.size() < 3) throw InvalidArgument("a sweep needs at least three S values");
  if (variants.empty()) throw InvalidArgument("a sweep needs at least one variant");
  Report report;
  report.environment = current_environment(opts.threads);
  for (Variant var : variants) {
    std::vector<double> xs, ts, fs;
    for (std::size_t s : sizes) {
      BenchCase bc{var, n, s, c, k, repetitions, warmup, 0};
      BenchResult r = run_case(bc, opts);
      if (!r.skipped) {
        xs.push_back(static_cast<double>(s));
        ts.push_back(r.median_time_s);
        fs.push_back(static_cast<double>(r.flops));
      }
      report.results.push_back(std::move(r));
    }
    ScalingFit fit;
    fit.variant = var;
    fit.points = xs.size();
    if (xs.size() >= 2) {
      fit.time_slope = fit_loglog_slope(xs, ts);
      fit.flops_slope = fit_loglog_slope(xs, fs);
    }
    report.fits.push_back(fit);
  }
  return report;
}

}  // namespace mvattn::bench
