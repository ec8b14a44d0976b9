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

// One PASS/FAIL line per acceptance criterion, with the measured runtime.
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "mvattn/attention.hpp"
#include "mvattn/bench.hpp"
#include "mvattn/conditioning.hpp"
#include "mvattn/geometry.hpp"

namespace att = mvattn::attention;
namespace geo = mvattn::geometry;
namespace cond = mvattn::conditioning;
namespace bench = mvattn::bench;

namespace {

struct Verdict {
  bool ok = true;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Verdict()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < budget_s;
  const bool ok = v.ok && in_time;
  if (!ok) ++failures;
  std::printf("%s [%2d] %-34s %8.3f s (limit %g s)  %s%s\n", ok ? "PASS" : "FAIL", id, name, secs, budget_s,
              v.detail.c_str(), in_time ? "" : "  [over time budget]");
  std::fflush(stdout);
}

std::string sci(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

geo::Vec3 ball_point(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1, 1);
  for (;;) {
    geo::Vec3 p(d(rng), d(rng), d(rng));
    if (p.squaredNorm() <= 1.0) return p;
  }
}

// Largest |v_a - v_b| over all ordered view pairs, computed here from
// library projections of freshly drawn points.
double row_deviation(const std::vector<geo::CameraModel>& views, std::size_t points, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  std::vector<double> v(views.size());
  for (std::size_t p = 0; p < points; ++p) {
    const geo::Vec3 w = ball_point(rng);
    for (std::size_t i = 0; i < views.size(); ++i) v[i] = geo::project(views[i], w).y();
    for (std::size_t a = 0; a < views.size(); ++a)
      for (std::size_t b = 0; b < views.size(); ++b)
        if (a != b) worst = std::max(worst, std::abs(v[a] - v[b]));
  }
  return worst;
}

// Flat double-precision attention over the projected tokens of `grid`,
// restricted to keys sharing the query's row index.
std::vector<double> same_row_oracle(const att::FeatureGrid& g, const att::ProjectionWeights& w) {
  const std::size_t t = g.tokens(), c = g.channels(), s = g.size();
  auto proj = [&](const std::vector<float>& m, const std::vector<double>& x) {
    std::vector<double> y(t * c, 0.0);
    for (std::size_t i = 0; i < t; ++i)
      for (std::size_t a = 0; a < c; ++a)
        for (std::size_t b = 0; b < c; ++b) y[i * c + b] += x[i * c + a] * m[a * c + b];
    return y;
  };
  const std::vector<double> x(g.data().begin(), g.data().end());
  const auto q = proj(w.w_q, x), k = proj(w.w_k, x), v = proj(w.w_v, x);
  std::vector<double> mixed(t * c, 0.0), logit;
  const double scale = 1.0 / std::sqrt(double(c));
  for (std::size_t i = 0; i < t; ++i) {
    const std::size_t row = (i / s) % s;
    std::vector<std::size_t> keys;
    for (std::size_t j = 0; j < t; ++j)
      if ((j / s) % s == row) keys.push_back(j);
    logit.assign(keys.size(), 0.0);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < keys.size(); ++n) {
      for (std::size_t d = 0; d < c; ++d) logit[n] += q[i * c + d] * k[keys[n] * c + d];
      logit[n] *= scale;
      mx = std::max(mx, logit[n]);
    }
    double z = 0.0;
    for (double& l : logit) z += (l = std::exp(l - mx));
    for (std::size_t n = 0; n < keys.size(); ++n)
      for (std::size_t d = 0; d < c; ++d) mixed[i * c + d] += logit[n] / z * v[keys[n] * c + d];
  }
  std::vector<double> out(t * c, 0.0);
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t a = 0; a < c; ++a)
      for (std::size_t b = 0; b < c; ++b) out[i * c + b] += mixed[i * c + a] * w.w_out[a * c + b];
  return out;
}

bench::Report sweep_report;

}  // namespace

int main() {
  criterion(1, "row alignment on canonical rigs", 1.0, [] {
    std::mt19937_64 rng(2024);
    const double beta = std::uniform_real_distribution<double>(0, 360)(rng);
    const auto rig = geo::CanonicalRig::make(beta, 1.0);
    const std::vector<geo::CameraModel> views(rig.views().begin(), rig.views().end());
    const double dev = row_deviation(views, 1000, 1);
    const double lib = geo::verify_row_alignment(rig, 1000, 1);
    double perturbed_min = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < 6; ++v)
      perturbed_min = std::min(perturbed_min, row_deviation(rig.perturbed(v, 5.0), 1000, 1));
    return Verdict{dev <= 1e-9 && lib <= 1e-9 && perturbed_min > 1e-9,
                   "max dev " + sci(dev) + " (lib " + sci(lib) + "), 5 deg perturbation min dev " +
                       sci(perturbed_min)};
  });

  criterion(2, "epipolar constraint", 1.0, [] {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> az(0, 360), el(-30, 45), dist(2.5, 8), f(24, 135);
    double worst = 0.0;
    for (int rig = 0; rig < 100; ++rig) {
      const auto a = geo::CameraModel::perspective(f(rng), dist(rng), az(rng), el(rng));
      const auto b = geo::CameraModel::perspective(f(rng), dist(rng), az(rng), el(rng));
      const geo::Mat3 e = geo::essential_matrix(geo::relative_pose(a, b)).matrix;
      const geo::Mat3 en = e / e.norm();
      for (int p = 0; p < 100; ++p) {
        const geo::Vec3 w = ball_point(rng);
        const geo::Vec3 x1 = geo::calibrated(a, geo::project(a, w)).normalized();
        const geo::Vec3 x2 = geo::calibrated(b, geo::project(b, w)).normalized();
        worst = std::max(worst, std::abs(x2.dot(en * x1)));
      }
    }
    return Verdict{worst <= 1e-9, "max |x2^T E x1| " + sci(worst) + " over 100 rigs x 100 points"};
  });

  criterion(3, "attention oracle equivalence", 30.0, [] {
    double worst_row = 0.0, worst_epi = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const std::size_t n = 2 + seed % 5, s = 4 + (seed * 3) % 13, c = 8 * (1 + seed % 4);
      const auto g = att::FeatureGrid::random(n, s, c, seed);
      const auto w = att::ProjectionWeights::random(c, seed + 1000);
      const auto cfg = att::AttentionConfig::single_head(c);
      const auto fast = att::row_wise_attention(g, w, cfg);
      const auto ref = same_row_oracle(g, w);
      for (std::size_t i = 0; i < ref.size(); ++i) worst_row = std::max(worst_row, std::abs(fast.data()[i] - ref[i]));

      // Canonical rig always has six views.
      const auto g6 = att::FeatureGrid::random(6, s, c, seed + 500);
      const auto rig = geo::CanonicalRig::make(18.0 * double(seed), 1.0);
      const auto epi = att::epipolar_attention(g6, rig.views(), s, w, cfg);
      const auto row = att::row_wise_attention(g6, w, cfg);
      for (std::size_t i = 0; i < row.data().size(); ++i)
        worst_epi = std::max(worst_epi, double(std::abs(epi.data()[i] - row.data()[i])));
    }
    return Verdict{worst_row <= 1e-6 && worst_epi <= 1e-5,
                   "row_wise vs masked dense " + sci(worst_row) + ", epipolar K=S vs row_wise " + sci(worst_epi)};
  });

  criterion(4, "complexity orders", 300.0, [] {
    const std::vector<att::Variant> vars{att::Variant::dense, att::Variant::row_wise};
    const std::vector<std::size_t> sizes{16, 32, 64};
    sweep_report = bench::sweep(vars, sizes, 6, 32, 16, 3, 1);
    bool ok = true;
    std::string detail;
    for (const auto& f : sweep_report.fits) {
      const double theory = f.variant == att::Variant::dense ? 4.0 : 3.0;
      ok = ok && f.points == 3 && std::abs(f.time_slope - theory) <= 0.5 && std::abs(f.flops_slope - theory) < 1e-12;
      detail += std::string(att::to_string(f.variant)) + " time slope " + sci(f.time_slope) + " flop slope " +
                sci(f.flops_slope) + "; ";
    }
    for (std::uint64_t s : {16, 32, 64}) {
      const auto d = att::flop_count(att::Variant::dense, 6, s, 32, 16);
      const auto r = att::flop_count(att::Variant::row_wise, 6, s, 32, 16);
      ok = ok && d == r * s && att::flop_count(att::Variant::dense, 6, 2 * s, 32, 16) == 16 * d &&
           att::flop_count(att::Variant::row_wise, 6, 2 * s, 32, 16) == 8 * r;
    }
    return Verdict{ok, detail + "dense/row_wise flops == S"};
  });

  criterion(5, "row-wise speedup at S=64", 120.0, [] {
    const auto d = bench::run_case({att::Variant::dense, 6, 64, 32, 16, 3, 1, 1});
    const auto r = bench::run_case({att::Variant::row_wise, 6, 64, 32, 16, 3, 1, 1});
    if (d.skipped || r.skipped) return Verdict{false, "case skipped: " + d.skip_reason + r.skip_reason};
    const double speedup = d.median_time_s / r.median_time_s;
    return Verdict{speedup >= 8.0, "dense " + sci(d.median_time_s * 1e3) + " ms, row_wise " +
                                       sci(r.median_time_s * 1e3) + " ms, speedup " + sci(speedup) + "x"};
  });

  criterion(6, "regressor gradients", 10.0, [] {
    double worst_lib = 0.0, worst_own = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const std::size_t c = 16;
      const auto r = cond::PoseRegressor::random(c, seed);
      const auto h = cond::HiddenFeatureMap::random(4, 4, c, seed + 77);
      std::mt19937_64 rng(seed);
      const cond::PosePrediction gt{std::uniform_real_distribution<double>(-20, 40)(rng),
                                    std::uniform_real_distribution<double>(0.17, 1.0)(rng)};
      worst_lib = std::max(worst_lib, cond::gradient_check(r, h, gt).max_relative_error);

      // Own central differences. Each head moves only its own squared term,
      // so that term is differenced alone.
      const auto analytic = cond::loss_gradient(r, h, gt);
      const std::size_t ne = r.elevation.parameter_count();
      for (std::size_t i = 0; i < analytic.size(); ++i) {
        const bool is_e = i < ne;
        cond::PoseRegressor probe = r;
        cond::MLPRegressor& head = is_e ? probe.elevation : probe.focal;
        auto p = head.parameters();
        const std::size_t j = is_e ? i : i - ne;
        const double saved = p[j], step = 1e-5 * std::max(1.0, std::abs(saved));
        auto term = [&](double val) {
          p[j] = val;
          head.set_parameters(p);
          const auto pr = cond::regress_pose_raw(h, probe.elevation, probe.focal);
          const double d = is_e ? pr.elevation_deg - gt.elevation_deg : pr.focal_norm - gt.focal_norm;
          return d * d;
        };
        const double base = term(saved);
        const double numeric = (term(saved + step) - term(saved - step)) / (2 * step);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6 * std::max(1.0, base)});
        worst_own = std::max(worst_own, std::abs(analytic[i] - numeric) / denom);
      }
    }
    return Verdict{worst_lib <= 1e-4 && worst_own <= 1e-4,
                   "max relative error " + sci(worst_lib) + " (independent check " + sci(worst_own) + ")"};
  });

  criterion(7, "CFG pose averaging", 1.0, [] {
    cond::StepTrace t{{{10, 0}, {20, 0}}, {{0, 0}, {0, 0}}, 3.0};
    const double guided = cond::cfg_average_pose(t).elevation_deg;
    t.cfg_weight = 0.0;
    t.unconditional = {{-40, 5}, {90, 5}};
    const double plain = cond::cfg_average_pose(t).elevation_deg;
    return Verdict{guided == 60.0 && plain == 15.0, "w=3 gives " + sci(guided) + ", w=0 gives " + sci(plain)};
  });

  criterion(8, "focal normalization", 1.0, [] {
    const double f35 = geo::normalize_focal(geo::CameraModel::perspective(35, 3, 0));
    const double ortho = geo::normalize_focal(geo::CameraModel::orthographic(1, 0));
    const double f24 = geo::normalize_focal(geo::CameraModel::perspective(24, 3, 0));
    bool grid_ok = true;
    for (double f : {24.0, 35.0, 50.0, 85.0, 105.0, 135.0})
      for (double s : {0.25, 0.5, 1.0, 1.5, 3.0}) {
        grid_ok = grid_ok && geo::equivalent_distance(f, s) == f / s &&
                  geo::CameraModel::perspective_equivalent(f, s, 0).distance == f / s;
      }
    const bool ok = std::abs(f35 - 0.6857) < 5e-5 && ortho == 0.0 && f24 == 1.0 && grid_ok;
    return Verdict{ok, "35mm -> " + std::to_string(f35) + ", ortho -> " + sci(ortho) + ", 24mm -> " + sci(f24) +
                           ", d = f/s on 30 points " + (grid_ok ? "ok" : "MISMATCH")};
  });

  criterion(9, "noise schedules", 1.0, [] {
    const double a = 0.00085, b = 0.012;
    const auto lin = cond::noise_schedule(cond::ScheduleKind::linear, 1001, a, b);
    const auto sc = cond::noise_schedule(cond::ScheduleKind::scaled_linear, 1001, a, b);
    const bool ends = lin.betas.front() == a && lin.betas.back() == b && sc.betas.front() == a && sc.betas.back() == b;
    const bool mid = sc.betas[500] < lin.betas[500];
    return Verdict{ends && mid, std::string("endpoints ") + (ends ? "exact" : "WRONG") + ", midpoints scaled " +
                                    sci(sc.betas[500]) + " < linear " + sci(lin.betas[500])};
  });

  criterion(10, "serialization round trips", 1.0, [] {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> beta(0, 360), scale(0.1, 4);
    bool rig_ok = true;
    for (int i = 0; i < 50; ++i) {
      const auto rig = geo::CanonicalRig::make(beta(rng), scale(rng), 1.0 + beta(rng));
      rig_ok = rig_ok && geo::rig_from_json(geo::rig_to_json(rig)) == rig;
    }
    const auto g = att::FeatureGrid::random(6, 16, 32, 5);
    const auto back = att::decode_grid(att::encode_grid(g));
    const bool grid_ok =
        back.same_shape(g) && std::memcmp(back.data().data(), g.data().data(), g.data().size() * sizeof(float)) == 0;

    const bench::Report rep = bench::report_from_json(bench::report_to_json(sweep_report));
    bool bench_ok = rep.results.size() == sweep_report.results.size() && !rep.results.empty();
    for (std::size_t i = 0; bench_ok && i < rep.results.size(); ++i) {
      const auto &x = rep.results[i], &y = sweep_report.results[i];
      bench_ok = x.median_time_s == y.median_time_s && x.min_time_s == y.min_time_s && x.flops == y.flops &&
                 x.modeled_score_memory_bytes == y.modeled_score_memory_bytes && x.bench_case.s == y.bench_case.s;
    }
    for (std::size_t i = 0; bench_ok && i < rep.fits.size(); ++i)
      bench_ok = rep.fits[i].time_slope == sweep_report.fits[i].time_slope &&
                 rep.fits[i].flops_slope == sweep_report.fits[i].flops_slope;
    return Verdict{rig_ok && grid_ok && bench_ok, std::string("rig ") + (rig_ok ? "ok" : "MISMATCH") + ", grid " +
                                                     (grid_ok ? "ok" : "MISMATCH") + ", bench " +
                                                     (bench_ok ? "ok" : "MISMATCH")};
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
