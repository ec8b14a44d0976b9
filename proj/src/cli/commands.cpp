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
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mvattn/attention.hpp"
#include "mvattn/bench.hpp"
#include "mvattn/cli.hpp"
#include "mvattn/conditioning.hpp"
#include "mvattn/error.hpp"
#include "mvattn/geometry.hpp"

namespace mvattn::cli {
namespace {

using nlohmann::json;
namespace geo = mvattn::geometry;
namespace att = mvattn::attention;
namespace cond = mvattn::conditioning;

constexpr double kRowTolerance = 1e-9;
constexpr double kEpipolarTolerance = 1e-9;
constexpr double kGradientTolerance = 1e-4;
// The double-precision oracle is O(T^2 C); beyond this many tokens equiv
// refuses to run.
constexpr std::size_t kEquivMaxTokens = 4096;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

json camera_json(const geo::CameraModel& c) {
  json j{{"kind", geo::to_string(c.kind)},
         {"azimuth_deg", c.azimuth_deg},
         {"elevation_deg", c.elevation_deg},
         {"distance", c.distance}};
  if (c.kind == geo::CameraKind::perspective) j["focal_mm"] = c.focal_mm;
  else j["ortho_scale"] = c.ortho_scale;
  return j;
}

// Writes to `path`, or to `out` when path is "-".
bool write_output(const std::string& path, const std::string& text, std::ostream& out, std::ostream& err) {
  if (path == "-") {
    out << text;
    return true;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text) || !f.flush()) {
    err << "error: cannot write '" << path << "'\n";
    return false;
  }
  return true;
}

geo::CameraModel random_perspective(std::mt19937_64& rng) {
  constexpr double kFocals[] = {35.0, 50.0, 85.0, 105.0, 135.0};
  std::uniform_real_distribution<double> az(0.0, 360.0), el(-20.0, 40.0), dist(2.0, 6.0);
  std::uniform_int_distribution<int> pick(0, 4);
  return geo::CameraModel::perspective(kFocals[pick(rng)], dist(rng), az(rng), el(rng));
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  double perturb_elevation = 0.0;
  std::size_t perturb_view = 1;
  std::size_t rigs = 100;
  bool json = false;
};

int cmd_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
  if (a.samples == 0 || a.rigs == 0) {
    err << "error: --samples and --rigs must be >= 1\n";
    return kUsage;
  }
  if (a.perturb_view >= geo::kRigAzimuthOffsets.size()) {
    err << "error: --perturb-view must be in [0, 5]\n";
    return kUsage;
  }
  std::mt19937_64 rng(a.seed);
  const double beta = std::uniform_real_distribution<double>(0.0, 360.0)(rng);
  const auto rig = geo::CanonicalRig::make(beta, 1.0);
  const std::vector<geo::CameraModel> views =
      a.perturb_elevation != 0.0 ? rig.perturbed(a.perturb_view, a.perturb_elevation)
                                 : std::vector<geo::CameraModel>(rig.views().begin(), rig.views().end());
  const double row_dev = geo::max_row_deviation(views, a.samples, a.seed);

  // Epipolar constraint on random perspective pairs.
  double epi = 0.0;
  std::size_t worst_pair = 0;
  geo::CameraModel worst_a, worst_b;
  const std::size_t points_per_rig = 100;
  for (std::size_t i = 0; i < a.rigs; ++i) {
    const geo::CameraModel ca = random_perspective(rng);
    const geo::CameraModel cb = random_perspective(rng);
    const geo::EssentialMatrix e = geo::essential_matrix(geo::relative_pose(ca, cb));
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    for (std::size_t p = 0; p < points_per_rig;) {
      const geo::Vec3 w(coord(rng), coord(rng), coord(rng));
      if (w.squaredNorm() > 1.0) continue;
      ++p;
      const geo::Vec3 xa = ca.world_to_camera().apply(w);
      const geo::Vec3 xb = cb.world_to_camera().apply(w);
      const double r = geo::epipolar_residual(e, xa / xa.z(), xb / xb.z());
      if (r > epi) {
        epi = r;
        worst_pair = i;
        worst_a = ca;
        worst_b = cb;
      }
    }
  }

  const bool row_ok = row_dev <= kRowTolerance;
  const bool epi_ok = epi <= kEpipolarTolerance;
  const bool ok = row_ok && epi_ok;
  if (a.json) {
    json doc{{"command", "verify"},
             {"seed", a.seed},
             {"samples", a.samples},
             {"reference_azimuth_deg", beta},
             {"perturb_elevation_deg", a.perturb_elevation},
             {"max_row_deviation", row_dev},
             {"row_tolerance", kRowTolerance},
             {"max_epipolar_residual", epi},
             {"epipolar_tolerance", kEpipolarTolerance},
             {"epipolar_rigs", a.rigs},
             {"passed", ok}};
    if (!row_ok) {
      json cams = json::array();
      for (const auto& v : views) cams.push_back(camera_json(v));
      doc["offending_rig"] = cams;
    }
    if (!epi_ok) doc["offending_pair"] = {{"index", worst_pair}, {"a", camera_json(worst_a)}, {"b", camera_json(worst_b)}};
    out << doc.dump(2) << "\n";
  } else {
    out << "row alignment: max |v_a - v_b| = " << num(row_dev) << " over " << a.samples << " points x 30 view pairs"
        << (row_ok ? "  ok" : "  FAIL") << "\n";
    out << "epipolar constraint: max |x2^T E x1| = " << num(epi) << " over " << a.rigs << " random rigs"
        << (epi_ok ? "  ok" : "  FAIL") << "\n";
    if (!row_ok) {
      out << "offending rig:\n";
      for (const auto& v : views) out << "  " << camera_json(v).dump() << "\n";
    }
    if (!epi_ok)
      out << "offending pair " << worst_pair << ": " << camera_json(worst_a).dump() << " / "
          << camera_json(worst_b).dump() << "\n";
  }
  return ok ? kSuccess : kCheckFailed;
}

// ---------------------------------------------------------------------------

struct EquivArgs {
  std::size_t n = 6, s = 8, c = 16, heads = 1;
  std::uint64_t seed = 0;
  double tolerance = 1e-6;
  bool json = false;
};

int cmd_equiv(const EquivArgs& a, std::ostream& out, std::ostream& err) {
  if (a.n == 0 || a.s == 0 || a.c == 0 || a.heads == 0 || a.c % a.heads != 0) {
    err << "error: N, S, C, heads must be positive and heads must divide C\n";
    return kUsage;
  }
  if (a.n * a.s * a.s > kEquivMaxTokens) {
    err << "error: N*S*S = " << a.n * a.s * a.s << " exceeds the oracle limit of " << kEquivMaxTokens << " tokens\n";
    return kUsage;
  }
  if (!(a.tolerance >= 0.0)) {
    err << "error: --tolerance must be >= 0\n";
    return kUsage;
  }
  const auto grid = att::FeatureGrid::random(a.n, a.s, a.c, a.seed);
  const auto w = att::ProjectionWeights::random(a.c, a.seed + 1);
  const auto cfg = att::AttentionConfig::multi_head(a.c, a.heads);

  const att::FeatureGrid fast = att::row_wise_attention(grid, w, cfg);
  const std::vector<double> oracle = att::reference::dense_multiview_attention(grid, w, cfg, att::reference::same_row(a.s));

  double max_diff = 0.0;
  std::ptrdiff_t first_bad = -1;
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    const double d = std::abs(static_cast<double>(fast.data()[i]) - oracle[i]);
    max_diff = std::max(max_diff, d);
    if (first_bad < 0 && !(d <= a.tolerance)) first_bad = static_cast<std::ptrdiff_t>(i);
  }
  const bool ok = first_bad < 0;

  json where = nullptr;
  if (!ok) {
    const std::size_t idx = static_cast<std::size_t>(first_bad);
    const std::size_t token = idx / a.c;
    where = {{"flat", idx},
             {"view", token / (a.s * a.s)},
             {"row", (token / a.s) % a.s},
             {"col", token % a.s},
             {"channel", idx % a.c}};
  }
  if (a.json) {
    out << json{{"command", "equiv"},
                {"N", a.n},
                {"S", a.s},
                {"C", a.c},
                {"heads", a.heads},
                {"seed", a.seed},
                {"tolerance", a.tolerance},
                {"max_abs_diff", max_diff},
                {"first_offending_index", where},
                {"passed", ok}}
               .dump(2)
        << "\n";
  } else {
    out << "row-wise vs row-masked dense oracle (N=" << a.n << " S=" << a.s << " C=" << a.c << "): max |diff| = "
        << num(max_diff) << ", tolerance " << num(a.tolerance) << (ok ? "  ok" : "  FAIL") << "\n";
    if (!ok) out << "first offending index: " << where.dump() << "\n";
  }
  return ok ? kSuccess : kCheckFailed;
}

// ---------------------------------------------------------------------------

struct BenchArgs {
  std::vector<std::string> variants{"dense", "row_wise", "epipolar"};
  std::vector<std::size_t> sizes{16, 32, 64};
  std::size_t n = 6, c = 32, k = 16, reps = 3, warmup = 1;
  unsigned threads = 1;
  std::string format = "json";
  std::string out = "-";
  bool check = false;
};

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<bench::Variant> variants;
  bench::Format format;
  try {
    for (const auto& v : a.variants) variants.push_back(att::variant_from_string(v));
    format = bench::format_from_string(a.format);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  if (a.check && a.sizes.size() < 3) {
    err << "error: --check needs at least three --S values for a slope fit\n";
    return kUsage;
  }
  if (a.sizes.empty() || a.reps < 3 || a.n == 0 || a.c == 0 || a.k == 0 || a.threads == 0) {
    err << "error: need at least one S, --reps >= 3 and positive N, C, K, threads\n";
    return kUsage;
  }
  if (a.out != "-") {
    std::ofstream probe(a.out, std::ios::binary);
    if (!probe) {
      err << "error: cannot write '" << a.out << "'\n";
      return kUsage;
    }
  }

  bench::RunOptions opts;
  opts.threads = a.threads;
  bench::Report report;
  if (a.sizes.size() >= 3) {
    report = bench::sweep(variants, a.sizes, a.n, a.c, a.k, a.reps, a.warmup, opts);
  } else {
    report.environment = bench::current_environment(a.threads);
    for (auto v : variants)
      for (std::size_t s : a.sizes) report.results.push_back(bench::run_case({v, a.n, s, a.c, a.k, a.reps, a.warmup, 0}, opts));
  }

  const std::string text = format == bench::Format::json ? bench::report_to_json(report) : bench::report_to_csv(report);
  if (!write_output(a.out, text, out, err)) return kUsage;

  if (!a.check) return kSuccess;
  const bench::CheckOutcome outcome = bench::check_report(report);
  std::ostream& log = a.out == "-" ? err : out;
  for (const auto& line : outcome.lines) log << line << "\n";
  return outcome.passed ? kSuccess : kCheckFailed;
}

// ---------------------------------------------------------------------------

struct RigArgs {
  double beta = 0.0;
  double ortho_scale = 1.0;
  double distance = 2.0;
  std::string out = "-";
};

int cmd_rig(const RigArgs& a, std::ostream& out, std::ostream& err) {
  geo::CanonicalRig rig = [&] { return geo::CanonicalRig::make(a.beta, a.ortho_scale, a.distance); }();
  return write_output(a.out, geo::rig_to_json(rig), out, err) ? kSuccess : kUsage;
}

// ---------------------------------------------------------------------------

struct RegressArgs {
  std::uint64_t seed = 0;
  std::size_t steps = 10;
  double cfg = 3.0;
  std::size_t channels = 16;
  bool same_features = false;
  bool json = false;
};

int cmd_regress_demo(const RegressArgs& a, std::ostream& out, std::ostream& err) {
  if (a.steps == 0) {
    err << "error: --steps must be >= 1\n";
    return kUsage;
  }
  if (a.channels < 4 || !(a.cfg >= 0.0)) {
    err << "error: --channels must be >= 4 and --cfg >= 0\n";
    return kUsage;
  }
  constexpr std::size_t kMapSide = 8;
  const cond::PoseRegressor head = cond::PoseRegressor::random(a.channels, a.seed);

  cond::StepTrace trace;
  trace.cfg_weight = a.cfg;
  json steps = json::array();
  for (std::size_t t = 0; t < a.steps; ++t) {
    const std::uint64_t feature_seed = a.same_features ? a.seed + 1000 : a.seed + 1000 + 2 * t;
    const auto with_image = cond::HiddenFeatureMap::random(kMapSide, kMapSide, a.channels, feature_seed);
    const auto without_image = cond::HiddenFeatureMap::random(kMapSide, kMapSide, a.channels, feature_seed + 1);
    const cond::PosePrediction pc = cond::regress_pose(with_image, head);
    const cond::PosePrediction pu = cond::regress_pose(without_image, head);
    trace.conditional.push_back(pc);
    trace.unconditional.push_back(pu);
    steps.push_back({{"conditional", {pc.elevation_deg, pc.focal_norm}},
                     {"unconditional", {pu.elevation_deg, pu.focal_norm}}});
  }
  const cond::PosePrediction avg = cond::cfg_average_pose(trace);

  std::mt19937_64 rng(a.seed);
  constexpr double kFocals[] = {35.0, 50.0, 85.0, 105.0, 135.0};
  const cond::PosePrediction gt{std::uniform_real_distribution<double>(-20.0, 40.0)(rng),
                                geo::kMinFocalMm / kFocals[std::uniform_int_distribution<int>(0, 4)(rng)]};
  const double loss = cond::regression_loss(avg, gt);

  const auto probe = cond::HiddenFeatureMap::random(kMapSide, kMapSide, a.channels, a.seed + 1000);
  const cond::GradientCheck gc = cond::gradient_check(head, probe, gt);
  const bool ok = gc.max_relative_error <= kGradientTolerance;

  if (a.json) {
    out << json{{"command", "regress-demo"},
                {"seed", a.seed},
                {"steps", a.steps},
                {"cfg_weight", a.cfg},
                {"per_step", steps},
                {"averaged", {{"elevation_deg", avg.elevation_deg}, {"focal_norm", avg.focal_norm}}},
                {"ground_truth", {{"elevation_deg", gt.elevation_deg}, {"focal_norm", gt.focal_norm}}},
                {"loss", loss},
                {"gradient_parameters", gc.parameters},
                {"max_gradient_relative_error", gc.max_relative_error},
                {"gradient_tolerance", kGradientTolerance},
                {"passed", ok}}
               .dump(2)
        << "\n";
  } else {
    out << "averaged pose over " << a.steps << " steps (w=" << num(a.cfg) << "): elevation " << num(avg.elevation_deg)
        << " deg, focal " << num(avg.focal_norm) << "\n";
    out << "ground truth: elevation " << num(gt.elevation_deg) << " deg, focal " << num(gt.focal_norm) << "\n";
    out << "regression loss: " << num(loss) << "\n";
    out << "gradient check: max relative error " << num(gc.max_relative_error) << " over " << gc.parameters
        << " parameters" << (ok ? "  ok" : "  FAIL") << "\n";
  }
  return ok ? kSuccess : kCheckFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multiview attention geometry, equivalence and complexity tools", "mvattn"};
  app.require_subcommand(1);

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Check row alignment on a canonical rig and the epipolar constraint");
  verify->add_option("--samples", va.samples, "Random visible points");
  verify->add_option("--seed", va.seed);
  verify->add_option("--perturb-elevation", va.perturb_elevation, "Tilt one view by this many degrees");
  verify->add_option("--perturb-view", va.perturb_view, "Index of the tilted view");
  verify->add_option("--rigs", va.rigs, "Random perspective pairs for the epipolar check");
  verify->add_flag("--json", va.json);

  EquivArgs ea;
  auto* equiv = app.add_subcommand("equiv", "Row-wise attention vs row-masked dense oracle");
  equiv->add_option("--N", ea.n);
  equiv->add_option("--S", ea.s);
  equiv->add_option("--C", ea.c);
  equiv->add_option("--heads", ea.heads);
  equiv->add_option("--seed", ea.seed);
  equiv->add_option("--tolerance", ea.tolerance);
  equiv->add_flag("--json", ea.json);

  BenchArgs ba;
  auto* bench_cmd = app.add_subcommand("bench", "Time attention variants over an S sweep");
  bench_cmd->add_option("--variants", ba.variants)->delimiter(',');
  bench_cmd->add_option("--S", ba.sizes)->delimiter(',');
  bench_cmd->add_option("--N", ba.n);
  bench_cmd->add_option("--C", ba.c);
  bench_cmd->add_option("--K", ba.k);
  bench_cmd->add_option("--reps", ba.reps);
  bench_cmd->add_option("--warmup", ba.warmup);
  bench_cmd->add_option("--threads", ba.threads);
  bench_cmd->add_option("--format", ba.format);
  bench_cmd->add_option("--out", ba.out, "Report path, '-' for stdout");
  bench_cmd->add_flag("--check", ba.check, "Fail unless slopes and speedup floor hold");

  RigArgs ra;
  auto* rig = app.add_subcommand("rig", "Write a canonical six-view rig as JSON");
  rig->add_option("--beta", ra.beta, "Reference azimuth in degrees");
  rig->add_option("--ortho-scale", ra.ortho_scale);
  rig->add_option("--distance", ra.distance);
  rig->add_option("--out", ra.out, "Rig path, '-' for stdout");

  RegressArgs rga;
  auto* regress = app.add_subcommand("regress-demo", "Synthetic pose regression, CFG averaging and gradient check");
  regress->add_option("--seed", rga.seed);
  regress->add_option("--steps", rga.steps);
  regress->add_option("--cfg", rga.cfg, "Classifier-free guidance weight");
  regress->add_option("--channels", rga.channels);
  regress->add_flag("--same-features", rga.same_features, "Reuse one feature map for every step");
  regress->add_flag("--json", rga.json);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    if (*verify) return cmd_verify(va, out, err);
    if (*equiv) return cmd_equiv(ea, out, err);
    if (*bench_cmd) return cmd_bench(ba, out, err);
    if (*rig) return cmd_rig(ra, out, err);
    if (*regress) return cmd_regress_demo(rga, out, err);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace mvattn::cli
