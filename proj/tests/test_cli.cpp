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

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mvattn/bench.hpp"
#include "mvattn/cli.hpp"
#include "mvattn/geometry.hpp"

using nlohmann::json;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "mvattn");
  std::ostringstream out, err;
  const int code = mvattn::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, mvattn::cli::kUsage);
  EXPECT_EQ(run({"frobnicate"}).code, mvattn::cli::kUsage);
  EXPECT_EQ(run({"verify", "--bogus"}).code, mvattn::cli::kUsage);
  EXPECT_EQ(run({"verify", "--samples", "many"}).code, mvattn::cli::kUsage);
  EXPECT_EQ(run({"--help"}).code, mvattn::cli::kSuccess);
}

TEST(CliVerify, PassesOnCanonicalRig) {
  const Outcome r = run({"verify", "--json", "--seed", "4"});
  ASSERT_EQ(r.code, 0) << r.out << r.err;
  const json j = json::parse(r.out);
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_LE(j["max_row_deviation"].get<double>(), 1e-9);
  EXPECT_LE(j["max_epipolar_residual"].get<double>(), 1e-9);
  EXPECT_EQ(run({"verify", "--json", "--seed", "4"}).out, r.out);
}

TEST(CliVerify, PerturbationFailsAndEchoesRig) {
  const Outcome r = run({"verify", "--perturb-elevation", "5", "--json"});
  EXPECT_EQ(r.code, mvattn::cli::kCheckFailed);
  const json j = json::parse(r.out);
  EXPECT_FALSE(j["passed"].get<bool>());
  ASSERT_EQ(j["offending_rig"].size(), 6u);
  EXPECT_EQ(j["offending_rig"][1]["elevation_deg"].get<double>(), 5.0);
  const Outcome text = run({"verify", "--perturb-elevation", "5", "--perturb-view", "3"});
  EXPECT_EQ(text.code, 1);
  EXPECT_NE(text.out.find("offending rig"), std::string::npos);
}

TEST(CliVerify, ZeroSamplesIsUsageError) {
  EXPECT_EQ(run({"verify", "--samples", "0"}).code, mvattn::cli::kUsage);
  EXPECT_EQ(run({"verify", "--perturb-view", "6"}).code, mvattn::cli::kUsage);
}

TEST(CliEquiv, PassesAndReportsDiff) {
  const Outcome r = run({"equiv", "--json", "--N", "3", "--S", "6", "--C", "8", "--heads", "2", "--seed", "9"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_LE(j["max_abs_diff"].get<double>(), 1e-6);
  EXPECT_TRUE(j["first_offending_index"].is_null());
}

TEST(CliEquiv, ZeroToleranceFailsWithIndex) {
  const Outcome r = run({"equiv", "--json", "--tolerance", "0"});
  EXPECT_EQ(r.code, mvattn::cli::kCheckFailed);
  const json j = json::parse(r.out);
  EXPECT_TRUE(j["first_offending_index"].contains("view"));
}

TEST(CliEquiv, RejectsOversizeAndBadHeads) {
  EXPECT_EQ(run({"equiv", "--S", "64"}).code, mvattn::cli::kUsage);
  EXPECT_EQ(run({"equiv", "--C", "16", "--heads", "3"}).code, mvattn::cli::kUsage);
  EXPECT_EQ(run({"equiv", "--tolerance", "-1"}).code, mvattn::cli::kUsage);
}

TEST(CliBench, CsvToStdout) {
  const Outcome r = run({"bench", "--variants", "row_wise,epipolar", "--S", "4,8", "--C", "8", "--K", "4", "--format", "csv"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), mvattn::bench::kCsvHeader);
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 5);
}

TEST(CliBench, JsonFileReadsBack) {
  const std::string path = ::testing::TempDir() + "bench.json";
  const Outcome r = run({"bench", "--variants", "row_wise", "--S", "4,8,16", "--C", "8", "--out", path});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rep = mvattn::bench::report_from_json(slurp(path));
  ASSERT_EQ(rep.results.size(), 3u);
  ASSERT_EQ(rep.fits.size(), 1u);
  EXPECT_NEAR(rep.fits[0].flops_slope, 3.0, 1e-12);
}

TEST(CliBench, UsageErrors) {
  EXPECT_EQ(run({"bench", "--check", "--S", "16,32"}).code, mvattn::cli::kUsage);
  EXPECT_EQ(run({"bench", "--S", "4", "--out", "/nonexistent-dir/r.json"}).code, mvattn::cli::kUsage);
  EXPECT_EQ(run({"bench", "--variants", "sparse"}).code, mvattn::cli::kUsage);
  EXPECT_EQ(run({"bench", "--format", "xml"}).code, mvattn::cli::kUsage);
  EXPECT_EQ(run({"bench", "--reps", "2"}).code, mvattn::cli::kUsage);
}

TEST(CliRig, WritesCanonicalRig) {
  const Outcome r = run({"rig", "--beta", "30", "--ortho-scale", "0.5"});
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(mvattn::geometry::rig_from_json(r.out), mvattn::geometry::CanonicalRig::make(30.0, 0.5));
  const std::string path = ::testing::TempDir() + "rig.json";
  ASSERT_EQ(run({"rig", "--beta", "-15", "--out", path}).code, 0);
  EXPECT_EQ(mvattn::geometry::load_rig(path), mvattn::geometry::CanonicalRig::make(-15.0, 1.0));
  EXPECT_EQ(run({"rig", "--ortho-scale", "0"}).code, mvattn::cli::kUsage);
}

TEST(CliRegressDemo, PassesAndIsDeterministic) {
  const Outcome r = run({"regress-demo", "--json", "--seed", "3", "--steps", "4"});
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_LE(j["max_gradient_relative_error"].get<double>(), 1e-4);
  EXPECT_EQ(j["per_step"].size(), 4u);
  EXPECT_EQ(run({"regress-demo", "--json", "--seed", "3", "--steps", "4"}).out, r.out);
}

TEST(CliRegressDemo, SameFeaturesGiveTheSingleStepPose) {
  const json many = json::parse(run({"regress-demo", "--json", "--same-features", "--steps", "5"}).out);
  const json one = json::parse(run({"regress-demo", "--json", "--same-features", "--steps", "1"}).out);
  EXPECT_NEAR(many["averaged"]["elevation_deg"].get<double>(), one["averaged"]["elevation_deg"].get<double>(), 1e-12);
}

TEST(CliRegressDemo, UsageErrors) {
  EXPECT_EQ(run({"regress-demo", "--steps", "0"}).code, mvattn::cli::kUsage);
  EXPECT_EQ(run({"regress-demo", "--cfg", "-1"}).code, mvattn::cli::kUsage);
}
