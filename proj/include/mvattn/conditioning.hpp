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

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

// Elevation / focal regression head over pooled UNet features, its training
// loss, the conditioning embedding built from its outputs, classifier-free
// guidance averaging over denoising steps, and the beta schedules.

namespace mvattn::conditioning {

/// height x width x channels, channel fastest.
struct HiddenFeatureMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<double> data;

  static HiddenFeatureMap constant(std::size_t h, std::size_t w, std::size_t c, double value);
  static HiddenFeatureMap random(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed);
  void validate() const;
};

/// Channel-wise spatial mean.
Eigen::VectorXd avg_pool(const HiddenFeatureMap& h);

enum class Activation { tanh, identity };

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// Three dense layers ending in a single scalar. Hidden layers use the
/// activation; the output layer is linear.
class MLPRegressor {
 public:
  /// dims = {in, hidden1, hidden2, 1}. Weights uniform in +-1/sqrt(fan_in).
  static MLPRegressor random(const std::vector<std::size_t>& dims, std::uint64_t seed,
                             Activation act = Activation::tanh);
  static MLPRegressor zeros(const std::vector<std::size_t>& dims, double output_bias = 0.0,
                            Activation act = Activation::tanh);
  /// {C, C/2, C/4, 1}; needs C >= 4.
  static std::vector<std::size_t> default_dims(std::size_t channels);

  MLPRegressor(std::vector<DenseLayer> layers, Activation act, std::uint64_t seed = 0);

  double forward(const Eigen::VectorXd& x) const;

  /// Gradient of the output w.r.t. every parameter (flat order) scaled by
  /// `upstream`, i.e. d(loss)/d(theta) given d(loss)/d(output).
  std::vector<double> backward(const Eigen::VectorXd& x, double upstream) const;

  std::size_t input_dim() const;
  std::size_t parameter_count() const;
  /// Flat order: for each layer, weight row-major then bias.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  Activation activation() const { return act_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::vector<DenseLayer> layers_;
  Activation act_ = Activation::tanh;
  std::uint64_t seed_ = 0;
};

struct PosePrediction {
  double elevation_deg = 0.0;
  double focal_norm = 0.0;

  friend bool operator==(const PosePrediction&, const PosePrediction&) = default;
};

/// Elevation head and focal head reading the same pooled vector.
struct PoseRegressor {
  MLPRegressor elevation;
  MLPRegressor focal;

  static PoseRegressor random(std::size_t channels, std::uint64_t seed);
};

/// Unclamped outputs; use these for the loss.
PosePrediction regress_pose_raw(const HiddenFeatureMap& h, const MLPRegressor& r1, const MLPRegressor& r2);

/// As regress_pose_raw, with focal_norm clamped to [0, 1].
PosePrediction regress_pose(const HiddenFeatureMap& h, const MLPRegressor& r1, const MLPRegressor& r2);
PosePrediction regress_pose(const HiddenFeatureMap& h, const PoseRegressor& r);

/// (a~ - a)^2 + (f~ - f)^2
double regression_loss(const PosePrediction& pred, const PosePrediction& gt);
/// Mean of the per-sample losses.
double regression_loss(std::span<const PosePrediction> pred, std::span<const PosePrediction> gt);

/// [sin(v w_0) .. sin(v w_{d/2-1}), cos(v w_0) .. cos(v w_{d/2-1})] with
/// w_i = max_period^(-i / (d/2 - 1)), geometric from 1 down to 1/max_period.
std::vector<double> positional_encode(double value, std::size_t dims, double max_period = 10000.0);

/// Elevation (degrees) is multiplied by this before encoding.
inline constexpr double kElevationEncodingScale = 1.0 / 40.0;

/// [time_emb | encode(elevation / 40) | encode(focal)], length D + 2 dims.
std::vector<double> condition_embedding(const PosePrediction& pred, std::span<const double> time_emb,
                                        std::size_t dims, double max_period = 10000.0);

/// Per-step conditional and unconditional predictions for t = 1..T.
struct StepTrace {
  std::vector<PosePrediction> conditional;
  std::vector<PosePrediction> unconditional;
  double cfg_weight = 0.0;
};

/// (1/T) sum_t [(1 + w) cond_t - w uncond_t], component-wise.
PosePrediction cfg_average_pose(const StepTrace& trace);

enum class ScheduleKind { linear, scaled_linear };

struct NoiseSchedule {
  ScheduleKind kind = ScheduleKind::linear;
  std::size_t steps = 0;
  double beta_start = 0.0;
  double beta_end = 0.0;
  std::vector<double> betas;
};

/// linear: betas interpolate beta_start -> beta_end.
/// scaled_linear: interpolate in sqrt space, then square.
NoiseSchedule noise_schedule(ScheduleKind kind, std::size_t steps, double beta_start, double beta_end);

struct GradientCheck {
  double max_relative_error = 0.0;
  std::size_t parameters = 0;
  double loss = 0.0;
};

/// Analytic gradient of regression_loss(regress_pose_raw(h, r), gt) w.r.t.
/// both heads' parameters, elevation head first.
std::vector<double> loss_gradient(const PoseRegressor& r, const HiddenFeatureMap& h, const PosePrediction& gt);

/// Compares loss_gradient with central differences (step 1e-5 scaled by the
/// parameter's magnitude) and reports the worst relative error.
GradientCheck gradient_check(const PoseRegressor& r, const HiddenFeatureMap& h, const PosePrediction& gt,
                             double step = 1e-5);

// Regressor weights: float32 grid container (header 1, 1, 1, P) plus a JSON
// sidecar at `path + ".json"` with layer dims, activation and seed.
void save_regressor(const MLPRegressor& r, const std::string& path);
MLPRegressor load_regressor(const std::string& path);

}  // namespace mvattn::conditioning
