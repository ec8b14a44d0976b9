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
#include <random>
#include <string>

#include "mvattn/conditioning.hpp"
#include "mvattn/error.hpp"

namespace mvattn::conditioning {
namespace {

Eigen::VectorXd activate(const Eigen::VectorXd& z, Activation act) {
  if (act == Activation::identity) return z;
  return z.array().tanh().matrix();
}

Eigen::VectorXd activate_derivative(const Eigen::VectorXd& z, Activation act) {
  if (act == Activation::identity) return Eigen::VectorXd::Ones(z.size());
  return (1.0 - z.array().tanh().square()).matrix();
}

void check_dims(const std::vector<std::size_t>& dims) {
  if (dims.size() != 4) throw InvalidArgument("regressor needs exactly three layers (four dims)");
  if (dims.back() != 1) throw InvalidArgument("regressor output dim must be 1");
  for (std::size_t d : dims)
    if (d == 0) throw InvalidArgument("regressor layer dims must be positive");
}

}  // namespace

HiddenFeatureMap HiddenFeatureMap::constant(std::size_t h, std::size_t w, std::size_t c, double value) {
  return {h, w, c, std::vector<double>(h * w * c, value)};
}

HiddenFeatureMap HiddenFeatureMap::random(std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed) {
  HiddenFeatureMap m{h, w, c, std::vector<double>(h * w * c)};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& x : m.data) x = dist(rng);
  return m;
}

void HiddenFeatureMap::validate() const {
  if (height == 0 || width == 0 || channels == 0) throw InvalidArgument("hidden feature map is empty");
  if (data.size() != height * width * channels) throw InvalidArgument("hidden feature map data size mismatch");
  for (double x : data)
    if (!std::isfinite(x)) throw NonFinite("hidden feature map contains a non-finite value");
}

Eigen::VectorXd avg_pool(const HiddenFeatureMap& h) {
  h.validate();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(h.channels));
  const std::size_t pixels = h.height * h.width;
  for (std::size_t p = 0; p < pixels; ++p)
    for (std::size_t c = 0; c < h.channels; ++c) sum[static_cast<Eigen::Index>(c)] += h.data[p * h.channels + c];
  return sum / static_cast<double>(pixels);
}

MLPRegressor::MLPRegressor(std::vector<DenseLayer> layers, Activation act, std::uint64_t seed)
    : layers_(std::move(layers)), act_(act), seed_(seed) {
  if (layers_.empty()) throw InvalidArgument("regressor has no layers");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const DenseLayer& l = layers_[i];
    if (l.bias.size() != l.weight.rows()) throw InvalidArgument("layer bias does not match its weight rows");
    if (i > 0 && l.weight.cols() != layers_[i - 1].weight.rows())
      throw InvalidArgument("layer " + std::to_string(i) + " input dim does not chain");
  }
  if (layers_.back().weight.rows() != 1) throw InvalidArgument("regressor must end in a scalar");
}

MLPRegressor MLPRegressor::random(const std::vector<std::size_t>& dims, std::uint64_t seed, Activation act) {
  check_dims(dims);
  std::mt19937_64 rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const auto in = static_cast<Eigen::Index>(dims[i]);
    const auto out = static_cast<Eigen::Index>(dims[i + 1]);
    std::uniform_real_distribution<double> dist(-1.0 / std::sqrt(double(in)), 1.0 / std::sqrt(double(in)));
    DenseLayer l{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) l.weight(r, c) = dist(rng);
    for (Eigen::Index r = 0; r < out; ++r) l.bias[r] = dist(rng);
    layers.push_back(std::move(l));
  }
  return MLPRegressor(std::move(layers), act, seed);
}

MLPRegressor MLPRegressor::zeros(const std::vector<std::size_t>& dims, double output_bias, Activation act) {
  check_dims(dims);
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const auto in = static_cast<Eigen::Index>(dims[i]);
    const auto out = static_cast<Eigen::Index>(dims[i + 1]);
    layers.push_back({Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
  }
  layers.back().bias[0] = output_bias;
  return MLPRegressor(std::move(layers), act);
}

std::vector<std::size_t> MLPRegressor::default_dims(std::size_t channels) {
  if (channels < 4) throw InvalidArgument("default regressor widths need at least 4 channels");
  return {channels, channels / 2, channels / 4, 1};
}

std::size_t MLPRegressor::input_dim() const { return static_cast<std::size_t>(layers_.front().weight.cols()); }

double MLPRegressor::forward(const Eigen::VectorXd& x) const {
  if (static_cast<std::size_t>(x.size()) != input_dim()) throw InvalidArgument("regressor input dim mismatch");
  Eigen::VectorXd a = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Eigen::VectorXd z = layers_[i].weight * a + layers_[i].bias;
    a = (i + 1 < layers_.size()) ? activate(z, act_) : z;
  }
  return a[0];
}

std::vector<double> MLPRegressor::backward(const Eigen::VectorXd& x, double upstream) const {
  if (static_cast<std::size_t>(x.size()) != input_dim()) throw InvalidArgument("regressor input dim mismatch");
  // Forward pass keeping pre-activations and layer inputs.
  std::vector<Eigen::VectorXd> inputs, pre;
  Eigen::VectorXd a = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    inputs.push_back(a);
    pre.push_back(layers_[i].weight * a + layers_[i].bias);
    a = (i + 1 < layers_.size()) ? activate(pre.back(), act_) : pre.back();
  }

  std::vector<Eigen::MatrixXd> dw(layers_.size());
  std::vector<Eigen::VectorXd> db(layers_.size());
  Eigen::VectorXd delta = Eigen::VectorXd::Constant(1, upstream);
  for (std::size_t i = layers_.size(); i-- > 0;) {
    dw[i] = delta * inputs[i].transpose();
    db[i] = delta;
    if (i > 0) delta = (layers_[i].weight.transpose() * delta).cwiseProduct(activate_derivative(pre[i - 1], act_));
  }

  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    for (Eigen::Index r = 0; r < dw[i].rows(); ++r)
      for (Eigen::Index c = 0; c < dw[i].cols(); ++c) flat.push_back(dw[i](r, c));
    for (Eigen::Index r = 0; r < db[i].size(); ++r) flat.push_back(db[i][r]);
  }
  return flat;
}

std::size_t MLPRegressor::parameter_count() const {
  std::size_t n = 0;
  for (const DenseLayer& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

std::vector<double> MLPRegressor::parameters() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (const DenseLayer& l : layers_) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat.push_back(l.weight(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) flat.push_back(l.bias[r]);
  }
  return flat;
}

void MLPRegressor::set_parameters(std::span<const double> flat) {
  if (flat.size() != parameter_count()) throw InvalidArgument("parameter vector has the wrong length");
  std::size_t i = 0;
  for (DenseLayer& l : layers_) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[i++];
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = flat[i++];
  }
}

PoseRegressor PoseRegressor::random(std::size_t channels, std::uint64_t seed) {
  const auto dims = MLPRegressor::default_dims(channels);
  return {MLPRegressor::random(dims, seed), MLPRegressor::random(dims, seed ^ 0x9E3779B97F4A7C15ull)};
}

PosePrediction regress_pose_raw(const HiddenFeatureMap& h, const MLPRegressor& r1, const MLPRegressor& r2) {
  if (r1.input_dim() != h.channels || r2.input_dim() != h.channels)
    throw InvalidArgument("regressor input dim does not match the feature channels");
  const Eigen::VectorXd pooled = avg_pool(h);
  return {r1.forward(pooled), r2.forward(pooled)};
}

PosePrediction regress_pose(const HiddenFeatureMap& h, const MLPRegressor& r1, const MLPRegressor& r2) {
  PosePrediction p = regress_pose_raw(h, r1, r2);
  p.focal_norm = std::clamp(p.focal_norm, 0.0, 1.0);
  return p;
}

PosePrediction regress_pose(const HiddenFeatureMap& h, const PoseRegressor& r) {
  return regress_pose(h, r.elevation, r.focal);
}

double regression_loss(const PosePrediction& pred, const PosePrediction& gt) {
  const double da = pred.elevation_deg - gt.elevation_deg;
  const double df = pred.focal_norm - gt.focal_norm;
  return da * da + df * df;
}

double regression_loss(std::span<const PosePrediction> pred, std::span<const PosePrediction> gt) {
  if (pred.size() != gt.size()) throw InvalidArgument("prediction and ground-truth batches differ in size");
  if (pred.empty()) throw InvalidArgument("empty batch");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += regression_loss(pred[i], gt[i]);
  return sum / static_cast<double>(pred.size());
}

}  // namespace mvattn::conditioning
