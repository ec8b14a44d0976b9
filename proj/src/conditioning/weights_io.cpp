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

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mvattn/attention.hpp"
#include "mvattn/conditioning.hpp"
#include "mvattn/error.hpp"

namespace mvattn::conditioning {

using nlohmann::json;

void save_regressor(const MLPRegressor& r, const std::string& path) {
  const std::vector<double> params = r.parameters();
  attention::FeatureGrid blob(1, 1, params.size());
  for (std::size_t i = 0; i < params.size(); ++i) blob.data()[i] = static_cast<float>(params[i]);
  attention::save_grid(blob, path);

  json layers = json::array();
  for (const DenseLayer& l : r.layers()) layers.push_back({{"in", l.weight.cols()}, {"out", l.weight.rows()}});
  const json sidecar{{"layers", layers},
                     {"activation", r.activation() == Activation::tanh ? "tanh" : "identity"},
                     {"seed", r.seed()},
                     {"parameter_count", params.size()}};
  std::ofstream out(path + ".json");
  if (!out) throw IoError("cannot open '" + path + ".json' for writing");
  out << sidecar.dump(2) << "\n";
}

MLPRegressor load_regressor(const std::string& path) {
  std::ifstream in(path + ".json");
  if (!in) throw IoError("cannot open '" + path + ".json'");
  std::ostringstream ss;
  ss << in.rdbuf();
  json sidecar;
  try {
    sidecar = json::parse(ss.str());
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed regressor sidecar: ") + e.what());
  }

  std::vector<DenseLayer> layers;
  for (const json& jl : sidecar.at("layers")) {
    const auto rows = jl.at("out").get<Eigen::Index>();
    const auto cols = jl.at("in").get<Eigen::Index>();
    layers.push_back({Eigen::MatrixXd::Zero(rows, cols), Eigen::VectorXd::Zero(rows)});
  }
  const std::string act = sidecar.at("activation").get<std::string>();
  if (act != "tanh" && act != "identity") throw InvalidArgument("unknown activation '" + act + "'");
  MLPRegressor r(std::move(layers), act == "tanh" ? Activation::tanh : Activation::identity,
                 sidecar.at("seed").get<std::uint64_t>());

  const attention::FeatureGrid blob = attention::load_grid(path);
  if (blob.data().size() != r.parameter_count()) throw InvalidArgument("regressor blob does not match its sidecar");
  std::vector<double> params(blob.data().begin(), blob.data().end());
  r.set_parameters(params);
  return r;
}

}  // namespace mvattn::conditioning
