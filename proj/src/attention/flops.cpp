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

#include "mvattn/attention.hpp"
#include "mvattn/error.hpp"

namespace mvattn::attention {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::dense: return "dense";
    case Variant::epipolar: return "epipolar";
    case Variant::row_wise: return "row_wise";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "dense") return Variant::dense;
  if (s == "epipolar") return Variant::epipolar;
  if (s == "row_wise" || s == "row-wise") return Variant::row_wise;
  throw InvalidArgument("unknown attention variant '" + s + "'");
}

std::uint64_t flop_count(Variant v, std::uint64_t n, std::uint64_t s, std::uint64_t c, std::uint64_t k) {
  if (n == 0 || s == 0 || c == 0) throw InvalidArgument("flop_count needs positive N, S and C");
  // Each query-key pair costs C MACs for the score and C for the value mix.
  switch (v) {
    case Variant::dense: {
      const std::uint64_t t = n * s * s;
      return 2 * t * t * c;
    }
    case Variant::row_wise: {
      const std::uint64_t t = n * s;
      return s * 2 * t * t * c;
    }
    case Variant::epipolar:
      if (k == 0) throw InvalidArgument("flop_count: epipolar needs K >= 1");
      return 2 * n * s * s * (s + (n - 1) * k) * c;
  }
  throw InvalidArgument("unknown variant");
}

}  // namespace mvattn::attention
