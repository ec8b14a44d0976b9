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

#include <stdexcept>
#include <string>

namespace mvattn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument did not hold (bad size, non-positive value,
/// malformed rotation, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Perspective projection of a point at or behind the camera plane.
class BehindCamera : public Error {
 public:
  using Error::Error;
};

/// E·x1 vanished: the query pixel is the epipole and has no line.
class DegenerateLine : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf in an input or a computed result.
class NonFinite : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace mvattn
