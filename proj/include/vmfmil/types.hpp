// Copyright 2026 The vmfmil Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace vmfmil {

using Vector = Eigen::VectorXd;
// Row-major so that one proposal's feature is a contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Rng = std::mt19937_64;

// Axis-aligned box in pixel coordinates.
struct Box {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool valid() const { return x_min < x_max && y_min < y_max; }

  friend bool operator==(const Box&, const Box&) = default;
};

// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (files, manifests, records).
class DataError : public Error {
 public:
  using Error::Error;
};

// A record violates a documented invariant (e.g. a feature row is not unit norm).
class ValidationError : public DataError {
 public:
  using DataError::DataError;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// The weighted resultant of unit vectors vanished, so no mean direction exists.
class DegenerateResultant : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Not enough images or classes to satisfy a sampling request.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// An optimizer produced a non-finite objective.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Evaluation-protocol violation, e.g. CorLoc over an image without ground truth.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

}  // namespace vmfmil
