// Copyright 2026 The cvqbm Authors
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cvqbm {

// Invalid arguments are reported with std::invalid_argument. Everything below
// is a numerical or data condition the caller may want to handle separately.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A state or operator has a shape the operation does not support.
class UnsupportedShape : public Error {
 public:
  using Error::Error;
};

/// The requested photon-number outcome has (numerically) zero probability.
class DegeneratePostSelection : public Error {
 public:
  DegeneratePostSelection(const std::string& what, double probability, int step = -1)
      : Error(what), probability_(probability), step_(step) {}

  double probability() const noexcept { return probability_; }
  /// QITE step index (0-based) that failed, or -1 when not known.
  int step() const noexcept { return step_; }

 private:
  double probability_;
  int step_;
};

class SqueezingOutOfRange : public Error {
 public:
  using Error::Error;
};

/// The Fock cutoff captures too little of an encoded distribution.
class CutoffInsufficient : public Error {
 public:
  CutoffInsufficient(const std::string& what, double captured)
      : Error(what), captured_(captured) {}
  double captured_norm() const noexcept { return captured_; }

 private:
  double captured_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : Error(what + " (at byte " + std::to_string(byte_offset) + ")"), offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class GradientUnavailable : public Error {
 public:
  GradientUnavailable(const std::string& what, std::size_t coordinate)
      : Error(what), coordinate_(coordinate) {}
  std::size_t coordinate() const noexcept { return coordinate_; }

 private:
  std::size_t coordinate_;
};

class InitializationFailed : public Error {
 public:
  using Error::Error;
};

}  // namespace cvqbm
