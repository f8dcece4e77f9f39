// Copyright 2026 The HSI Toolkit Authors
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

namespace hsi {

/// Bad input to a constructor or operation (wrong site kind, shape mismatch,
/// invalid parameters).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A physical invariant (trace, Hermiticity, positivity) broke during a run.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The steady-state null space is not one-dimensional.
class DegenerateSteadyState : public std::runtime_error {
 public:
  DegenerateSteadyState(std::size_t multiplicity, const std::string& what)
      : std::runtime_error(what), multiplicity_(multiplicity) {}
  /// 0 when the solver could not determine it.
  std::size_t multiplicity() const { return multiplicity_; }

 private:
  std::size_t multiplicity_;
};

class ConvergenceFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An identity check (mapping correspondence, moment equations) exceeded its
/// tolerance.
class VerificationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reading a configuration or writing an output file failed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hsi
