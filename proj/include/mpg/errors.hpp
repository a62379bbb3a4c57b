// Copyright 2026 The mpgkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MPG_ERRORS_HPP_
#define MPG_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace mpg {

// Malformed input: bad indices, shape mismatches, invariant violations.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A documented precondition of an analysis does not hold (e.g. a state with
// zero visitation mass when a distribution-mismatch ratio is required).
class PreconditionFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InternalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A policy callback produced a non-finite action.
class PolicyFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite value during a differentiable rollout; `step` is the time index.
class NumericalFault : public std::runtime_error {
 public:
  NumericalFault(const std::string& what, int step)
      : std::runtime_error(what + " (step " + std::to_string(step) + ")"),
        step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

}  // namespace mpg

#endif  // MPG_ERRORS_HPP_
