/*
 Copyright 2026 The AZOPG Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <stdexcept>
#include <string>

namespace azopg {

// Dimension mismatches and malformed inputs are reported as
// std::invalid_argument; the types below cover the domain failures.

/// The closed loop A - BK is not Hurwitz.
class NotStabilizingError : public std::runtime_error {
 public:
  explicit NotStabilizingError(const std::string& what)
      : std::runtime_error(what) {}
};

/// An iterative routine failed to converge or a post-check did not hold.
class NumericalFailure : public std::runtime_error {
 public:
  explicit NumericalFailure(const std::string& what)
      : std::runtime_error(what) {}
};

/// A rollout left the divergence cap. Carries the simulated blowup time.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double blowup_time)
      : std::runtime_error(what), blowup_time_(blowup_time) {}

  double blowup_time() const noexcept { return blowup_time_; }

 private:
  double blowup_time_;
};

/// Rejection sampling found nothing inside the requested sublevel set.
class SamplingFailure : public std::runtime_error {
 public:
  explicit SamplingFailure(const std::string& what)
      : std::runtime_error(what) {}
};

/// A speedup report could not be formed from the supplied traces.
class ReportError : public std::runtime_error {
 public:
  explicit ReportError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace azopg
