// Copyright (c) 2026 The noisysense Authors. All Rights Reserved
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

#ifndef NOISYSENSE_ERRORS_HPP_
#define NOISYSENSE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace noisysense {

/// Bad input data: malformed records, off-scale ratings, duplicates,
/// mismatched record sets. Maps to CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration or command-line usage. Maps to CLI exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A broken internal invariant (e.g. a posterior with no finite mass).
/// Maps to CLI exit code 3.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Raised by predictive_density for a sensor with zero variance.
class DegenerateSensorError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace noisysense

#endif  // NOISYSENSE_ERRORS_HPP_
