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

#ifndef NOISYSENSE_CLI_HPP_
#define NOISYSENSE_CLI_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "noisysense/eval.hpp"

namespace noisysense {

/// Exit codes of the noisysense tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitInternal = 3,
};

/// One serializable run description. Every field has a command-line flag of
/// the same name with '_' spelled '-', and may also come from a key-value
/// config file (`key = value` per line, '#' comments); flags win.
struct RunConfig {
  std::string dataset;
  int scale_min = 1;
  int scale_max = 5;
  std::vector<std::string> algorithms{"noisy1", "noisy2", "pd", "correlation"};
  std::vector<std::string> protocols{"AllBut1", "Given10", "Given5", "Given2"};
  double k = 1.0;
  std::size_t u = 50;
  std::size_t i = 20;
  std::size_t min_corated_noisy1 = 2;
  std::size_t min_corated_noisy2 = 1;
  double sigma2_floor = 1e-6;
  double pd_sigma = 1.0;
  double pd_prior_mix = 1e-4;
  std::string pair_prior = "marginal-product";
  std::size_t pair_samples = 200000;
  double test_fraction = 0.4;
  std::size_t max_test_users = 0;  // 0 = all
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::string report;       // human-readable table
  std::string report_json;  // structured report
  std::string records;      // prediction dump

  /// Throws UsageError on out-of-range values or a missing seed.
  void validate() const;
};

/// Training/test material for a run: the loaded ratings, the user partition
/// and the training-only matrix.
struct Experiment {
  LoadedRatings data;
  std::vector<UserId> test_users;
  std::vector<UserId> train_users;
  RatingsMatrix train;
};

Experiment prepare_experiment(const RunConfig& config);

AlgorithmConfig algorithm_config(const RunConfig& config, const std::string& name);

struct EvaluateResult {
  EvalReport report;
  std::vector<LabeledRecord> records;
};

/// Runs every configured algorithm under every configured protocol on
/// identical splits, with pairwise significance levels.
EvaluateResult cmd_evaluate(const RunConfig& config, std::ostream& log);

struct SweepResult {
  std::vector<std::size_t> u_grid;
  std::vector<std::size_t> i_grid;
  std::vector<std::vector<double>> mae;  // [u][i]
};

/// MAE over a U x I grid for config.algorithms[0] and config.protocols[0].
SweepResult cmd_sweep(const RunConfig& config, const std::vector<std::size_t>& u_grid,
                      const std::vector<std::size_t>& i_grid, std::ostream& log);

void write_sweep_grid(std::ostream& out, const SweepResult& sweep);

struct SignificanceQuery {
  std::string algorithm_a;  // empty: the file must hold one algorithm
  std::string algorithm_b;
  std::string protocol;     // empty: every protocol present
  std::optional<double> extreme_mean;
  std::uint64_t seed = 0;
  std::size_t samples = kPairedSamples;
  std::size_t permutations = kPermutations;
};

/// Significance of the deviation difference between two record dumps, per
/// protocol (and per extreme subset when a mean is given).
std::vector<SignificanceRow> cmd_significance(std::span<const LabeledRecord> records_a,
                                              std::span<const LabeledRecord> records_b,
                                              const SignificanceQuery& query);

/// Parses "0:100:10" (inclusive range with step) or "0,10,20".
std::vector<std::size_t> parse_grid(const std::string& text);

/// Full command-line entry point; returns an ExitCode.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace noisysense

#endif  // NOISYSENSE_CLI_HPP_
