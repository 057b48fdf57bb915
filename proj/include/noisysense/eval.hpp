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

#ifndef NOISYSENSE_EVAL_HPP_
#define NOISYSENSE_EVAL_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "noisysense/baselines.hpp"
#include "noisysense/predictor.hpp"
#include "noisysense/ratings.hpp"

namespace noisysense {

struct PredictionRecord {
  UserId user = 0;
  ItemId item = 0;
  double actual = 0.0;
  double predicted = 0.0;

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

/// Average absolute deviation: mean |predicted - actual| per user, then the
/// mean of those per-user values. Throws DataError on empty input.
double mae(std::span<const PredictionRecord> records);

/// Records whose actual rating is < mean - 0.5 or > mean + 0.5.
std::vector<PredictionRecord> extreme_filter(std::span<const PredictionRecord> records,
                                             double mean);

/// Randomization paired-sample test of a mean difference. Each resample flips
/// the sign of every diff independently with probability 1/2; the result is
/// the fraction of resamples whose mean is <= the observed mean (ties count).
/// Small values mean the observed mean is unusually low.
double randomization_test(std::span<const double> diffs, std::size_t permutations,
                          std::uint64_t seed);

inline constexpr std::size_t kPairedSamples = 60;
inline constexpr std::size_t kPermutations = 10000;

/// Sample index in [0, n_samples) for every record: records are ordered by a
/// seeded hash of (user, item) and dealt out round-robin, so sample sizes
/// differ by at most one and depend only on the (user, item) set and seed.
std::vector<std::size_t> assign_samples(std::span<const PredictionRecord> records,
                                        std::size_t n_samples, std::uint64_t seed);

/// Per-sample mae(a) - mae(b). `a` and `b` must cover the same (user, item)
/// set (DataError otherwise). Empty samples are dropped.
std::vector<double> paired_sample_diffs(std::span<const PredictionRecord> a,
                                        std::span<const PredictionRecord> b,
                                        std::size_t n_samples, std::uint64_t seed);

struct Significance {
  double a_vs_b = 1.0;  // small: a has significantly lower deviation
  double b_vs_a = 1.0;
};

/// Both one-sided significance levels for a pair of record sets. Sample
/// assignment and sign flips draw from the "samples" and "permutation"
/// substreams of `seed`.
Significance compare_records(std::span<const PredictionRecord> a,
                             std::span<const PredictionRecord> b, std::uint64_t seed,
                             std::size_t n_samples = kPairedSamples,
                             std::size_t permutations = kPermutations);

// ---------------------------------------------------------------------------
// Algorithms and protocol runs

enum class AlgorithmKind { kNoisy1, kNoisy2, kPD, kCorrelation };

AlgorithmKind parse_algorithm(const std::string& text);
std::string algorithm_name(AlgorithmKind kind);

struct AlgorithmConfig {
  AlgorithmKind kind = AlgorithmKind::kNoisy2;
  ModelParams model;  // noisy1/noisy2; variant follows `kind`
  PDParams pd;
};

/// Everything derived once from the training matrix.
struct EvalContext {
  EvalContext(const RatingsMatrix& train, PairPriorMode mode, const PairSampling& sampling);

  const RatingsMatrix& train;
  TrainingPriors priors;
  double train_mean;
};

double predict_rating(const EvalContext& ctx, const AlgorithmConfig& algorithm,
                      std::span<const ItemRating> observed, ItemId target);

/// Seed of the observed/hidden split for one user under one protocol. Every
/// algorithm run with the same run seed sees the same split.
std::uint64_t split_seed(std::uint64_t seed, const SplitSpec& spec, UserId user);

struct ProtocolRun {
  std::vector<PredictionRecord> records;  // ordered by user, then item
  std::size_t users_scored = 0;
  std::size_t users_skipped = 0;
};

/// Splits every test user's ratings per `spec`, predicts each hidden rating
/// from the observed ones plus `ctx.train`. Users without enough ratings are
/// skipped and counted. `threads` caps the worker count (0 = hardware).
ProtocolRun run_protocol(const EvalContext& ctx, const RatingsMatrix& test,
                         std::span<const UserId> test_users, const SplitSpec& spec,
                         const AlgorithmConfig& algorithm, std::uint64_t seed,
                         std::size_t threads = 1);

/// MAE for every (U, I) cell of the grid on one fixed split. Models are built
/// once per prediction with the largest U and I and truncated per cell.
/// Result is indexed [u_index][i_index].
std::vector<std::vector<double>> sweep_protocol(const EvalContext& ctx, const RatingsMatrix& test,
                                                std::span<const UserId> test_users,
                                                const SplitSpec& spec,
                                                const AlgorithmConfig& algorithm,
                                                std::span<const std::size_t> u_grid,
                                                std::span<const std::size_t> i_grid,
                                                std::uint64_t seed, std::size_t threads = 1);

/// Seeded user partition: the first element holds round(test_fraction * N)
/// users chosen uniformly, sorted; the second the remaining users, sorted.
std::pair<std::vector<UserId>, std::vector<UserId>> partition_users(std::size_t n_users,
                                                                    double test_fraction,
                                                                    std::uint64_t seed);

// ---------------------------------------------------------------------------
// Reports

struct ReportRow {
  std::string algorithm;
  std::string protocol;
  double mae_all = 0.0;
  double mae_extreme = 0.0;  // NaN when no extreme records
  std::size_t users_scored = 0;
  std::size_t users_skipped = 0;
  std::size_t predictions = 0;
  std::size_t extreme_predictions = 0;
};

struct SignificanceRow {
  std::string protocol;
  std::string subset;  // "all" or "extreme"
  std::string a;
  std::string b;
  Significance level;
};

struct EvalReport {
  std::string dataset;
  std::size_t train_users = 0;
  std::size_t test_users = 0;
  std::size_t train_ratings = 0;
  double train_mean = 0.0;
  std::uint64_t seed = 0;
  std::vector<ReportRow> rows;
  std::vector<SignificanceRow> significance;
};

/// Human-readable tables: MAE by algorithm x protocol (all, extreme) and the
/// significance levels.
void write_report_table(std::ostream& out, const EvalReport& report);

/// Machine-readable JSON document.
void write_report_json(std::ostream& out, const EvalReport& report);

/// Records dump line: user item actual predicted algorithm protocol
/// (tab-separated, external ids, full double precision).
struct LabeledRecord {
  std::string user;
  std::string item;
  double actual = 0.0;
  double predicted = 0.0;
  std::string algorithm;
  std::string protocol;
};

void write_records(std::ostream& out, std::span<const LabeledRecord> records);
std::vector<LabeledRecord> read_records(std::istream& in);

}  // namespace noisysense

#endif  // NOISYSENSE_EVAL_HPP_
