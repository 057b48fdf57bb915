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

#include "noisysense/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "noisysense/errors.hpp"
#include "noisysense/random.hpp"
#include "parallel.hpp"

namespace noisysense {

// ---------------------------------------------------------------------------
// Metrics

double mae(std::span<const PredictionRecord> records) {
  if (records.empty()) throw DataError("mae of an empty record set");
  std::map<UserId, std::pair<double, std::size_t>> per_user;
  for (const auto& r : records) {
    auto& [sum, count] = per_user[r.user];
    sum += std::abs(r.predicted - r.actual);
    ++count;
  }
  double total = 0.0;
  for (const auto& [user, acc] : per_user) {
    total += acc.first / static_cast<double>(acc.second);
  }
  return total / static_cast<double>(per_user.size());
}

std::vector<PredictionRecord> extreme_filter(std::span<const PredictionRecord> records,
                                             double mean) {
  std::vector<PredictionRecord> out;
  for (const auto& r : records) {
    if (r.actual < mean - 0.5 || r.actual > mean + 0.5) out.push_back(r);
  }
  return out;
}

double randomization_test(std::span<const double> diffs, std::size_t permutations,
                          std::uint64_t seed) {
  if (diffs.empty()) throw DataError("randomization test needs at least one difference");
  if (permutations == 0) throw UsageError("randomization test needs permutations >= 1");

  // Compare sums instead of means; the tolerance absorbs rounding so that
  // resamples equal to the observed sum count as ties.
  double observed = 0.0;
  double scale = 0.0;
  for (double d : diffs) {
    observed += d;
    scale += std::abs(d);
  }
  const double tolerance = 1e-12 * scale;

  Rng rng(seed);
  std::size_t at_or_below = 0;
  for (std::size_t p = 0; p < permutations; ++p) {
    double sum = 0.0;
    std::uint64_t bits = 0;
    for (std::size_t i = 0; i < diffs.size(); ++i) {
      if (i % 64 == 0) bits = rng();
      sum += (bits & 1u) ? -diffs[i] : diffs[i];
      bits >>= 1;
    }
    if (sum <= observed + tolerance) ++at_or_below;
  }
  return static_cast<double>(at_or_below) / static_cast<double>(permutations);
}

std::vector<std::size_t> assign_samples(std::span<const PredictionRecord> records,
                                        std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw UsageError("need at least one sample");
  std::vector<std::tuple<std::uint64_t, UserId, ItemId, std::size_t>> keyed;
  keyed.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    keyed.emplace_back(derive_seed(seed, "samples", static_cast<std::uint64_t>(r.user),
                                   static_cast<std::uint64_t>(r.item)),
                       r.user, r.item, i);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<std::size_t> sample(records.size());
  for (std::size_t rank = 0; rank < keyed.size(); ++rank) {
    sample[std::get<3>(keyed[rank])] = rank % n_samples;
  }
  return sample;
}

namespace {

std::vector<PredictionRecord> sorted_by_key(std::span<const PredictionRecord> records) {
  std::vector<PredictionRecord> out(records.begin(), records.end());
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return std::tie(x.user, x.item) < std::tie(y.user, y.item);
  });
  return out;
}

}  // namespace

std::vector<double> paired_sample_diffs(std::span<const PredictionRecord> a,
                                        std::span<const PredictionRecord> b,
                                        std::size_t n_samples, std::uint64_t seed) {
  const auto sa = sorted_by_key(a);
  const auto sb = sorted_by_key(b);
  if (sa.size() != sb.size()) {
    throw DataError("record sets differ in size (" + std::to_string(sa.size()) + " vs " +
                    std::to_string(sb.size()) + ")");
  }
  for (std::size_t i = 0; i < sa.size(); ++i) {
    if (sa[i].user != sb[i].user || sa[i].item != sb[i].item) {
      throw DataError("record sets cover different (user, item) pairs");
    }
    if (i > 0 && sa[i].user == sa[i - 1].user && sa[i].item == sa[i - 1].item) {
      throw DataError("duplicate (user, item) pair in record set");
    }
  }

  const auto sample = assign_samples(sa, n_samples, seed);
  std::vector<std::vector<PredictionRecord>> bucket_a(n_samples), bucket_b(n_samples);
  for (std::size_t i = 0; i < sa.size(); ++i) {
    bucket_a[sample[i]].push_back(sa[i]);
    bucket_b[sample[i]].push_back(sb[i]);
  }
  std::vector<double> diffs;
  for (std::size_t s = 0; s < n_samples; ++s) {
    if (bucket_a[s].empty()) continue;
    diffs.push_back(mae(bucket_a[s]) - mae(bucket_b[s]));
  }
  return diffs;
}

Significance compare_records(std::span<const PredictionRecord> a,
                             std::span<const PredictionRecord> b, std::uint64_t seed,
                             std::size_t n_samples, std::size_t permutations) {
  auto diffs = paired_sample_diffs(a, b, n_samples, seed);
  const std::uint64_t perm_seed = derive_seed(seed, "permutation");
  Significance level;
  level.a_vs_b = randomization_test(diffs, permutations, perm_seed);
  for (auto& d : diffs) d = -d;
  level.b_vs_a = randomization_test(diffs, permutations, perm_seed);
  return level;
}

// ---------------------------------------------------------------------------
// Algorithms

AlgorithmKind parse_algorithm(const std::string& text) {
  if (text == "noisy1") return AlgorithmKind::kNoisy1;
  if (text == "noisy2") return AlgorithmKind::kNoisy2;
  if (text == "pd") return AlgorithmKind::kPD;
  if (text == "correlation") return AlgorithmKind::kCorrelation;
  throw UsageError("unknown algorithm '" + text +
                   "' (expected noisy1, noisy2, pd or correlation)");
}

std::string algorithm_name(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::kNoisy1:
      return "noisy1";
    case AlgorithmKind::kNoisy2:
      return "noisy2";
    case AlgorithmKind::kPD:
      return "pd";
    case AlgorithmKind::kCorrelation:
      return "correlation";
  }
  return "unknown";
}

EvalContext::EvalContext(const RatingsMatrix& train_matrix, PairPriorMode mode,
                         const PairSampling& sampling)
    : train(train_matrix),
      priors(make_training_priors(train_matrix, mode, sampling)),
      train_mean(train_matrix.mean_rating()) {}

namespace {

ModelParams model_params_for(const AlgorithmConfig& algorithm) {
  ModelParams params = algorithm.model;
  params.variant =
      algorithm.kind == AlgorithmKind::kNoisy1 ? Variant::kNoisy1 : Variant::kNoisy2;
  return params;
}

}  // namespace

double predict_rating(const EvalContext& ctx, const AlgorithmConfig& algorithm,
                      std::span<const ItemRating> observed, ItemId target) {
  const auto& scale = ctx.train.scale();
  switch (algorithm.kind) {
    case AlgorithmKind::kNoisy1:
    case AlgorithmKind::kNoisy2: {
      auto model = build_model(ctx.train, ctx.priors, observed, target, model_params_for(algorithm));
      return predict(model, scale);
    }
    case AlgorithmKind::kPD:
      return pd_predict(ctx.train, observed, target, algorithm.pd, ctx.priors.rating).expected;
    case AlgorithmKind::kCorrelation:
      return correlation_predict(ctx.train, observed, target);
  }
  throw InvariantError("unhandled algorithm kind");
}

std::uint64_t split_seed(std::uint64_t seed, const SplitSpec& spec, UserId user) {
  const std::uint64_t protocol =
      spec.kind == SplitSpec::Kind::kAllBut1 ? 0 : static_cast<std::uint64_t>(spec.given);
  return derive_seed(seed, "split", static_cast<std::uint64_t>(user), protocol);
}

ProtocolRun run_protocol(const EvalContext& ctx, const RatingsMatrix& test,
                         std::span<const UserId> test_users, const SplitSpec& spec,
                         const AlgorithmConfig& algorithm, std::uint64_t seed,
                         std::size_t threads) {
  std::vector<std::vector<PredictionRecord>> per_user(test_users.size());
  std::vector<char> scored(test_users.size(), 0);
  detail::parallel_for(test_users.size(), threads, [&](std::size_t k) {
    const UserId user = test_users[k];
    auto split = split_user(test.user_ratings(user), spec, split_seed(seed, spec, user));
    if (!split) return;
    scored[k] = 1;
    for (const auto& h : split->hidden) {
      per_user[k].push_back(
          {user, h.item, static_cast<double>(h.rating),
           predict_rating(ctx, algorithm, split->observed, h.item)});
    }
  });

  ProtocolRun run;
  for (std::size_t k = 0; k < test_users.size(); ++k) {
    if (scored[k]) {
      ++run.users_scored;
    } else {
      ++run.users_skipped;
    }
    run.records.insert(run.records.end(), per_user[k].begin(), per_user[k].end());
  }
  return run;
}

std::vector<std::vector<double>> sweep_protocol(const EvalContext& ctx, const RatingsMatrix& test,
                                                std::span<const UserId> test_users,
                                                const SplitSpec& spec,
                                                const AlgorithmConfig& algorithm,
                                                std::span<const std::size_t> u_grid,
                                                std::span<const std::size_t> i_grid,
                                                std::uint64_t seed, std::size_t threads) {
  if (u_grid.empty() || i_grid.empty()) throw UsageError("sweep grids must be non-empty");
  if (algorithm.kind != AlgorithmKind::kNoisy1 && algorithm.kind != AlgorithmKind::kNoisy2) {
    throw UsageError("sweep needs a noisy-sensor algorithm (noisy1 or noisy2)");
  }
  ModelParams params = model_params_for(algorithm);
  params.max_user_sensors = *std::max_element(u_grid.begin(), u_grid.end());
  params.max_item_sensors = *std::max_element(i_grid.begin(), i_grid.end());
  const auto& scale = ctx.train.scale();
  const std::size_t cells = u_grid.size() * i_grid.size();

  // per_user[k][cell] holds user k's records for that grid cell.
  std::vector<std::vector<std::vector<PredictionRecord>>> per_user(test_users.size());
  detail::parallel_for(test_users.size(), threads, [&](std::size_t k) {
    const UserId user = test_users[k];
    auto split = split_user(test.user_ratings(user), spec, split_seed(seed, spec, user));
    if (!split) return;
    per_user[k].resize(cells);
    for (const auto& h : split->hidden) {
      const auto full = build_model(ctx.train, ctx.priors, split->observed, h.item, params);
      for (std::size_t ui = 0; ui < u_grid.size(); ++ui) {
        for (std::size_t ii = 0; ii < i_grid.size(); ++ii) {
          const double p = predict(full.truncated(u_grid[ui], i_grid[ii]), scale);
          per_user[k][ui * i_grid.size() + ii].push_back(
              {user, h.item, static_cast<double>(h.rating), p});
        }
      }
    }
  });

  std::vector<std::vector<double>> grid(u_grid.size(), std::vector<double>(i_grid.size()));
  for (std::size_t cell = 0; cell < cells; ++cell) {
    std::vector<PredictionRecord> records;
    for (const auto& user_cells : per_user) {
      if (user_cells.empty()) continue;
      records.insert(records.end(), user_cells[cell].begin(), user_cells[cell].end());
    }
    grid[cell / i_grid.size()][cell % i_grid.size()] = mae(records);
  }
  return grid;
}

std::pair<std::vector<UserId>, std::vector<UserId>> partition_users(std::size_t n_users,
                                                                    double test_fraction,
                                                                    std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction <= 1.0)) {
    throw UsageError("test fraction must lie in [0, 1]");
  }
  std::vector<UserId> order(n_users);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(seed, "user-partition"));
  for (std::size_t i = n_users; i > 1; --i) {
    std::swap(order[i - 1], order[uniform_index(rng, i)]);
  }
  const auto n_test =
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n_users)));
  std::vector<UserId> test(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<UserId> train(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {std::move(test), std::move(train)};
}

}  // namespace noisysense
