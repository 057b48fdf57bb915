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

#include "noisysense/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "noisysense/errors.hpp"

namespace noisysense {

std::optional<double> pearson_weight(std::span<const ItemRating> a,
                                     std::span<const ItemRating> b) {
  std::vector<std::pair<double, double>> common;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (i->item < j->item) {
      ++i;
    } else if (j->item < i->item) {
      ++j;
    } else {
      common.emplace_back(i->rating, j->rating);
      ++i;
      ++j;
    }
  }
  if (common.size() < 2) return std::nullopt;

  double mean_a = 0.0, mean_b = 0.0;
  for (const auto& [x, y] : common) {
    mean_a += x;
    mean_b += y;
  }
  mean_a /= static_cast<double>(common.size());
  mean_b /= static_cast<double>(common.size());
  double num = 0.0, var_a = 0.0, var_b = 0.0;
  for (const auto& [x, y] : common) {
    num += (x - mean_a) * (y - mean_b);
    var_a += (x - mean_a) * (x - mean_a);
    var_b += (y - mean_b) * (y - mean_b);
  }
  if (var_a <= 0.0 || var_b <= 0.0) return std::nullopt;
  return std::clamp(num / std::sqrt(var_a * var_b), -1.0, 1.0);
}

namespace {

double mean_of(std::span<const ItemRating> ratings) {
  double sum = 0.0;
  for (const auto& r : ratings) sum += r.rating;
  return sum / static_cast<double>(ratings.size());
}

}  // namespace

double correlation_predict(const RatingsMatrix& train, std::span<const ItemRating> active_observed,
                           ItemId target_item, std::optional<UserId> active_user) {
  const auto& scale = train.scale();
  if (active_observed.empty()) return scale.clamp(train.mean_rating());
  const double active_mean = mean_of(active_observed);

  double num = 0.0;
  double den = 0.0;
  for (const auto& rater : train.item_ratings(target_item)) {
    if (active_user && rater.user == *active_user) continue;
    auto row = train.user_ratings(rater.user);
    auto w = pearson_weight(active_observed, row);
    if (!w || *w == 0.0) continue;
    num += *w * (rater.rating - mean_of(row));
    den += std::abs(*w);
  }
  if (den <= 0.0) return scale.clamp(active_mean);
  return scale.clamp(active_mean + num / den);
}

PDPrediction pd_predict(const RatingsMatrix& train, std::span<const ItemRating> active_observed,
                        ItemId target_item, const PDParams& params, const RatingPrior& prior,
                        std::optional<UserId> active_user) {
  if (!(params.sigma > 0.0)) throw UsageError("personality diagnosis needs sigma > 0");
  const auto& scale = train.scale();
  const std::size_t m = scale.size();

  // Log-likelihood per candidate personality, grouped by its target rating.
  std::vector<std::pair<std::size_t, double>> candidates;
  const double inv_two_var = 1.0 / (2.0 * params.sigma * params.sigma);
  for (const auto& rater : train.item_ratings(target_item)) {
    if (active_user && rater.user == *active_user) continue;
    auto row = train.user_ratings(rater.user);
    double log_w = 0.0;
    auto a = active_observed.begin();
    auto r = row.begin();
    while (a != active_observed.end() && r != row.end()) {
      if (a->item < r->item) {
        ++a;
      } else if (r->item < a->item) {
        ++r;
      } else {
        const double d = a->rating - r->rating;
        log_w -= d * d * inv_two_var;
        ++a;
        ++r;
      }
    }
    candidates.emplace_back(*scale.index_of(rater.rating), log_w);
  }

  PDPrediction out;
  out.posterior.probs = prior.probs;
  if (!candidates.empty()) {
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) top = std::max(top, c.second);
    std::vector<double> mass(m, 0.0);
    double total = 0.0;
    for (const auto& [idx, log_w] : candidates) {
      const double w = std::exp(log_w - top);
      mass[idx] += w;
      total += w;
    }
    for (std::size_t i = 0; i < m; ++i) {
      out.posterior.probs[i] =
          (1.0 - params.prior_mix) * mass[i] / total + params.prior_mix * prior.probs[i];
    }
  }
  double norm = 0.0;
  for (double p : out.posterior.probs) norm += p;
  for (std::size_t i = 0; i < m; ++i) {
    out.posterior.probs[i] /= norm;
    out.posterior.expected += out.posterior.probs[i] * scale.value(i);
  }
  out.posterior.expected = scale.clamp(out.posterior.expected);
  out.expected = out.posterior.expected;
  return out;
}

}  // namespace noisysense
