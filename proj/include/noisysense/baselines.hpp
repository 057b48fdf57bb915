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

#ifndef NOISYSENSE_BASELINES_HPP_
#define NOISYSENSE_BASELINES_HPP_

#include <optional>
#include <span>

#include "noisysense/predictor.hpp"
#include "noisysense/ratings.hpp"

namespace noisysense {

/// Pearson correlation of two users over the items both rated. Means are
/// taken over the co-rated items. nullopt with fewer than 2 co-rated items
/// or zero variance on either side. Both spans must be sorted by item.
std::optional<double> pearson_weight(std::span<const ItemRating> a,
                                     std::span<const ItemRating> b);

/// Mean-centred Pearson weighted sum over training users who rated the
/// target:
///   active_mean + sum_u w(a,u) (S_u,target - mean_u) / sum_u |w(a,u)|
/// clamped to the scale. mean_u is over all of u's training ratings.
/// Falls back to the active user's mean, then to the training mean.
double correlation_predict(const RatingsMatrix& train, std::span<const ItemRating> active_observed,
                           ItemId target_item,
                           std::optional<UserId> active_user = std::nullopt);

struct PDParams {
  /// Gaussian rating-noise standard deviation; must be > 0.
  double sigma = 1.0;
  /// Weight of the rating prior mixed into the posterior.
  double prior_mix = 1e-4;
};

struct PDPrediction {
  PosteriorDistribution posterior;
  double expected = 0.0;
};

/// Personality Diagnosis. Each training user i who rated the target is a
/// candidate "true personality" with likelihood
///   prod_{k in I_a, rated by i} exp(-(S_ak - S_ik)^2 / (2 sigma^2)).
/// P(v) collects the normalised likelihood of users with S_i,target = v and is
/// mixed with the rating prior: (1 - prior_mix) * P + prior_mix * prior.
/// With no raters of the target the posterior is the prior.
PDPrediction pd_predict(const RatingsMatrix& train, std::span<const ItemRating> active_observed,
                        ItemId target_item, const PDParams& params, const RatingPrior& prior,
                        std::optional<UserId> active_user = std::nullopt);

}  // namespace noisysense

#endif  // NOISYSENSE_BASELINES_HPP_
