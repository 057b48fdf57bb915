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

#ifndef NOISYSENSE_PREDICTOR_HPP_
#define NOISYSENSE_PREDICTOR_HPP_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "noisysense/ratings.hpp"
#include "noisysense/sensor_fit.hpp"

// Naive Bayes sensor network for one (active user, target item) prediction.
// The hidden node is the active user's rating of the target; its children are
// the users who rated the target (user sensors) and the items the active user
// has rated (item sensors). Each child is linked through a fitted SensorFit.

namespace noisysense {

enum class Variant { kNoisy1, kNoisy2 };

std::string variant_name(Variant v);

struct SensorRef {
  enum class Kind { kUser, kItem };
  Kind kind = Kind::kUser;
  std::int32_t id = 0;  // UserId for user sensors, ItemId for item sensors
  SensorFit fit;
  Rating evidence = 0;  // S_uj for a user sensor, S_ak for an item sensor

  friend bool operator==(const SensorRef&, const SensorRef&) = default;
};

struct ModelParams {
  Variant variant = Variant::kNoisy2;
  double k = 1.0;
  std::size_t max_user_sensors = 50;  // U
  std::size_t max_item_sensors = 20;  // I
  std::size_t min_corated_noisy1 = 2;
  std::size_t min_corated_noisy2 = 1;
  FitOptions fit;

  std::size_t min_corated() const {
    return variant == Variant::kNoisy1 ? min_corated_noisy1 : min_corated_noisy2;
  }
};

/// Priors derived once from the training matrix and shared by every model.
struct TrainingPriors {
  RatingPrior rating;
  PairPrior pairs;
};

TrainingPriors make_training_priors(const RatingsMatrix& train, PairPriorMode mode,
                                    const PairSampling& sampling = {});

struct FittedModel {
  RatingPrior prior;
  std::vector<SensorRef> user_sensors;  // ranked, best first
  std::vector<SensorRef> item_sensors;  // ranked, best first
  ModelParams params;

  /// Copy keeping only the best `users` user and `items` item sensors.
  FittedModel truncated(std::size_t users, std::size_t items) const;
};

/// Strict-weak "a ranks ahead of b": r2 descending for Noisy1, sigma2
/// ascending for Noisy2, keys compared at 1e-9 resolution; ties by larger n,
/// then smaller id.
bool ranks_ahead(const SensorRef& a, const SensorRef& b, Variant variant);

/// `active_observed` must be sorted by item. `active_user`, when it names a
/// row of `train`, is excluded from every candidate set.
FittedModel build_model(const RatingsMatrix& train, const TrainingPriors& priors,
                        std::span<const ItemRating> active_observed, ItemId target_item,
                        const ModelParams& params,
                        std::optional<UserId> active_user = std::nullopt);

struct PosteriorDistribution {
  std::vector<double> probs;  // indexed like RatingScale::values()
  double expected = 0.0;
};

/// Bayes fusion of prior and sensor likelihoods, accumulated in log space.
PosteriorDistribution posterior(const FittedModel& model, const RatingScale& scale);

/// Expected rating under the posterior.
double predict(const FittedModel& model, const RatingScale& scale);

/// Versioned tab-separated model dump. Layout:
///   noisysense-model <version>
///   params <variant> <K> <U> <I>
///   prior <value> <probability>          (one line per scale value)
///   sensor <user|item> <id> <alpha> <beta> <sigma2> <r2> <n> <evidence>
void write_model(std::ostream& out, const FittedModel& model);
FittedModel read_model(std::istream& in);

inline constexpr int kModelFormatVersion = 1;

}  // namespace noisysense

#endif  // NOISYSENSE_PREDICTOR_HPP_
