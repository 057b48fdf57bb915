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

#ifndef NOISYSENSE_SENSOR_FIT_HPP_
#define NOISYSENSE_SENSOR_FIT_HPP_

#include <cstddef>
#include <span>
#include <utility>

#include "noisysense/ratings.hpp"

// Noisy-sensor channel between two rating variables: y = alpha + beta*x + e,
// e ~ N(0, sigma2). x is the rating being predicted (the target), y the
// sensor's rating. Fits are closed-form maximum likelihood over sufficient
// statistics of the real co-rated pairs plus K dummy observations spread over
// all m*m rating pairs according to a PairPrior (cell (x, y) has weight
// K * w_xy).

namespace noisysense {

/// Sufficient statistics of n co-rated (x, y) pairs.
class PairedObservations {
 public:
  PairedObservations() = default;
  static PairedObservations from_pairs(std::span<const std::pair<double, double>> pairs);

  void add(double x, double y) {
    ++n_;
    s_x_ += x;
    s_y_ += y;
    s_xx_ += x * x;
    s_xy_ += x * y;
    s_yy_ += y * y;
    s_dd_ += (y - x) * (y - x);
  }

  std::size_t n() const { return n_; }
  double sum_x() const { return s_x_; }
  double sum_y() const { return s_y_; }
  double sum_xx() const { return s_xx_; }
  double sum_xy() const { return s_xy_; }
  double sum_yy() const { return s_yy_; }
  /// Sum of (y - x)^2.
  double sum_dd() const { return s_dd_; }

 private:
  std::size_t n_ = 0;
  double s_x_ = 0, s_y_ = 0, s_xx_ = 0, s_xy_ = 0, s_yy_ = 0, s_dd_ = 0;
};

struct SensorFit {
  double alpha = 0.0;
  double beta = 1.0;
  double sigma2 = 0.0;
  /// Weighted coefficient of determination; 0 for Noisy2 fits.
  double r2 = 0.0;
  std::size_t n = 0;  // real co-rated pairs
  double k = 0.0;     // dummy weight

  friend bool operator==(const SensorFit&, const SensorFit&) = default;
};

enum class FitStatus {
  kOk,
  kNoData,      // n + K == 0
  kUnfittable,  // x has no spread, slope undefined
};

struct FitResult {
  FitStatus status = FitStatus::kNoData;
  SensorFit fit;

  bool ok() const { return status == FitStatus::kOk; }
};

struct FitOptions {
  /// Lower bound applied to sigma2 after fitting. 0 disables it.
  double sigma2_floor = 1e-6;
};

/// Weighted least squares (the Gaussian MLE) of y on x.
FitResult fit_noisy1(const PairedObservations& obs, const PairPrior& pair_prior, double k,
                     const FitOptions& options = {});

/// alpha = 0, beta = 1; only sigma2 is learned, as the weighted mean of
/// (y - x)^2 over real and dummy points.
FitResult fit_noisy2(const PairedObservations& obs, const PairPrior& pair_prior, double k,
                     const FitOptions& options = {});

/// Mean of y given x, clamped onto [v_1, v_m].
double predicted_mean(const SensorFit& fit, double x, const RatingScale& scale);

/// Gaussian density of observing sensor value y when the target is x.
/// Throws DegenerateSensorError when fit.sigma2 <= 0.
double predictive_density(const SensorFit& fit, double y, double x, const RatingScale& scale);

/// log of predictive_density, same contract.
double log_predictive_density(const SensorFit& fit, double y, double x,
                              const RatingScale& scale);

}  // namespace noisysense

#endif  // NOISYSENSE_SENSOR_FIT_HPP_
