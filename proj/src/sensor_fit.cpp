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

#include "noisysense/sensor_fit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "noisysense/errors.hpp"

namespace noisysense {

PairedObservations PairedObservations::from_pairs(
    std::span<const std::pair<double, double>> pairs) {
  PairedObservations obs;
  for (const auto& [x, y] : pairs) obs.add(x, y);
  return obs;
}

FitResult fit_noisy1(const PairedObservations& obs, const PairPrior& pair_prior, double k,
                     const FitOptions& options) {
  const PairMoments& d = pair_prior.moments();
  const double s_w = static_cast<double>(obs.n()) + k * d.w;
  FitResult result;
  result.fit.n = obs.n();
  result.fit.k = k;
  if (!(s_w > 0.0)) {
    result.status = FitStatus::kNoData;
    return result;
  }
  const double s_x = obs.sum_x() + k * d.x;
  const double s_y = obs.sum_y() + k * d.y;
  const double s_xx = obs.sum_xx() + k * d.xx;
  const double s_xy = obs.sum_xy() + k * d.xy;
  const double s_yy = obs.sum_yy() + k * d.yy;

  // Centered (co)variation; algebraically S_w*S_xx - S_x^2 etc. over S_w.
  const double mean_x = s_x / s_w;
  const double mean_y = s_y / s_w;
  const double cxx = s_xx - s_x * mean_x;
  const double cxy = s_xy - s_x * mean_y;
  const double cyy = s_yy - s_y * mean_y;

  if (!(cxx > 1e-12 * std::max(1.0, s_xx))) {
    result.status = FitStatus::kUnfittable;
    return result;
  }

  const double beta = cxy / cxx;
  const double alpha = mean_y - beta * mean_x;
  const double sse = std::max(0.0, cyy - beta * cxy);

  SensorFit& fit = result.fit;
  fit.alpha = alpha;
  fit.beta = beta;
  fit.sigma2 = std::max(sse / s_w, options.sigma2_floor);
  if (cyy > 1e-12 * std::max(1.0, s_yy)) {
    fit.r2 = std::clamp(1.0 - sse / cyy, 0.0, 1.0);
  } else {
    fit.r2 = 0.0;  // all y equal: the horizontal line through the mean
  }
  result.status = FitStatus::kOk;
  return result;
}

FitResult fit_noisy2(const PairedObservations& obs, const PairPrior& pair_prior, double k,
                     const FitOptions& options) {
  const PairMoments& d = pair_prior.moments();
  const double s_w = static_cast<double>(obs.n()) + k * d.w;
  FitResult result;
  result.fit.n = obs.n();
  result.fit.k = k;
  if (!(s_w > 0.0)) {
    result.status = FitStatus::kNoData;
    return result;
  }
  result.fit.alpha = 0.0;
  result.fit.beta = 1.0;
  result.fit.r2 = 0.0;
  result.fit.sigma2 = std::max((obs.sum_dd() + k * d.dd) / s_w, options.sigma2_floor);
  result.status = FitStatus::kOk;
  return result;
}

double predicted_mean(const SensorFit& fit, double x, const RatingScale& scale) {
  return scale.clamp(fit.alpha + fit.beta * x);
}

double log_predictive_density(const SensorFit& fit, double y, double x,
                              const RatingScale& scale) {
  if (!(fit.sigma2 > 0.0)) {
    throw DegenerateSensorError("sensor has zero variance");
  }
  const double r = y - predicted_mean(fit, x, scale);
  return -0.5 * std::log(2.0 * std::numbers::pi * fit.sigma2) - r * r / (2.0 * fit.sigma2);
}

double predictive_density(const SensorFit& fit, double y, double x, const RatingScale& scale) {
  return std::exp(log_predictive_density(fit, y, x, scale));
}

}  // namespace noisysense
