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

#include "noisysense/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "noisysense/errors.hpp"

namespace noisysense {

std::string variant_name(Variant v) { return v == Variant::kNoisy1 ? "noisy1" : "noisy2"; }

TrainingPriors make_training_priors(const RatingsMatrix& train, PairPriorMode mode,
                                    const PairSampling& sampling) {
  return {rating_prior(train, true), pair_prior(train, mode, sampling)};
}

FittedModel FittedModel::truncated(std::size_t users, std::size_t items) const {
  FittedModel out{prior, {}, {}, params};
  out.user_sensors.assign(user_sensors.begin(),
                          user_sensors.begin() + std::min(users, user_sensors.size()));
  out.item_sensors.assign(item_sensors.begin(),
                          item_sensors.begin() + std::min(items, item_sensors.size()));
  out.params.max_user_sensors = std::min(users, params.max_user_sensors);
  out.params.max_item_sensors = std::min(items, params.max_item_sensors);
  return out;
}

namespace {

// Ranking keys are compared on a 1e-9 grid, so values that agree up to
// rounding noise tie and fall through to the n / id tie-breaks.
double ranking_key(const SensorFit& fit, Variant variant) {
  const double key = variant == Variant::kNoisy1 ? -fit.r2 : fit.sigma2;
  return std::round(key * 1e9);
}

}  // namespace

bool ranks_ahead(const SensorRef& a, const SensorRef& b, Variant variant) {
  const double ka = ranking_key(a.fit, variant);
  const double kb = ranking_key(b.fit, variant);
  if (ka != kb) return ka < kb;
  if (a.fit.n != b.fit.n) return a.fit.n > b.fit.n;
  return a.id < b.id;
}

namespace {

FitResult fit_sensor(const PairedObservations& obs, const TrainingPriors& priors,
                     const ModelParams& params) {
  return params.variant == Variant::kNoisy1
             ? fit_noisy1(obs, priors.pairs, params.k, params.fit)
             : fit_noisy2(obs, priors.pairs, params.k, params.fit);
}

void select_best(std::vector<SensorRef>& candidates, std::size_t keep, Variant variant) {
  auto cmp = [variant](const SensorRef& a, const SensorRef& b) {
    return ranks_ahead(a, b, variant);
  };
  if (candidates.size() > keep) {
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), cmp);
    candidates.resize(keep);
  } else {
    std::sort(candidates.begin(), candidates.end(), cmp);
  }
}

}  // namespace

FittedModel build_model(const RatingsMatrix& train, const TrainingPriors& priors,
                        std::span<const ItemRating> active_observed, ItemId target_item,
                        const ModelParams& params, std::optional<UserId> active_user) {
  FittedModel model{priors.rating, {}, {}, params};
  const std::size_t min_n = params.min_corated();

  // User sensors: every training user who rated the target, regressed on the
  // active user over the items both have rated (x = active, y = sensor).
  if (params.max_user_sensors > 0) {
    for (const auto& rater : train.item_ratings(target_item)) {
      if (active_user && rater.user == *active_user) continue;
      PairedObservations obs;
      auto row = train.user_ratings(rater.user);
      auto a = active_observed.begin();
      auto s = row.begin();
      while (a != active_observed.end() && s != row.end()) {
        if (a->item < s->item) {
          ++a;
        } else if (s->item < a->item) {
          ++s;
        } else {
          if (a->item != target_item) obs.add(a->rating, s->rating);
          ++a;
          ++s;
        }
      }
      if (obs.n() < min_n) continue;
      FitResult fitted = fit_sensor(obs, priors, params);
      if (!fitted.ok()) continue;
      model.user_sensors.push_back({SensorRef::Kind::kUser, rater.user, fitted.fit, rater.rating});
    }
    select_best(model.user_sensors, params.max_user_sensors, params.variant);
  }

  // Item sensors: every item the active user has rated, regressed on the
  // target over the training users who rated both (x = target, y = item).
  if (params.max_item_sensors > 0) {
    auto target_raters = train.item_ratings(target_item);
    for (const auto& observed : active_observed) {
      if (observed.item == target_item) continue;
      PairedObservations obs;
      auto other_raters = train.item_ratings(observed.item);
      auto t = target_raters.begin();
      auto o = other_raters.begin();
      while (t != target_raters.end() && o != other_raters.end()) {
        if (t->user < o->user) {
          ++t;
        } else if (o->user < t->user) {
          ++o;
        } else {
          if (!(active_user && t->user == *active_user)) obs.add(t->rating, o->rating);
          ++t;
          ++o;
        }
      }
      if (obs.n() < min_n) continue;
      FitResult fitted = fit_sensor(obs, priors, params);
      if (!fitted.ok()) continue;
      model.item_sensors.push_back(
          {SensorRef::Kind::kItem, observed.item, fitted.fit, observed.rating});
    }
    select_best(model.item_sensors, params.max_item_sensors, params.variant);
  }
  return model;
}

PosteriorDistribution posterior(const FittedModel& model, const RatingScale& scale) {
  const std::size_t m = scale.size();
  if (model.prior.probs.size() != m) {
    throw InvariantError("model prior does not match the rating scale");
  }
  std::vector<double> log_score(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double v = scale.value(i);
    double s = std::log(model.prior.probs[i]);
    for (const auto& sensor : model.user_sensors) {
      s += log_predictive_density(sensor.fit, sensor.evidence, v, scale);
    }
    for (const auto& sensor : model.item_sensors) {
      s += log_predictive_density(sensor.fit, sensor.evidence, v, scale);
    }
    log_score[i] = s;
  }

  const double top = *std::max_element(log_score.begin(), log_score.end());
  if (!std::isfinite(top)) {
    throw InvariantError("posterior has no finite mass");
  }
  PosteriorDistribution post;
  post.probs.resize(m);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    post.probs[i] = std::exp(log_score[i] - top);
    total += post.probs[i];
  }
  for (std::size_t i = 0; i < m; ++i) {
    post.probs[i] /= total;
    post.expected += post.probs[i] * scale.value(i);
  }
  post.expected = scale.clamp(post.expected);
  return post;
}

double predict(const FittedModel& model, const RatingScale& scale) {
  return posterior(model, scale).expected;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_model(std::ostream& out, const FittedModel& model) {
  out << "noisysense-model\t" << kModelFormatVersion << '\n';
  out << "params\t" << variant_name(model.params.variant) << '\t' << format_double(model.params.k)
      << '\t' << model.params.max_user_sensors << '\t' << model.params.max_item_sensors << '\n';
  for (std::size_t i = 0; i < model.prior.probs.size(); ++i) {
    out << "prior\t" << model.prior.scale.value(i) << '\t' << format_double(model.prior.probs[i])
        << '\n';
  }
  auto write_sensor = [&out](const SensorRef& s) {
    out << "sensor\t" << (s.kind == SensorRef::Kind::kUser ? "user" : "item") << '\t' << s.id
        << '\t' << format_double(s.fit.alpha) << '\t' << format_double(s.fit.beta) << '\t'
        << format_double(s.fit.sigma2) << '\t' << format_double(s.fit.r2) << '\t' << s.fit.n
        << '\t' << s.evidence << '\n';
  };
  for (const auto& s : model.user_sensors) write_sensor(s);
  for (const auto& s : model.item_sensors) write_sensor(s);
}

FittedModel read_model(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&line_no](const std::string& what) {
    return DataError("model line " + std::to_string(line_no) + ": " + what);
  };

  ModelParams params;
  std::vector<Rating> values;
  std::vector<double> probs;
  std::vector<SensorRef> sensors;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string tag;
    fields >> tag;
    if (!header) {
      int version = 0;
      if (tag != "noisysense-model" || !(fields >> version)) throw fail("missing header");
      if (version != kModelFormatVersion) {
        throw fail("unsupported model format version " + std::to_string(version));
      }
      header = true;
    } else if (tag == "params") {
      std::string variant;
      if (!(fields >> variant >> params.k >> params.max_user_sensors >> params.max_item_sensors)) {
        throw fail("malformed params");
      }
      if (variant == "noisy1") {
        params.variant = Variant::kNoisy1;
      } else if (variant == "noisy2") {
        params.variant = Variant::kNoisy2;
      } else {
        throw fail("unknown variant '" + variant + "'");
      }
    } else if (tag == "prior") {
      Rating v = 0;
      double p = 0.0;
      if (!(fields >> v >> p)) throw fail("malformed prior");
      values.push_back(v);
      probs.push_back(p);
    } else if (tag == "sensor") {
      std::string kind;
      SensorRef s;
      if (!(fields >> kind >> s.id >> s.fit.alpha >> s.fit.beta >> s.fit.sigma2 >> s.fit.r2 >>
            s.fit.n >> s.evidence)) {
        throw fail("malformed sensor");
      }
      if (kind == "user") {
        s.kind = SensorRef::Kind::kUser;
      } else if (kind == "item") {
        s.kind = SensorRef::Kind::kItem;
      } else {
        throw fail("unknown sensor kind '" + kind + "'");
      }
      sensors.push_back(s);
    } else {
      throw fail("unknown record '" + tag + "'");
    }
  }
  if (!header) throw DataError("empty model file");

  FittedModel model{RatingPrior{RatingScale(values), probs}, {}, {}, params};
  for (auto& s : sensors) {
    s.fit.k = params.k;
    (s.kind == SensorRef::Kind::kUser ? model.user_sensors : model.item_sensors).push_back(s);
  }
  return model;
}

}  // namespace noisysense
