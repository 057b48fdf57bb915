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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. A summary with the measured values is also written
// to acceptance_report.txt in the working directory.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "noisysense/cli.hpp"
#include "noisysense/errors.hpp"
#include "noisysense/eval.hpp"
#include "noisysense/predictor.hpp"
#include "noisysense/sensor_fit.hpp"
#include "oracles.hpp"

namespace ns = noisysense;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

ns::PairedObservations observations(const std::vector<oracle::Point>& pts) {
  ns::PairedObservations obs;
  for (const auto& p : pts) obs.add(p.x, p.y);
  return obs;
}

std::vector<oracle::Point> random_points(std::mt19937_64& rng, int n, int m) {
  std::vector<oracle::Point> pts;
  for (int j = 0; j < n; ++j) {
    pts.push_back({double(1 + rng() % m), double(1 + rng() % m), 1.0});
  }
  return pts;
}

std::vector<double> random_weights(std::mt19937_64& rng, int m) {
  std::uniform_real_distribution<double> unit(0.01, 1.0);
  std::vector<double> w(m * m);
  for (auto& x : w) x = unit(rng);
  return w;
}

// 1. K = 0 fits against two-pass least squares.
Outcome regression_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(101);
  const int m = 6;
  const ns::RatingScale scale = ns::RatingScale::range(1, m);
  const ns::PairPrior pp(scale, std::vector<double>(m * m, 1.0));
  double worst = 0;
  int instances = 0;
  while (instances < 1000) {
    const int n = 2 + static_cast<int>(rng() % 49);
    const auto pts = random_points(rng, n, m);
    const auto expect = oracle::least_squares(pts);
    if (!expect) continue;  // all x equal: no slope to compare
    const auto got = ns::fit_noisy1(observations(pts), pp, 0.0, {0.0});
    if (!got.ok()) return {false, fmt::format("instance {} reported unfittable", instances)};
    worst = std::max({worst, std::abs(got.fit.alpha - expect->alpha),
                      std::abs(got.fit.beta - expect->beta),
                      std::abs(got.fit.sigma2 - expect->sigma2)});
    ++instances;
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-9 && secs < 5,
          fmt::format("1000 instances, max |delta| {:.3g} (<= 1e-9), {:.2f} s (< 5 s)", worst, secs)};
}

// 2. K = 1 fits against least squares over real plus weighted pseudo-points.
Outcome weighted_dummy_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(202);
  double worst = 0;
  for (int instance = 0; instance < 200; ++instance) {
    const int m = 2 + static_cast<int>(rng() % 5);
    const ns::RatingScale scale = ns::RatingScale::range(1, m);
    const ns::PairPrior pp(scale, random_weights(rng, m));
    const auto real = random_points(rng, 1 + static_cast<int>(rng() % 40), m);
    const std::vector<int> values(scale.values().begin(), scale.values().end());
    const std::vector<double> weights(pp.weights().begin(), pp.weights().end());
    const auto expect = oracle::least_squares(oracle::with_dummies(real, values, weights, 1.0));
    const auto got = ns::fit_noisy1(observations(real), pp, 1.0, {0.0});
    if (!expect || !got.ok()) return {false, fmt::format("instance {} not fittable", instance)};
    worst = std::max({worst, std::abs(got.fit.alpha - expect->alpha),
                      std::abs(got.fit.beta - expect->beta),
                      std::abs(got.fit.sigma2 - expect->sigma2)});
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-9 && secs < 5,
          fmt::format("200 instances, max |delta| {:.3g} (<= 1e-9), {:.2f} s (< 5 s)", worst, secs)};
}

// 3. Posterior against plain-arithmetic enumeration on micro-instances.
Outcome posterior_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(303);
  double worst_tv = 0;
  int instances = 0, with_sensors = 0;
  while (instances < 500) {
    const int m = 2 + static_cast<int>(rng() % 5);
    const int users = 1 + static_cast<int>(rng() % 4);
    const int items = 2 + static_cast<int>(rng() % 3);
    const ns::RatingScale scale = ns::RatingScale::range(1, m);
    oracle::Table table{users, items, std::vector<int>(users * items, -1)};
    std::vector<ns::RatingTriple> triples;
    for (int u = 0; u < users; ++u) {
      for (int i = 0; i < items; ++i) {
        if (rng() % 4 == 0) continue;
        table.cells[u * items + i] = 1 + static_cast<int>(rng() % m);
        triples.push_back({u, i, table.at(u, i)});
      }
    }
    if (triples.empty()) continue;
    const auto train = ns::RatingsMatrix::from_triples(scale, users, items, triples);
    const auto mode = instances % 2 ? ns::PairPriorMode::kEmpiricalPairs
                                    : ns::PairPriorMode::kMarginalProduct;
    const auto priors = ns::make_training_priors(train, mode, {500, std::uint64_t(instances)});

    const int target = static_cast<int>(rng() % items);
    std::vector<ns::ItemRating> active;
    std::map<int, int> active_map;
    for (int i = 0; i < items; ++i) {
      if (i == target || rng() % 4 == 0) continue;
      const int r = 1 + static_cast<int>(rng() % m);
      active.push_back({i, r});
      active_map[i] = r;
    }
    ns::ModelParams params;
    params.variant = instances % 3 == 0 ? ns::Variant::kNoisy2 : ns::Variant::kNoisy1;
    params.k = 1.0;
    params.max_user_sensors = 1 + rng() % 4;
    params.max_item_sensors = rng() % 4;
    const auto model = ns::build_model(train, priors, active, target, params);
    const auto post = ns::posterior(model, scale);
    with_sensors += !model.user_sensors.empty() || !model.item_sensors.empty();

    const oracle::BruteForceSetup setup{table,
                                        active_map,
                                        target,
                                        params.variant == ns::Variant::kNoisy1,
                                        params.k,
                                        params.max_user_sensors,
                                        params.max_item_sensors,
                                        params.min_corated(),
                                        params.fit.sigma2_floor,
                                        {scale.values().begin(), scale.values().end()},
                                        priors.rating.probs,
                                        {priors.pairs.weights().begin(), priors.pairs.weights().end()}};
    const auto expect = oracle::brute_force_posterior(setup);
    double tv = 0;
    for (std::size_t v = 0; v < expect.size(); ++v) tv += std::abs(expect[v] - post.probs[v]);
    worst_tv = std::max(worst_tv, tv / 2);
    ++instances;
  }
  const double secs = seconds_since(start);
  return {worst_tv <= 1e-9 && secs < 10,
          fmt::format("500 instances ({} with sensors), max TV {:.3g} (<= 1e-9), {:.2f} s (< 10 s)",
                      with_sensors, worst_tv, secs)};
}

// 4. Variance positivity over random K = 1 fits with smoothed pair priors.
Outcome variance_positivity() {
  const auto start = Clock::now();
  std::mt19937_64 rng(404);
  const ns::FitOptions options;  // default floor
  double min_sigma2 = HUGE_VAL, min_raw = HUGE_VAL;
  int fits = 0, below = 0, degenerate = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const int m = 2 + static_cast<int>(rng() % 9);
    const ns::RatingScale scale = ns::RatingScale::range(1, m);
    // Smoothed priors: add-one counts from a random co-rating sample.
    std::vector<std::pair<ns::Rating, ns::Rating>> events;
    const int n_events = static_cast<int>(rng() % 2000);
    for (int e = 0; e < n_events; ++e) {
      events.emplace_back(1 + rng() % m, 1 + rng() % m);
    }
    const auto pp = ns::pair_prior_from_events(scale, events);
    // Half the instances put every real point on the identity line.
    auto real = random_points(rng, static_cast<int>(rng() % 60), m);
    if (trial % 2 == 0) {
      for (auto& p : real) p.y = p.x;
    }
    const auto obs = observations(real);
    for (const auto& result : {ns::fit_noisy1(obs, pp, 1.0, options), ns::fit_noisy2(obs, pp, 1.0, options)}) {
      if (!result.ok()) continue;
      ++fits;
      min_sigma2 = std::min(min_sigma2, result.fit.sigma2);
      below += result.fit.sigma2 < options.sigma2_floor;
      try {
        for (ns::Rating x : scale.values()) ns::predictive_density(result.fit, x, x, scale);
      } catch (const ns::DegenerateSensorError&) {
        ++degenerate;
      }
    }
    const auto raw = ns::fit_noisy1(obs, pp, 1.0, {0.0});
    if (raw.ok()) min_raw = std::min(min_raw, raw.fit.sigma2);
  }
  const double secs = seconds_since(start);
  return {fits >= 20000 && below == 0 && degenerate == 0,
          fmt::format("{} fits, {} below floor, {} degenerate-sensor errors, min sigma2 {:.4g} "
                      "(unfloored min {:.4g}), {:.2f} s",
                      fits, below, degenerate, min_sigma2, min_raw, secs)};
}

// 5. Metric fixtures.
Outcome metric_fixtures() {
  const std::vector<ns::PredictionRecord> asym{{0, 0, 3, 4}, {0, 1, 3, 2}, {1, 0, 5, 5}};
  const double m = ns::mae(asym);
  const std::vector<ns::PredictionRecord> boundary{
      {0, 0, 3, 0}, {0, 1, 4, 0}, {0, 2, 2, 0}, {0, 3, 2.5, 0}, {0, 4, 3.5, 0}};
  const auto kept = ns::extreme_filter(boundary, 3.0);
  std::vector<double> actual;
  for (const auto& r : kept) actual.push_back(r.actual);
  const bool filter_ok = actual == std::vector<double>{4, 2} &&
                         ns::extreme_filter(kept, 3.0) == kept &&
                         ns::extreme_filter(std::vector<ns::PredictionRecord>{}, 3.0).empty();
  return {std::abs(m - 0.5) < 1e-15 && filter_ok,
          fmt::format("asymmetric mae {} (0.5, pooled would be 0.6667); mean 3.0 keeps actual {{4, 2}}, "
                      "drops {{3, 2.5, 3.5}}: {}",
                      m, filter_ok ? "yes" : "no")};
}

// 6. Randomization-test calibration.
Outcome significance_calibration() {
  const auto start = Clock::now();
  // Draws come from a generator unrelated to the library's.
  std::minstd_rand gen(6060);
  std::normal_distribution<double> sym(0.0, 1.0);
  std::vector<double> levels;
  for (int draw = 0; draw < 200; ++draw) {
    std::vector<double> diffs(60);
    for (auto& d : diffs) d = sym(gen);
    levels.push_back(ns::randomization_test(diffs, ns::kPermutations, 5000 + draw));
  }
  std::sort(levels.begin(), levels.end());
  double mean = 0, ks = 0;
  for (std::size_t j = 0; j < levels.size(); ++j) {
    mean += levels[j] / levels.size();
    ks = std::max({ks, std::abs(levels[j] - double(j) / levels.size()),
                   std::abs(levels[j] - double(j + 1) / levels.size())});
  }
  // All diffs +1: A's deviation exceeds B's everywhere. The level that A is
  // better is the observed-is-maximum case (1.0); the level that B is better
  // (the test run on the reversed diffs) must be <= 0.001.
  const std::vector<double> ones(60, 1.0), reversed(60, -1.0);
  const double a_better = ns::randomization_test(ones, ns::kPermutations, 7);
  const double b_better = ns::randomization_test(reversed, ns::kPermutations, 7);
  const double secs = seconds_since(start);
  const bool pass = std::abs(mean - 0.5) <= 0.05 && ks < 0.096 && b_better <= 0.001 &&
                    a_better == 1.0 && secs < 30;
  return {pass, fmt::format("null mean {:.4f} (0.5 +- 0.05), KS D {:.4f} (< 0.096); all-positive "
                            "diffs: effect-direction level {:.4g} (<= 0.001), opposite {:.4g}; "
                            "{:.2f} s (< 30 s)",
                            mean, ks, b_better, a_better, secs)};
}

ns::RunConfig movielens_config() {
  ns::RunConfig config;
  config.dataset = std::string(NOISYSENSE_DATA_DIR) + "/ml-100k.tsv";
  config.scale_min = 1;
  config.scale_max = 5;
  config.test_fraction = 0.4;
  config.k = 1.0;
  config.u = 50;
  config.i = 20;
  config.seed = 20260101;
  config.threads = 0;
  return config;
}

// 7. Directional reproduction on MovieLens 100K.
Outcome directional(std::ostream& report) {
  const auto start = Clock::now();
  auto config = movielens_config();
  if (!fs::exists(config.dataset)) {
    return {false, "dataset missing: " + config.dataset + " (run tools/fetch_movielens.py)"};
  }
  config.algorithms = {"noisy1", "noisy2", "pd", "correlation"};
  config.protocols = {"AllBut1", "Given10", "Given5", "Given2"};
  std::ostringstream log;
  const auto eval = ns::cmd_evaluate(config, log);
  ns::write_report_table(report, eval.report);

  auto mae_of = [&](const std::string& algo, const std::string& protocol) {
    for (const auto& r : eval.report.rows) {
      if (r.algorithm == algo && r.protocol == protocol) return r.mae_all;
    }
    return std::nan("");
  };
  const double n2_ab1 = mae_of("noisy2", "AllBut1"), co_ab1 = mae_of("correlation", "AllBut1");
  const double n2_g10 = mae_of("noisy2", "Given10"), co_g10 = mae_of("correlation", "Given10");

  // U x I grid for noisy1, one random hidden rating per test user.
  auto sweep_config = config;
  sweep_config.algorithms = {"noisy1"};
  sweep_config.protocols = {"AllBut1"};
  const auto u_grid = ns::parse_grid("0:100:10"), i_grid = ns::parse_grid("0,10,20");
  const auto sweep = ns::cmd_sweep(sweep_config, u_grid, i_grid, log);
  report << "\nSweep (noisy1, AllBut1)\n";
  ns::write_sweep_grid(report, sweep);
  auto cell = [&](std::size_t u, std::size_t i) {
    const auto ui = std::find(u_grid.begin(), u_grid.end(), u) - u_grid.begin();
    const auto ii = std::find(i_grid.begin(), i_grid.end(), i) - i_grid.begin();
    return sweep.mae[ui][ii];
  };
  const double both = cell(50, 20), users_only = cell(50, 0), items_only = cell(0, 20);
  const double secs = seconds_since(start);

  const bool a = n2_ab1 < co_ab1 && n2_g10 < co_g10;
  const bool b = both < users_only && both < items_only;
  report << fmt::format("\nitem-only (0,20) {:.4f} vs user-only (50,0) {:.4f}\n", items_only, users_only);
  return {a && b && secs < 1800,
          fmt::format("(a) noisy2 vs correlation: AllBut1 {:.4f} vs {:.4f}, Given10 {:.4f} vs {:.4f} "
                      "[{}]; (b) noisy1 sweep (50,20) {:.4f} vs (50,0) {:.4f} and (0,20) {:.4f} [{}]; "
                      "{:.0f} s (< 1800 s)",
                      n2_ab1, co_ab1, n2_g10, co_g10, a ? "ok" : "not reproduced", both,
                      users_only, items_only, b ? "ok" : "not reproduced", secs)};
}

// 8. Byte-identical reports from two end-to-end runs.
Outcome determinism() {
  const fs::path dir = fs::path(NOISYSENSE_ACCEPT_TMP);
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto config = movielens_config();
  auto run = [&](const std::string& tag) {
    const std::vector<std::string> args{
        "noisysense",   "evaluate",         "--dataset",
        config.dataset, "--seed",           "8",
        "--protocols",  "AllBut1,Given5",   "--max-test-users",
        "60",           "--threads",        "0",
        "--report",     (dir / (tag + ".txt")).string(),
        "--report-json", (dir / (tag + ".json")).string(),
        "--records",    (dir / (tag + ".tsv")).string()};
    std::vector<const char*> argv;
    for (const auto& s : args) argv.push_back(s.c_str());
    std::ostringstream out, err;
    return ns::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  };
  auto slurp = [&](const std::string& name) {
    std::ifstream in(dir / name, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  };
  if (run("first") != 0 || run("second") != 0) return {false, "evaluate run failed"};
  std::size_t bytes = 0;
  bool same = true;
  for (const char* ext : {".txt", ".json", ".tsv"}) {
    const auto a = slurp(std::string("first") + ext), b = slurp(std::string("second") + ext);
    same = same && !a.empty() && a == b;
    bytes += a.size();
  }
  return {same, fmt::format("report table, JSON report and records identical across runs "
                            "({} bytes compared): {}",
                            bytes, same ? "yes" : "no")};
}

}  // namespace

int main() {
  std::ofstream report("acceptance_report.txt");
  std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 regression oracle", regression_oracle},
      {"2 weighted-dummy oracle", weighted_dummy_oracle},
      {"3 posterior oracle", posterior_oracle},
      {"4 variance positivity", variance_positivity},
      {"5 metric fixtures", metric_fixtures},
      {"6 significance calibration", significance_calibration},
      {"7 directional reproduction", [&] { return directional(report); }},
      {"8 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const std::string line =
        fmt::format("{} criterion {}: {}", outcome.pass ? "PASS" : "FAIL", name, outcome.detail);
    std::cout << line << std::endl;
    report << line << '\n';
    failed += !outcome.pass;
  }
  std::cout << (failed ? fmt::format("{} criteria failed", failed) : "all criteria passed") << '\n';
  return failed ? 1 : 0;
}
