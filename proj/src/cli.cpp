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

#include "noisysense/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "noisysense/errors.hpp"
#include "noisysense/random.hpp"

namespace noisysense {

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    if (c == ',' || c == ' ') {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ',';
    out += s;
  }
  return out;
}

/// Writes every (path, content) pair or none of them: contents go to
/// temporaries first and are renamed into place only once all succeeded.
void write_outputs(const std::vector<std::pair<std::string, std::string>>& outputs) {
  std::vector<std::string> temps;
  auto cleanup = [&temps] {
    for (const auto& t : temps) std::remove(t.c_str());
  };
  for (const auto& [path, content] : outputs) {
    if (path.empty()) continue;
    const std::string tmp = path + ".tmp";
    std::ofstream out(tmp, std::ios::binary);
    if (out) out << content;
    if (!out) {
      cleanup();
      throw DataError("cannot write '" + path + "'");
    }
    temps.push_back(tmp);
  }
  std::size_t k = 0;
  for (const auto& [path, content] : outputs) {
    if (path.empty()) continue;
    std::filesystem::rename(temps[k++], path);
  }
}

}  // namespace

void RunConfig::validate() const {
  if (!seed) throw UsageError("a seed is required (--seed)");
  if (dataset.empty()) throw UsageError("a dataset is required (--dataset)");
  if (scale_max <= scale_min) throw UsageError("scale-max must exceed scale-min");
  if (algorithms.empty()) throw UsageError("at least one algorithm is required");
  if (protocols.empty()) throw UsageError("at least one protocol is required");
  for (const auto& a : algorithms) parse_algorithm(a);
  for (const auto& p : protocols) SplitSpec::parse(p);
  parse_pair_prior_mode(pair_prior);
  if (!(k >= 0.0) || !std::isfinite(k)) throw UsageError("k must be >= 0");
  if (!(pd_sigma > 0.0)) throw UsageError("pd-sigma must be > 0");
  if (!(pd_prior_mix >= 0.0 && pd_prior_mix < 1.0)) {
    throw UsageError("pd-prior-mix must lie in [0, 1)");
  }
  if (!(sigma2_floor >= 0.0)) throw UsageError("sigma2-floor must be >= 0");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw UsageError("test-fraction must lie in (0, 1)");
  }
  if (min_corated_noisy1 < 1 || min_corated_noisy2 < 1) {
    throw UsageError("minimum co-rated counts must be >= 1");
  }
  if (pair_samples == 0) throw UsageError("pair-samples must be >= 1");
}

Experiment prepare_experiment(const RunConfig& config) {
  std::ifstream in(config.dataset);
  if (!in) throw DataError("cannot open dataset '" + config.dataset + "'");
  Experiment ex{load_ratings(in, RatingScale::range(config.scale_min, config.scale_max)),
                {},
                {},
                RatingsMatrix(RatingScale::range(config.scale_min, config.scale_max))};
  if (ex.data.matrix.empty()) throw DataError("dataset '" + config.dataset + "' has no ratings");
  auto [test, train] = partition_users(ex.data.matrix.n_users(), config.test_fraction, *config.seed);
  if (config.max_test_users > 0 && test.size() > config.max_test_users) {
    test.resize(config.max_test_users);
  }
  ex.test_users = std::move(test);
  ex.train_users = std::move(train);
  ex.train = ex.data.matrix.restricted_to_users(ex.train_users);
  if (ex.train.empty()) throw DataError("training partition has no ratings");
  return ex;
}

AlgorithmConfig algorithm_config(const RunConfig& config, const std::string& name) {
  AlgorithmConfig algo;
  algo.kind = parse_algorithm(name);
  algo.model.k = config.k;
  algo.model.max_user_sensors = config.u;
  algo.model.max_item_sensors = config.i;
  algo.model.min_corated_noisy1 = config.min_corated_noisy1;
  algo.model.min_corated_noisy2 = config.min_corated_noisy2;
  algo.model.fit.sigma2_floor = config.sigma2_floor;
  algo.pd.sigma = config.pd_sigma;
  algo.pd.prior_mix = config.pd_prior_mix;
  return algo;
}

namespace {

PairSampling pair_sampling(const RunConfig& config) {
  return {config.pair_samples, derive_seed(*config.seed, "pair-prior")};
}

}  // namespace

EvaluateResult cmd_evaluate(const RunConfig& config, std::ostream& log) {
  config.validate();
  const Experiment ex = prepare_experiment(config);
  const EvalContext ctx(ex.train, parse_pair_prior_mode(config.pair_prior), pair_sampling(config));

  EvaluateResult result;
  EvalReport& report = result.report;
  report.dataset = std::filesystem::path(config.dataset).filename().string();
  report.train_users = ex.train_users.size();
  report.test_users = ex.test_users.size();
  report.train_ratings = ex.train.n_ratings();
  report.train_mean = ctx.train_mean;
  report.seed = *config.seed;

  for (const auto& protocol_name : config.protocols) {
    const SplitSpec spec = SplitSpec::parse(protocol_name);
    std::vector<bool> has_records;
    for (const auto& algo_name : config.algorithms) {
      log << fmt::format("evaluating {} under {}\n", algo_name, spec.name()) << std::flush;
      const ProtocolRun run = run_protocol(ctx, ex.data.matrix, ex.test_users, spec,
                                           algorithm_config(config, algo_name), *config.seed,
                                           config.threads);
      const auto extreme = extreme_filter(run.records, ctx.train_mean);
      ReportRow row;
      row.algorithm = algo_name;
      row.protocol = spec.name();
      row.mae_all = run.records.empty() ? std::nan("") : mae(run.records);
      row.mae_extreme = extreme.empty() ? std::nan("") : mae(extreme);
      row.users_scored = run.users_scored;
      row.users_skipped = run.users_skipped;
      row.predictions = run.records.size();
      row.extreme_predictions = extreme.size();
      report.rows.push_back(row);
      for (const auto& r : run.records) {
        result.records.push_back({ex.data.users.external(r.user), ex.data.items.external(r.item),
                                  r.actual, r.predicted, algo_name, spec.name()});
      }
      has_records.push_back(!run.records.empty());
    }

    // Same path as the significance subcommand on the dumped records, so the
    // two agree exactly.
    for (std::size_t a = 0; a < has_records.size(); ++a) {
      for (std::size_t b = a + 1; b < has_records.size(); ++b) {
        if (!has_records[a]) continue;
        SignificanceQuery query;
        query.algorithm_a = config.algorithms[a];
        query.algorithm_b = config.algorithms[b];
        query.protocol = spec.name();
        query.extreme_mean = ctx.train_mean;
        query.seed = *config.seed;
        for (auto& row : cmd_significance(result.records, result.records, query)) {
          report.significance.push_back(std::move(row));
        }
      }
    }
  }
  return result;
}

SweepResult cmd_sweep(const RunConfig& config, const std::vector<std::size_t>& u_grid,
                      const std::vector<std::size_t>& i_grid, std::ostream& log) {
  config.validate();
  if (u_grid.empty() || i_grid.empty()) throw UsageError("sweep grids must be non-empty");
  const Experiment ex = prepare_experiment(config);
  const EvalContext ctx(ex.train, parse_pair_prior_mode(config.pair_prior), pair_sampling(config));
  const SplitSpec spec = SplitSpec::parse(config.protocols.front());
  log << fmt::format("sweeping {} under {} over {} cells\n", config.algorithms.front(), spec.name(),
                     u_grid.size() * i_grid.size())
      << std::flush;
  SweepResult sweep{u_grid, i_grid, {}};
  sweep.mae = sweep_protocol(ctx, ex.data.matrix, ex.test_users, spec,
                             algorithm_config(config, config.algorithms.front()), u_grid, i_grid,
                             *config.seed, config.threads);
  return sweep;
}

void write_sweep_grid(std::ostream& out, const SweepResult& sweep) {
  out << "U\tI\tmae\n";
  for (std::size_t ui = 0; ui < sweep.u_grid.size(); ++ui) {
    for (std::size_t ii = 0; ii < sweep.i_grid.size(); ++ii) {
      out << fmt::format("{}\t{}\t{}\n", sweep.u_grid[ui], sweep.i_grid[ii], sweep.mae[ui][ii]);
    }
  }
}

std::vector<SignificanceRow> cmd_significance(std::span<const LabeledRecord> records_a,
                                              std::span<const LabeledRecord> records_b,
                                              const SignificanceQuery& query) {
  auto pick_algorithm = [](std::span<const LabeledRecord> records, const std::string& wanted,
                           const char* side) {
    if (!wanted.empty()) return wanted;
    std::string found;
    for (const auto& r : records) {
      if (found.empty()) {
        found = r.algorithm;
      } else if (r.algorithm != found) {
        throw UsageError(std::string("records ") + side +
                         " hold several algorithms; choose one with --algorithm-" + side);
      }
    }
    if (found.empty()) throw DataError(std::string("records ") + side + " are empty");
    return found;
  };
  const std::string algo_a = pick_algorithm(records_a, query.algorithm_a, "a");
  const std::string algo_b = pick_algorithm(records_b, query.algorithm_b, "b");

  // Shared id space so both sides map (user, item) identically.
  IdMap users, items;
  std::map<std::string, std::pair<std::vector<PredictionRecord>, std::vector<PredictionRecord>>>
      by_protocol;
  auto collect = [&](std::span<const LabeledRecord> records, const std::string& algo, bool first) {
    for (const auto& r : records) {
      if (r.algorithm != algo) continue;
      if (!query.protocol.empty() && r.protocol != query.protocol) continue;
      auto& slot = by_protocol[r.protocol];
      (first ? slot.first : slot.second)
          .push_back({users.intern(r.user), items.intern(r.item), r.actual, r.predicted});
    }
  };
  collect(records_a, algo_a, true);
  collect(records_b, algo_b, false);
  if (by_protocol.empty()) throw DataError("no records match the requested algorithms/protocol");

  std::vector<SignificanceRow> rows;
  for (const auto& [protocol, pair] : by_protocol) {
    const auto& [a, b] = pair;
    if (a.empty() || b.empty()) {
      throw DataError("protocol " + protocol + " is missing from one of the record sets");
    }
    rows.push_back({protocol, "all", algo_a, algo_b,
                    compare_records(a, b, query.seed, query.samples, query.permutations)});
    if (query.extreme_mean) {
      const auto ea = extreme_filter(a, *query.extreme_mean);
      const auto eb = extreme_filter(b, *query.extreme_mean);
      if (ea.empty()) continue;
      rows.push_back({protocol, "extreme", algo_a, algo_b,
                      compare_records(ea, eb, query.seed, query.samples, query.permutations)});
    }
  }
  return rows;
}

std::vector<std::size_t> parse_grid(const std::string& text) {
  auto parse_count = [&text](std::string_view s) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw UsageError("malformed grid '" + text + "'");
    }
    return v;
  };
  std::vector<std::size_t> grid;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string_view> parts;
    std::string_view rest(text);
    for (std::size_t pos; (pos = rest.find(':')) != std::string_view::npos;) {
      parts.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    parts.push_back(rest);
    if (parts.size() != 3) throw UsageError("grid range must be start:stop:step");
    const std::size_t start = parse_count(parts[0]);
    const std::size_t stop = parse_count(parts[1]);
    const std::size_t step = parse_count(parts[2]);
    if (step == 0 || stop < start) throw UsageError("malformed grid '" + text + "'");
    for (std::size_t v = start; v <= stop; v += step) grid.push_back(v);
  } else {
    for (const auto& item : split_list(text)) grid.push_back(parse_count(item));
  }
  if (grid.empty()) throw UsageError("grid '" + text + "' is empty");
  return grid;
}

// ---------------------------------------------------------------------------
// Command line

namespace {

/// `key = value` lines turned into `--key=value` tokens.
std::vector<std::string> read_config_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  std::vector<std::string> tokens;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(fmt::format("config {} line {}: expected key = value", path, line_no));
    }
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    tokens.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  return tokens;
}

/// Splices config-file tokens in front of the subcommand's own flags, so the
/// flags, parsed later, take precedence.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string config_path;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) config_path = args[k + 1];
    if (args[k].rfind("--config=", 0) == 0) config_path = args[k].substr(9);
  }
  if (config_path.empty() || args.empty()) return args;
  std::vector<std::string> out(args.begin(), args.begin() + 1);  // subcommand
  auto tokens = read_config_tokens(config_path);
  out.insert(out.end(), tokens.begin(), tokens.end());
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

struct RunOptions {
  RunConfig config;
  std::string algorithms;
  std::string protocols;
  std::uint64_t seed = 0;
  std::string config_file;
};

void add_data_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--config", o.config_file, "Key-value config file (flags override it)");
  cmd->add_option("--dataset", o.config.dataset, "Ratings file: user item rating per line");
  cmd->add_option("--scale-min", o.config.scale_min, "Lowest rating value")->capture_default_str();
  cmd->add_option("--scale-max", o.config.scale_max, "Highest rating value")->capture_default_str();
}

void add_run_options(CLI::App* cmd, RunOptions& o) {
  add_data_options(cmd, o);
  auto& c = o.config;
  o.algorithms = join_list(c.algorithms);
  o.protocols = join_list(c.protocols);
  cmd->add_option("--algorithms", o.algorithms, "Comma list of noisy1, noisy2, pd, correlation")
      ->capture_default_str();
  cmd->add_option("--protocols", o.protocols, "Comma list of AllBut1, GivenX")
      ->capture_default_str();
  cmd->add_option("--k", c.k, "Dummy observation weight K")->capture_default_str();
  cmd->add_option("--u", c.u, "Best user sensors kept (U)")->capture_default_str();
  cmd->add_option("--i", c.i, "Best item sensors kept (I)")->capture_default_str();
  cmd->add_option("--min-corated-noisy1", c.min_corated_noisy1)->capture_default_str();
  cmd->add_option("--min-corated-noisy2", c.min_corated_noisy2)->capture_default_str();
  cmd->add_option("--sigma2-floor", c.sigma2_floor, "Lower bound on fitted variances")
      ->capture_default_str();
  cmd->add_option("--pd-sigma", c.pd_sigma, "Personality Diagnosis noise sigma")
      ->capture_default_str();
  cmd->add_option("--pd-prior-mix", c.pd_prior_mix)->capture_default_str();
  cmd->add_option("--pair-prior", c.pair_prior, "marginal-product or empirical-pairs")
      ->capture_default_str();
  cmd->add_option("--pair-samples", c.pair_samples, "Co-rating events sampled (empirical-pairs)")
      ->capture_default_str();
  cmd->add_option("--test-fraction", c.test_fraction, "Share of users held out for testing")
      ->capture_default_str();
  cmd->add_option("--max-test-users", c.max_test_users, "Cap on scored test users (0 = all)")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Run seed (required)");
  cmd->add_option("--threads", c.threads, "Worker threads (0 = hardware)")->capture_default_str();
}

void finish_run_options(CLI::App* cmd, RunOptions& o) {
  o.config.algorithms = split_list(o.algorithms);
  o.config.protocols = split_list(o.protocols);
  if (cmd->get_option("--seed")->count() > 0) o.config.seed = o.seed;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"noisysense: noisy-sensor collaborative filtering and its evaluation harness"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  RunOptions ingest_opts;
  std::string ingest_out, user_map, item_map;
  auto* ingest = app.add_subcommand("ingest", "Load a ratings file, densify ids, write id maps");
  add_data_options(ingest, ingest_opts);
  ingest->add_option("--out", ingest_out, "Normalized triples (internal ids)");
  ingest->add_option("--user-map", user_map, "User id-map sidecar");
  ingest->add_option("--item-map", item_map, "Item id-map sidecar");

  RunOptions eval_opts;
  auto* evaluate = app.add_subcommand("evaluate", "Score algorithms under evaluation protocols");
  add_run_options(evaluate, eval_opts);
  evaluate->add_option("--report", eval_opts.config.report, "Human-readable report path");
  evaluate->add_option("--report-json", eval_opts.config.report_json, "Structured report path");
  evaluate->add_option("--records", eval_opts.config.records, "Prediction records dump path");

  RunOptions sweep_opts;
  std::string u_grid_text = "0:100:10", i_grid_text = "0,10,20", grid_out;
  auto* sweep = app.add_subcommand("sweep", "MAE over a grid of U and I");
  add_run_options(sweep, sweep_opts);
  sweep->add_option("--u-grid", u_grid_text, "start:stop:step or comma list")->capture_default_str();
  sweep->add_option("--i-grid", i_grid_text, "start:stop:step or comma list")->capture_default_str();
  sweep->add_option("--grid", grid_out, "Output grid path (U, I, mae per line)");

  std::string records_a, records_b;
  SignificanceQuery query;
  double extreme_mean = 0.0;
  std::string sig_out;
  std::uint64_t sig_seed = 0;
  auto* significance =
      app.add_subcommand("significance", "Randomization test between two record dumps");
  significance->add_option("--records-a", records_a, "Records dump of algorithm A")->required();
  significance->add_option("--records-b", records_b, "Records dump of algorithm B")->required();
  significance->add_option("--algorithm-a", query.algorithm_a, "Algorithm to take from A");
  significance->add_option("--algorithm-b", query.algorithm_b, "Algorithm to take from B");
  significance->add_option("--protocol", query.protocol, "Restrict to one protocol");
  significance->add_option("--extreme-mean", extreme_mean,
                           "Training mean rating; adds extreme-rating rows");
  significance->add_option("--samples", query.samples)->capture_default_str();
  significance->add_option("--permutations", query.permutations)->capture_default_str();
  significance->add_option("--seed", sig_seed, "Run seed")->required();
  significance->add_option("--out", sig_out, "Output path (tab-separated)");

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(args);
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (ingest->parsed()) {
      auto& c = ingest_opts.config;
      if (c.dataset.empty()) throw UsageError("a dataset is required (--dataset)");
      std::ifstream in(c.dataset);
      if (!in) throw DataError("cannot open dataset '" + c.dataset + "'");
      const auto loaded = load_ratings(in, RatingScale::range(c.scale_min, c.scale_max));
      std::ostringstream triples, users, items;
      for (const auto& t : loaded.matrix.triples()) {
        triples << t.user << '\t' << t.item << '\t' << t.rating << '\n';
      }
      write_id_map(users, loaded.users);
      write_id_map(items, loaded.items);
      write_outputs({{ingest_out, triples.str()}, {user_map, users.str()}, {item_map, items.str()}});
      out << fmt::format("users {}\nitems {}\nratings {}\nmean {:.6f}\n", loaded.matrix.n_users(),
                         loaded.matrix.n_items(), loaded.matrix.n_ratings(),
                         loaded.matrix.mean_rating());
    } else if (evaluate->parsed()) {
      finish_run_options(evaluate, eval_opts);
      const auto& c = eval_opts.config;
      const auto result = cmd_evaluate(c, err);
      std::ostringstream table, json, dump;
      write_report_table(table, result.report);
      write_report_json(json, result.report);
      write_records(dump, result.records);
      write_outputs({{c.report, table.str()}, {c.report_json, json.str()}, {c.records, dump.str()}});
      out << table.str();
    } else if (sweep->parsed()) {
      finish_run_options(sweep, sweep_opts);
      const auto result =
          cmd_sweep(sweep_opts.config, parse_grid(u_grid_text), parse_grid(i_grid_text), err);
      std::ostringstream grid;
      write_sweep_grid(grid, result);
      write_outputs({{grid_out, grid.str()}});
      out << grid.str();
    } else if (significance->parsed()) {
      query.seed = sig_seed;
      if (significance->get_option("--extreme-mean")->count() > 0) query.extreme_mean = extreme_mean;
      auto read = [](const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open records '" + path + "'");
        return read_records(in);
      };
      const auto a = read(records_a);
      const auto b = read(records_b);
      const auto rows = cmd_significance(a, b, query);
      std::ostringstream text;
      text << "protocol\tsubset\ta\tb\ta_vs_b\tb_vs_a\n";
      for (const auto& r : rows) {
        text << fmt::format("{}\t{}\t{}\t{}\t{:.4f}\t{:.4f}\n", r.protocol, r.subset, r.a, r.b,
                            r.level.a_vs_b, r.level.b_vs_a);
      }
      write_outputs({{sig_out, text.str()}});
      out << text.str();
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitOk;
}

}  // namespace noisysense
