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

// Report and records-dump serialization.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "noisysense/errors.hpp"
#include "noisysense/eval.hpp"

namespace noisysense {

namespace {

template <class Get>
std::vector<std::string> unique_in_order(const std::vector<ReportRow>& rows, Get get) {
  std::vector<std::string> out;
  for (const auto& r : rows) {
    const std::string& v = get(r);
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

const ReportRow* find_row(const EvalReport& report, const std::string& algorithm,
                          const std::string& protocol) {
  for (const auto& r : report.rows) {
    if (r.algorithm == algorithm && r.protocol == protocol) return &r;
  }
  return nullptr;
}

std::string cell(double v) { return std::isnan(v) ? "-" : fmt::format("{:.4f}", v); }

void write_mae_table(std::ostream& out, const EvalReport& report, bool extreme) {
  const auto algorithms = unique_in_order(report.rows, [](const ReportRow& r) -> const std::string& {
    return r.algorithm;
  });
  const auto protocols = unique_in_order(report.rows, [](const ReportRow& r) -> const std::string& {
    return r.protocol;
  });
  out << fmt::format("{:<14}", "Algorithm");
  for (const auto& p : protocols) out << fmt::format("{:>10}", p);
  out << '\n';
  for (const auto& a : algorithms) {
    out << fmt::format("{:<14}", a);
    for (const auto& p : protocols) {
      const ReportRow* row = find_row(report, a, p);
      const double v = row ? (extreme ? row->mae_extreme : row->mae_all) : std::nan("");
      out << fmt::format("{:>10}", cell(v));
    }
    out << '\n';
  }
}

nlohmann::ordered_json number_or_null(double v) {
  return std::isnan(v) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(v);
}

}  // namespace

void write_report_table(std::ostream& out, const EvalReport& report) {
  out << fmt::format("Dataset: {}\n", report.dataset);
  out << fmt::format("Training users: {}  test users: {}  training ratings: {}  mean rating: {:.4f}  seed: {}\n\n",
                     report.train_users, report.test_users, report.train_ratings,
                     report.train_mean, report.seed);
  out << "Average absolute deviation (lower is better)\n";
  write_mae_table(out, report, false);
  out << fmt::format("\nExtreme ratings (actual < {:.4f} or > {:.4f})\n", report.train_mean - 0.5,
                     report.train_mean + 0.5);
  write_mae_table(out, report, true);

  out << "\nCoverage\n";
  out << fmt::format("{:<14}{:>10}{:>10}{:>10}{:>13}{:>10}\n", "Algorithm", "Protocol", "Scored",
                     "Skipped", "Predictions", "Extreme");
  for (const auto& r : report.rows) {
    out << fmt::format("{:<14}{:>10}{:>10}{:>10}{:>13}{:>10}\n", r.algorithm, r.protocol,
                       r.users_scored, r.users_skipped, r.predictions, r.extreme_predictions);
  }

  if (!report.significance.empty()) {
    out << "\nSignificance levels (low: the first algorithm's deviation is lower)\n";
    out << fmt::format("{:<10}{:<9}{:<26}{:>9}{:>9}\n", "Protocol", "Subset", "Pair", "A vs B",
                       "B vs A");
    for (const auto& s : report.significance) {
      out << fmt::format("{:<10}{:<9}{:<26}{:>9.4f}{:>9.4f}\n", s.protocol, s.subset,
                         s.a + " vs " + s.b, s.level.a_vs_b, s.level.b_vs_a);
    }
  }
}

void write_report_json(std::ostream& out, const EvalReport& report) {
  nlohmann::ordered_json doc;
  doc["format"] = "noisysense-report";
  doc["version"] = 1;
  doc["dataset"] = report.dataset;
  doc["seed"] = report.seed;
  doc["train_users"] = report.train_users;
  doc["test_users"] = report.test_users;
  doc["train_ratings"] = report.train_ratings;
  doc["train_mean"] = report.train_mean;
  auto& rows = doc["results"] = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"algorithm", r.algorithm},
                    {"protocol", r.protocol},
                    {"mae", number_or_null(r.mae_all)},
                    {"mae_extreme", number_or_null(r.mae_extreme)},
                    {"users_scored", r.users_scored},
                    {"users_skipped", r.users_skipped},
                    {"predictions", r.predictions},
                    {"extreme_predictions", r.extreme_predictions}});
  }
  auto& sig = doc["significance"] = nlohmann::ordered_json::array();
  for (const auto& s : report.significance) {
    sig.push_back({{"protocol", s.protocol},
                   {"subset", s.subset},
                   {"a", s.a},
                   {"b", s.b},
                   {"a_vs_b", s.level.a_vs_b},
                   {"b_vs_a", s.level.b_vs_a}});
  }
  out << doc.dump(2) << '\n';
}

void write_records(std::ostream& out, std::span<const LabeledRecord> records) {
  out << "user\titem\tactual\tpredicted\talgorithm\tprotocol\n";
  for (const auto& r : records) {
    out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", r.user, r.item, r.actual, r.predicted,
                       r.algorithm, r.protocol);
  }
}

std::vector<LabeledRecord> read_records(std::istream& in) {
  std::vector<LabeledRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("user\t", 0) == 0) continue;
    std::istringstream fields(line);
    LabeledRecord r;
    std::string actual, predicted;
    if (!std::getline(fields, r.user, '\t') || !std::getline(fields, r.item, '\t') ||
        !std::getline(fields, actual, '\t') || !std::getline(fields, predicted, '\t') ||
        !std::getline(fields, r.algorithm, '\t') || !std::getline(fields, r.protocol)) {
      throw DataError("records line " + std::to_string(line_no) + ": expected 6 fields");
    }
    auto parse = [&](const std::string& text, double& value) {
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
      if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
        throw DataError("records line " + std::to_string(line_no) + ": bad number '" + text + "'");
      }
    };
    parse(actual, r.actual);
    parse(predicted, r.predicted);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace noisysense
