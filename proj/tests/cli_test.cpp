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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "noisysense/errors.hpp"

namespace noisysense {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(NOISYSENSE_TEST_TMP) /
           ::testing::UnitTest::GetInstance()->current_test_info()->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    // 40 users with a shared taste signal over 30 items.
    std::mt19937_64 rng(99);
    std::ofstream out(path("ratings.csv"));
    out << "user,item,rating\n";
    for (int u = 0; u < 40; ++u) {
      const int bias = static_cast<int>(rng() % 3) - 1;
      for (int i = 0; i < 30; ++i) {
        if (rng() % 10 < 6) {
          const int r = std::clamp(1 + (i * 7) % 5 + bias + static_cast<int>(rng() % 3) - 1, 1, 5);
          out << "u" << u << ",m" << i << "," << r << "\n";
        }
      }
    }
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "noisysense");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return run_cli(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

TEST_F(CliTest, BadDatasetPathLeavesNoFiles) {
  const int code = run({"evaluate", "--dataset", path("missing.csv"), "--seed", "1", "--report",
                        path("r.txt"), "--report-json", path("r.json"), "--records", path("rec.tsv")});
  EXPECT_EQ(code, kExitData);
  EXPECT_FALSE(err_.str().empty());
  for (const auto& entry : fs::directory_iterator(dir_)) {
    EXPECT_EQ(entry.path().filename(), "ratings.csv");
  }
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({"evaluate", "--dataset", path("ratings.csv")}), kExitUsage);  // no seed
  EXPECT_EQ(run({"evaluate", "--dataset", path("ratings.csv"), "--seed", "1", "--algorithms", "knn"}),
            kExitUsage);
  EXPECT_EQ(run({"evaluate", "--dataset", path("ratings.csv"), "--seed", "1", "--k", "-1"}),
            kExitUsage);
  EXPECT_EQ(run({"bogus"}), kExitUsage);
}

TEST_F(CliTest, EvaluateIsByteDeterministic) {
  std::vector<std::string> args{"evaluate", "--dataset", path("ratings.csv"), "--seed", "7",
                                "--protocols", "AllBut1,Given5"};
  auto with_out = [&](const std::string& tag) {
    auto a = args;
    a.insert(a.end(), {"--report", path(tag + ".txt"), "--report-json", path(tag + ".json"),
                       "--records", path(tag + ".tsv")});
    return a;
  };
  ASSERT_EQ(run(with_out("one")), kExitOk) << err_.str();
  ASSERT_EQ(run(with_out("two")), kExitOk) << err_.str();
  for (const char* ext : {".txt", ".json", ".tsv"}) {
    EXPECT_EQ(slurp(path(std::string("one") + ext)), slurp(path(std::string("two") + ext)));
    EXPECT_FALSE(slurp(path(std::string("one") + ext)).empty());
  }
}

TEST_F(CliTest, FullTableShape) {
  RunConfig config;
  config.dataset = path("ratings.csv");
  config.seed = 3;
  config.protocols = {"AllBut1", "Given10", "Given5", "Given2"};
  std::ostringstream log;
  auto result = cmd_evaluate(config, log);
  EXPECT_EQ(result.report.rows.size(), 16u);
  // Every algorithm scores the same pairs per protocol.
  for (const auto& row : result.report.rows) {
    for (const auto& other : result.report.rows) {
      if (row.protocol == other.protocol) EXPECT_EQ(row.predictions, other.predictions);
    }
  }
  EXPECT_EQ(result.report.significance.size(), 4u * 6u * 2u);
}

TEST_F(CliTest, SweepCellMatchesEvaluate) {
  RunConfig config;
  config.dataset = path("ratings.csv");
  config.seed = 11;
  config.algorithms = {"noisy1"};
  config.protocols = {"Given5"};
  config.u = 10;
  config.i = 5;
  std::ostringstream log;
  const auto eval = cmd_evaluate(config, log);
  const auto sweep = cmd_sweep(config, parse_grid("0:20:5"), parse_grid("0,5"), log);
  ASSERT_EQ(sweep.mae.size(), 5u);
  EXPECT_EQ(sweep.mae[2][1], eval.report.rows.at(0).mae_all);
}

TEST_F(CliTest, SweepWritesGrid) {
  ASSERT_EQ(run({"sweep", "--dataset", path("ratings.csv"), "--seed", "2", "--algorithms", "noisy2",
                 "--protocols", "Given2", "--max-test-users", "4", "--grid", path("grid.tsv")}),
            kExitOk)
      << err_.str();
  std::istringstream grid(slurp(path("grid.tsv")));
  std::string line;
  std::getline(grid, line);
  EXPECT_EQ(line, "U\tI\tmae");
  int cells = 0;
  while (std::getline(grid, line)) cells += !line.empty();
  EXPECT_EQ(cells, 33);
}

TEST(ParseGridTest, Forms) {
  EXPECT_EQ(parse_grid("0:100:10").size(), 11u);
  EXPECT_EQ(parse_grid("0,10,20"), (std::vector<std::size_t>{0, 10, 20}));
  EXPECT_EQ(parse_grid("5"), (std::vector<std::size_t>{5}));
  EXPECT_THROW(parse_grid("0:10:0"), UsageError);
  EXPECT_THROW(parse_grid(""), UsageError);
  EXPECT_THROW(parse_grid("a,b"), UsageError);
}

TEST_F(CliTest, SignificanceSelfAndDirection) {
  ASSERT_EQ(run({"evaluate", "--dataset", path("ratings.csv"), "--seed", "5", "--algorithms",
                 "noisy2,correlation", "--protocols", "Given5", "--records", path("rec.tsv")}),
            kExitOk)
      << err_.str();
  ASSERT_EQ(run({"significance", "--records-a", path("rec.tsv"), "--records-b", path("rec.tsv"),
                 "--algorithm-a", "noisy2", "--algorithm-b", "noisy2", "--seed", "5", "--out",
                 path("self.tsv")}),
            kExitOk)
      << err_.str();
  const std::string self = slurp(path("self.tsv"));
  EXPECT_NE(self.find("\t1.0000\t1.0000"), std::string::npos) << self;

  std::ifstream in(path("rec.tsv"));
  const auto records = read_records(in);
  SignificanceQuery q{"noisy2", "correlation", "", std::nullopt, 5};
  for (const auto& row : cmd_significance(records, records, q)) {
    EXPECT_GE(row.level.a_vs_b + row.level.b_vs_a, 1.0);
  }

  // Mismatched record sets are a hard error.
  auto shorter = records;
  shorter.pop_back();
  EXPECT_THROW(cmd_significance(records, shorter, q), DataError);
}

TEST_F(CliTest, SignificanceDetectsUniformlyBetterRecords) {
  std::vector<LabeledRecord> good, bad;
  for (int u = 0; u < 30; ++u) {
    for (int i = 0; i < 8; ++i) {
      const std::string user = "u" + std::to_string(u), item = "m" + std::to_string(i);
      good.push_back({user, item, 4, 3.8, "good", "AllBut1"});
      bad.push_back({user, item, 4, 2.9, "bad", "AllBut1"});
    }
  }
  auto rows = cmd_significance(good, bad, {"", "", "", std::nullopt, 1});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_LE(rows[0].level.a_vs_b, 0.001);
  EXPECT_DOUBLE_EQ(rows[0].level.b_vs_a, 1.0);
}

TEST_F(CliTest, ConfigFileWithOverrides) {
  {
    std::ofstream cfg(path("run.cfg"));
    cfg << "# sample run\n"
        << "dataset = " << path("ratings.csv") << "\n"
        << "seed = 4\n"
        << "algorithms = noisy2\n"
        << "protocols = Given2\n"
        << "max_test_users = 3\n";
  }
  ASSERT_EQ(run({"evaluate", "--config", path("run.cfg"), "--report-json", path("a.json")}), kExitOk)
      << err_.str();
  ASSERT_EQ(run({"evaluate", "--config", path("run.cfg"), "--algorithms", "pd", "--report-json",
                 path("b.json")}),
            kExitOk)
      << err_.str();
  EXPECT_NE(slurp(path("a.json")).find("\"noisy2\""), std::string::npos);
  EXPECT_EQ(slurp(path("b.json")).find("\"noisy2\""), std::string::npos);
  EXPECT_NE(slurp(path("b.json")).find("\"pd\""), std::string::npos);
}

TEST_F(CliTest, IngestWritesTriplesAndMaps) {
  ASSERT_EQ(run({"ingest", "--dataset", path("ratings.csv"), "--out", path("t.tsv"), "--user-map",
                 path("users.tsv"), "--item-map", path("items.tsv")}),
            kExitOk)
      << err_.str();
  std::ifstream users(path("users.tsv"));
  const IdMap map = read_id_map(users);
  EXPECT_EQ(map.size(), 40u);
  EXPECT_EQ(map.external(0), "u0");
  EXPECT_FALSE(slurp(path("t.tsv")).empty());
}

}  // namespace
}  // namespace noisysense
