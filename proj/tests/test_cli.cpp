#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "xml_check.hpp"

namespace fs = std::filesystem;
using metagrad::testing::count_occurrences;
using metagrad::testing::xml_well_formed;

namespace {

struct Run {
  int exit_code = -1;
  std::string output;
};

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("metagrad_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Run run(const std::string& args, const fs::path& dir) {
  const fs::path log = dir / "stdout.txt";
  const std::string cmd = std::string(METAGRAD_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::ostringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  EXPECT_TRUE(in.good()) << "missing " << path;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> csv(const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST(Cli, BoundsTheoremTwoRowsStartAtOne) {
  const auto dir = scratch("bounds2");
  const auto r = run("bounds --theorem 2 --K 5 --alpha 0.25 --H 1 --out " + dir.string(), dir);
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto rows = csv(dir / "bounds_t2.csv");
  ASSERT_EQ(rows.size(), 7u);
  EXPECT_EQ(rows[0][0], "theorem");
  EXPECT_EQ(rows[1][2], "0");
  EXPECT_EQ(rows[1][10], "1");
  EXPECT_EQ(rows[1][11], "1");
  EXPECT_FALSE(fs::exists(dir / "bounds_t3.csv"));
  const std::string svg = slurp(dir / "bounds_t2.svg");
  EXPECT_TRUE(xml_well_formed(svg));
  EXPECT_EQ(count_occurrences(svg, "<polyline"), 3u);
  EXPECT_TRUE(fs::exists(dir / "resolved_config.txt"));
}

TEST(Cli, BoundsTheoremFourEmitsOneToFive) {
  const auto dir = scratch("bounds4");
  const auto r = run("bounds --theorem 4 --M 1 --h 0.1 --out " + dir.string(), dir);
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto rows = csv(dir / "bounds_t4.csv");
  ASSERT_EQ(rows.size(), 6u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][2], std::to_string(i));
}

TEST(Cli, ConstraintViolationsExitOne) {
  const auto dir = scratch("bad");
  auto r = run("bounds --theorem 3 --alpha 2 --H 1 --out " + dir.string(), dir);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("0 < α ≤ 1/H"), std::string::npos) << r.output;
  r = run("bounds --theorem 4 --M 3 --K 5 --out " + dir.string(), dir);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("M ≤ min{L, K−L}"), std::string::npos) << r.output;
  EXPECT_EQ(run("metatrain --L 9 --iters 1 --out " + dir.string(), dir).exit_code, 1);
  EXPECT_EQ(run("cost --bogus 1 --out " + dir.string(), dir).exit_code, 1);
  EXPECT_EQ(run("frobnicate", dir).exit_code, 1);
  EXPECT_EQ(run("metatrain --estimator full,full --iters 1 --out " + dir.string(), dir).exit_code, 1);
}

TEST(Cli, DivergenceExitsTwoAndNamesIteration) {
  const auto dir = scratch("diverge");
  const auto r = run("metatrain --beta 1e306 --iters 5 --out " + dir.string(), dir);
  EXPECT_EQ(r.exit_code, 2) << r.output;
  EXPECT_NE(r.output.find("meta-iteration "), std::string::npos) << r.output;
}

TEST(Cli, ConfigFileLayering) {
  const auto dir = scratch("config");
  {
    std::ofstream cfg(dir / "run.cfg");
    cfg << "# bounds run\nK = 7\nalpha = 0.1\ntheorem = 2\n";
  }
  const auto r = run("bounds --config " + (dir / "run.cfg").string() + " --K 6 --out " + dir.string(), dir);
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_EQ(csv(dir / "bounds_t2.csv").size(), 8u);  // header + L = 0..6
  const std::string resolved = slurp(dir / "resolved_config.txt");
  EXPECT_NE(resolved.find("K=6\n"), std::string::npos) << resolved;
  EXPECT_NE(resolved.find("alpha=0.1\n"), std::string::npos) << resolved;

  {
    std::ofstream cfg(dir / "typo.cfg");
    cfg << "kk=3\n";
  }
  const auto bad = run("bounds --config " + (dir / "typo.cfg").string() + " --out " + dir.string(), dir);
  EXPECT_EQ(bad.exit_code, 1);
  EXPECT_NE(bad.output.find("kk"), std::string::npos) << bad.output;
}

TEST(Cli, ErrorSweepDeterministicAndDominant) {
  const auto a = scratch("sweep_a"), b = scratch("sweep_b");
  const std::string args = "error-sweep --family quadratic --K 5 --batches 100 --seed 4 --out ";
  ASSERT_EQ(run(args + a.string(), a).exit_code, 0);
  ASSERT_EQ(run(args + b.string(), b).exit_code, 0);
  for (const char* f : {"errors_batches.csv", "errors_mean.csv", "errors_mean.svg", "errors_batches.svg"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  const auto mean = csv(a / "errors_mean.csv");
  ASSERT_EQ(mean.size(), 7u);
  for (std::size_t i = 1; i < mean.size(); ++i)
    EXPECT_LE(std::stod(mean[i][3]), std::stod(mean[i][2])) << "L=" << mean[i][0];
  EXPECT_EQ(count_occurrences(slurp(a / "errors_mean.svg"), "<polyline"), 3u);
  EXPECT_TRUE(xml_well_formed(slurp(a / "errors_batches.svg")));
}

TEST(Cli, SingleBatchSweepFilesAgree) {
  const auto dir = scratch("sweep_one");
  ASSERT_EQ(run("error-sweep --batches 1 --out " + dir.string(), dir).exit_code, 0);
  const auto per = csv(dir / "errors_batches.csv");
  const auto avg = csv(dir / "errors_mean.csv");
  ASSERT_EQ(per.size(), avg.size());
  for (std::size_t i = 1; i < per.size(); ++i) {
    EXPECT_EQ(per[i][0], "0");
    EXPECT_EQ(std::vector<std::string>(per[i].begin() + 1, per[i].end()), avg[i]);
  }
}

TEST(Cli, MetatrainFullMatchesBinomAtK) {
  const auto dir = scratch("metatrain");
  const auto r = run("metatrain --family sinusoid --estimator full,binom,fo --L 5 --iters 20 --batch 4 "
                     "--out " + dir.string(), dir);
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto full = csv(dir / "metatrain_full.csv");
  const auto binom = csv(dir / "metatrain_binom.csv");
  ASSERT_EQ(full.size(), 21u);
  ASSERT_EQ(binom.size(), full.size());
  EXPECT_EQ(full[0][0], "iter");
  for (std::size_t i = 1; i < full.size(); ++i)
    EXPECT_NEAR(std::stod(full[i][1]), std::stod(binom[i][1]), 1e-6) << "row " << i;
  EXPECT_TRUE(fs::exists(dir / "metatrain_fo.csv"));
  const std::string combined = slurp(dir / "metatrain_loss.svg");
  EXPECT_TRUE(xml_well_formed(combined));
  EXPECT_EQ(count_occurrences(combined, "<polyline"), 3u);
  EXPECT_EQ(count_occurrences(slurp(dir / "metatrain_binom.svg"), "<polyline"), 1u);
}

TEST(Cli, CostExamples) {
  const auto dir = scratch("cost");
  ASSERT_EQ(run("cost --estimator full,binom --K 5 --out " + dir.string(), dir).exit_code, 0);
  const auto rows = csv(dir / "cost.csv");
  ASSERT_EQ(rows[0], (std::vector<std::string>{"estimator", "K", "L", "hvp_total", "sequential_depth",
                                               "peak_live_vectors"}));
  bool saw_full = false, saw_l2 = false, saw_l0 = false;
  for (const auto& row : rows) {
    if (row[0] == "full") {
      saw_full = true;
      EXPECT_EQ((std::vector<std::string>(row.begin() + 3, row.end())),
                (std::vector<std::string>{"5", "5", "1"}));
    }
    if (row[0] == "binom" && row[2] == "2") {
      saw_l2 = true;
      EXPECT_EQ((std::vector<std::string>(row.begin() + 3, row.end())),
                (std::vector<std::string>{"8", "2", "4"}));
    }
    if (row[0] == "binom" && row[2] == "0") {
      saw_l0 = true;
      EXPECT_EQ((std::vector<std::string>(row.begin() + 3, row.end())),
                (std::vector<std::string>{"0", "0", "0"}));
    }
  }
  EXPECT_TRUE(saw_full && saw_l2 && saw_l0);
}

TEST(Cli, RerunsAreByteIdentical) {
  const auto a = scratch("rerun_a"), b = scratch("rerun_b");
  const std::string args = "metatrain --estimator trunc,binom --L 2 --iters 30 --error-every 5 --seed 9 --out ";
  ASSERT_EQ(run(args + a.string(), a).exit_code, 0);
  ASSERT_EQ(run(args + b.string(), b).exit_code, 0);
  for (const char* f : {"metatrain_trunc.csv", "metatrain_binom.csv"})
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  ASSERT_EQ(run("bounds --out " + a.string(), a).exit_code, 0);
  ASSERT_EQ(run("bounds --out " + b.string(), b).exit_code, 0);
  for (const char* f : {"bounds_t2.csv", "bounds_t3.csv", "bounds_t4.csv"}) EXPECT_EQ(slurp(a / f), slurp(b / f));
}
