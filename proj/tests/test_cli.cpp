#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "json.hpp"
#include "specseg/io.hpp"
#include "specseg/simulate.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

fs::path workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("specseg_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(SPECSEG_CLI) + " " + args + " 2>" + (workdir() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

std::vector<std::vector<double>> read_tsv(const std::string& file) {
  std::ifstream in(file);
  std::string line;
  std::getline(in, line);
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::vector<double> r;
    std::string cell;
    while (std::getline(ss, cell, '\t')) r.push_back(std::stod(cell));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST(Cli, SimulateCaseOne) {
  ASSERT_EQ(run("simulate --case 1 --seed 7 -o " + path("c1.csv")), 0);
  const auto values = specseg::read_column_csv(path("c1.csv"));
  EXPECT_EQ(values.size(), 2048u);
  const auto truth = json::parse(slurp(path("c1.csv.truth.json")));
  EXPECT_EQ(truth["change_points"], json::array({1024, 1536}));
  ASSERT_EQ(run("simulate --case 1 --seed 7 -o " + path("c1b.csv")), 0);
  EXPECT_EQ(slurp(path("c1.csv")), slurp(path("c1b.csv")));
}

TEST(Cli, SimulateSpecFileWithOneSegment) {
  std::ofstream(path("one.spec")) << "segment length=800 ar=0.5\n";
  ASSERT_EQ(run("simulate --spec " + path("one.spec") + " --seed 1 -o " + path("one.csv")), 0);
  const auto truth = json::parse(slurp(path("one.csv.truth.json")));
  EXPECT_TRUE(truth["change_points"].empty());
  EXPECT_EQ(run("simulate --case 9 -o " + path("x.csv")), 3);
  std::ofstream(path("bad.spec")) << "segment ar=0.5\n";
  EXPECT_EQ(run("simulate --spec " + path("bad.spec") + " -o " + path("x.csv")), 2);
}

TEST(Cli, DetectCaseOneGolden) {
  ASSERT_EQ(run("simulate --case 1 --seed 7 -o " + path("g.csv")), 0);
  ASSERT_EQ(run("detect " + path("g.csv") + " --ml 350 --kmax 6 --baseline pooled --alpha 0.3333 -o " +
                path("g.json") + " --spectra " + path("g.tsv")),
            0);
  const auto doc = json::parse(slurp(path("g.json")));
  EXPECT_EQ(doc["k_hat"], 2);
  ASSERT_EQ(doc["change_points"].size(), 2u);
  EXPECT_LE(std::abs(doc["change_points"][0].get<int>() - 1024), 150);
  EXPECT_LE(std::abs(doc["change_points"][1].get<int>() - 1536), 150);
  EXPECT_DOUBLE_EQ(doc["fractions"][0].get<double>(), doc["change_points"][0].get<int>() / 2048.0);
  EXPECT_EQ(doc["segments"].size(), 3u);
  EXPECT_EQ(doc["segments"][0]["spectrum"]["file"], path("g.tsv"));
  EXPECT_EQ(doc["config"]["ml"], 350);
  EXPECT_FALSE(doc.contains("runtime_seconds"));
  EXPECT_EQ(read_tsv(path("g.tsv")).front().size(), 4u);

  // Byte-identical on rerun.
  ASSERT_EQ(run("detect " + path("g.csv") + " --ml 350 --kmax 6 --baseline pooled --alpha 0.3333 -o " +
                path("g2.json") + " --spectra " + path("g.tsv")),
            0);
  EXPECT_EQ(slurp(path("g.json")), slurp(path("g2.json")));
}

TEST(Cli, DetectSolversAndBand) {
  ASSERT_EQ(run("simulate --case 3 --seed 2 -o " + path("c3.csv")), 0);
  for (const char* solver : {"bic", "pelt", "screen"}) {
    ASSERT_EQ(run("detect " + path("c3.csv") + " --solver " + solver + " -o " + path("s.json")), 0) << solver;
  }
  ASSERT_EQ(run("detect " + path("c3.csv") + " --solver dp --known-k 2 --band 0:3.1 --timing -o " +
                path("dp.json")),
            0);
  const auto doc = json::parse(slurp(path("dp.json")));
  EXPECT_EQ(doc["k_hat"], 2);
  EXPECT_TRUE(doc.contains("runtime_seconds"));
  EXPECT_EQ(doc["penalty"], nullptr);
}

TEST(Cli, SearchUnitGrid) {
  std::ofstream(path("long.spec")) << "segment length=6000 ar=0.5\nsegment length=6176 ar=-0.5\n"
                                   << "segment length=6000 ma=1,0.9\n";
  ASSERT_EQ(run("simulate --spec " + path("long.spec") + " --seed 3 -o " + path("long.csv")), 0);
  ASSERT_EQ(specseg::read_column_csv(path("long.csv")).size(), 18176u);
  ASSERT_EQ(run("detect " + path("long.csv") + " --ml 256 --n-su 64 --screen-window 1024 -o " + path("long.json")), 0);
  const auto doc = json::parse(slurp(path("long.json")));
  for (const auto& cp : doc["change_points"]) EXPECT_EQ(cp.get<int>() % 64, 0);
  EXPECT_GE(doc["change_points"].size(), 1u);
}

TEST(Cli, ExitCodes) {
  {
    std::ofstream out(path("const.csv"));
    out << "x\n";
    for (int i = 0; i < 1000; ++i) out << "3.0\n";
  }
  EXPECT_EQ(run("detect " + path("const.csv")), 4);
  {
    std::ofstream out(path("bad.csv"));
    out << "x\n1\n2\nnope\n";
  }
  EXPECT_EQ(run("detect " + path("bad.csv")), 2);
  EXPECT_NE(slurp(workdir() / "stderr.txt").find("row 4"), std::string::npos);
  {
    std::ofstream out(path("short.csv"));
    for (int i = 0; i < 100; ++i) out << (i % 3) << "\n";
  }
  EXPECT_EQ(run("detect " + path("short.csv")), 3);
  EXPECT_EQ(run("detect " + path("const.csv") + " --alpha 0.7"), 3);
  EXPECT_EQ(run("detect " + path("const.csv") + " --solver nope"), 3);
  EXPECT_EQ(run("detect " + path("const.csv") + " --ml notanumber"), 2);
  EXPECT_EQ(run("detect"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
}

TEST(Cli, RowsTrim) {
  ASSERT_EQ(run("simulate --case 2 --seed 4 -o " + path("c2.csv")), 0);
  ASSERT_EQ(run("detect " + path("c2.csv") + " --rows 0:1100 --ml 300 --kmax 2 -o " + path("trim.json")), 0);
  EXPECT_EQ(json::parse(slurp(path("trim.json")))["n"], 1100);
  EXPECT_EQ(run("detect " + path("c2.csv") + " --rows 5:2"), 2);
}

TEST(Cli, SpectrumWhiteNoiseIsFlat) {
  const auto x = specseg::draw_noise(specseg::NoiseKind::Gaussian, 4096, 8);
  std::ofstream(path("wn.csv")) << specseg::format_column_csv(x);
  ASSERT_EQ(run("spectrum " + path("wn.csv") + " -o " + path("wn.tsv")), 0);
  const auto rows = read_tsv(path("wn.tsv"));
  ASSERT_EQ(rows.size(), 512u);
  // Single estimate (relative sd ~14% per point): check band averages.
  const double flat = 1.0 / (2 * std::numbers::pi);
  double mean = 0.0;
  for (const auto& r : rows) mean += r[1] / rows.size();
  EXPECT_NEAR(mean, flat, 1e-9);
  double low = 0.0, high = 0.0;
  for (const auto& r : rows) (std::abs(r[0]) < std::numbers::pi / 2 ? low : high) += r[1] / 256;
  EXPECT_NEAR(low, flat, 0.2 * flat);
  EXPECT_NEAR(high, flat, 0.2 * flat);
}

TEST(Cli, SpectrumColumnsIntegrateToOne) {
  ASSERT_EQ(run("simulate --case 1 --seed 3 -o " + path("sp.csv")), 0);
  ASSERT_EQ(run("spectrum " + path("sp.csv") + " --boundaries 1024 -o " + path("sp.tsv")), 0);
  const auto rows = read_tsv(path("sp.tsv"));
  ASSERT_EQ(rows.front().size(), 3u);
  const double w = 2 * std::numbers::pi / 512;
  for (int col = 1; col <= 2; ++col) {
    double s = 0.0;
    for (const auto& r : rows) s += w * r[col];
    EXPECT_NEAR(s, 1.0, 1e-6);
  }
}

TEST(Cli, SpectrumCaseOnePeaks) {
  ASSERT_EQ(run("simulate --case 1 --seed 5 -o " + path("pk.csv")), 0);
  ASSERT_EQ(run("spectrum " + path("pk.csv") + " --boundaries 1024,1536 -o " + path("pk.tsv")), 0);
  const auto rows = read_tsv(path("pk.tsv"));
  std::size_t arg = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i][1] > rows[arg][1]) arg = i;
  }
  EXPECT_EQ(rows[arg][0], 0.0);
  EXPECT_EQ(run("spectrum " + path("pk.csv") + " --boundaries 1536,1024"), 3);
}

TEST(Cli, BenchRowsAndSweep) {
  ASSERT_EQ(run("bench --case 3 --reps 1 --solver bic --jobs 1 -o " + path("b.tsv") + " > " + path("b.txt")), 0);
  const auto table = slurp(path("b.txt"));
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 2);
  const auto rows = slurp(path("b.tsv"));
  EXPECT_EQ(std::count(rows.begin(), rows.end(), '\n'), 2);
  ASSERT_EQ(run("bench --case 3 --reps 2 --solver bic --jobs 1 --sweep-c 0.1:0.9:0.4 -o " + path("sw.tsv") +
                " > /dev/null"),
            0);
  const auto sweep = slurp(path("sw.tsv"));
  EXPECT_EQ(std::count(sweep.begin(), sweep.end(), '\n'), 4);
  EXPECT_EQ(run("bench --case 3 --reps 1 --known-k 2 --sweep-c 0.1:0.9:0.4 > /dev/null"), 3);
}
