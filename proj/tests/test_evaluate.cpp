#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "specseg/evaluate.hpp"
#include "specseg/io.hpp"

using namespace specseg;

TEST(Rho, Examples) {
  EXPECT_EQ(rho({1020, 1540}, {1024, 1536}, 2048), 4.0);
  EXPECT_EQ(rho({1024, 1536}, {1024, 1536}, 2048), 0.0);
  EXPECT_EQ(rho({1024}, {1024, 1536}, 2048), 512.0);
  EXPECT_EQ(rho({1024, 1536}, {1024}, 2048), 0.0);
}

TEST(Rho, EmptySetConventions) {
  EXPECT_EQ(rho({}, {}, 2048), 0.0);
  EXPECT_EQ(rho({}, {5}, 2048), 2048.0);
  EXPECT_EQ(rho({5}, {}, 2048), 0.0);
}

TEST(Rho, OneSidedProperties) {
  const std::vector<int> a{3, 90, 400}, b{10, 95};
  std::vector<int> u = a;
  u.insert(u.end(), b.begin(), b.end());
  EXPECT_EQ(rho(u, b, 500), 0.0);
  EXPECT_EQ(rho(b, b, 500), 0.0);
  EXPECT_GT(rho(b, a, 500), 0.0);
}

TEST(Replications, SingleRepEqualsSingleRun) {
  DetectorConfig cfg;
  cfg.solver = Solver::DpKnownK;
  ReplicationOptions opt;
  opt.reps = 1;
  opt.seed0 = 21;
  opt.known_k = 2;
  const auto spec = case_spec(3);
  const auto s = run_replications(spec, cfg, opt);
  const auto sim = simulate_piecewise(spec, 21);
  const auto d = detect(center_series(sim.values), cfg, 2);
  const auto cps = d.segmentation.change_points();
  EXPECT_EQ(s.reps, 1);
  EXPECT_EQ(s.completed, 1);
  EXPECT_EQ(s.mean_rho_est_to_true_raw, rho(cps, sim.change_points, 1800));
  EXPECT_EQ(s.mean_rho_true_to_est_raw, rho(sim.change_points, cps, 1800));
  EXPECT_EQ(s.mean_rho_est_to_true, s.mean_rho_est_to_true_raw / 1800);
  EXPECT_EQ(s.k_accuracy, 1.0);
  EXPECT_EQ(s.mean_k_hat, 2.0);
  EXPECT_FALSE(s.c);
}

TEST(Replications, DeterministicAndJobIndependent) {
  DetectorConfig cfg;
  cfg.solver = Solver::BicExhaustive;
  ReplicationOptions opt;
  opt.reps = 3;
  opt.seed0 = 5;
  const auto a = run_detections(case_spec(4), cfg, opt);
  opt.jobs = 3;
  const auto b = run_detections(case_spec(4), cfg, opt);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].estimate, b[i].estimate);
    ASSERT_EQ(a[i].layer_objectives.size(), b[i].layer_objectives.size());
    for (std::size_t L = 0; L < a[i].layer_objectives.size(); ++L) {
      const double x = a[i].layer_objectives[L], y = b[i].layer_objectives[L];
      EXPECT_TRUE(x == y || (std::isnan(x) && std::isnan(y)));
    }
    EXPECT_EQ(a[i].seed, 5 + i);
  }
  EXPECT_EQ(summary_row(summarize(a, 1800, "x", 0.73)), summary_row(summarize(b, 1800, "x", 0.73)));
}

TEST(Replications, ReselectAtConfiguredExponentReproducesRun) {
  DetectorConfig cfg;
  cfg.solver = Solver::BicExhaustive;
  ReplicationOptions opt;
  opt.reps = 2;
  opt.seed0 = 9;
  const auto recs = run_detections(case_spec(2), cfg, opt);
  for (const auto& r : recs) {
    const auto again = reselect(r, cfg.penalty_exponent, 1800);
    EXPECT_EQ(again.k_hat, r.k_hat);
    EXPECT_EQ(again.estimate, r.estimate);
  }
  const auto sweep = penalty_sweep(recs, 1800, {0.1, 0.73, 2.0});
  ASSERT_EQ(sweep.size(), 3u);
  EXPECT_GE(sweep[0].mean_k_hat, sweep[1].mean_k_hat);
  EXPECT_GE(sweep[1].mean_k_hat, sweep[2].mean_k_hat);
  EXPECT_EQ(sweep[2].mean_k_hat, 0.0);
}

TEST(Replications, FailuresAreCappedAndRecorded) {
  // An ml the series cannot host makes every replicate fail.
  DetectorConfig cfg;
  cfg.ml = 1000;
  cfg.solver = Solver::DpKnownK;
  ReplicationOptions opt;
  opt.reps = 2;
  opt.known_k = 2;
  try {
    run_detections(case_spec(3), cfg, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateData);
  }
  opt.max_failure_fraction = 1.0;
  const auto recs = run_detections(case_spec(3), cfg, opt);
  EXPECT_TRUE(recs[0].failed);
  EXPECT_FALSE(recs[0].error.empty());
  const auto s = summarize(recs, 1800);
  EXPECT_EQ(s.failed, 2);
  EXPECT_EQ(s.completed, 0);
  EXPECT_TRUE(std::isnan(s.mean_k_hat));
}

TEST(SummaryAggregation, MeansOverCompletedOnly) {
  ReplicateRecord ok;
  ok.truth = {10, 20};
  ok.estimate = {12, 20};
  ok.k_hat = 2;
  fill_metrics(ok, 100);
  ReplicateRecord miss = ok;
  miss.estimate = {15};
  miss.k_hat = 1;
  fill_metrics(miss, 100);
  ReplicateRecord bad;
  bad.failed = true;
  const auto s = summarize({ok, miss, bad}, 100);
  EXPECT_EQ(s.completed, 2);
  EXPECT_EQ(s.failed, 1);
  EXPECT_DOUBLE_EQ(s.mean_rho_est_to_true_raw, (2.0 + 5.0) / 2);
  EXPECT_DOUBLE_EQ(s.mean_rho_true_to_est_raw, (2.0 + 5.0) / 2);
  EXPECT_DOUBLE_EQ(s.k_accuracy, 0.5);
  EXPECT_DOUBLE_EQ(s.mean_k_hat, 1.5);
}

TEST(TableReport, CellFormat) { EXPECT_EQ(rho_cell(22.99, 2048), "22.99 (0.011)"); }

TEST(TableReport, EmptyIsHeaderOnly) {
  const auto t = table_report({});
  EXPECT_EQ(std::count(t.begin(), t.end(), '\n'), 1);
  EXPECT_EQ(summary_rows({}), summary_header() + "\n");
}

TEST(TableReport, RowRoundTrip) {
  ReplicationSummary s;
  s.label = "case1";
  s.n = 2048;
  s.reps = 200;
  s.completed = 199;
  s.failed = 1;
  s.c = 0.73;
  s.mean_rho_est_to_true_raw = 22.99;
  s.mean_rho_true_to_est_raw = 1.0 / 3.0;
  s.mean_rho_est_to_true = 22.99 / 2048;
  s.mean_rho_true_to_est = 1.0 / 3.0 / 2048;
  s.k_accuracy = 0.9883;
  s.mean_k_hat = 2.015;
  const auto back = parse_summary_row(summary_row(s));
  EXPECT_EQ(back.label, s.label);
  EXPECT_EQ(back.n, s.n);
  EXPECT_EQ(back.reps, s.reps);
  EXPECT_EQ(back.completed, s.completed);
  EXPECT_EQ(back.failed, s.failed);
  EXPECT_EQ(back.c, s.c);
  EXPECT_EQ(back.mean_rho_est_to_true_raw, s.mean_rho_est_to_true_raw);
  EXPECT_EQ(back.mean_rho_true_to_est_raw, s.mean_rho_true_to_est_raw);
  EXPECT_EQ(back.mean_rho_est_to_true, s.mean_rho_est_to_true);
  EXPECT_EQ(back.mean_rho_true_to_est, s.mean_rho_true_to_est);
  EXPECT_EQ(back.k_accuracy, s.k_accuracy);
  EXPECT_EQ(back.mean_k_hat, s.mean_k_hat);
  s.c.reset();
  EXPECT_FALSE(parse_summary_row(summary_row(s)).c);
  EXPECT_THROW(parse_summary_row("a\tb"), Error);
}

TEST(TableReport, OneRowPerSummary) {
  ReplicationSummary s;
  s.label = "x";
  s.n = 100;
  const auto t = table_report({s, s});
  EXPECT_EQ(std::count(t.begin(), t.end(), '\n'), 3);
}

TEST(SweepValues, InclusiveGrid) {
  const auto v = sweep_values(0.1, 0.9, 0.05);
  ASSERT_EQ(v.size(), 17u);
  EXPECT_NEAR(v.back(), 0.9, 1e-12);
  EXPECT_THROW(sweep_values(1, 0, 0.1), Error);
  EXPECT_THROW(sweep_values(0, 1, 0), Error);
}

TEST(Csv, HeaderBlankLinesAndErrors) {
  std::istringstream ok("value\n1.5\n\n-2e-3\n 4 \n");
  EXPECT_EQ(parse_column_csv(ok), (std::vector<double>{1.5, -2e-3, 4}));
  std::istringstream no_header("3\n4\n");
  EXPECT_EQ(parse_column_csv(no_header), (std::vector<double>{3, 4}));
  std::istringstream bad("x\n1\nfoo\n");
  try {
    parse_column_csv(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos);
  }
  std::istringstream two("1,2\n");
  EXPECT_THROW(parse_column_csv(two), Error);
  std::istringstream empty("header\n");
  EXPECT_THROW(parse_column_csv(empty), Error);
  std::istringstream inf("1\ninf\n");
  EXPECT_THROW(parse_column_csv(inf), Error);
}

TEST(Csv, FormatRoundTrip) {
  const std::vector<double> v{0.1, -3.25, 1e-17, 12345.678901234567};
  std::istringstream in(format_column_csv(v));
  EXPECT_EQ(parse_column_csv(in), v);
}
