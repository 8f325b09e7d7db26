#pragma once

#include <optional>
#include <vector>

#include "specseg/solvers.hpp"

namespace specseg {

struct Detection {
  Segmentation segmentation;
  int k_hat = 0;
  std::optional<PenaltySchedule> penalty;
  // Filled by BIC-type runs: best objective and segmentation per L = 0..k_max.
  std::vector<double> layer_objectives;
  std::vector<std::optional<Segmentation>> layers;
  std::size_t candidates = 0;
  bool pruning = false;
};

// Runs the configured solver on an oracle built for the same series. With
// known_k the change-point count is fixed (DP over the solver's candidate
// set); otherwise K is chosen by BIC (or PELT) with the calibrated penalty.
inline Detection detect(const ScoreOracle& oracle, const DetectorConfig& cfg,
                        std::optional<int> known_k = std::nullopt) {
  const int n = oracle.n();
  validate_config(cfg, n);
  Detection out;

  CandidateSet cands;
  if (cfg.solver == Solver::Screening) {
    cands = screen(oracle, std::min(cfg.effective_screen_window(), n), cfg.n_su, n, cfg.ml,
                   cfg.alpha);
  } else {
    cands = grid_candidates(n, cfg.ml, cfg.n_su);
  }
  out.candidates = cands.size();

  if (cfg.solver == Solver::DpKnownK && !known_k) {
    throw Error(ErrorCode::InvalidConfig, "the dp solver needs a known change-point count");
  }
  if (cfg.solver == Solver::Pelt && known_k) {
    throw Error(ErrorCode::InvalidConfig, "pelt estimates the change-point count itself");
  }

  if (known_k) {
    out.segmentation = dp_solve(oracle, *known_k, cands, n, cfg.ml);
    out.k_hat = out.segmentation.k();
    return out;
  }

  out.penalty = calibrate_penalty(oracle, cfg.ml, cfg.penalty_exponent, n);
  if (cfg.solver == Solver::Pelt) {
    auto res = pelt_solve(oracle, cands, *out.penalty, n, cfg.ml, cfg.pelt_pruning);
    out.segmentation = std::move(res.segmentation);
    out.k_hat = res.k_hat;
    out.pruning = res.pruning;
    return out;
  }
  auto sel = bic_select(oracle, cands, cfg.k_max, *out.penalty, n, cfg.ml);
  out.segmentation = std::move(sel.segmentation);
  out.k_hat = sel.k_hat;
  out.layer_objectives = std::move(sel.layer_objectives);
  out.layers = std::move(sel.layers);
  return out;
}

inline Detection detect(const Series& series, const DetectorConfig& cfg,
                        std::optional<int> known_k = std::nullopt) {
  validate_config(cfg, series.n());
  const ScoreOracle oracle(series, make_grid(cfg.grid_size), cfg.baseline, cfg.alpha);
  return detect(oracle, cfg, known_k);
}

inline Detection detect(const Series& series, const DetectorConfig& cfg,
                        std::optional<int> known_k, const FrequencyGrid& grid) {
  validate_config(cfg, series.n());
  const ScoreOracle oracle(series, grid, cfg.baseline, cfg.alpha);
  return detect(oracle, cfg, known_k);
}

}  // namespace specseg
