#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gnarspec/gnar.hpp"
#include "gnarspec/graph.hpp"

namespace gnarspec {

// Daily OHLC prices for a set of nodes on a shared date index. CSV columns:
// date, node, open, high, low, close. Every node must cover the same dates;
// rows may arrive in any order. Nodes keep first-appearance order, dates are
// sorted lexicographically (ISO dates sort correctly).
struct OhlcPanel {
  std::vector<std::string> dates;
  std::vector<std::string> nodes;
  Eigen::MatrixXd open, high, low, close;  // T x d

  long length() const { return open.rows(); }
  int width() const { return static_cast<int>(open.cols()); }

  // Validates low <= min(open, close) and max(open, close) <= high on every
  // row, naming the offending (date, node) otherwise.
  static OhlcPanel read_csv(const std::string& path);
};

// Range-based daily variance proxy per node. Values can be slightly negative
// in rare price configurations; consumers that take logs must floor first
// (see log_range_volatility).
SeriesPanel garman_klass(const OhlcPanel& ohlc);

// log of the variance proxy, floored at 1e-12 before the log. This is the
// series the connectedness pipeline models.
SeriesPanel log_range_volatility(const OhlcPanel& ohlc);

// Sparse VAR by per-equation lasso: predictors standardized, lambda chosen
// per equation from a 50-point log grid (lambda_max down to 1e-3 lambda_max)
// by contiguous-block K-fold cross-validation, lag order by BIC on the
// penalized fit's residual covariance. Deterministic: folds are contiguous
// time blocks, no randomness. Series are demeaned internally; coefficients
// are returned on the original scale.
struct LassoVarFit {
  int p = 0;
  std::vector<Eigen::MatrixXd> pi;  // Pi_1..Pi_p
  Eigen::MatrixXd vhat;             // residual covariance, divisor n
  Eigen::VectorXd mean;             // per-node means removed before fitting
  Eigen::MatrixXd residuals;        // n x d
  std::vector<double> lambda;       // chosen penalty per equation
  double bic = 0.0;
};

struct LassoVarOptions {
  int p = -1;        // fixed lag order; -1 selects by BIC up to p_max
  int p_max = 5;
  int folds = 10;
  int n_lambda = 50;
};

LassoVarFit lasso_var(const SeriesPanel& panel, const LassoVarOptions& opt);

// MA coefficients of the fitted VAR: B_0 = I,
// B_h = sum_{j=1..min(h,p)} B_{h-j} Pi_j. Returns B_0..B_H.
std::vector<Eigen::MatrixXd> ma_coefficients(
    const std::vector<Eigen::MatrixXd>& pi, int H);

// Row-normalized generalized forecast-error variance decomposition at
// horizon H. The sum runs over h = 1..H; include_h0 extends it to h = 0..H
// (the conventional start, needed for degenerate cases like Pi = 0). A zero
// forecast-error variance denominator is an error.
Eigen::MatrixXd gfevd(const std::vector<Eigen::MatrixXd>& pi,
                      const Eigen::MatrixXd& vhat, int H,
                      bool include_h0 = false);

// tau* = the largest threshold keeping the pairwise graph connected, found by
// bisection over the candidate grid (default: the sorted distinct values of
// max(psi_ij, psi_ji), i < j). Edge rule: max(psi_ij, psi_ji) >= tau; edge
// weight (psi_ij + psi_ji) / 2.
struct GfevdNetwork {
  double tau_star = 0.0;
  std::vector<Network::Edge> edges;  // 1-based node indices into psi

  Network to_network(int d) const;
};

GfevdNetwork build_network(const Eigen::MatrixXd& psi,
                           const std::vector<double>* candidate_grid = nullptr);

// End-to-end chain: OHLC -> log volatility -> lasso VAR -> GFEVD -> network.
struct GfevdResult {
  std::vector<std::string> nodes;
  LassoVarFit fit;
  Eigen::MatrixXd psi;
  GfevdNetwork network;

  void write_json(const std::string& path) const;
  void write_edge_list(const std::string& path) const;
};

GfevdResult run_gfevd(const OhlcPanel& ohlc, int horizon,
                      const LassoVarOptions& opt, bool include_h0 = false);

}  // namespace gnarspec
