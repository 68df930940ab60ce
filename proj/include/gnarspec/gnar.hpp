#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gnarspec/graph.hpp"

namespace gnarspec {

// Lag order p and per-lag stage depths s_1..s_p. s_k = 0 means lag k carries
// no network terms; on a single-node network only s_k = 0 is legal and the
// model collapses to a univariate AR(p).
struct GnarOrder {
  int p = 1;
  std::vector<int> s;

  // p + sum_k s_k, the regression column count
  int n_coefficients() const;
};

// Model coefficients. beta[k-1] holds (beta_{k,1}..beta_{k,s_k}).
// Innovations are N(0, V) with V = sigma2 * I unless an explicit matrix is
// set via vmat (then sigma2 is ignored).
struct GnarParams {
  GnarOrder order;
  Eigen::VectorXd alpha;
  std::vector<Eigen::VectorXd> beta;
  double sigma2 = 1.0;
  Eigen::MatrixXd vmat;  // 0x0 => sigma2 * I

  Eigen::MatrixXd innovation_cov(int d) const;
  void validate() const;  // shape consistency; throws InvalidArgument

  static GnarParams read_json(const std::string& path);
  void write_json(const std::string& path) const;
};

// T x d multivariate series, row t = X_t. CSV form: a header line of node
// names followed by one row per time step.
struct SeriesPanel {
  Eigen::MatrixXd x;
  std::vector<std::string> names;

  long length() const { return x.rows(); }
  int width() const { return static_cast<int>(x.cols()); }

  static SeriesPanel from_matrix(Eigen::MatrixXd m);
  static SeriesPanel read_csv(const std::string& path);
  void write_csv(const std::string& path) const;
};

// Z^r = (W o A_r) x: stage-r neighbourhood averages of one cross-section.
Eigen::VectorXd neighbourhood_average(const Eigen::VectorXd& x,
                                      const Eigen::MatrixXd& w,
                                      const StageStructure& st, int r);

// Phi_k = alpha_k I + sum_r beta_{kr} (W o A_r), k = 1..p. Stages deeper
// than the network (r > r_max) have empty neighbour sets: A_r = 0, so those
// beta terms contribute nothing.
std::vector<Eigen::MatrixXd> var_coefficients(const GnarParams& params,
                                              const StageStructure& st,
                                              const Eigen::MatrixXd& w);

// Sufficient stationarity condition: sum_k (|alpha_k| + sum_r |beta_kr|) < 1,
// strictly.
bool is_stationary(const GnarParams& params);

// Simulates the model recursion directly (per-lag autoregressive plus
// neighbourhood-average terms), zero initial state, discarding burn_in steps.
// A nonstationary parameter set gets a warning on stderr, not an error.
SeriesPanel simulate(const GnarParams& params, const StageStructure& st,
                     const Eigen::MatrixXd& w, long T, long burn_in,
                     std::uint64_t seed);

// Generic VAR(p) simulator with the same innovation stream layout as
// simulate(): one d-block of gaussians per step, premultiplied by the
// covariance square root.
SeriesPanel simulate_var(const std::vector<Eigen::MatrixXd>& phi,
                         const Eigen::MatrixXd& innovation_cov, long T,
                         long burn_in, std::uint64_t seed);

// Stacked regression for OLS: n = T - p time blocks of d equations, one
// column per coefficient, ordered (alpha_1, beta_11..beta_1s1, alpha_2, ...).
struct DesignMatrices {
  Eigen::MatrixXd x;                      // (n d) x q
  Eigen::VectorXd y;                      // (n d)
  std::vector<std::string> column_names;  // "alpha_1", "beta_1_2", ...
  long n = 0;                             // usable time points
};

DesignMatrices build_design(const SeriesPanel& panel, const StageStructure& st,
                            const Eigen::MatrixXd& w, const GnarOrder& order);

struct GnarFit {
  GnarParams params;            // fitted coefficients, vmat = residual cov
  Eigen::MatrixXd residuals;    // n x d
  Eigen::MatrixXd residual_cov; // divisor n
  double bic = 0.0;
};

// Least squares via column-pivoted QR. Regressor columns that are
// identically zero (stages deeper than the network reaches) are excluded
// and their coefficients reported as zero; rank deficiency among the
// remaining columns is an error naming the dependent ones.
GnarFit fit_ols(const SeriesPanel& panel, const StageStructure& st,
                const Eigen::MatrixXd& w, const GnarOrder& order);

// V-hat = (1/n) sum_t u_t u_t^T
Eigen::MatrixXd residual_covariance(const Eigen::MatrixXd& residuals);

// BIC(M) = log det V-hat(M) + q(M) log(n d) / n, minimized over the full
// grid p in 1..p_max, s_k in 0..min(s_max, r_max). The q coefficients are
// shared across the n d stacked scalar observations, hence the log(n d)
// penalty per coefficient on the -2ll/n scale. Ties prefer smaller q, then
// smaller p, then lexicographically smaller s.
struct OrderCandidate {
  GnarOrder order;
  double bic;  // NaN when the candidate failed to fit
};

struct OrderSelection {
  GnarOrder order;
  double bic;
  std::vector<OrderCandidate> grid;
};

OrderSelection select_order_bic(const SeriesPanel& panel,
                                const StageStructure& st,
                                const Eigen::MatrixXd& w, int p_max,
                                int s_max);

}  // namespace gnarspec
