#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "gnarspec/gnar.hpp"
#include "gnarspec/graph.hpp"
#include "gnarspec/spectra.hpp"

namespace gnarspec {

// Smoothing kernel on offsets k = -m..m. Weights are symmetric and satisfy
// (1/(2m+1)) sum_k w(k) = 1, so the flat Daniell window is w == 1.
struct SmoothingSpec {
  int m = 0;
  std::vector<double> weights;  // size 2m+1, index k+m

  static SmoothingSpec daniell(int m);
  // Daniell with m = floor(sqrt(T)), the default bandwidth everywhere.
  static SmoothingSpec default_for(long T);
  void validate() const;
};

// Discrete Fourier transform of a panel over the full frequency circle:
// j[l] = T^{-1/2} sum_{t=1..T} X_t e^{-i 2 pi t l / T}, l = 0..T-1.
struct PanelDft {
  long T = 0;
  std::vector<Eigen::VectorXcd> j;
};

PanelDft dft(const SeriesPanel& panel);

// Periodogram matrices I(l/T) on the full circle l = 0..T-1. Entries at
// l > T/2 are conjugates of their mirror images (real data).
struct PeriodogramCircle {
  long T = 0;
  std::vector<Eigen::MatrixXcd> i;

  // restriction to the estimation grid l = 1..floor(T/2)-1
  SpectralField field() const;
};

PeriodogramCircle raw_periodogram(const PanelDft& dft);

// Moving-average smoothing over the frequency circle with mod-T index wrap.
// Requires m < T/2.
PeriodogramCircle smooth(const PeriodogramCircle& raw,
                         const SmoothingSpec& spec);

// Real 2d x 2d representation 0.5 * [[C, -Q], [Q, C]] of a Hermitian
// M = C - iQ. Rejects inputs further than 1e-10 from Hermitian.
Eigen::MatrixXd augment(const Eigen::MatrixXcd& m);

// Inverse map: orthogonal projection of a symmetric 2d x 2d matrix onto the
// augmented subspace, returned as C - iQ (exactly Hermitian by construction).
Eigen::MatrixXcd de_augment(const Eigen::MatrixXd& sigma);

// Gaussian MLE of a covariance whose precision is constrained to zero
// off-mask (diagonal always free). Solved by covariance-selection cyclic
// regression; the fixed point matches sigma_tilde exactly on the diagonal and
// on mask pairs, and theta has exact zeros elsewhere.
struct ConstrainedMle {
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd theta;
  int sweeps = 0;
};

// mask: symmetric 0/1 pattern; its diagonal is ignored. An input whose
// smallest eigenvalue is below 1e-10 is ridge-regularized by
// (1e-8 trace / n) I before solving. warm, when given, seeds the iteration
// (used to track slowly varying targets along a frequency grid).
ConstrainedMle constrained_mle(const Eigen::MatrixXd& sigma_tilde,
                               const Eigen::MatrixXd& mask,
                               const Eigen::MatrixXd* warm = nullptr);

enum class Penalty { none, a1, induced };

Penalty penalty_from_string(const std::string& s);
std::string to_string(Penalty p);

// Smoothed-periodogram spectral estimate on the Fourier grid, optionally
// penalized frequency-wise through the augmented constrained MLE. penalty
// a1 masks by the network adjacency; induced masks by the union of stage
// adjacencies up to min(2 r_star, r_max) and requires r_star >= 1.
SpectralField np_spectrum_penalized(const SeriesPanel& panel,
                                    const StageStructure& st,
                                    const SmoothingSpec& smoothing,
                                    Penalty penalty, int r_star = 0);

// Unrestricted VAR(p) least-squares fit (one shared design, per-equation
// OLS). Requires T > p d.
struct VarFit {
  int p = 0;
  std::vector<Eigen::MatrixXd> phi;
  Eigen::MatrixXd vhat;  // residual covariance, divisor n
  double bic = 0.0;
};

VarFit fit_var_ols(const SeriesPanel& panel, int p);

// BIC over p = 1..p_max: log det V-hat + p d^2 log(n)/n; ties prefer
// smaller p.
VarFit select_var_ols(const SeriesPanel& panel, int p_max);

// VAR plug-in spectrum on an arbitrary grid, optionally penalized
// frequency-wise exactly like the nonparametric chain. p < 1 selects the lag
// by BIC up to p_max.
SpectralField parametric_var_penalized(const SeriesPanel& panel,
                                       const StageStructure& st, int p,
                                       int p_max, Penalty penalty, int r_star,
                                       const FrequencyGrid& grid);

}  // namespace gnarspec
