#include "gnarspec/periodogram.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <sstream>

#include "gnarspec/errors.hpp"

namespace gnarspec {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

SmoothingSpec SmoothingSpec::daniell(int m) {
  if (m < 0) throw InvalidArgument("smoothing: negative bandwidth");
  SmoothingSpec s;
  s.m = m;
  s.weights.assign(2 * m + 1, 1.0);
  return s;
}

SmoothingSpec SmoothingSpec::default_for(long T) {
  if (T < 1) throw InvalidArgument("smoothing: T must be positive");
  return daniell(static_cast<int>(std::sqrt(static_cast<double>(T))));
}

void SmoothingSpec::validate() const {
  if (m < 0) throw InvalidArgument("smoothing: negative bandwidth");
  if (static_cast<int>(weights.size()) != 2 * m + 1)
    throw InvalidArgument("smoothing: need 2m+1 weights");
  double total = 0.0;
  for (int k = 0; k <= 2 * m; ++k) {
    if (weights[k] != weights[2 * m - k])
      throw InvalidArgument("smoothing: kernel weights must be symmetric");
    total += weights[k];
  }
  if (std::abs(total / (2 * m + 1) - 1.0) > 1e-12)
    throw InvalidArgument("smoothing: kernel weights must average to 1");
}

PanelDft dft(const SeriesPanel& panel) {
  const long T = panel.length();
  const int d = panel.width();
  if (T < 1) throw InvalidArgument("dft: empty panel");
  PanelDft out;
  out.T = T;
  out.j.assign(T, Eigen::VectorXcd::Zero(d));

  // exact angle table: unit[r] = e^{-i 2 pi r / T}; integer reduction of t*l
  // mod T avoids phase drift for large T
  std::vector<std::complex<double>> unit(T);
  for (long r = 0; r < T; ++r)
    unit[r] = std::polar(1.0, -kTwoPi * static_cast<double>(r) /
                                  static_cast<double>(T));
  const double scale = 1.0 / std::sqrt(static_cast<double>(T));
  const long half = T / 2;
  for (long l = 0; l <= half; ++l) {
    Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(d);
    for (long t = 1; t <= T; ++t) {
      const std::complex<double> w = unit[(t * l) % T];
      acc += w * panel.x.row(t - 1).transpose();
    }
    out.j[l] = scale * acc;
  }
  for (long l = half + 1; l < T; ++l) out.j[l] = out.j[T - l].conjugate();
  return out;
}

PeriodogramCircle raw_periodogram(const PanelDft& d) {
  PeriodogramCircle out;
  out.T = d.T;
  out.i.reserve(d.T);
  for (long l = 0; l < d.T; ++l)
    out.i.emplace_back(d.j[l] * d.j[l].adjoint());
  return out;
}

SpectralField PeriodogramCircle::field() const {
  SpectralField f;
  f.kind = FieldKind::spectrum;
  f.grid = FrequencyGrid::fourier(T);
  const long n = T / 2 - 1;
  f.m.assign(i.begin() + 1, i.begin() + 1 + n);
  return f;
}

PeriodogramCircle smooth(const PeriodogramCircle& raw,
                         const SmoothingSpec& spec) {
  spec.validate();
  const long T = raw.T;
  if (static_cast<long>(raw.i.size()) != T)
    throw InvalidArgument("smooth: periodogram does not cover the circle");
  if (2 * static_cast<long>(spec.m) >= T)
    throw InvalidArgument("smooth: bandwidth m = " + std::to_string(spec.m) +
                          " too large for T = " + std::to_string(T) +
                          " (need m < T/2)");
  PeriodogramCircle out;
  out.T = T;
  out.i.reserve(T);
  const double norm = 1.0 / (2 * spec.m + 1);
  for (long l = 0; l < T; ++l) {
    Eigen::MatrixXcd acc =
        Eigen::MatrixXcd::Zero(raw.i[0].rows(), raw.i[0].cols());
    for (int k = -spec.m; k <= spec.m; ++k) {
      const long idx = ((l + k) % T + T) % T;
      acc += spec.weights[k + spec.m] * raw.i[idx];
    }
    out.i.emplace_back(norm * acc);
  }
  return out;
}

Eigen::MatrixXd augment(const Eigen::MatrixXcd& m) {
  const auto d = m.rows();
  if (m.cols() != d) throw InvalidArgument("augment: matrix not square");
  const double dev = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (dev > 1e-10) {
    std::ostringstream os;
    os << "augment: input is not Hermitian (max deviation " << dev << ")";
    throw InvalidArgument(os.str());
  }
  // symmetrize/skew-symmetrize so Sigma is exactly symmetric
  const Eigen::MatrixXd c = 0.5 * (m.real() + m.real().transpose());
  const Eigen::MatrixXd q = -0.5 * (m.imag() - m.imag().transpose());
  Eigen::MatrixXd sigma(2 * d, 2 * d);
  sigma << c, -q, q, c;
  return 0.5 * sigma;
}

Eigen::MatrixXcd de_augment(const Eigen::MatrixXd& sigma) {
  const auto n = sigma.rows();
  if (sigma.cols() != n || n % 2 != 0)
    throw InvalidArgument("de_augment: matrix must be square of even size");
  const auto d = n / 2;
  const auto s11 = sigma.topLeftCorner(d, d);
  const auto s12 = sigma.topRightCorner(d, d);
  const auto s21 = sigma.bottomLeftCorner(d, d);
  const auto s22 = sigma.bottomRightCorner(d, d);
  const Eigen::MatrixXd csum = s11 + s22;
  const Eigen::MatrixXd c = 0.5 * (csum + csum.transpose());
  const Eigen::MatrixXd qsum = s21 - s12;
  const Eigen::MatrixXd q = 0.5 * (qsum - qsum.transpose());
  return c.cast<std::complex<double>>() -
         std::complex<double>(0, 1) * q.cast<std::complex<double>>();
}

ConstrainedMle constrained_mle(const Eigen::MatrixXd& sigma_tilde,
                               const Eigen::MatrixXd& mask,
                               const Eigen::MatrixXd* warm) {
  const auto n = sigma_tilde.rows();
  if (sigma_tilde.cols() != n)
    throw InvalidArgument("constrained mle: matrix not square");
  if ((sigma_tilde - sigma_tilde.transpose()).cwiseAbs().maxCoeff() >
      1e-8 * std::max(1.0, sigma_tilde.cwiseAbs().maxCoeff()))
    throw InvalidArgument("constrained mle: input not symmetric");
  if (mask.rows() != n || mask.cols() != n)
    throw InvalidArgument("constrained mle: mask dimension mismatch");
  if (!mask.isApprox(mask.transpose()))
    throw InvalidArgument("constrained mle: mask not symmetric");

  Eigen::MatrixXd target = 0.5 * (sigma_tilde + sigma_tilde.transpose());
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(target);
    if (es.eigenvalues().minCoeff() < 1e-10)
      target += (1e-8 * target.trace() / n) *
                Eigen::MatrixXd::Identity(n, n);
  }

  std::vector<std::vector<int>> nb(n);
  bool saturated = true;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i)
      if (i != j && mask(i, j) != 0.0) nb[j].push_back(i);
    if (static_cast<int>(nb[j].size()) != n - 1) saturated = false;
  }

  ConstrainedMle res;
  if (saturated) {
    // every off-diagonal pair free: MLE is the input itself
    res.sigma = target;
    Eigen::LLT<Eigen::MatrixXd> llt(target);
    if (llt.info() != Eigen::Success)
      throw NumericError("constrained mle: input not positive definite");
    res.theta = llt.solve(Eigen::MatrixXd::Identity(n, n));
    res.theta = 0.5 * (res.theta + res.theta.transpose());
    res.sweeps = 0;
    return res;
  }

  Eigen::MatrixXd w = warm ? *warm : target;
  if (warm) {
    if (warm->rows() != n || warm->cols() != n)
      throw InvalidArgument("constrained mle: warm start dimension mismatch");
    w.diagonal() = target.diagonal();  // diagonal is pinned to the target
  }

  constexpr int kMaxSweeps = 10000;
  constexpr double kTol = 1e-9;
  double delta = std::numeric_limits<double>::infinity();
  int sweep = 0;
  Eigen::VectorXd col(n);
  while (sweep < kMaxSweeps && delta > kTol) {
    ++sweep;
    delta = 0.0;
    for (int j = 0; j < n; ++j) {
      const auto& idx = nb[j];
      col.setZero();
      if (!idx.empty()) {
        const int k = static_cast<int>(idx.size());
        Eigen::MatrixXd w11(k, k);
        Eigen::VectorXd s12(k);
        for (int a = 0; a < k; ++a) {
          s12(a) = target(idx[a], j);
          for (int b = 0; b < k; ++b) w11(a, b) = w(idx[a], idx[b]);
        }
        const Eigen::VectorXd beta = w11.ldlt().solve(s12);
        // col = W(:, idx) * beta, the updated off-diagonal column
        for (int a = 0; a < k; ++a) col += beta(a) * w.col(idx[a]);
      }
      for (int i = 0; i < n; ++i) {
        if (i == j) continue;
        delta = std::max(delta, std::abs(col(i) - w(i, j)));
        w(i, j) = col(i);
        w(j, i) = col(i);
      }
    }
  }
  if (delta > kTol) {
    double gap = 0.0;  // worst estimating-equation residual on free pairs
    for (int j = 0; j < n; ++j)
      for (int i : nb[j]) gap = std::max(gap, std::abs(w(i, j) - target(i, j)));
    std::ostringstream os;
    os << "constrained mle: no convergence after " << kMaxSweeps
       << " sweeps (last change " << delta << ", estimating-equation residual "
       << gap << ")";
    throw NumericError(os.str());
  }

  // precision from the final regressions: exact zeros off-mask
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    const auto& idx = nb[j];
    const int k = static_cast<int>(idx.size());
    double quad = 0.0;
    Eigen::VectorXd beta;
    if (k > 0) {
      Eigen::MatrixXd w11(k, k);
      Eigen::VectorXd s12(k);
      for (int a = 0; a < k; ++a) {
        s12(a) = target(idx[a], j);
        for (int b = 0; b < k; ++b) w11(a, b) = w(idx[a], idx[b]);
      }
      beta = w11.ldlt().solve(s12);
      for (int a = 0; a < k; ++a) quad += w(j, idx[a]) * beta(a);
    }
    const double denom = w(j, j) - quad;
    if (denom <= 0.0)
      throw NumericError(
          "constrained mle: nonpositive conditional variance at node " +
          std::to_string(j + 1));
    theta(j, j) = 1.0 / denom;
    for (int a = 0; a < k; ++a) theta(idx[a], j) = -beta(a) / denom;
  }
  // per-node recoveries agree only up to the tolerance; average them without
  // touching the structural zeros
  res.theta = 0.5 * (theta + theta.transpose());
  res.sigma = std::move(w);
  res.sweeps = sweep;
  {
    Eigen::LLT<Eigen::MatrixXd> llt(res.theta);
    if (llt.info() != Eigen::Success)
      throw NumericError(
          "constrained mle: recovered precision not positive definite");
  }
  return res;
}

Penalty penalty_from_string(const std::string& s) {
  if (s == "none") return Penalty::none;
  if (s == "a1") return Penalty::a1;
  if (s == "induced") return Penalty::induced;
  throw InvalidArgument("unknown penalty '" + s +
                        "' (expected none, a1 or induced)");
}

std::string to_string(Penalty p) {
  switch (p) {
    case Penalty::none: return "none";
    case Penalty::a1: return "a1";
    case Penalty::induced: return "induced";
  }
  throw InvalidArgument("unknown penalty");
}

namespace {

Eigen::MatrixXd penalty_mask(const StageStructure& st, Penalty penalty,
                             int r_star) {
  if (penalty == Penalty::a1) return st.network().adjacency();
  if (r_star < 1)
    throw InvalidArgument("induced penalty requires r_star >= 1");
  return induced_adjacency(st, r_star);
}

// Applies the augmented constrained MLE frequency by frequency, warm-starting
// each solve from the previous frequency's solution.
void penalize_field(SpectralField& f, const Eigen::MatrixXd& mask_d) {
  const Eigen::MatrixXd mask = augment_mask(mask_d);
  Eigen::MatrixXd prev;
  for (size_t l = 0; l < f.size(); ++l) {
    const Eigen::MatrixXd sigma = augment(f.m[l]);
    ConstrainedMle mle =
        constrained_mle(sigma, mask, prev.size() ? &prev : nullptr);
    prev = mle.sigma;
    f.m[l] = de_augment(mle.sigma);
  }
}

}  // namespace

SpectralField np_spectrum_penalized(const SeriesPanel& panel,
                                    const StageStructure& st,
                                    const SmoothingSpec& smoothing,
                                    Penalty penalty, int r_star) {
  if (panel.width() != st.order())
    throw InvalidArgument("np spectrum: panel width does not match network");
  SpectralField f = smooth(raw_periodogram(dft(panel)), smoothing).field();
  if (penalty == Penalty::none) return f;
  penalize_field(f, penalty_mask(st, penalty, r_star));
  return f;
}

VarFit fit_var_ols(const SeriesPanel& panel, int p) {
  if (p < 1) throw InvalidArgument("var fit: lag order must be >= 1");
  const long T = panel.length();
  const int d = panel.width();
  if (T <= static_cast<long>(p) * d)
    throw InvalidArgument("var fit: overparameterized for sample (need T > " +
                          std::to_string(p * d) + ", have T = " +
                          std::to_string(T) + ")");
  const long n = T - p;
  Eigen::MatrixXd x(n, p * d);
  Eigen::MatrixXd y(n, d);
  for (long t = p; t < T; ++t) {
    y.row(t - p) = panel.x.row(t);
    for (int k = 1; k <= p; ++k)
      x.block(t - p, (k - 1) * d, 1, d) = panel.x.row(t - k);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols())
    throw NumericError("var fit: design is rank deficient");
  const Eigen::MatrixXd b = qr.solve(y);  // (p d) x d, stacked Phi_k^T
  VarFit fit;
  fit.p = p;
  fit.phi.reserve(p);
  for (int k = 0; k < p; ++k)
    fit.phi.emplace_back(b.block(k * d, 0, d, d).transpose());
  const Eigen::MatrixXd resid = y - x * b;
  fit.vhat = resid.transpose() * resid / static_cast<double>(n);
  Eigen::LLT<Eigen::MatrixXd> llt(fit.vhat);
  if (llt.info() != Eigen::Success)
    throw NumericError("var fit: residual covariance not positive definite");
  const double logdet =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  // standard multivariate Schwarz criterion: p d^2 coefficients against n
  // vector observations, penalty log(n) per coefficient on the -2ll/n scale
  fit.bic = logdet +
            static_cast<double>(p) * d * d * std::log(static_cast<double>(n)) /
                static_cast<double>(n);
  return fit;
}

VarFit select_var_ols(const SeriesPanel& panel, int p_max) {
  if (p_max < 1) throw InvalidArgument("var selection: p_max must be >= 1");
  std::optional<VarFit> best;
  for (int p = 1; p <= p_max; ++p) {
    try {
      VarFit fit = fit_var_ols(panel, p);
      if (!best || fit.bic < best->bic) best = std::move(fit);
    } catch (const Error&) {
      // candidate not fittable at this sample size
    }
  }
  if (!best)
    throw NumericError("var selection: no lag order could be fitted");
  return *best;
}

SpectralField parametric_var_penalized(const SeriesPanel& panel,
                                       const StageStructure& st, int p,
                                       int p_max, Penalty penalty, int r_star,
                                       const FrequencyGrid& grid) {
  if (panel.width() != st.order())
    throw InvalidArgument("var spectrum: panel width does not match network");
  const VarFit fit =
      p >= 1 ? fit_var_ols(panel, p) : select_var_ols(panel, p_max);
  SpectralField f = var_spectrum(fit.phi, fit.vhat, grid);
  if (penalty == Penalty::none) return f;
  penalize_field(f, penalty_mask(st, penalty, r_star));
  return f;
}

}  // namespace gnarspec
