#include "gnarspec/hierarchy.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include "gnarspec/errors.hpp"

namespace gnarspec {

std::complex<double> soft_threshold(std::complex<double> z, double rho) {
  if (rho < 0.0) throw InvalidArgument("soft threshold: negative level");
  const double mag = std::abs(z);
  if (mag <= rho) return {0.0, 0.0};
  return std::polar(mag - rho, std::arg(z));
}

ThresholdLadder select_thresholds(const SpectralField& precision_field,
                                  const StageStructure& st, int r_star) {
  precision_field.validate();
  if (precision_field.kind != FieldKind::precision)
    throw InvalidArgument("threshold selection: input must be a precision field");
  if (r_star < 1)
    throw InvalidArgument("threshold selection: r_star must be >= 1");
  const int d = precision_field.dim();
  if (d != st.order())
    throw InvalidArgument("threshold selection: field does not match network");

  ThresholdLadder ladder;
  ladder.r_star = r_star;
  ladder.xi.resize(r_star);
  for (int r = 1; r <= r_star; ++r) {
    // pairs whose shortest-path distance is 2r-1 or 2r
    std::vector<std::pair<int, int>> pairs;
    for (int i = 1; i <= d; ++i)
      for (int j = i + 1; j <= d; ++j) {
        const int dist = st.distance(i, j);
        if (dist == 2 * r - 1 || dist == 2 * r) pairs.emplace_back(i, j);
      }
    if (pairs.empty())
      throw InvalidArgument(
          "threshold selection: no node pairs at distances {" +
          std::to_string(2 * r - 1) + "," + std::to_string(2 * r) +
          "} for stage r = " + std::to_string(r));
    double lo = std::numeric_limits<double>::infinity();
    for (const auto& mat : precision_field.m)
      for (const auto& [i, j] : pairs)
        lo = std::min(lo, std::abs(mat(i - 1, j - 1)));
    ladder.xi[r - 1] = lo;
  }
  // The population hierarchy orders the band minima, but a finite-sample
  // estimate can invert them. Warn when that happens, then take the running
  // minimum so the ladder is nonincreasing and the thresholded supports nest.
  for (int r = 1; r < r_star; ++r)
    if (ladder.xi[r] > ladder.xi[r - 1]) {
      std::cerr << "warning: estimated band minima are non-monotone "
                   "(band " << r + 1 << " > band " << r
                << "); clamping to the running minimum\n";
      break;
    }
  for (int r = 1; r < r_star; ++r)
    ladder.xi[r] = std::min(ladder.xi[r], ladder.xi[r - 1]);
  return ladder;
}

SpectralField threshold_precision(const SpectralField& precision_field,
                                  double xi) {
  precision_field.validate();
  if (precision_field.kind != FieldKind::precision)
    throw InvalidArgument("threshold: input must be a precision field");
  if (xi < 0.0) throw InvalidArgument("threshold: negative level");
  SpectralField out;
  out.kind = FieldKind::precision;
  out.grid = precision_field.grid;
  out.m.reserve(precision_field.size());
  const int d = precision_field.dim();
  for (const auto& mat : precision_field.m) {
    Eigen::MatrixXcd t(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        std::complex<double> z = mat(i, j);
        if (i == j) z += std::polar(xi, std::arg(z));
        t(i, j) = soft_threshold(z, xi);
      }
    out.m.push_back(std::move(t));
  }
  return out;
}

SpectralField r_dependent_spectrum(const SpectralField& thresholded_precision,
                                   bool ridge_fallback) {
  thresholded_precision.validate();
  if (thresholded_precision.kind != FieldKind::precision)
    throw InvalidArgument("r-dependent spectrum: input must be a precision field");
  const int d = thresholded_precision.dim();

  const auto usable = [&](const Eigen::MatrixXcd& s) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(s);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    return lo > 0.0 && hi / lo <= 1e12;
  };

  std::vector<Eigen::MatrixXcd> mats = thresholded_precision.m;
  std::vector<size_t> bad;
  for (size_t l = 0; l < mats.size(); ++l)
    if (!usable(mats[l])) bad.push_back(l);

  if (!bad.empty()) {
    if (!ridge_fallback) {
      std::ostringstream os;
      os << "r-dependent spectrum: thresholded precision singular or "
            "ill-conditioned at " << bad.size() << " frequencies: omega =";
      for (size_t k = 0; k < bad.size() && k < 10; ++k)
        os << " " << thresholded_precision.grid.omega[bad[k]];
      if (bad.size() > 10) os << " ...";
      throw NumericError(os.str());
    }
    for (size_t l : bad) {
      const double ridge =
          1e-8 * mats[l].diagonal().cwiseAbs().mean();
      mats[l] += ridge * Eigen::MatrixXcd::Identity(d, d);
      if (!usable(mats[l]))
        throw NumericError(
            "r-dependent spectrum: ridge fallback insufficient at omega = " +
            std::to_string(thresholded_precision.grid.omega[l]));
    }
  }

  SpectralField out;
  out.kind = FieldKind::spectrum;
  out.grid = thresholded_precision.grid;
  out.m.reserve(mats.size());
  for (const auto& s : mats) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(s);
    const Eigen::MatrixXcd b =
        es.eigenvectors() *
        es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal();
    out.m.emplace_back(b * b.adjoint());
  }
  return out;
}

}  // namespace gnarspec
