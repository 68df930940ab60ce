#pragma once

#include <complex>
#include <vector>

#include "gnarspec/graph.hpp"
#include "gnarspec/spectra.hpp"

namespace gnarspec {

// Estimated threshold per stage, xi[r-1] for r = 1..r_star. For a correctly
// specified model the sequence is decreasing; estimated ladders may violate
// monotonicity, which warns rather than errors.
struct ThresholdLadder {
  int r_star = 0;
  std::vector<double> xi;
};

// (|z| - rho)_+ e^{i arg z}; zero input (arg taken as 0) stays zero.
std::complex<double> soft_threshold(std::complex<double> z, double rho);

// xi_r is the running minimum over stages 1..r of the band minima
// b_q = min over grid frequencies and over pairs (i,j) with
// delta(i,j) in {2q-1, 2q} of |S_ij(omega)|. When the band minima are
// already ordered (the population case) xi_r = b_r; when sampling noise
// inverts them, the clamp keeps the ladder nonincreasing so the supports
// retained at successive stages nest. A warning is printed on inversion.
// Errors when some stage r has no pair at those distances.
ThresholdLadder select_thresholds(const SpectralField& precision_field,
                                  const StageStructure& st, int r_star);

// Entrywise soft threshold at level xi with the diagonal preserved exactly:
// diagonal entries pass through sft(s + xi e^{i arg s}; xi) = s.
SpectralField threshold_precision(const SpectralField& precision_field,
                                  double xi);

// Inverts a thresholded precision field back to a spectrum field. Without
// the fallback, singular or ill-conditioned frequencies abort with an error
// listing them; with it, offending frequencies get a ridge of
// 1e-8 * mean(|diag|) * I before inversion (and still error if that is not
// enough).
SpectralField r_dependent_spectrum(const SpectralField& thresholded_precision,
                                   bool ridge_fallback = false);

}  // namespace gnarspec
