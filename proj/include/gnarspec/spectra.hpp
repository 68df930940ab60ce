#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

#include "gnarspec/gnar.hpp"
#include "gnarspec/graph.hpp"

namespace gnarspec {

// Frequencies in cycles per unit time. Estimation grids live in (0, 0.5];
// omega = 0 is accepted only when requested explicitly via from().
struct FrequencyGrid {
  std::vector<double> omega;

  // Fourier frequencies l/T, l = 1..floor(T/2)-1 (T >= 4)
  static FrequencyGrid fourier(long T);
  // j/(2n), j = 1..n; endpoint 0.5 included
  static FrequencyGrid uniform(int n);
  // validated user grid: strictly increasing, inside [0, 0.5]
  static FrequencyGrid from(std::vector<double> omega);

  size_t size() const { return omega.size(); }
};

enum class FieldKind { spectrum, precision, coherence, partial_coherence };

std::string to_string(FieldKind k);
FieldKind field_kind_from_string(const std::string& s);

// A matrix-valued function sampled on a frequency grid. Spectrum and
// precision entries are complex Hermitian; coherence kinds are real matrices
// in [0,1] stored with zero imaginary part.
struct SpectralField {
  FieldKind kind = FieldKind::spectrum;
  FrequencyGrid grid;
  std::vector<Eigen::MatrixXcd> m;

  int dim() const { return m.empty() ? 0 : static_cast<int>(m[0].rows()); }
  size_t size() const { return m.size(); }
  void validate() const;

  // JSON: lossless, complex entries as [re, im] pairs, real kinds as plain
  // numbers. CSV: long format (omega, i, j, value) per pair with 1-based
  // indices; complex kinds export the modulus |f_ij| (plotting format, use
  // JSON for round-trips).
  void write_json(const std::string& path) const;
  static SpectralField read_json(const std::string& path);
  void write_csv(const std::string& path) const;
};

// f(omega) = U^-1 V U^-H with U(omega) = I - sum_k Phi_k e^{-i 2 pi k omega}.
// Errors report the frequency when U is numerically singular.
SpectralField var_spectrum(const std::vector<Eigen::MatrixXd>& phi,
                           const Eigen::MatrixXd& innovation_cov,
                           const FrequencyGrid& grid);

// The model spectrum through the lag-matrix embedding.
SpectralField gnar_spectrum(const GnarParams& params, const StageStructure& st,
                            const Eigen::MatrixXd& w,
                            const FrequencyGrid& grid);

// Frequency-wise Hermitian inverse with a condition-number guard: an
// eigenvalue ratio above 1e12 (or a nonpositive eigenvalue) is an error
// naming the offending frequency.
SpectralField precision(const SpectralField& spectrum);

// rho^2_ij = |f_ij|^2 / (f_ii f_jj), diagonal 1. Input must be a spectrum
// field with strictly positive diagonal.
SpectralField coherence(const SpectralField& spectrum);

// gamma^2_ij = |S_ij|^2 / (S_ii S_jj) from a precision field; diagonal set
// to 1 by convention.
SpectralField partial_coherence(const SpectralField& precision_field);

}  // namespace gnarspec
