#include "gnarspec/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gnarspec/errors.hpp"

namespace gnarspec {

using nlohmann::json;

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::string omega_str(double w) {
  std::ostringstream os;
  os.precision(12);
  os << w;
  return os.str();
}
}  // namespace

FrequencyGrid FrequencyGrid::fourier(long T) {
  if (T < 4)
    throw InvalidArgument("frequency grid: need T >= 4 Fourier frequencies");
  FrequencyGrid g;
  const long n = T / 2 - 1;
  g.omega.reserve(n);
  for (long l = 1; l <= n; ++l)
    g.omega.push_back(static_cast<double>(l) / static_cast<double>(T));
  return g;
}

FrequencyGrid FrequencyGrid::uniform(int n) {
  if (n < 1) throw InvalidArgument("frequency grid: need n >= 1");
  FrequencyGrid g;
  g.omega.reserve(n);
  for (int j = 1; j <= n; ++j)
    g.omega.push_back(static_cast<double>(j) / (2.0 * n));
  return g;
}

FrequencyGrid FrequencyGrid::from(std::vector<double> omega) {
  if (omega.empty()) throw InvalidArgument("frequency grid: empty");
  for (size_t i = 0; i < omega.size(); ++i) {
    if (omega[i] < 0.0 || omega[i] > 0.5)
      throw InvalidArgument("frequency grid: omega outside [0, 0.5]: " +
                            omega_str(omega[i]));
    if (i > 0 && omega[i] <= omega[i - 1])
      throw InvalidArgument("frequency grid: not strictly increasing");
  }
  FrequencyGrid g;
  g.omega = std::move(omega);
  return g;
}

std::string to_string(FieldKind k) {
  switch (k) {
    case FieldKind::spectrum: return "spectrum";
    case FieldKind::precision: return "precision";
    case FieldKind::coherence: return "coherence";
    case FieldKind::partial_coherence: return "partial_coherence";
  }
  throw InvalidArgument("unknown field kind");
}

FieldKind field_kind_from_string(const std::string& s) {
  if (s == "spectrum") return FieldKind::spectrum;
  if (s == "precision") return FieldKind::precision;
  if (s == "coherence") return FieldKind::coherence;
  if (s == "partial_coherence") return FieldKind::partial_coherence;
  throw InvalidArgument("unknown field kind '" + s + "'");
}

void SpectralField::validate() const {
  if (m.size() != grid.size())
    throw InvalidArgument("spectral field: matrix count does not match grid");
  const int d = dim();
  for (const auto& mat : m)
    if (mat.rows() != d || mat.cols() != d)
      throw InvalidArgument("spectral field: inconsistent matrix dimensions");
}

void SpectralField::write_json(const std::string& path) const {
  validate();
  const bool real_kind =
      kind == FieldKind::coherence || kind == FieldKind::partial_coherence;
  json j;
  j["kind"] = to_string(kind);
  j["dim"] = dim();
  j["omega"] = grid.omega;
  json mats = json::array();
  for (const auto& mat : m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < mat.rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < mat.cols(); ++c) {
        if (real_kind)
          row.push_back(mat(r, c).real());
        else
          row.push_back(json::array({mat(r, c).real(), mat(r, c).imag()}));
      }
      rows.push_back(std::move(row));
    }
    mats.push_back(std::move(rows));
  }
  j["matrices"] = std::move(mats);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write field '" + path + "'");
  out << j.dump() << "\n";
}

SpectralField SpectralField::read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open field '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidArgument("field '" + path + "': " + e.what());
  }
  SpectralField f;
  try {
    f.kind = field_kind_from_string(j.at("kind").get<std::string>());
    f.grid = FrequencyGrid::from(j.at("omega").get<std::vector<double>>());
    const int d = j.at("dim").get<int>();
    const bool real_kind =
        f.kind == FieldKind::coherence || f.kind == FieldKind::partial_coherence;
    for (const auto& mat : j.at("matrices")) {
      Eigen::MatrixXcd mm(d, d);
      int r = 0;
      for (const auto& row : mat) {
        int c = 0;
        for (const auto& cell : row) {
          if (real_kind)
            mm(r, c) = std::complex<double>(cell.get<double>(), 0.0);
          else
            mm(r, c) = std::complex<double>(cell.at(0).get<double>(),
                                            cell.at(1).get<double>());
          ++c;
        }
        if (c != d) throw InvalidArgument("field '" + path + "': ragged row");
        ++r;
      }
      if (r != d) throw InvalidArgument("field '" + path + "': ragged matrix");
      f.m.push_back(std::move(mm));
    }
  } catch (const json::exception& e) {
    throw InvalidArgument("field '" + path + "': " + e.what());
  }
  f.validate();
  return f;
}

void SpectralField::write_csv(const std::string& path) const {
  validate();
  const bool real_kind =
      kind == FieldKind::coherence || kind == FieldKind::partial_coherence;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write field '" + path + "'");
  out.precision(17);
  out << "omega,i,j,value\n";
  const int d = dim();
  for (size_t l = 0; l < m.size(); ++l)
    for (int i = 0; i < d; ++i)
      for (int c = 0; c < d; ++c)
        out << grid.omega[l] << "," << i + 1 << "," << c + 1 << ","
            << (real_kind ? m[l](i, c).real() : std::abs(m[l](i, c))) << "\n";
  if (!out) throw IoError("failed writing field '" + path + "'");
}

SpectralField var_spectrum(const std::vector<Eigen::MatrixXd>& phi,
                           const Eigen::MatrixXd& innovation_cov,
                           const FrequencyGrid& grid) {
  if (phi.empty()) throw InvalidArgument("var spectrum: no lag matrices");
  const int d = static_cast<int>(phi[0].rows());
  for (const auto& mat : phi)
    if (mat.rows() != d || mat.cols() != d)
      throw InvalidArgument("var spectrum: lag matrices must be square");
  if (innovation_cov.rows() != d || innovation_cov.cols() != d)
    throw InvalidArgument("var spectrum: covariance dimension mismatch");
  if (!innovation_cov.isApprox(innovation_cov.transpose(), 1e-10))
    throw InvalidArgument("var spectrum: covariance must be symmetric");

  SpectralField f;
  f.kind = FieldKind::spectrum;
  f.grid = grid;
  f.m.reserve(grid.size());
  const Eigen::MatrixXcd vc = innovation_cov.cast<std::complex<double>>();
  for (double wfreq : grid.omega) {
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(d, d);
    for (size_t k = 0; k < phi.size(); ++k) {
      const double ang = -kTwoPi * (k + 1) * wfreq;
      u -= std::complex<double>(std::cos(ang), std::sin(ang)) * phi[k];
    }
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(u);
    if (lu.rcond() < 1e-14)
      throw NumericError(
          "var spectrum: transfer matrix numerically singular at omega = " +
          omega_str(wfreq));
    const Eigen::MatrixXcd uinv = lu.inverse();
    f.m.emplace_back(uinv * vc * uinv.adjoint());
  }
  return f;
}

SpectralField gnar_spectrum(const GnarParams& params, const StageStructure& st,
                            const Eigen::MatrixXd& w,
                            const FrequencyGrid& grid) {
  return var_spectrum(var_coefficients(params, st, w),
                      params.innovation_cov(st.order()), grid);
}

SpectralField precision(const SpectralField& spectrum) {
  spectrum.validate();
  if (spectrum.kind != FieldKind::spectrum)
    throw InvalidArgument("precision: input must be a spectrum field");
  SpectralField out;
  out.kind = FieldKind::precision;
  out.grid = spectrum.grid;
  out.m.reserve(spectrum.size());
  for (size_t l = 0; l < spectrum.size(); ++l) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(spectrum.m[l]);
    if (es.info() != Eigen::Success)
      throw NumericError("precision: eigendecomposition failed at omega = " +
                         omega_str(spectrum.grid.omega[l]));
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo <= 0.0 || hi / lo > 1e12)
      throw NumericError(
          "precision: spectrum ill-conditioned (condition number above 1e12) "
          "at omega = " +
          omega_str(spectrum.grid.omega[l]));
    // B B^H with B = U diag(lambda^{-1/2}): Hermitian by construction
    const Eigen::MatrixXcd b =
        es.eigenvectors() *
        es.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal();
    out.m.emplace_back(b * b.adjoint());
  }
  return out;
}

namespace {

SpectralField squared_modulus_ratio(const SpectralField& in, FieldKind kind,
                                    const char* what) {
  SpectralField out;
  out.kind = kind;
  out.grid = in.grid;
  out.m.reserve(in.size());
  const int d = in.dim();
  for (size_t l = 0; l < in.size(); ++l) {
    Eigen::VectorXd diag(d);
    for (int i = 0; i < d; ++i) {
      diag(i) = in.m[l](i, i).real();
      if (diag(i) <= 0.0)
        throw NumericError(std::string(what) +
                           ": nonpositive diagonal at omega = " +
                           omega_str(in.grid.omega[l]) + ", node " +
                           std::to_string(i + 1));
    }
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
      r(i, i) = 1.0;
      for (int j = i + 1; j < d; ++j) {
        const double v = std::norm(in.m[l](i, j)) / (diag(i) * diag(j));
        const double clamped = std::clamp(v, 0.0, 1.0);
        r(i, j) = clamped;
        r(j, i) = clamped;
      }
    }
    out.m.push_back(std::move(r));
  }
  return out;
}

}  // namespace

SpectralField coherence(const SpectralField& spectrum) {
  spectrum.validate();
  if (spectrum.kind != FieldKind::spectrum)
    throw InvalidArgument("coherence: input must be a spectrum field");
  return squared_modulus_ratio(spectrum, FieldKind::coherence, "coherence");
}

SpectralField partial_coherence(const SpectralField& precision_field) {
  precision_field.validate();
  if (precision_field.kind != FieldKind::precision)
    throw InvalidArgument("partial coherence: input must be a precision field");
  return squared_modulus_ratio(precision_field, FieldKind::partial_coherence,
                               "partial coherence");
}

}  // namespace gnarspec
