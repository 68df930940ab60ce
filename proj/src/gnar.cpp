#include "gnarspec/gnar.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "csvutil.hpp"
#include "gnarspec/errors.hpp"
#include "gnarspec/rng.hpp"

namespace gnarspec {

using nlohmann::json;

int GnarOrder::n_coefficients() const {
  return p + std::accumulate(s.begin(), s.end(), 0);
}

void GnarParams::validate() const {
  if (order.p < 1) throw InvalidArgument("gnar params: lag order must be >= 1");
  if (static_cast<int>(order.s.size()) != order.p)
    throw InvalidArgument("gnar params: s must have one entry per lag");
  for (int sk : order.s)
    if (sk < 0) throw InvalidArgument("gnar params: negative stage depth");
  if (alpha.size() != order.p)
    throw InvalidArgument("gnar params: alpha must have one entry per lag");
  if (static_cast<int>(beta.size()) != order.p)
    throw InvalidArgument("gnar params: beta must have one block per lag");
  for (int k = 0; k < order.p; ++k)
    if (beta[k].size() != order.s[k])
      throw InvalidArgument("gnar params: beta block " + std::to_string(k + 1) +
                            " must have s_k = " + std::to_string(order.s[k]) +
                            " entries");
  if (vmat.size() != 0) {
    if (vmat.rows() != vmat.cols())
      throw InvalidArgument("gnar params: V must be square");
    if (!vmat.isApprox(vmat.transpose(), 1e-12))
      throw InvalidArgument("gnar params: V must be symmetric");
  } else if (sigma2 < 0.0) {
    throw InvalidArgument("gnar params: sigma2 must be nonnegative");
  }
}

Eigen::MatrixXd GnarParams::innovation_cov(int d) const {
  if (vmat.size() == 0)
    return sigma2 * Eigen::MatrixXd::Identity(d, d);
  if (vmat.rows() != d)
    throw InvalidArgument("gnar params: V is " + std::to_string(vmat.rows()) +
                          "x" + std::to_string(vmat.cols()) +
                          " but the network has " + std::to_string(d) +
                          " nodes");
  return vmat;
}

GnarParams GnarParams::read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open params file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidArgument("params file '" + path + "': " + e.what());
  }
  GnarParams out;
  try {
    out.order.p = j.at("p").get<int>();
    out.order.s = j.at("s").get<std::vector<int>>();
    const auto a = j.at("alpha").get<std::vector<double>>();
    out.alpha = Eigen::Map<const Eigen::VectorXd>(a.data(), a.size());
    for (const auto& blk : j.at("beta")) {
      const auto b = blk.get<std::vector<double>>();
      out.beta.emplace_back(
          Eigen::Map<const Eigen::VectorXd>(b.data(), b.size()));
    }
    if (j.contains("V")) {
      const auto rows = j.at("V").get<std::vector<std::vector<double>>>();
      const int d = static_cast<int>(rows.size());
      out.vmat.resize(d, d);
      for (int i = 0; i < d; ++i) {
        if (static_cast<int>(rows[i].size()) != d)
          throw InvalidArgument("params file '" + path + "': V is ragged");
        for (int k = 0; k < d; ++k) out.vmat(i, k) = rows[i][k];
      }
    } else if (j.contains("sigma2")) {
      out.sigma2 = j.at("sigma2").get<double>();
    }
  } catch (const json::exception& e) {
    throw InvalidArgument("params file '" + path + "': " + e.what());
  }
  out.validate();
  return out;
}

void GnarParams::write_json(const std::string& path) const {
  validate();
  json j;
  j["p"] = order.p;
  j["s"] = order.s;
  j["alpha"] = std::vector<double>(alpha.data(), alpha.data() + alpha.size());
  json jb = json::array();
  for (const auto& b : beta)
    jb.push_back(std::vector<double>(b.data(), b.data() + b.size()));
  j["beta"] = jb;
  if (vmat.size() != 0) {
    json jv = json::array();
    for (Eigen::Index i = 0; i < vmat.rows(); ++i)
      jv.push_back(std::vector<double>(vmat.row(i).begin(), vmat.row(i).end()));
    j["V"] = jv;
  } else {
    j["sigma2"] = sigma2;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write params file '" + path + "'");
  out << j.dump(2) << "\n";
}

SeriesPanel SeriesPanel::from_matrix(Eigen::MatrixXd m) {
  SeriesPanel p;
  p.x = std::move(m);
  p.names.reserve(p.x.cols());
  for (int i = 0; i < p.x.cols(); ++i)
    p.names.push_back("V" + std::to_string(i + 1));
  return p;
}

SeriesPanel SeriesPanel::read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open panel '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw InvalidArgument("panel '" + path + "': empty file");
  SeriesPanel p;
  p.names = detail::split_csv_line(line);
  const int d = static_cast<int>(p.names.size());
  std::vector<double> values;
  long rows = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (static_cast<int>(fields.size()) != d)
      throw InvalidArgument("panel '" + path + "':" + std::to_string(lineno) +
                            ": expected " + std::to_string(d) + " fields, got " +
                            std::to_string(fields.size()));
    for (const auto& f : fields)
      values.push_back(detail::parse_double(f, "panel '" + path + "'", lineno));
    ++rows;
  }
  if (rows == 0) throw InvalidArgument("panel '" + path + "': no data rows");
  p.x.resize(rows, d);
  for (long t = 0; t < rows; ++t)
    for (int i = 0; i < d; ++i) p.x(t, i) = values[t * d + i];
  return p;
}

void SeriesPanel::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write panel '" + path + "'");
  out.precision(17);
  for (size_t i = 0; i < names.size(); ++i)
    out << (i ? "," : "") << names[i];
  out << "\n";
  for (long t = 0; t < x.rows(); ++t) {
    for (int i = 0; i < x.cols(); ++i) out << (i ? "," : "") << x(t, i);
    out << "\n";
  }
  if (!out) throw IoError("failed writing panel '" + path + "'");
}

Eigen::VectorXd neighbourhood_average(const Eigen::VectorXd& x,
                                      const Eigen::MatrixXd& w,
                                      const StageStructure& st, int r) {
  if (x.size() != st.order())
    throw InvalidArgument("neighbourhood average: vector length mismatch");
  return (w.cwiseProduct(st.stage_adjacency(r))) * x;
}

namespace {

// Stage depths above r_max have empty neighbour sets, so their weight
// matrices are identically zero and the corresponding model terms drop out.
// This lets a deep model run on a shallow network (the extra coefficients
// multiply nothing), mirroring how a graph that is dense enough saturates
// before the nominal stage count is reached.
std::vector<Eigen::MatrixXd> stage_weight_matrices(const StageStructure& st,
                                                   const Eigen::MatrixXd& w,
                                                   int depth) {
  std::vector<Eigen::MatrixXd> wr;
  wr.reserve(depth);
  for (int r = 1; r <= depth; ++r)
    wr.push_back(r <= st.r_max()
                     ? w.cwiseProduct(st.stage_adjacency(r)).eval()
                     : Eigen::MatrixXd::Zero(st.order(), st.order()).eval());
  return wr;
}

// PSD square root; tolerates exactly singular covariances (e.g. sigma2 = 0).
Eigen::MatrixXd cov_sqrt(const Eigen::MatrixXd& v) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(v);
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -1e-12 * scale)
    throw InvalidArgument("innovation covariance is not positive semidefinite");
  return es.eigenvectors() *
         es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace

std::vector<Eigen::MatrixXd> var_coefficients(const GnarParams& params,
                                              const StageStructure& st,
                                              const Eigen::MatrixXd& w) {
  params.validate();
  const int d = st.order();
  const int p = params.order.p;
  const int depth =
      *std::max_element(params.order.s.begin(), params.order.s.end());
  const auto wr = stage_weight_matrices(st, w, depth);
  std::vector<Eigen::MatrixXd> phi(p);
  for (int k = 0; k < p; ++k) {
    phi[k] = params.alpha(k) * Eigen::MatrixXd::Identity(d, d);
    for (int r = 1; r <= params.order.s[k]; ++r)
      phi[k] += params.beta[k](r - 1) * wr[r - 1];
  }
  return phi;
}

bool is_stationary(const GnarParams& params) {
  params.validate();
  double total = 0.0;
  for (int k = 0; k < params.order.p; ++k)
    total += std::abs(params.alpha(k)) + params.beta[k].cwiseAbs().sum();
  return total < 1.0;
}

SeriesPanel simulate(const GnarParams& params, const StageStructure& st,
                     const Eigen::MatrixXd& w, long T, long burn_in,
                     std::uint64_t seed) {
  params.validate();
  if (T < 1) throw InvalidArgument("simulate: T must be >= 1");
  if (burn_in < 0) throw InvalidArgument("simulate: negative burn-in");
  if (!is_stationary(params))
    std::cerr << "warning: coefficient sum >= 1, simulated process may be "
                 "nonstationary\n";
  const int d = st.order();
  const int p = params.order.p;
  const int depth =
      *std::max_element(params.order.s.begin(), params.order.s.end());
  const auto wr = stage_weight_matrices(st, w, depth);
  const Eigen::MatrixXd l = cov_sqrt(params.innovation_cov(d));

  Rng rng(seed);
  Eigen::VectorXd z(d);
  // ring buffer of the last p cross-sections, zeros initially
  std::vector<Eigen::VectorXd> lagged(p, Eigen::VectorXd::Zero(d));
  Eigen::MatrixXd out(T, d);
  for (long t = 0; t < burn_in + T; ++t) {
    Eigen::VectorXd xt = Eigen::VectorXd::Zero(d);
    for (int k = 0; k < p; ++k) {
      const Eigen::VectorXd& xk = lagged[k];
      xt += params.alpha(k) * xk;
      for (int r = 1; r <= params.order.s[k]; ++r)
        xt += params.beta[k](r - 1) * (wr[r - 1] * xk);
    }
    for (int i = 0; i < d; ++i) z(i) = rng.gaussian();
    xt += l * z;
    for (int k = p - 1; k > 0; --k) lagged[k] = lagged[k - 1];
    lagged[0] = xt;
    if (t >= burn_in) out.row(t - burn_in) = xt.transpose();
  }
  return SeriesPanel::from_matrix(std::move(out));
}

SeriesPanel simulate_var(const std::vector<Eigen::MatrixXd>& phi,
                         const Eigen::MatrixXd& innovation_cov, long T,
                         long burn_in, std::uint64_t seed) {
  if (phi.empty()) throw InvalidArgument("simulate_var: no lag matrices");
  const int d = static_cast<int>(phi[0].rows());
  for (const auto& m : phi)
    if (m.rows() != d || m.cols() != d)
      throw InvalidArgument("simulate_var: lag matrices must be d x d");
  if (T < 1) throw InvalidArgument("simulate_var: T must be >= 1");
  const Eigen::MatrixXd l = cov_sqrt(innovation_cov);
  const int p = static_cast<int>(phi.size());

  Rng rng(seed);
  Eigen::VectorXd z(d);
  std::vector<Eigen::VectorXd> lagged(p, Eigen::VectorXd::Zero(d));
  Eigen::MatrixXd out(T, d);
  for (long t = 0; t < burn_in + T; ++t) {
    Eigen::VectorXd xt = Eigen::VectorXd::Zero(d);
    for (int k = 0; k < p; ++k) xt += phi[k] * lagged[k];
    for (int i = 0; i < d; ++i) z(i) = rng.gaussian();
    xt += l * z;
    for (int k = p - 1; k > 0; --k) lagged[k] = lagged[k - 1];
    lagged[0] = xt;
    if (t >= burn_in) out.row(t - burn_in) = xt.transpose();
  }
  return SeriesPanel::from_matrix(std::move(out));
}

DesignMatrices build_design(const SeriesPanel& panel, const StageStructure& st,
                            const Eigen::MatrixXd& w, const GnarOrder& order) {
  if (order.p < 1) throw InvalidArgument("design: lag order must be >= 1");
  if (static_cast<int>(order.s.size()) != order.p)
    throw InvalidArgument("design: s must have one entry per lag");
  const int d = st.order();
  if (panel.width() != d)
    throw InvalidArgument("design: panel has " +
                          std::to_string(panel.width()) +
                          " columns but the network has " + std::to_string(d) +
                          " nodes");
  const long T = panel.length();
  if (T <= order.p)
    throw InvalidArgument("design: need T > p (T = " + std::to_string(T) +
                          ", p = " + std::to_string(order.p) + ")");
  const int depth = *std::max_element(order.s.begin(), order.s.end());
  const auto wr = stage_weight_matrices(st, w, depth);

  // Z^r for every time point, computed once: zall[r-1] is T x d.
  std::vector<Eigen::MatrixXd> zall(depth);
  for (int r = 1; r <= depth; ++r)
    zall[r - 1] = panel.x * wr[r - 1].transpose();

  const long n = T - order.p;
  const int q = order.n_coefficients();
  DesignMatrices dm;
  dm.n = n;
  dm.x.resize(n * d, q);
  dm.y.resize(n * d);
  dm.column_names.reserve(q);
  for (int k = 1; k <= order.p; ++k) {
    dm.column_names.push_back("alpha_" + std::to_string(k));
    for (int r = 1; r <= order.s[k - 1]; ++r)
      dm.column_names.push_back("beta_" + std::to_string(k) + "_" +
                                std::to_string(r));
  }
  for (long t = order.p; t < T; ++t) {
    const long row0 = (t - order.p) * d;
    dm.y.segment(row0, d) = panel.x.row(t).transpose();
    int col = 0;
    for (int k = 1; k <= order.p; ++k) {
      dm.x.block(row0, col++, d, 1) = panel.x.row(t - k).transpose();
      for (int r = 1; r <= order.s[k - 1]; ++r)
        dm.x.block(row0, col++, d, 1) = zall[r - 1].row(t - k).transpose();
    }
  }
  return dm;
}

Eigen::MatrixXd residual_covariance(const Eigen::MatrixXd& residuals) {
  if (residuals.rows() < 1)
    throw InvalidArgument("residual covariance: empty residual matrix");
  return residuals.transpose() * residuals /
         static_cast<double>(residuals.rows());
}

namespace {

// Schwarz criterion for the stacked regression: -2 loglik scales as
// n log det V-hat and the sample holding the q shared coefficients has n d
// scalar entries, so the penalty is q log(nd) on that scale and the
// normalized criterion divides by n. Dividing by nd instead would leave the
// penalty d times too weak and the selector would never stop overfitting.
double bic_of(const Eigen::MatrixXd& vhat, int q, long n, int d) {
  Eigen::LLT<Eigen::MatrixXd> llt(vhat);
  if (llt.info() != Eigen::Success)
    throw NumericError("bic: residual covariance is not positive definite");
  const double logdet =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double nd = static_cast<double>(n) * d;
  return logdet + q * std::log(nd) / static_cast<double>(n);
}

}  // namespace

GnarFit fit_ols(const SeriesPanel& panel, const StageStructure& st,
                const Eigen::MatrixXd& w, const GnarOrder& order) {
  const DesignMatrices dm = build_design(panel, st, w, order);
  const int q = static_cast<int>(dm.x.cols());

  // Stages beyond the network's depth produce identically zero regressors.
  // Those columns are excluded from the regression and their coefficients
  // reported as zero; only genuinely dependent nonzero columns are an error.
  std::vector<int> kept;
  kept.reserve(q);
  for (int c = 0; c < q; ++c)
    if (dm.x.col(c).cwiseAbs().maxCoeff() > 0.0) kept.push_back(c);
  const int q_eff = static_cast<int>(kept.size());
  if (q_eff == 0) throw NumericError("fit: all regressors are zero");
  Eigen::MatrixXd x_eff(dm.x.rows(), q_eff);
  for (int c = 0; c < q_eff; ++c) x_eff.col(c) = dm.x.col(kept[c]);

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x_eff);
  if (qr.rank() < q_eff) {
    const auto& perm = qr.colsPermutation().indices();
    std::string names;
    for (int k = qr.rank(); k < q_eff; ++k) {
      if (!names.empty()) names += ", ";
      names += dm.column_names[kept[perm(k)]];
    }
    throw NumericError("fit: design is rank deficient; dependent columns: " +
                       names);
  }
  const Eigen::VectorXd coef_eff = qr.solve(dm.y);
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(q);
  for (int c = 0; c < q_eff; ++c) coef(kept[c]) = coef_eff(c);

  const int d = st.order();
  GnarFit fit;
  fit.params.order = order;
  fit.params.alpha.resize(order.p);
  fit.params.beta.resize(order.p);
  int col = 0;
  for (int k = 0; k < order.p; ++k) {
    fit.params.alpha(k) = coef(col++);
    fit.params.beta[k].resize(order.s[k]);
    for (int r = 0; r < order.s[k]; ++r) fit.params.beta[k](r) = coef(col++);
  }
  const Eigen::VectorXd resid_flat = dm.y - dm.x * coef;
  fit.residuals.resize(dm.n, d);
  for (long t = 0; t < dm.n; ++t)
    fit.residuals.row(t) = resid_flat.segment(t * d, d).transpose();
  fit.residual_cov = residual_covariance(fit.residuals);
  fit.params.vmat = fit.residual_cov;
  fit.bic = bic_of(fit.residual_cov, q_eff, dm.n, d);
  return fit;
}

OrderSelection select_order_bic(const SeriesPanel& panel,
                                const StageStructure& st,
                                const Eigen::MatrixXd& w, int p_max,
                                int s_max) {
  if (p_max < 1) throw InvalidArgument("order selection: p_max must be >= 1");
  if (s_max < 0) throw InvalidArgument("order selection: negative s_max");
  const int s_cap = std::min(s_max, st.r_max());

  OrderSelection sel;
  sel.bic = std::numeric_limits<double>::infinity();
  bool any = false;
  for (int p = 1; p <= p_max; ++p) {
    if (panel.length() <= p) break;
    // odometer over s in {0..s_cap}^p
    std::vector<int> s(p, 0);
    for (;;) {
      GnarOrder cand{p, s};
      double bic = std::numeric_limits<double>::quiet_NaN();
      try {
        bic = fit_ols(panel, st, w, cand).bic;
      } catch (const Error&) {
        // unusable candidate (rank deficiency, degenerate covariance)
      }
      sel.grid.push_back({cand, bic});
      if (std::isfinite(bic)) {
        const bool better =
            !any || bic < sel.bic ||
            (bic == sel.bic &&
             (cand.n_coefficients() < sel.order.n_coefficients() ||
              (cand.n_coefficients() == sel.order.n_coefficients() &&
               (cand.p < sel.order.p ||
                (cand.p == sel.order.p && cand.s < sel.order.s)))));
        if (better) {
          sel.order = cand;
          sel.bic = bic;
          any = true;
        }
      }
      int k = p - 1;
      while (k >= 0 && s[k] == s_cap) s[k--] = 0;
      if (k < 0) break;
      ++s[k];
    }
  }
  if (!any)
    throw NumericError("order selection: no candidate order could be fitted");
  return sel;
}

}  // namespace gnarspec
