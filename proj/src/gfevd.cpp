#include "gnarspec/gfevd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "csvutil.hpp"
#include "gnarspec/errors.hpp"

namespace gnarspec {

using nlohmann::json;

OhlcPanel OhlcPanel::read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open OHLC file '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw InvalidArgument("OHLC '" + path + "': empty file");
  {
    auto header = detail::split_csv_line(line);
    for (auto& h : header)
      std::transform(h.begin(), h.end(), h.begin(),
                     [](unsigned char c) { return std::tolower(c); });
    const std::vector<std::string> expected{"date", "node", "open",
                                            "high", "low",  "close"};
    if (header != expected)
      throw InvalidArgument("OHLC '" + path +
                            "': header must be date,node,open,high,low,close");
  }
  struct Row {
    double o, h, l, c;
  };
  std::vector<std::string> node_order;
  std::map<std::string, std::map<std::string, Row>> by_node;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 6)
      throw InvalidArgument("OHLC '" + path + "':" + std::to_string(lineno) +
                            ": expected 6 fields");
    const std::string& date = f[0];
    const std::string& node = f[1];
    Row r{detail::parse_double(f[2], path, lineno),
          detail::parse_double(f[3], path, lineno),
          detail::parse_double(f[4], path, lineno),
          detail::parse_double(f[5], path, lineno)};
    if (r.l > std::min(r.o, r.c) || std::max(r.o, r.c) > r.h)
      throw InvalidArgument("OHLC '" + path + "': price ordering violated at (" +
                            date + ", " + node +
                            "): need low <= open,close <= high");
    auto& node_rows = by_node[node];
    if (node_rows.empty()) node_order.push_back(node);
    if (!node_rows.emplace(date, r).second)
      throw InvalidArgument("OHLC '" + path + "': duplicate row for (" + date +
                            ", " + node + ")");
  }
  if (node_order.empty())
    throw InvalidArgument("OHLC '" + path + "': no data rows");

  const auto& ref = by_node[node_order.front()];
  for (const auto& node : node_order) {
    const auto& rows = by_node[node];
    if (rows.size() != ref.size())
      throw InvalidArgument("OHLC '" + path + "': node '" + node +
                            "' covers a different date set than '" +
                            node_order.front() + "'");
    for (const auto& [date, r] : ref)
      if (!rows.count(date))
        throw InvalidArgument("OHLC '" + path + "': node '" + node +
                              "' is missing date " + date);
  }

  OhlcPanel p;
  p.nodes = node_order;
  for (const auto& [date, r] : ref) p.dates.push_back(date);
  const long T = static_cast<long>(p.dates.size());
  const int d = static_cast<int>(p.nodes.size());
  p.open.resize(T, d);
  p.high.resize(T, d);
  p.low.resize(T, d);
  p.close.resize(T, d);
  for (int i = 0; i < d; ++i) {
    const auto& rows = by_node[p.nodes[i]];
    long t = 0;
    for (const auto& date : p.dates) {
      const Row& r = rows.at(date);
      p.open(t, i) = r.o;
      p.high(t, i) = r.h;
      p.low(t, i) = r.l;
      p.close(t, i) = r.c;
      ++t;
    }
  }
  return p;
}

SeriesPanel garman_klass(const OhlcPanel& ohlc) {
  const long T = ohlc.length();
  const int d = ohlc.width();
  Eigen::MatrixXd v(T, d);
  for (long t = 0; t < T; ++t)
    for (int i = 0; i < d; ++i) {
      const double o = ohlc.open(t, i), h = ohlc.high(t, i),
                   l = ohlc.low(t, i), c = ohlc.close(t, i);
      const double range = h - l;
      const double co = c - o;
      v(t, i) = 0.511 * range * range -
                0.019 * (co * (h + l - 2.0 * o) -
                         2.0 * (h - o) * (l - o)) -
                0.383 * co * co;
    }
  SeriesPanel p = SeriesPanel::from_matrix(std::move(v));
  p.names = ohlc.nodes;
  return p;
}

SeriesPanel log_range_volatility(const OhlcPanel& ohlc) {
  SeriesPanel p = garman_klass(ohlc);
  p.x = p.x.cwiseMax(1e-12).array().log().matrix();
  return p;
}

namespace {

double soft(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

// Coordinate-descent lasso: min (1/2n)||y - X b||^2 + lambda ||b||_1.
// X columns are standardized by the caller. Warm-started via b.
void lasso_cd(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
              double lambda, Eigen::VectorXd& b) {
  const long n = x.rows();
  const int q = static_cast<int>(x.cols());
  Eigen::VectorXd g(q);  // diag of X^T X / n
  for (int j = 0; j < q; ++j) g(j) = x.col(j).squaredNorm() / n;
  Eigen::VectorXd r = y - x * b;
  for (int iter = 0; iter < 1000; ++iter) {
    double change = 0.0;
    for (int j = 0; j < q; ++j) {
      if (g(j) == 0.0) continue;
      const double rho = x.col(j).dot(r) / n + g(j) * b(j);
      const double bj = soft(rho, lambda) / g(j);
      if (bj != b(j)) {
        r += x.col(j) * (b(j) - bj);
        change = std::max(change, std::abs(bj - b(j)));
        b(j) = bj;
      }
    }
    if (change < 1e-7) break;
  }
}

struct EquationData {
  Eigen::MatrixXd x;  // standardized lagged predictors
  Eigen::MatrixXd y;  // all responses (shared predictors)
  Eigen::VectorXd scale;
};

EquationData build_lagged(const Eigen::MatrixXd& xc, int p,
                          const std::vector<std::string>& names) {
  const long T = xc.rows();
  const int d = static_cast<int>(xc.cols());
  const long n = T - p;
  EquationData e;
  e.x.resize(n, p * d);
  e.y.resize(n, d);
  for (long t = p; t < T; ++t) {
    e.y.row(t - p) = xc.row(t);
    for (int k = 1; k <= p; ++k)
      e.x.block(t - p, (k - 1) * d, 1, d) = xc.row(t - k);
  }
  e.scale.resize(p * d);
  for (int j = 0; j < p * d; ++j) {
    const double mu = e.x.col(j).mean();
    e.x.col(j).array() -= mu;
    const double sd = std::sqrt(e.x.col(j).squaredNorm() / n);
    if (sd <= 0.0)
      throw InvalidArgument("lasso var: node '" + names[j % d] +
                            "' has zero variance in the lagged design");
    e.x.col(j) /= sd;
    e.scale(j) = sd;
  }
  return e;
}

}  // namespace

LassoVarFit lasso_var(const SeriesPanel& panel, const LassoVarOptions& opt) {
  const long T = panel.length();
  const int d = panel.width();
  if (d < 1) throw InvalidArgument("lasso var: empty panel");
  if (opt.folds < 2) throw InvalidArgument("lasso var: need at least 2 folds");
  if (opt.n_lambda < 1)
    throw InvalidArgument("lasso var: need at least one lambda");
  const int p_lo = opt.p >= 1 ? opt.p : 1;
  const int p_hi = opt.p >= 1 ? opt.p : opt.p_max;
  if (p_hi < p_lo) throw InvalidArgument("lasso var: bad lag range");

  Eigen::VectorXd mean(d);
  for (int i = 0; i < d; ++i) mean(i) = panel.x.col(i).mean();
  for (int i = 0; i < d; ++i) {
    double var = (panel.x.col(i).array() - mean(i)).square().sum();
    if (var <= 0.0)
      throw InvalidArgument("lasso var: node '" + panel.names[i] +
                            "' has zero variance");
  }
  const Eigen::MatrixXd xc = panel.x.rowwise() - mean.transpose();

  LassoVarFit best;
  double best_bic = std::numeric_limits<double>::infinity();
  for (int p = p_lo; p <= p_hi; ++p) {
    if (T - p < opt.folds)
      throw InvalidArgument("lasso var: fewer usable rows than folds at p = " +
                            std::to_string(p));
    EquationData eq = build_lagged(xc, p, panel.names);
    const long n = eq.x.rows();
    const int q = static_cast<int>(eq.x.cols());

    // contiguous time blocks
    std::vector<std::pair<long, long>> folds;
    for (int f = 0; f < opt.folds; ++f)
      folds.emplace_back(f * n / opt.folds, (f + 1) * n / opt.folds);

    Eigen::MatrixXd beta_std(q, d);
    std::vector<double> lambda_chosen(d);
    for (int i = 0; i < d; ++i) {
      const Eigen::VectorXd y = eq.y.col(i);
      const double lambda_max = (eq.x.transpose() * y).cwiseAbs().maxCoeff() / n;
      std::vector<double> grid(opt.n_lambda);
      for (int g = 0; g < opt.n_lambda; ++g)
        grid[g] = opt.n_lambda == 1
                      ? lambda_max
                      : lambda_max * std::pow(1e-3, static_cast<double>(g) /
                                                        (opt.n_lambda - 1));

      std::vector<double> cv_mse(opt.n_lambda, 0.0);
      for (const auto& [lo, hi] : folds) {
        const long n_test = hi - lo;
        const long n_train = n - n_test;
        Eigen::MatrixXd xt(n_train, q);
        Eigen::VectorXd yt(n_train);
        xt.topRows(lo) = eq.x.topRows(lo);
        yt.head(lo) = y.head(lo);
        xt.bottomRows(n - hi) = eq.x.bottomRows(n - hi);
        yt.tail(n - hi) = y.tail(n - hi);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(q);
        for (int g = 0; g < opt.n_lambda; ++g) {
          lasso_cd(xt, yt, grid[g], b);  // warm start along the path
          const Eigen::VectorXd pred = eq.x.middleRows(lo, n_test) * b;
          cv_mse[g] += (y.segment(lo, n_test) - pred).squaredNorm();
        }
      }
      int pick = 0;
      for (int g = 1; g < opt.n_lambda; ++g)
        if (cv_mse[g] < cv_mse[pick]) pick = g;
      lambda_chosen[i] = grid[pick];

      Eigen::VectorXd b = Eigen::VectorXd::Zero(q);
      for (int g = 0; g <= pick; ++g) lasso_cd(eq.x, y, grid[g], b);
      beta_std.col(i) = b;
    }

    LassoVarFit fit;
    fit.p = p;
    fit.mean = mean;
    fit.lambda = lambda_chosen;
    fit.pi.assign(p, Eigen::MatrixXd::Zero(d, d));
    long nnz = 0;
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < p; ++k)
        for (int j = 0; j < d; ++j) {
          const double b = beta_std(k * d + j, i) / eq.scale(k * d + j);
          fit.pi[k](i, j) = b;
          if (b != 0.0) ++nnz;
        }
    fit.residuals = eq.y;
    for (int k = 0; k < p; ++k) {
      Eigen::MatrixXd lagged(n, d);
      for (long t = 0; t < n; ++t) lagged.row(t) = xc.row(t + p - k - 1);
      fit.residuals -= lagged * fit.pi[k].transpose();
    }
    fit.vhat = fit.residuals.transpose() * fit.residuals /
               static_cast<double>(n);
    Eigen::LLT<Eigen::MatrixXd> llt(fit.vhat);
    if (llt.info() != Eigen::Success)
      throw NumericError("lasso var: residual covariance not positive definite");
    const double logdet =
        2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    fit.bic = logdet + static_cast<double>(nnz) * std::log(static_cast<double>(n)) /
                           static_cast<double>(n);

    if (fit.bic < best_bic) {
      best_bic = fit.bic;
      best = std::move(fit);
    }
  }
  return best;
}

std::vector<Eigen::MatrixXd> ma_coefficients(
    const std::vector<Eigen::MatrixXd>& pi, int H) {
  if (pi.empty()) throw InvalidArgument("ma coefficients: no lag matrices");
  if (H < 0) throw InvalidArgument("ma coefficients: negative horizon");
  const auto d = pi[0].rows();
  for (const auto& m : pi)
    if (m.rows() != d || m.cols() != d)
      throw InvalidArgument("ma coefficients: lag matrices must be d x d");
  const int p = static_cast<int>(pi.size());
  std::vector<Eigen::MatrixXd> b;
  b.reserve(H + 1);
  b.push_back(Eigen::MatrixXd::Identity(d, d));
  for (int h = 1; h <= H; ++h) {
    Eigen::MatrixXd bh = Eigen::MatrixXd::Zero(d, d);
    for (int j = 1; j <= std::min(h, p); ++j) bh += b[h - j] * pi[j - 1];
    b.push_back(std::move(bh));
  }
  return b;
}

Eigen::MatrixXd gfevd(const std::vector<Eigen::MatrixXd>& pi,
                      const Eigen::MatrixXd& vhat, int H, bool include_h0) {
  if (H < 1) throw InvalidArgument("gfevd: horizon must be >= 1");
  const auto d = vhat.rows();
  if (vhat.cols() != d) throw InvalidArgument("gfevd: covariance not square");
  if (!vhat.isApprox(vhat.transpose(), 1e-10))
    throw InvalidArgument("gfevd: covariance not symmetric");
  for (Eigen::Index j = 0; j < d; ++j)
    if (vhat(j, j) <= 0.0)
      throw NumericError("gfevd: nonpositive innovation variance at node " +
                         std::to_string(j + 1));
  const auto b = ma_coefficients(pi, H);
  const int h_start = include_h0 ? 0 : 1;

  Eigen::MatrixXd num = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd den = Eigen::VectorXd::Zero(d);
  for (int h = h_start; h <= H; ++h) {
    const Eigen::MatrixXd bv = b[h] * vhat;
    num += bv.cwiseProduct(bv);
    den += (bv * b[h].transpose()).diagonal();
  }
  Eigen::MatrixXd psi(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (den(i) <= 0.0)
      throw NumericError(
          "gfevd: degenerate forecast-error variance at node " +
          std::to_string(i + 1));
    for (Eigen::Index j = 0; j < d; ++j)
      psi(i, j) = num(i, j) / (vhat(j, j) * den(i));
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    const double row = psi.row(i).sum();
    if (row <= 0.0)
      throw NumericError("gfevd: zero decomposition row at node " +
                         std::to_string(i + 1));
    psi.row(i) /= row;
  }
  return psi;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

bool connected_at(const Eigen::MatrixXd& s, double tau) {
  const int d = static_cast<int>(s.rows());
  UnionFind uf(d);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (s(i, j) >= tau) uf.unite(i, j);
  const int root = uf.find(0);
  for (int i = 1; i < d; ++i)
    if (uf.find(i) != root) return false;
  return true;
}

}  // namespace

GfevdNetwork build_network(const Eigen::MatrixXd& psi,
                           const std::vector<double>* candidate_grid) {
  const auto d = psi.rows();
  if (psi.cols() != d) throw InvalidArgument("gfevd network: psi not square");
  if (d < 2) throw InvalidArgument("gfevd network: need at least two nodes");
  if (psi.minCoeff() < -1e-12)
    throw InvalidArgument("gfevd network: negative decomposition shares");

  Eigen::MatrixXd s(d, d);  // pairwise strength max(psi_ij, psi_ji)
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      s(i, j) = std::max(psi(i, j), psi(j, i));

  std::vector<double> grid;
  if (candidate_grid) {
    grid = *candidate_grid;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (grid.empty())
      throw InvalidArgument("gfevd network: empty candidate grid");
  } else {
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = i + 1; j < d; ++j) grid.push_back(s(i, j));
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  }

  if (!connected_at(s, grid.front()))
    throw NumericError(
        "gfevd network: no candidate threshold yields a connected network");
  // connectivity is monotone in tau, so bisect for the last connected one
  size_t lo = 0, hi = grid.size() - 1;
  while (lo < hi) {
    const size_t mid = lo + (hi - lo + 1) / 2;
    if (connected_at(s, grid[mid]))
      lo = mid;
    else
      hi = mid - 1;
  }

  GfevdNetwork net;
  net.tau_star = grid[lo];
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (s(i, j) >= net.tau_star)
        net.edges.push_back(
            {i + 1, j + 1, 0.5 * (psi(i, j) + psi(j, i))});
  return net;
}

Network GfevdNetwork::to_network(int d) const {
  return Network(d, edges, /*has_weights=*/true);
}

GfevdResult run_gfevd(const OhlcPanel& ohlc, int horizon,
                      const LassoVarOptions& opt, bool include_h0) {
  GfevdResult res;
  res.nodes = ohlc.nodes;
  const SeriesPanel logvol = log_range_volatility(ohlc);
  res.fit = lasso_var(logvol, opt);
  res.psi = gfevd(res.fit.pi, res.fit.vhat, horizon, include_h0);
  res.network = build_network(res.psi);
  return res;
}

void GfevdResult::write_json(const std::string& path) const {
  json j;
  j["nodes"] = nodes;
  j["p"] = fit.p;
  j["lambda"] = fit.lambda;
  j["tau_star"] = network.tau_star;
  json psi_rows = json::array();
  for (Eigen::Index i = 0; i < psi.rows(); ++i)
    psi_rows.push_back(std::vector<double>(psi.row(i).begin(), psi.row(i).end()));
  j["psi"] = psi_rows;
  json edges = json::array();
  for (const auto& e : network.edges)
    edges.push_back({{"i", e.i}, {"j", e.j}, {"weight", e.weight}});
  j["edges"] = edges;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write gfevd result '" + path + "'");
  out << j.dump(2) << "\n";
}

void GfevdResult::write_edge_list(const std::string& path) const {
  network.to_network(static_cast<int>(nodes.size())).write_edge_list(path);
}

}  // namespace gnarspec
