#include "gnarspec/graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <map>
#include <sstream>

#include "gnarspec/errors.hpp"

namespace gnarspec {

namespace {

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

Network::Network(int d, std::vector<Edge> edges, bool has_weights)
    : d_(d), has_weights_(has_weights) {
  if (d <= 0) throw InvalidArgument("network: node count must be positive");
  std::map<std::pair<int, int>, double> seen;
  for (auto& e : edges) {
    if (e.i < 1 || e.i > d || e.j < 1 || e.j > d)
      throw InvalidArgument("network: node label out of range 1.." +
                            std::to_string(d) + " on edge (" +
                            std::to_string(e.i) + "," + std::to_string(e.j) +
                            ")");
    if (e.i == e.j)
      throw InvalidArgument("network: self-loop at node " +
                            std::to_string(e.i));
    if (e.i > e.j) std::swap(e.i, e.j);
    auto key = std::make_pair(e.i, e.j);
    auto it = seen.find(key);
    if (it != seen.end()) {
      if (it->second != e.weight)
        throw InvalidArgument("network: duplicate edge (" +
                              std::to_string(e.i) + "," + std::to_string(e.j) +
                              ") with conflicting weights");
      continue;  // exact duplicate collapses
    }
    seen.emplace(key, e.weight);
  }
  edges_.reserve(seen.size());
  adj_ = Eigen::MatrixXd::Zero(d, d);
  wsup_ = has_weights_ ? Eigen::MatrixXd::Zero(d, d) : Eigen::MatrixXd();
  for (const auto& [key, w] : seen) {
    edges_.push_back({key.first, key.second, w});
    adj_(key.first - 1, key.second - 1) = 1.0;
    adj_(key.second - 1, key.first - 1) = 1.0;
    if (has_weights_) {
      wsup_(key.first - 1, key.second - 1) = w;
      wsup_(key.second - 1, key.first - 1) = w;
    }
  }
}

bool Network::has_edge(int i, int j) const {
  if (i < 1 || i > d_ || j < 1 || j > d_)
    throw InvalidArgument("network: node label out of range");
  return adj_(i - 1, j - 1) != 0.0;
}

Network Network::parse_edge_list(std::istream& in, const std::string& what) {
  std::vector<Edge> edges;
  int declared_d = -1;
  int max_label = 0;
  int n_weighted = 0, n_plain = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trimmed(line);
    if (line.empty()) continue;
    if (line.rfind("d=", 0) == 0) {
      try {
        declared_d = std::stoi(line.substr(2));
      } catch (const std::exception&) {
        throw InvalidArgument(what + ":" + std::to_string(lineno) +
                              ": malformed node-count header '" + line + "'");
      }
      continue;
    }
    std::istringstream ls(line);
    Edge e;
    if (!(ls >> e.i >> e.j))
      throw InvalidArgument(what + ":" + std::to_string(lineno) +
                            ": expected 'i j [weight]', got '" + line + "'");
    double w;
    if (ls >> w) {
      e.weight = w;
      ++n_weighted;
    } else {
      ++n_plain;
    }
    std::string rest;
    if (ls.clear(), ls >> rest)
      throw InvalidArgument(what + ":" + std::to_string(lineno) +
                            ": trailing tokens after edge '" + line + "'");
    if (e.i < 1 || e.j < 1)
      throw InvalidArgument(what + ":" + std::to_string(lineno) +
                            ": node labels are 1-based");
    max_label = std::max({max_label, e.i, e.j});
    edges.push_back(e);
  }
  if (n_weighted > 0 && n_plain > 0)
    throw InvalidArgument(what + ": mixes weighted and unweighted edge lines");
  const int d = declared_d > 0 ? declared_d : max_label;
  if (d <= 0) throw InvalidArgument(what + ": no nodes declared or used");
  return Network(d, std::move(edges), n_weighted > 0);
}

Network Network::read_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open edge list '" + path + "'");
  return parse_edge_list(in, path);
}

void Network::write_edge_list(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write edge list '" + path + "'");
  out << "d=" << d_ << "\n";
  out.precision(17);
  for (const auto& e : edges_) {
    out << e.i << " " << e.j;
    if (has_weights_) out << " " << e.weight;
    out << "\n";
  }
  if (!out) throw IoError("failed writing edge list '" + path + "'");
}

StageStructure::StageStructure(const Network& g)
    : net_(&g), d_(g.order()), r_max_(0) {
  dist_ = Eigen::MatrixXi::Constant(d_, d_, -1);
  const auto& a = g.adjacency();
  // BFS per source: O(d (d + m)), fine at the intended scale
  for (int s = 0; s < d_; ++s) {
    dist_(s, s) = 0;
    std::deque<int> q{s};
    while (!q.empty()) {
      const int u = q.front();
      q.pop_front();
      for (int v = 0; v < d_; ++v) {
        if (a(u, v) != 0.0 && dist_(s, v) < 0) {
          dist_(s, v) = dist_(s, u) + 1;
          q.push_back(v);
        }
      }
    }
  }
  r_max_ = dist_.maxCoeff();
  stages_.resize(r_max_);
  for (int r = 1; r <= r_max_; ++r)
    stages_[r - 1] = (dist_.array() == r).cast<double>();
}

int StageStructure::distance(int i, int j) const {
  if (i < 1 || i > d_ || j < 1 || j > d_)
    throw InvalidArgument("stage structure: node label out of range");
  return dist_(i - 1, j - 1);
}

const Eigen::MatrixXd& StageStructure::stage_adjacency(int r) const {
  if (r < 1 || r > r_max_)
    throw InvalidArgument("stage structure: stage " + std::to_string(r) +
                          " outside 1..r_max=" + std::to_string(r_max_));
  return stages_[r - 1];
}

std::vector<int> StageStructure::stage_neighbours(int i, int r) const {
  if (i < 1 || i > d_)
    throw InvalidArgument("stage structure: node label out of range");
  std::vector<int> out;
  for (int j = 0; j < d_; ++j)
    if (dist_(i - 1, j) == r) out.push_back(j + 1);
  return out;
}

Eigen::MatrixXd equal_stage_weights(const StageStructure& st) {
  const int d = st.order();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d, d);
  const auto& dist = st.distances();
  for (int i = 0; i < d; ++i) {
    std::vector<int> count(st.r_max() + 1, 0);
    for (int j = 0; j < d; ++j)
      if (j != i && dist(i, j) > 0) ++count[dist(i, j)];
    for (int j = 0; j < d; ++j)
      if (j != i && dist(i, j) > 0) w(i, j) = 1.0 / count[dist(i, j)];
  }
  return w;
}

Eigen::MatrixXd stage_weights_from_edges(const StageStructure& st) {
  Eigen::MatrixXd w = equal_stage_weights(st);
  const Network& g = st.network();
  if (!g.has_weights()) return w;
  const int d = st.order();
  const auto& sup = g.supplied_weights();
  const auto& dist = st.distances();
  for (int i = 0; i < d; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < d; ++j)
      if (dist(i, j) == 1) row_sum += sup(i, j);
    if (row_sum <= 0.0) continue;  // degenerate supplied row: keep equal split
    for (int j = 0; j < d; ++j)
      if (dist(i, j) == 1) w(i, j) = sup(i, j) / row_sum;
  }
  return w;
}

void validate_stage_weights(const Eigen::MatrixXd& w, const StageStructure& st,
                            double tol) {
  const int d = st.order();
  if (w.rows() != d || w.cols() != d)
    throw InvalidArgument("weight matrix: expected " + std::to_string(d) + "x" +
                          std::to_string(d));
  const auto& dist = st.distances();
  for (int i = 0; i < d; ++i) {
    if (w(i, i) != 0.0)
      throw InvalidArgument("weight matrix: nonzero diagonal at node " +
                            std::to_string(i + 1));
    std::vector<double> sums(st.r_max() + 1, 0.0);
    std::vector<bool> nonempty(st.r_max() + 1, false);
    for (int j = 0; j < d; ++j) {
      if (j == i) continue;
      if (dist(i, j) < 0) {
        if (w(i, j) != 0.0)
          throw InvalidArgument(
              "weight matrix: positive weight across components at (" +
              std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
        continue;
      }
      sums[dist(i, j)] += w(i, j);
      nonempty[dist(i, j)] = true;
    }
    for (int r = 1; r <= st.r_max(); ++r)
      if (nonempty[r] && std::abs(sums[r] - 1.0) > tol)
        throw InvalidArgument("weight matrix: stage " + std::to_string(r) +
                              " row sum at node " + std::to_string(i + 1) +
                              " is " + std::to_string(sums[r]) + ", not 1");
  }
}

Eigen::MatrixXd induced_adjacency(const StageStructure& st, int r_star) {
  if (r_star < 1)
    throw InvalidArgument("induced adjacency: r_star must be >= 1");
  const int cap = std::min(2 * r_star, st.r_max());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(st.order(), st.order());
  for (int r = 1; r <= cap; ++r) a += st.stage_adjacency(r);
  return a;
}

Eigen::MatrixXd augment_mask(const Eigen::MatrixXd& a) {
  const auto d = a.rows();
  if (a.cols() != d) throw InvalidArgument("augment mask: matrix not square");
  Eigen::MatrixXd m(2 * d, 2 * d);
  m << a, a, a, a;
  return m;
}

}  // namespace gnarspec
