#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

namespace gnarspec {

// =============================================================================
//  Network
//
//  Undirected simple graph on nodes labelled 1..d. Node labels are 1-based on
//  every public query and in the edge-list file format; Eigen matrices returned
//  by accessors are 0-based (label i lives at index i-1).
// =============================================================================
class Network {
 public:
  struct Edge {
    int i = 0, j = 0;     // 1-based, i < j after normalization
    double weight = 1.0;  // supplied weight, 1.0 when none given
  };

  // Throws InvalidArgument on self-loops, labels outside 1..d, nonpositive d,
  // or duplicate edges with conflicting weights.
  Network(int d, std::vector<Edge> edges, bool has_weights = false);

  // Edge-list format: one "i j" or "i j w" per line, '#' starts a comment,
  // blank lines ignored, optional "d=<n>" header line pinning the node count
  // (otherwise d = largest label seen). Mixing weighted and unweighted lines
  // is rejected.
  static Network read_edge_list(const std::string& path);
  static Network parse_edge_list(std::istream& in, const std::string& what);
  void write_edge_list(const std::string& path) const;

  int order() const { return d_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  bool has_edge(int i, int j) const;
  const std::vector<Edge>& edges() const { return edges_; }
  bool has_weights() const { return has_weights_; }

  // d x d 0/1 symmetric matrix, zero diagonal.
  const Eigen::MatrixXd& adjacency() const { return adj_; }

  // Symmetric matrix of supplied edge weights (0 off the edge set). Zero-size
  // when the network was built without weights.
  const Eigen::MatrixXd& supplied_weights() const { return wsup_; }

 private:
  int d_;
  bool has_weights_;
  std::vector<Edge> edges_;
  Eigen::MatrixXd adj_;
  Eigen::MatrixXd wsup_;
};

// =============================================================================
//  StageStructure
//
//  All-pairs shortest-path distances and the r-stage adjacency matrices
//  A_r = 1{delta(i,j) = r}. Disconnected networks are allowed: distances
//  across components are infinite (reported as -1) and stages simply stop at
//  the component boundary. r_max is the largest finite distance.
// =============================================================================
class StageStructure {
 public:
  explicit StageStructure(const Network& g);

  int order() const { return d_; }
  int r_max() const { return r_max_; }

  // 1-based labels; -1 when i and j are in different components.
  int distance(int i, int j) const;

  // A_r for r = 1..r_max (0/1, symmetric, zero diagonal, disjoint supports).
  const Eigen::MatrixXd& stage_adjacency(int r) const;

  // N_r(i): 1-based labels of nodes at distance exactly r from i, ascending.
  std::vector<int> stage_neighbours(int i, int r) const;

  const Network& network() const { return *net_; }
  const Eigen::MatrixXi& distances() const { return dist_; }

 private:
  const Network* net_;
  int d_;
  int r_max_;
  Eigen::MatrixXi dist_;  // -1 encodes infinity
  std::vector<Eigen::MatrixXd> stages_;
};

// Row-stochastic-per-stage weight matrix: for every node i and stage r with
// N_r(i) nonempty, sum_{j in N_r(i)} W_ij = 1; W_ij > 0 only within finite
// stages; zero diagonal. Equal split inside each stage.
Eigen::MatrixXd equal_stage_weights(const StageStructure& st);

// Same invariant, but stage-1 rows are proportional to the supplied edge
// weights (renormalized per row). Deeper stages have no supplied weights, so
// they fall back to the equal split. A stage-1 row whose supplied weights sum
// to zero also falls back to the equal split.
Eigen::MatrixXd stage_weights_from_edges(const StageStructure& st);

// Throws InvalidArgument when W violates the stage row-sum invariant (used by
// consumers that accept externally supplied weight matrices).
void validate_stage_weights(const Eigen::MatrixXd& w, const StageStructure& st,
                            double tol = 1e-10);

// Union of stage adjacencies up to min(2 r_star, r_max); the sparsity pattern
// a stationary stage-r_star model induces on its spectral precision.
// Pre: r_star >= 1.
Eigen::MatrixXd induced_adjacency(const StageStructure& st, int r_star);

// [[A, A], [A, A]]: lifts a d x d pattern to the 2d x 2d augmented problem.
Eigen::MatrixXd augment_mask(const Eigen::MatrixXd& a);

}  // namespace gnarspec
