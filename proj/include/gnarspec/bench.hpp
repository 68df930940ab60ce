#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gnarspec/gnar.hpp"
#include "gnarspec/spectra.hpp"

namespace gnarspec::bench {

// The seven estimators compared by the Monte-Carlo harness:
//   EM1  parametric fit of the network model itself (OLS), plug-in spectrum
//   EM2  unrestricted VAR OLS, plug-in spectrum
//   EM3  EM2 penalized frequency-wise with the induced-sparsity mask
//   EM4  EM2 penalized with the one-step adjacency mask
//   EM5  smoothed periodogram penalized with the induced-sparsity mask
//   EM6  smoothed periodogram penalized with the adjacency mask
//   EM7  plain smoothed periodogram
enum class Method { em1, em2, em3, em4, em5, em6, em7 };

// Accepts "EM1".."EM7" (any case) plus descriptive aliases
// ("gnar", "var", "var+induced", "var+a1", "np+induced", "np+a1", "np").
Method method_from_string(const std::string& s);
std::string to_string(Method m);

// The five built-in simulation models, all stationary on any network deep
// enough for their stage orders (M3..M5 need r_max >= 3).
std::vector<std::pair<std::string, GnarParams>> builtin_models();
GnarParams builtin_model(const std::string& name);  // "M1".."M5", any case

struct ExperimentSpec {
  std::string name = "experiment";
  std::string kind = "rmse";         // "rmse" | "hierarchy"
  std::vector<std::string> models;   // builtin ids or GnarParams JSON paths
  std::string network;               // edge-list path
  std::vector<long> lengths = {100, 200, 500, 1000};
  int replicates = 100;
  std::vector<Method> methods;       // rmse kind; empty = all seven
  std::string mode = "known_order";  // "known_order" | "bic_misspec"
  std::uint64_t seed = 1;
  int bandwidth = -1;  // smoothing half-width; -1 = floor(sqrt(T))
  int p_max = 3;       // bic_misspec lag search bound
  int s_max = 3;       // bic_misspec stage search bound
  long burn_in = 50;
  int r_star = 0;      // hierarchy depth; 0 = model's deepest stage

  // Relative model/network paths in the file are resolved against the spec
  // file's directory. "model": "..." is accepted as a one-element "models".
  static ExperimentSpec read_json(const std::string& path);
  void validate() const;
};

struct ReportRow {
  std::string model;
  std::string method;  // "EM1".. for rmse runs, "r=1".. for hierarchy runs
  long T = 0;
  std::string target;  // spectrum | coherence | partial_coherence
                       // | spectrum_vs_rtruth (hierarchy only)
  double rmse = 0.0;
  int excluded = 0;    // replicates dropped because the method failed
  int replicates = 0;  // replicates included (excluded + replicates = R)
  double runtime_s = 0.0;
};

struct Report {
  std::string name, kind, mode, network;
  std::uint64_t seed = 0;
  std::vector<ReportRow> rows;

  // CSV columns: model,method,T,target,rmse,n_excluded. Bit-identical across
  // reruns of the same spec and seed; runtime_s appears only in the JSON
  // form and is the one field that varies run to run.
  void write_csv(const std::string& path) const;
  void write_json(const std::string& path) const;
};

// sqrt( (1/(R n_T)) sum_rep sum_omega ||est - truth||_F^2 ); fields must
// share grid, kind and dimension.
double rmse_of(const std::vector<SpectralField>& estimates,
               const SpectralField& truth);

// Runs the experiment the spec describes (dispatching on kind), replicates
// spread over n_threads workers (0 = machine cores). The report is
// deterministic for a given spec regardless of thread count.
Report run_experiment(const ExperimentSpec& spec, int n_threads = 0);

// The kind = "hierarchy" path with an explicit depth override.
Report run_hierarchy_experiment(const ExperimentSpec& spec, int r_star,
                                int n_threads = 0);

}  // namespace gnarspec::bench
