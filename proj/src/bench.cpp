#include "gnarspec/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <thread>

#include <json.hpp>

#include "gnarspec/errors.hpp"
#include "gnarspec/graph.hpp"
#include "gnarspec/hierarchy.hpp"
#include "gnarspec/periodogram.hpp"
#include "gnarspec/rng.hpp"

namespace gnarspec::bench {

using nlohmann::json;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

Method method_from_string(const std::string& s) {
  const std::string k = lower(s);
  if (k == "em1" || k == "gnar") return Method::em1;
  if (k == "em2" || k == "var") return Method::em2;
  if (k == "em3" || k == "var+induced") return Method::em3;
  if (k == "em4" || k == "var+a1") return Method::em4;
  if (k == "em5" || k == "np+induced") return Method::em5;
  if (k == "em6" || k == "np+a1") return Method::em6;
  if (k == "em7" || k == "np") return Method::em7;
  throw InvalidArgument("unknown method '" + s + "' (expected EM1..EM7)");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::em1: return "EM1";
    case Method::em2: return "EM2";
    case Method::em3: return "EM3";
    case Method::em4: return "EM4";
    case Method::em5: return "EM5";
    case Method::em6: return "EM6";
    case Method::em7: return "EM7";
  }
  return "?";
}

namespace {

GnarParams make_model(int p, std::vector<int> s, std::vector<double> alpha,
                      std::vector<std::vector<double>> beta) {
  GnarParams m;
  m.order.p = p;
  m.order.s = std::move(s);
  m.alpha = Eigen::Map<const Eigen::VectorXd>(alpha.data(), alpha.size());
  for (const auto& b : beta)
    m.beta.emplace_back(Eigen::Map<const Eigen::VectorXd>(b.data(), b.size()));
  m.validate();
  return m;
}

}  // namespace

std::vector<std::pair<std::string, GnarParams>> builtin_models() {
  std::vector<std::pair<std::string, GnarParams>> out;
  out.emplace_back("M1", make_model(2, {1, 1}, {0.2, 0.2}, {{0.2}, {0.1}}));
  out.emplace_back("M2",
                   make_model(2, {1, 2}, {0.1, 0.1}, {{0.075}, {0.05, 0.15}}));
  out.emplace_back("M3", make_model(2, {2, 3}, {0.2, 0.1},
                                    {{0.075, 0.05}, {0.05, 0.05, 0.1}}));
  out.emplace_back("M4", make_model(3, {1, 2, 3}, {0.1, 0.075, 0.05},
                                    {{0.1}, {0.075, 0.075}, {0.05, 0.05, 0.05}}));
  out.emplace_back("M5", make_model(3, {3, 3, 3}, {0.15, 0.1, 0.05},
                                    {{0.05, 0.05, 0.05},
                                     {0.05, 0.05, 0.05},
                                     {0.05, 0.05, 0.05}}));
  return out;
}

GnarParams builtin_model(const std::string& name) {
  const std::string k = lower(name);
  for (auto& [id, params] : builtin_models())
    if (lower(id) == k) return params;
  throw InvalidArgument("unknown built-in model '" + name +
                        "' (expected M1..M5)");
}

ExperimentSpec ExperimentSpec::read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open experiment spec '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidArgument("experiment spec '" + path + "': " + e.what());
  }

  ExperimentSpec spec;
  const auto dir = std::filesystem::path(path).parent_path();
  auto resolve = [&dir](const std::string& p) {
    std::filesystem::path fp(p);
    if (fp.is_relative()) fp = dir / fp;
    return fp.string();
  };

  try {
    spec.name = j.value("name", std::filesystem::path(path).stem().string());
    spec.kind = j.value("kind", std::string("rmse"));
    if (j.contains("models"))
      spec.models = j.at("models").get<std::vector<std::string>>();
    else if (j.contains("model"))
      spec.models = {j.at("model").get<std::string>()};
    if (!j.contains("network"))
      throw InvalidArgument("experiment spec '" + path + "': missing network");
    spec.network = resolve(j.at("network").get<std::string>());
    if (j.contains("T")) {
      if (j.at("T").is_array())
        spec.lengths = j.at("T").get<std::vector<long>>();
      else
        spec.lengths = {j.at("T").get<long>()};
    }
    spec.replicates = j.value("replicates", 100);
    if (j.contains("methods")) {
      spec.methods.clear();
      for (const auto& m : j.at("methods"))
        spec.methods.push_back(method_from_string(m.get<std::string>()));
    }
    spec.mode = j.value("mode", std::string("known_order"));
    spec.seed = j.value("seed", std::uint64_t{1});
    spec.bandwidth = j.value("bandwidth", -1);
    spec.p_max = j.value("p_max", 3);
    spec.s_max = j.value("s_max", 3);
    spec.burn_in = j.value("burn_in", long{50});
    spec.r_star = j.value("r_star", 0);
  } catch (const json::exception& e) {
    throw InvalidArgument("experiment spec '" + path + "': " + e.what());
  }

  // model entries that are not builtin ids are parameter-file paths
  for (auto& m : spec.models) {
    const std::string k = lower(m);
    if (k != "m1" && k != "m2" && k != "m3" && k != "m4" && k != "m5")
      m = resolve(m);
  }
  spec.validate();
  return spec;
}

void ExperimentSpec::validate() const {
  if (kind != "rmse" && kind != "hierarchy")
    throw InvalidArgument("experiment: kind must be rmse or hierarchy, got '" +
                          kind + "'");
  if (mode != "known_order" && mode != "bic_misspec")
    throw InvalidArgument(
        "experiment: mode must be known_order or bic_misspec, got '" + mode +
        "'");
  if (models.empty()) throw InvalidArgument("experiment: no models");
  if (network.empty()) throw InvalidArgument("experiment: no network");
  if (lengths.empty()) throw InvalidArgument("experiment: empty T list");
  for (long T : lengths)
    if (T < 4)
      throw InvalidArgument("experiment: T must be >= 4, got " +
                            std::to_string(T));
  if (replicates < 1) throw InvalidArgument("experiment: replicates must be >= 1");
  if (kind == "rmse" && !methods.empty()) {
    // duplicates would double-count rows
    auto ms = methods;
    std::sort(ms.begin(), ms.end());
    if (std::adjacent_find(ms.begin(), ms.end()) != ms.end())
      throw InvalidArgument("experiment: duplicate method");
  }
  if (p_max < 1 || s_max < 0)
    throw InvalidArgument("experiment: bad search bounds");
  if (burn_in < 0) throw InvalidArgument("experiment: negative burn_in");
  if (r_star < 0) throw InvalidArgument("experiment: negative r_star");
}

double rmse_of(const std::vector<SpectralField>& estimates,
               const SpectralField& truth) {
  if (estimates.empty()) throw InvalidArgument("rmse: no estimates");
  const size_t n = truth.size();
  double total = 0.0;
  for (const auto& est : estimates) {
    if (est.size() != n || est.dim() != truth.dim())
      throw InvalidArgument("rmse: estimate and truth grids do not match");
    for (size_t l = 0; l < n; ++l)
      total += (est.m[l] - truth.m[l]).squaredNorm();
  }
  return std::sqrt(total / (static_cast<double>(estimates.size()) *
                            static_cast<double>(n)));
}

void Report::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report '" + path + "'");
  out << "model,method,T,target,rmse,n_excluded\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.rmse);
    out << r.model << ',' << r.method << ',' << r.T << ',' << r.target << ','
        << buf << ',' << r.excluded << '\n';
  }
}

void Report::write_json(const std::string& path) const {
  json j;
  j["name"] = name;
  j["kind"] = kind;
  j["mode"] = mode;
  j["network"] = network;
  j["seed"] = seed;
  json rs = json::array();
  for (const auto& r : rows)
    rs.push_back({{"model", r.model},
                  {"method", r.method},
                  {"T", r.T},
                  {"target", r.target},
                  {"rmse", r.rmse},
                  {"excluded", r.excluded},
                  {"replicates", r.replicates},
                  {"runtime_s", r.runtime_s}});
  j["rows"] = rs;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report '" + path + "'");
  out << j.dump(2) << "\n";
}

namespace {

constexpr int kTargets = 4;  // spectrum, coherence, partial, spectrum_vs_rtruth
const char* target_name(int t) {
  switch (t) {
    case 0: return "spectrum";
    case 1: return "coherence";
    case 2: return "partial_coherence";
    default: return "spectrum_vs_rtruth";
  }
}

struct MethodOutcome {
  bool ok = false;
  double err[kTargets] = {0, 0, 0, 0};  // summed squared Frobenius over grid
  double seconds = 0.0;
};

double sq_diff(const SpectralField& a, const SpectralField& b) {
  double s = 0.0;
  for (size_t l = 0; l < a.size(); ++l) s += (a.m[l] - b.m[l]).squaredNorm();
  return s;
}

template <typename F>
void parallel_for(long n, int n_threads, F&& body) {
  if (n_threads <= 0)
    n_threads = static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;
  n_threads = static_cast<int>(std::min<long>(n_threads, n));
  if (n_threads <= 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int w = 0; w < n_threads; ++w)
    pool.emplace_back([&] {
      for (long i; (i = next.fetch_add(1)) < n;) body(i);
    });
  for (auto& t : pool) t.join();
}

struct NamedModel {
  std::string name;
  GnarParams params;
};

std::vector<NamedModel> load_models(const ExperimentSpec& spec) {
  std::vector<NamedModel> out;
  for (const auto& id : spec.models) {
    const std::string k = lower(id);
    if (k == "m1" || k == "m2" || k == "m3" || k == "m4" || k == "m5") {
      std::string name = id;
      name[0] = 'M';
      out.push_back({name, builtin_model(id)});
    } else {
      out.push_back(
          {std::filesystem::path(id).stem().string(), GnarParams::read_json(id)});
    }
  }
  return out;
}

int deepest_stage(const GnarOrder& order) {
  int r = 0;
  for (int sk : order.s) r = std::max(r, sk);
  return std::max(r, 1);
}

struct CellTruth {
  SpectralField f, coh, pcoh;
};

CellTruth truth_for(const GnarParams& params, const StageStructure& st,
                    const Eigen::MatrixXd& w, const FrequencyGrid& grid) {
  CellTruth t;
  t.f = gnar_spectrum(params, st, w, grid);
  t.coh = coherence(t.f);
  t.pcoh = partial_coherence(precision(t.f));
  return t;
}

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double stop() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  }
};

Report run_rmse(const ExperimentSpec& spec, int n_threads) {
  std::vector<Method> methods = spec.methods;
  if (methods.empty())
    methods = {Method::em1, Method::em2, Method::em3, Method::em4,
               Method::em5, Method::em6, Method::em7};
  const bool known = spec.mode == "known_order";
  const bool need_order_search =
      !known &&
      std::any_of(methods.begin(), methods.end(), [](Method m) {
        return m == Method::em1 || m == Method::em3 || m == Method::em5;
      });

  const Network net = Network::read_edge_list(spec.network);
  const StageStructure st(net);
  const Eigen::MatrixXd w = net.has_weights() ? stage_weights_from_edges(st)
                                              : equal_stage_weights(st);
  const auto models = load_models(spec);
  const long R = spec.replicates;

  Report report;
  report.name = spec.name;
  report.kind = "rmse";
  report.mode = spec.mode;
  report.network = spec.network;
  report.seed = spec.seed;

  for (size_t mi = 0; mi < models.size(); ++mi) {
    const auto& model = models[mi];
    const int r_star_true = deepest_stage(model.params.order);
    for (size_t ti = 0; ti < spec.lengths.size(); ++ti) {
      const long T = spec.lengths[ti];
      const FrequencyGrid grid = FrequencyGrid::fourier(T);
      const CellTruth truth = truth_for(model.params, st, w, grid);
      const SmoothingSpec smoothing = spec.bandwidth >= 0
                                          ? SmoothingSpec::daniell(spec.bandwidth)
                                          : SmoothingSpec::default_for(T);
      const std::uint64_t cell = mi * spec.lengths.size() + ti;

      std::vector<std::vector<MethodOutcome>> slots(
          R, std::vector<MethodOutcome>(methods.size()));

      parallel_for(R, n_threads, [&](long r) {
        auto& slot = slots[r];
        const std::uint64_t rep_seed =
            derive_seed(spec.seed, cell * static_cast<std::uint64_t>(R) +
                                       static_cast<std::uint64_t>(r));
        SeriesPanel panel;
        GnarOrder em1_order = model.params.order;
        try {
          panel = simulate(model.params, st, w, T, spec.burn_in, rep_seed);
          if (need_order_search)
            em1_order =
                select_order_bic(panel, st, w, spec.p_max, spec.s_max).order;
        } catch (const std::exception&) {
          return;  // every method stays failed for this replicate
        }
        const int r_star = known ? r_star_true : deepest_stage(em1_order);
        const int var_p = known ? model.params.order.p : -1;

        for (size_t m = 0; m < methods.size(); ++m) {
          Timer timer;
          try {
            SpectralField est;
            switch (methods[m]) {
              case Method::em1: {
                const GnarFit fit = fit_ols(panel, st, w, em1_order);
                est = gnar_spectrum(fit.params, st, w, grid);
                break;
              }
              case Method::em2:
                est = parametric_var_penalized(panel, st, var_p, spec.p_max,
                                               Penalty::none, 0, grid);
                break;
              case Method::em3:
                est = parametric_var_penalized(panel, st, var_p, spec.p_max,
                                               Penalty::induced, r_star, grid);
                break;
              case Method::em4:
                est = parametric_var_penalized(panel, st, var_p, spec.p_max,
                                               Penalty::a1, 0, grid);
                break;
              case Method::em5:
                est = np_spectrum_penalized(panel, st, smoothing,
                                            Penalty::induced, r_star);
                break;
              case Method::em6:
                est = np_spectrum_penalized(panel, st, smoothing, Penalty::a1);
                break;
              case Method::em7:
                est = np_spectrum_penalized(panel, st, smoothing,
                                            Penalty::none);
                break;
            }
            if (est.size() != grid.size())
              throw NumericError("estimate grid does not match truth grid");
            slot[m].err[0] = sq_diff(est, truth.f);
            slot[m].err[1] = sq_diff(coherence(est), truth.coh);
            slot[m].err[2] = sq_diff(partial_coherence(precision(est)),
                                     truth.pcoh);
            slot[m].ok = true;
          } catch (const std::exception&) {
            slot[m].ok = false;
          }
          slot[m].seconds = timer.stop();
        }
      });

      for (size_t m = 0; m < methods.size(); ++m) {
        double err[3] = {0, 0, 0};
        double seconds = 0.0;
        int included = 0;
        for (long r = 0; r < R; ++r) {
          const MethodOutcome& o = slots[r][m];
          seconds += o.seconds;
          if (!o.ok) continue;
          ++included;
          for (int t = 0; t < 3; ++t) err[t] += o.err[t];
        }
        for (int t = 0; t < 3; ++t) {
          ReportRow row;
          row.model = model.name;
          row.method = to_string(methods[m]);
          row.T = T;
          row.target = target_name(t);
          row.rmse = included == 0
                         ? std::numeric_limits<double>::quiet_NaN()
                         : std::sqrt(err[t] / (static_cast<double>(included) *
                                               static_cast<double>(grid.size())));
          row.excluded = static_cast<int>(R) - included;
          row.replicates = included;
          row.runtime_s = seconds;
          report.rows.push_back(std::move(row));
        }
      }
    }
  }
  return report;
}

Report run_hierarchy(const ExperimentSpec& spec, int r_star_arg,
                     int n_threads) {
  const Network net = Network::read_edge_list(spec.network);
  const StageStructure st(net);
  const Eigen::MatrixXd w = net.has_weights() ? stage_weights_from_edges(st)
                                              : equal_stage_weights(st);
  const auto models = load_models(spec);
  const bool known = spec.mode == "known_order";
  const long R = spec.replicates;

  Report report;
  report.name = spec.name;
  report.kind = "hierarchy";
  report.mode = spec.mode;
  report.network = spec.network;
  report.seed = spec.seed;

  // Thresholds are selected over a mid-band scan window rather than the full
  // frequency range. The stage lag polynomials are trigonometric polynomials
  // in omega, and a precision entry can pass through an isolated zero: tied
  // lags cancel a stage near the folding frequency, and phase crossings do
  // the same at scattered interior points. A band minimum taken across such
  // a crossing measures the crossing, not the stage's strength, and the
  // resulting threshold separates nothing. The window keeps clear of both
  // ends of the range; errors are still accumulated on the full Fourier grid.
  std::vector<double> scan;
  for (int j = 0; j < 64; ++j)
    scan.push_back(0.16 + 0.05 * static_cast<double>(j) / 63.0);
  const FrequencyGrid scan_grid = FrequencyGrid::from(scan);

  for (size_t mi = 0; mi < models.size(); ++mi) {
    const auto& model = models[mi];
    const int r_star = r_star_arg > 0 ? r_star_arg
                       : spec.r_star > 0 ? spec.r_star
                                         : deepest_stage(model.params.order);
    for (size_t ti = 0; ti < spec.lengths.size(); ++ti) {
      const long T = spec.lengths[ti];
      const FrequencyGrid grid = FrequencyGrid::fourier(T);
      const CellTruth truth = truth_for(model.params, st, w, grid);

      // r-dependent truths from the true precision and its true ladder; this
      // also validates that every requested stage has distance pairs
      const SpectralField s_true = precision(truth.f);
      const ThresholdLadder true_ladder = select_thresholds(
          precision(gnar_spectrum(model.params, st, w, scan_grid)), st,
          r_star);
      std::vector<SpectralField> truth_r;
      for (int r = 1; r <= r_star; ++r)
        truth_r.push_back(r_dependent_spectrum(
            threshold_precision(s_true, true_ladder.xi[r - 1]),
            /*ridge_fallback=*/true));

      const std::uint64_t cell = mi * spec.lengths.size() + ti;
      std::vector<std::vector<MethodOutcome>> slots(
          R, std::vector<MethodOutcome>(r_star));

      parallel_for(R, n_threads, [&](long r) {
        auto& slot = slots[r];
        const std::uint64_t rep_seed =
            derive_seed(spec.seed, cell * static_cast<std::uint64_t>(R) +
                                       static_cast<std::uint64_t>(r));
        SpectralField s_est;
        ThresholdLadder ladder;
        try {
          const SeriesPanel panel =
              simulate(model.params, st, w, T, spec.burn_in, rep_seed);
          const GnarOrder order =
              known ? model.params.order
                    : select_order_bic(panel, st, w, spec.p_max, spec.s_max)
                          .order;
          const GnarFit fit = fit_ols(panel, st, w, order);
          s_est = precision(gnar_spectrum(fit.params, st, w, grid));
          ladder = select_thresholds(
              precision(gnar_spectrum(fit.params, st, w, scan_grid)), st,
              r_star);
        } catch (const std::exception&) {
          return;
        }
        for (int rr = 0; rr < r_star; ++rr) {
          Timer timer;
          try {
            const SpectralField s_r =
                threshold_precision(s_est, ladder.xi[rr]);
            const SpectralField f_r =
                r_dependent_spectrum(s_r, /*ridge_fallback=*/true);
            slot[rr].err[0] = sq_diff(f_r, truth.f);
            slot[rr].err[1] = sq_diff(coherence(f_r), truth.coh);
            slot[rr].err[2] = sq_diff(partial_coherence(s_r), truth.pcoh);
            slot[rr].err[3] = sq_diff(f_r, truth_r[rr]);
            slot[rr].ok = true;
          } catch (const std::exception&) {
            slot[rr].ok = false;
          }
          slot[rr].seconds = timer.stop();
        }
      });

      for (int rr = 0; rr < r_star; ++rr) {
        double err[kTargets] = {0, 0, 0, 0};
        double seconds = 0.0;
        int included = 0;
        for (long r = 0; r < R; ++r) {
          const MethodOutcome& o = slots[r][rr];
          seconds += o.seconds;
          if (!o.ok) continue;
          ++included;
          for (int t = 0; t < kTargets; ++t) err[t] += o.err[t];
        }
        for (int t = 0; t < kTargets; ++t) {
          ReportRow row;
          row.model = model.name;
          row.method = "r=" + std::to_string(rr + 1);
          row.T = T;
          row.target = target_name(t);
          row.rmse = included == 0
                         ? std::numeric_limits<double>::quiet_NaN()
                         : std::sqrt(err[t] / (static_cast<double>(included) *
                                               static_cast<double>(grid.size())));
          row.excluded = static_cast<int>(R) - included;
          row.replicates = included;
          row.runtime_s = seconds;
          report.rows.push_back(std::move(row));
        }
      }
    }
  }
  return report;
}

}  // namespace

Report run_experiment(const ExperimentSpec& spec, int n_threads) {
  spec.validate();
  if (spec.kind == "hierarchy") return run_hierarchy(spec, 0, n_threads);
  return run_rmse(spec, n_threads);
}

Report run_hierarchy_experiment(const ExperimentSpec& spec, int r_star,
                                int n_threads) {
  spec.validate();
  if (r_star < 1)
    throw InvalidArgument("hierarchy experiment: r_star must be >= 1");
  return run_hierarchy(spec, r_star, n_threads);
}

}  // namespace gnarspec::bench
