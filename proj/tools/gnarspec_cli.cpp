// Command-line front end over the gnarspec C API. Every command is
// deterministic given identical inputs and --seed; exit codes are 0 on
// success, 1 on estimation failure, 2 on input error.
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gnarspec.h"

namespace {

constexpr std::uint64_t kDefaultSeed = 1729;  // documented default

int exit_code(gs_status s) {
  if (s == GS_OK) return 0;
  std::fprintf(stderr, "error: %s\n", gs_last_error());
  return s == GS_ERR_INPUT ? 2 : 1;
}

struct NetworkDeleter {
  void operator()(gs_network* p) const { gs_network_free(p); }
};
struct ModelDeleter {
  void operator()(gs_model* p) const { gs_model_free(p); }
};
struct PanelDeleter {
  void operator()(gs_panel* p) const { gs_panel_free(p); }
};
struct FieldDeleter {
  void operator()(gs_field* p) const { gs_field_free(p); }
};

using NetworkPtr = std::unique_ptr<gs_network, NetworkDeleter>;
using ModelPtr = std::unique_ptr<gs_model, ModelDeleter>;
using PanelPtr = std::unique_ptr<gs_panel, PanelDeleter>;
using FieldPtr = std::unique_ptr<gs_field, FieldDeleter>;

// .csv writes the long plotting format, anything else the lossless JSON
gs_status write_field(const gs_field* field, const std::string& path) {
  if (std::filesystem::path(path).extension() == ".csv")
    return gs_field_write_csv(field, path.c_str());
  return gs_field_write_json(field, path.c_str());
}

gs_status load_model(const std::string& file, const std::string& builtin,
                     ModelPtr& out) {
  gs_model* raw = nullptr;
  const gs_status s = builtin.empty() ? gs_model_read(file.c_str(), &raw)
                                      : gs_model_builtin(builtin.c_str(), &raw);
  out.reset(raw);
  return s;
}

struct OrderArgs {
  int p = 0;
  std::vector<int> s;
  bool auto_order = false;
  int p_max = 3;
  int s_max = 3;

  void attach(CLI::App* cmd) {
    auto* popt = cmd->add_option("-p,--p", p, "lag order of the fit");
    auto* sopt = cmd->add_option(
        "-s,--s", s, "stage depth per lag (one value per lag, 0 = none)");
    auto* aopt = cmd->add_flag("--auto", auto_order,
                               "select the order by BIC instead");
    cmd->add_option("--p-max", p_max, "BIC search bound on the lag order")
        ->capture_default_str();
    cmd->add_option("--s-max", s_max, "BIC search bound on the stage depth")
        ->capture_default_str();
    popt->excludes(aopt);
    sopt->excludes(aopt);
    popt->needs(sopt);
    sopt->needs(popt);
  }

  gs_status fit(const gs_panel* panel, const gs_network* net, ModelPtr& out,
                double* bic) const {
    gs_model* raw = nullptr;
    gs_status st;
    if (auto_order || p == 0) {
      st = gs_fit_auto(panel, net, p_max, s_max, &raw, bic);
    } else {
      std::vector<int> stages = s;
      stages.resize(p, 0);  // unspecified trailing lags carry no stages
      st = gs_fit(panel, net, p, stages.data(), &raw, bic);
    }
    out.reset(raw);
    return st;
  }
};

int run_simulate(const std::string& model_file, const std::string& builtin,
                 const std::string& network, long T, long burn_in,
                 std::uint64_t seed, const std::string& out) {
  ModelPtr model;
  if (gs_status s = load_model(model_file, builtin, model); s != GS_OK)
    return exit_code(s);
  gs_network* net_raw = nullptr;
  if (gs_status s = gs_network_read(network.c_str(), &net_raw); s != GS_OK)
    return exit_code(s);
  NetworkPtr net(net_raw);

  gs_panel* panel_raw = nullptr;
  if (gs_status s =
          gs_simulate(model.get(), net.get(), T, burn_in, seed, &panel_raw);
      s != GS_OK)
    return exit_code(s);
  PanelPtr panel(panel_raw);
  if (gs_status s = gs_panel_write(panel.get(), out.c_str()); s != GS_OK)
    return exit_code(s);

  // provenance metadata alongside the panel
  const int p = gs_model_order(model.get());
  std::vector<int> stages(p);
  gs_model_stages(model.get(), stages.data());
  nlohmann::json meta{
      {"command", "simulate"},
      {"model", builtin.empty() ? model_file : builtin},
      {"network", network},
      {"T", T},
      {"burn_in", burn_in},
      {"seed", seed},
      {"p", p},
      {"s", stages},
      {"sigma2", gs_model_sigma2(model.get())},
      {"stationary", gs_model_is_stationary(model.get()) == 1}};
  std::ofstream mf(out + ".meta.json");
  if (!mf) {
    std::fprintf(stderr, "error: cannot write %s.meta.json\n", out.c_str());
    return 2;
  }
  mf << meta.dump(2) << "\n";
  return 0;
}

int run_fit(const std::string& panel_file, const std::string& network,
            const OrderArgs& order, const std::string& out) {
  gs_panel* panel_raw = nullptr;
  if (gs_status s = gs_panel_read(panel_file.c_str(), &panel_raw); s != GS_OK)
    return exit_code(s);
  PanelPtr panel(panel_raw);
  gs_network* net_raw = nullptr;
  if (gs_status s = gs_network_read(network.c_str(), &net_raw); s != GS_OK)
    return exit_code(s);
  NetworkPtr net(net_raw);

  ModelPtr model;
  double bic = 0.0;
  if (gs_status s = order.fit(panel.get(), net.get(), model, &bic); s != GS_OK)
    return exit_code(s);
  if (gs_status s = gs_model_write(model.get(), out.c_str()); s != GS_OK)
    return exit_code(s);

  const int p = gs_model_order(model.get());
  std::vector<int> stages(p);
  gs_model_stages(model.get(), stages.data());
  std::printf("p = %d\ns =", p);
  for (int sk : stages) std::printf(" %d", sk);
  std::printf("\nbic = %.12g\n", bic);
  return 0;
}

int run_spectrum(const std::string& model_file, const std::string& builtin,
                 const std::string& network, long fourier_T, int points,
                 const std::string& out, const std::string& coherence_out,
                 const std::string& partial_out,
                 const std::string& precision_out) {
  ModelPtr model;
  if (gs_status s = load_model(model_file, builtin, model); s != GS_OK)
    return exit_code(s);
  gs_network* net_raw = nullptr;
  if (gs_status s = gs_network_read(network.c_str(), &net_raw); s != GS_OK)
    return exit_code(s);
  NetworkPtr net(net_raw);

  std::vector<double> omega;
  if (fourier_T > 0) {
    size_t n = 0;
    if (gs_status s = gs_fourier_grid(fourier_T, nullptr, &n); s != GS_OK)
      return exit_code(s);
    omega.resize(n);
    gs_fourier_grid(fourier_T, omega.data(), &n);
  } else {
    omega.resize(points);
    for (int j = 1; j <= points; ++j)
      omega[j - 1] = j / (2.0 * points);
  }

  gs_field* f_raw = nullptr;
  if (gs_status s = gs_spectrum(model.get(), net.get(), omega.data(),
                                omega.size(), &f_raw);
      s != GS_OK)
    return exit_code(s);
  FieldPtr f(f_raw);
  if (!out.empty())
    if (gs_status s = write_field(f.get(), out); s != GS_OK)
      return exit_code(s);
  if (!coherence_out.empty()) {
    gs_field* c_raw = nullptr;
    if (gs_status s = gs_coherence(f.get(), &c_raw); s != GS_OK)
      return exit_code(s);
    FieldPtr c(c_raw);
    if (gs_status s = write_field(c.get(), coherence_out); s != GS_OK)
      return exit_code(s);
  }
  if (!partial_out.empty() || !precision_out.empty()) {
    gs_field* s_raw = nullptr;
    if (gs_status s = gs_precision(f.get(), &s_raw); s != GS_OK)
      return exit_code(s);
    FieldPtr prec(s_raw);
    if (!precision_out.empty())
      if (gs_status s = write_field(prec.get(), precision_out); s != GS_OK)
        return exit_code(s);
    if (!partial_out.empty()) {
      gs_field* pc_raw = nullptr;
      if (gs_status s = gs_partial_coherence(prec.get(), &pc_raw); s != GS_OK)
        return exit_code(s);
      FieldPtr pc(pc_raw);
      if (gs_status s = write_field(pc.get(), partial_out); s != GS_OK)
        return exit_code(s);
    }
  }
  return 0;
}

int run_np_spectrum(const std::string& panel_file, const std::string& network,
                    int bandwidth, const std::string& penalty, int r_star,
                    const std::string& out, const std::string& coherence_out,
                    const std::string& partial_out) {
  gs_panel* panel_raw = nullptr;
  if (gs_status s = gs_panel_read(panel_file.c_str(), &panel_raw); s != GS_OK)
    return exit_code(s);
  PanelPtr panel(panel_raw);
  gs_network* net_raw = nullptr;
  if (gs_status s = gs_network_read(network.c_str(), &net_raw); s != GS_OK)
    return exit_code(s);
  NetworkPtr net(net_raw);

  gs_field* f_raw = nullptr;
  if (gs_status s = gs_np_spectrum(panel.get(), net.get(), bandwidth,
                                   penalty.c_str(), r_star, &f_raw);
      s != GS_OK)
    return exit_code(s);
  FieldPtr f(f_raw);
  if (!out.empty())
    if (gs_status s = write_field(f.get(), out); s != GS_OK)
      return exit_code(s);
  if (!coherence_out.empty()) {
    gs_field* c_raw = nullptr;
    if (gs_status s = gs_coherence(f.get(), &c_raw); s != GS_OK)
      return exit_code(s);
    FieldPtr c(c_raw);
    if (gs_status s = write_field(c.get(), coherence_out); s != GS_OK)
      return exit_code(s);
  }
  if (!partial_out.empty()) {
    gs_field* s_raw = nullptr;
    if (gs_status s = gs_precision(f.get(), &s_raw); s != GS_OK)
      return exit_code(s);
    FieldPtr prec(s_raw);
    gs_field* pc_raw = nullptr;
    if (gs_status s = gs_partial_coherence(prec.get(), &pc_raw); s != GS_OK)
      return exit_code(s);
    FieldPtr pc(pc_raw);
    if (gs_status s = write_field(pc.get(), partial_out); s != GS_OK)
      return exit_code(s);
  }
  return 0;
}

int run_hierarchy(const std::string& panel_file, const std::string& network,
                  const OrderArgs& order, int r_star, bool strict,
                  const std::string& prefix) {
  gs_panel* panel_raw = nullptr;
  if (gs_status s = gs_panel_read(panel_file.c_str(), &panel_raw); s != GS_OK)
    return exit_code(s);
  PanelPtr panel(panel_raw);
  gs_network* net_raw = nullptr;
  if (gs_status s = gs_network_read(network.c_str(), &net_raw); s != GS_OK)
    return exit_code(s);
  NetworkPtr net(net_raw);

  ModelPtr model;
  double bic = 0.0;
  if (gs_status s = order.fit(panel.get(), net.get(), model, &bic); s != GS_OK)
    return exit_code(s);

  size_t n = 0;
  if (gs_status s = gs_fourier_grid(gs_panel_length(panel.get()), nullptr, &n);
      s != GS_OK)
    return exit_code(s);
  std::vector<double> omega(n);
  gs_fourier_grid(gs_panel_length(panel.get()), omega.data(), &n);

  gs_field* f_raw = nullptr;
  if (gs_status s = gs_spectrum(model.get(), net.get(), omega.data(),
                                omega.size(), &f_raw);
      s != GS_OK)
    return exit_code(s);
  FieldPtr f(f_raw);
  gs_field* s_raw = nullptr;
  if (gs_status s = gs_precision(f.get(), &s_raw); s != GS_OK)
    return exit_code(s);
  FieldPtr prec(s_raw);

  std::vector<double> xi(r_star > 0 ? r_star : 1);
  if (gs_status s =
          gs_hierarchy_thresholds(prec.get(), net.get(), r_star, xi.data());
      s != GS_OK)
    return exit_code(s);

  nlohmann::json ladder{{"r_star", r_star}, {"xi", xi}};
  std::ofstream lf(prefix + ".thresholds.json");
  if (!lf) {
    std::fprintf(stderr, "error: cannot write %s.thresholds.json\n",
                 prefix.c_str());
    return 2;
  }
  lf << ladder.dump(2) << "\n";

  for (int r = 1; r <= r_star; ++r) {
    gs_field* thr_raw = nullptr;
    if (gs_status s = gs_threshold_precision(prec.get(), xi[r - 1], &thr_raw);
        s != GS_OK)
      return exit_code(s);
    FieldPtr thr(thr_raw);
    const std::string stem = prefix + ".r" + std::to_string(r);
    if (gs_status s = gs_field_write_json(thr.get(),
                                          (stem + ".precision.json").c_str());
        s != GS_OK)
      return exit_code(s);
    gs_field* fr_raw = nullptr;
    if (gs_status s =
            gs_r_dependent_spectrum(thr.get(), strict ? 0 : 1, &fr_raw);
        s != GS_OK)
      return exit_code(s);
    FieldPtr fr(fr_raw);
    if (gs_status s =
            gs_field_write_json(fr.get(), (stem + ".spectrum.json").c_str());
        s != GS_OK)
      return exit_code(s);
  }
  return 0;
}

int run_gfevd_cmd(const std::string& ohlc, int horizon, int p, int p_max,
                  int folds, int n_lambda, bool include_h0,
                  const std::string& out_json, const std::string& out_edges) {
  double tau = 0.0;
  const gs_status s = gs_gfevd_run(
      ohlc.c_str(), horizon, p, p_max, folds, n_lambda, include_h0 ? 1 : 0,
      out_json.empty() ? nullptr : out_json.c_str(),
      out_edges.empty() ? nullptr : out_edges.c_str(), &tau);
  if (s != GS_OK) return exit_code(s);
  std::printf("tau_star = %.12g\n", tau);
  return 0;
}

int run_bench(const std::string& spec, const std::string& out_csv,
              const std::string& out_json, int threads, int replicates) {
  return exit_code(gs_bench_run(spec.c_str(), out_csv.c_str(),
                                out_json.empty() ? nullptr : out_json.c_str(),
                                threads, replicates));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "gnarspec: spectral analysis of network autoregressive time series"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gs_version()));
  app.footer(
      "File formats:\n"
      "  network     edge list, one 'i j' or 'i j w' per line, optional\n"
      "              'd=<n>' header, '#' comments, 1-based labels\n"
      "  model       JSON {p, s, alpha, beta, sigma2|V}\n"
      "  panel       CSV, header of node names then one row per time step\n"
      "  field       JSON {kind, dim, omega, matrices} with [re,im] entries,\n"
      "              or CSV (omega,i,j,value) when the output ends in .csv\n"
      "  OHLC        CSV with columns date,node,open,high,low,close\n"
      "  bench spec  JSON {name, kind, models, network, T, replicates,\n"
      "              methods, mode, seed, bandwidth, p_max, s_max, r_star}\n");

  std::string model_file, builtin, network, panel_file, out;
  std::string coherence_out, partial_out, precision_out;
  long T = 100, burn_in = 50;
  std::uint64_t seed = kDefaultSeed;

  auto* sim = app.add_subcommand("simulate",
                                 "simulate a network autoregressive panel");
  auto* sim_model = sim->add_option("--model", model_file,
                                    "model parameter JSON");
  auto* sim_builtin =
      sim->add_option("--builtin", builtin, "built-in model id (M1..M5)");
  sim_model->excludes(sim_builtin);
  sim->add_option("--network", network, "edge-list file")->required();
  sim->add_option("-T,--length", T, "observations to keep")->required();
  sim->add_option("--burn-in", burn_in, "transient to discard")
      ->capture_default_str();
  sim->add_option("--seed", seed, "RNG seed (default 1729)")
      ->capture_default_str();
  sim->add_option("-o,--out", out, "output panel CSV (metadata JSON appears "
                                   "alongside as <out>.meta.json)")
      ->required();

  OrderArgs fit_order;
  std::string fit_out;
  auto* fit = app.add_subcommand("fit", "least-squares fit of the network "
                                        "model, order given or BIC-selected");
  fit->add_option("--panel", panel_file, "input panel CSV")->required();
  fit->add_option("--network", network, "edge-list file")->required();
  fit_order.attach(fit);
  fit->add_option("-o,--out", fit_out, "fitted model JSON")->required();

  long grid_T = 0;
  int points = 64;
  auto* spec_cmd = app.add_subcommand(
      "spectrum", "model-implied spectral density and derived fields");
  auto* sp_model = spec_cmd->add_option("--model", model_file,
                                        "model parameter JSON");
  auto* sp_builtin =
      spec_cmd->add_option("--builtin", builtin, "built-in model id (M1..M5)");
  sp_model->excludes(sp_builtin);
  spec_cmd->add_option("--network", network, "edge-list file")->required();
  spec_cmd->add_option("--fourier", grid_T,
                       "evaluate on the Fourier grid of this sample length");
  spec_cmd->add_option("--points", points,
                       "uniform grid size when --fourier is not given")
      ->capture_default_str();
  spec_cmd->add_option("-o,--out", out, "spectrum output (.json or .csv)");
  spec_cmd->add_option("--coherence", coherence_out, "coherence output");
  spec_cmd->add_option("--partial-coherence", partial_out,
                       "partial coherence output");
  spec_cmd->add_option("--precision", precision_out,
                       "inverse spectrum output");

  int bandwidth = -1, r_star = 0;
  std::string penalty = "none";
  auto* np = app.add_subcommand(
      "np-spectrum", "smoothed-periodogram estimate from a panel");
  np->add_option("--panel", panel_file, "input panel CSV")->required();
  np->add_option("--network", network, "edge-list file")->required();
  np->add_option("--bandwidth", bandwidth,
                 "smoothing half-width (-1 = floor(sqrt(T)))")
      ->capture_default_str();
  np->add_option("--penalty", penalty, "none, a1 or induced")
      ->capture_default_str();
  np->add_option("--rstar", r_star, "stage depth for the induced penalty")
      ->capture_default_str();
  np->add_option("-o,--out", out, "spectrum output (.json or .csv)");
  np->add_option("--coherence", coherence_out, "coherence output");
  np->add_option("--partial-coherence", partial_out,
                 "partial coherence output");

  OrderArgs hier_order;
  int hier_rstar = 1;
  bool strict = false;
  std::string prefix;
  auto* hier = app.add_subcommand(
      "hierarchy",
      "fit, threshold the inverse spectrum stage by stage, and invert back");
  hier->add_option("--panel", panel_file, "input panel CSV")->required();
  hier->add_option("--network", network, "edge-list file")->required();
  hier_order.attach(hier);
  hier->add_option("--rstar", hier_rstar, "hierarchy depth")->required();
  hier->add_flag("--strict", strict,
                 "fail on ill-conditioned frequencies instead of applying a "
                 "ridge fallback");
  hier->add_option("-o,--out-prefix", prefix,
                   "output prefix; writes <prefix>.thresholds.json and "
                   "<prefix>.r<r>.{precision,spectrum}.json per stage")
      ->required();

  std::string ohlc, gf_json, gf_edges;
  int horizon = 10, gf_p = -1, gf_pmax = 5, folds = 10, n_lambda = 50;
  bool include_h0 = false;
  auto* gf = app.add_subcommand(
      "gfevd", "volatility spillover network from OHLC prices");
  gf->add_option("--ohlc", ohlc, "OHLC CSV (date,node,open,high,low,close)")
      ->required();
  gf->add_option("--horizon", horizon, "forecast horizon H")
      ->capture_default_str();
  gf->add_option("-p,--p", gf_p, "VAR lag order (-1 = BIC up to --p-max)")
      ->capture_default_str();
  gf->add_option("--p-max", gf_pmax, "BIC lag bound")->capture_default_str();
  gf->add_option("--folds", folds, "cross-validation folds")
      ->capture_default_str();
  gf->add_option("--n-lambda", n_lambda, "penalty grid size")
      ->capture_default_str();
  gf->add_flag("--include-h0", include_h0,
               "include the contemporaneous horizon term");
  gf->add_option("--out-json", gf_json, "result JSON (psi, tau_star, edges)");
  gf->add_option("--out-edges", gf_edges, "edge-list file of the network");

  std::string bench_spec, bench_csv, bench_json;
  int threads = 0, replicates = 0;
  auto* bench = app.add_subcommand("bench",
                                   "Monte-Carlo estimator comparison");
  bench->add_option("--spec", bench_spec, "experiment spec JSON")->required();
  bench->add_option("-o,--out", bench_csv, "report CSV")->required();
  bench->add_option("--json", bench_json, "report JSON (adds runtimes)");
  bench->add_option("--threads", threads, "worker threads (0 = machine cores)")
      ->capture_default_str();
  bench->add_option("--replicates", replicates,
                    "override the spec's replicate count (0 = keep)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (*sim) {
    if (model_file.empty() && builtin.empty()) {
      std::fprintf(stderr, "error: simulate needs --model or --builtin\n");
      return 2;
    }
    return run_simulate(model_file, builtin, network, T, burn_in, seed, out);
  }
  if (*fit) return run_fit(panel_file, network, fit_order, fit_out);
  if (*spec_cmd) {
    if (model_file.empty() && builtin.empty()) {
      std::fprintf(stderr, "error: spectrum needs --model or --builtin\n");
      return 2;
    }
    if (out.empty() && coherence_out.empty() && partial_out.empty() &&
        precision_out.empty()) {
      std::fprintf(stderr, "error: spectrum needs at least one output\n");
      return 2;
    }
    return run_spectrum(model_file, builtin, network, grid_T, points, out,
                        coherence_out, partial_out, precision_out);
  }
  if (*np) {
    if (out.empty() && coherence_out.empty() && partial_out.empty()) {
      std::fprintf(stderr, "error: np-spectrum needs at least one output\n");
      return 2;
    }
    return run_np_spectrum(panel_file, network, bandwidth, penalty, r_star,
                           out, coherence_out, partial_out);
  }
  if (*hier)
    return run_hierarchy(panel_file, network, hier_order, hier_rstar, strict,
                         prefix);
  if (*gf) {
    if (gf_json.empty() && gf_edges.empty()) {
      std::fprintf(stderr, "error: gfevd needs --out-json or --out-edges\n");
      return 2;
    }
    return run_gfevd_cmd(ohlc, horizon, gf_p, gf_pmax, folds, n_lambda,
                         include_h0, gf_json, gf_edges);
  }
  if (*bench)
    return run_bench(bench_spec, bench_csv, bench_json, threads, replicates);
  return 2;
}
