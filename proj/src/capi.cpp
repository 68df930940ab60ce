#include "gnarspec.h"

#include <Eigen/Dense>
#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "gnarspec/bench.hpp"
#include "gnarspec/errors.hpp"
#include "gnarspec/gfevd.hpp"
#include "gnarspec/gnar.hpp"
#include "gnarspec/graph.hpp"
#include "gnarspec/hierarchy.hpp"
#include "gnarspec/periodogram.hpp"
#include "gnarspec/spectra.hpp"

struct gs_network {
  gnarspec::Network net;
  gnarspec::StageStructure st;
  Eigen::MatrixXd w;

  explicit gs_network(gnarspec::Network n)
      : net(std::move(n)),
        st(net),
        w(net.has_weights() ? gnarspec::stage_weights_from_edges(st)
                            : gnarspec::equal_stage_weights(st)) {}
  gs_network(const gs_network&) = delete;
  gs_network& operator=(const gs_network&) = delete;
};

struct gs_model {
  gnarspec::GnarParams params;
};

struct gs_panel {
  gnarspec::SeriesPanel panel;
};

struct gs_field {
  gnarspec::SpectralField field;
};

namespace {

thread_local std::string g_error;

template <typename F>
gs_status guarded(F&& f) {
  try {
    f();
    g_error.clear();
    return GS_OK;
  } catch (const gnarspec::NumericError& e) {
    g_error = e.what();
    return GS_ERR_NUMERIC;
  } catch (const gnarspec::InvalidArgument& e) {
    g_error = e.what();
    return GS_ERR_INPUT;
  } catch (const gnarspec::IoError& e) {
    g_error = e.what();
    return GS_ERR_INPUT;
  } catch (const std::exception& e) {
    g_error = e.what();
    return GS_ERR_INTERNAL;
  } catch (...) {
    g_error = "unknown error";
    return GS_ERR_INTERNAL;
  }
}

void require(const void* p, const char* name) {
  if (!p)
    throw gnarspec::InvalidArgument(std::string("null argument: ") + name);
}

gnarspec::FrequencyGrid grid_from(const double* omega, size_t n) {
  require(omega, "omega");
  return gnarspec::FrequencyGrid::from(
      std::vector<double>(omega, omega + n));
}

}  // namespace

extern "C" {

const char* gs_last_error(void) { return g_error.c_str(); }

const char* gs_version(void) { return "1.0.0"; }

/* ---- networks ---------------------------------------------------------- */

gs_status gs_network_read(const char* path, gs_network** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new gs_network(gnarspec::Network::read_edge_list(path));
  });
}

gs_status gs_network_write(const gs_network* net, const char* path) {
  return guarded([&] {
    require(net, "net");
    require(path, "path");
    net->net.write_edge_list(path);
  });
}

gs_status gs_network_create(int d, const int* edge_i, const int* edge_j,
                            const double* weights, size_t n_edges,
                            gs_network** out) {
  return guarded([&] {
    require(out, "out");
    if (n_edges > 0) {
      require(edge_i, "edge_i");
      require(edge_j, "edge_j");
    }
    std::vector<gnarspec::Network::Edge> edges(n_edges);
    for (size_t e = 0; e < n_edges; ++e)
      edges[e] = {edge_i[e], edge_j[e], weights ? weights[e] : 1.0};
    *out = new gs_network(
        gnarspec::Network(d, std::move(edges), weights != nullptr));
  });
}

void gs_network_free(gs_network* net) { delete net; }

int gs_network_order(const gs_network* net) {
  return net ? net->net.order() : -1;
}

int gs_network_diameter(const gs_network* net) {
  return net ? net->st.r_max() : -1;
}

int gs_network_distance(const gs_network* net, int i, int j) {
  if (!net) return -1;
  const int d = net->net.order();
  if (i < 1 || i > d || j < 1 || j > d) return -1;
  return net->st.distance(i, j);
}

gs_status gs_network_adjacency(const gs_network* net, double* out) {
  return guarded([&] {
    require(net, "net");
    require(out, "out");
    const Eigen::MatrixXd& a = net->net.adjacency();
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j)
        out[i * a.cols() + j] = a(i, j);
  });
}

/* ---- models ------------------------------------------------------------ */

gs_status gs_model_read(const char* path, gs_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new gs_model{gnarspec::GnarParams::read_json(path)};
  });
}

gs_status gs_model_write(const gs_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    model->params.write_json(path);
  });
}

gs_status gs_model_create(int p, const int* s, const double* alpha,
                          const double* beta, double sigma2, gs_model** out) {
  return guarded([&] {
    require(out, "out");
    require(s, "s");
    require(alpha, "alpha");
    if (p < 1)
      throw gnarspec::InvalidArgument("model: lag order must be >= 1");
    if (sigma2 <= 0.0)
      throw gnarspec::InvalidArgument("model: sigma2 must be positive");
    gnarspec::GnarParams params;
    params.order.p = p;
    params.order.s.assign(s, s + p);
    params.alpha = Eigen::Map<const Eigen::VectorXd>(alpha, p);
    const double* b = beta;
    for (int k = 0; k < p; ++k) {
      const int sk = params.order.s[k];
      if (sk > 0) require(beta, "beta");
      params.beta.emplace_back(
          sk > 0 ? Eigen::Map<const Eigen::VectorXd>(b, sk) : Eigen::VectorXd());
      b += sk;
    }
    params.sigma2 = sigma2;
    params.validate();
    *out = new gs_model{std::move(params)};
  });
}

gs_status gs_model_builtin(const char* name, gs_model** out) {
  return guarded([&] {
    require(name, "name");
    require(out, "out");
    *out = new gs_model{gnarspec::bench::builtin_model(name)};
  });
}

void gs_model_free(gs_model* model) { delete model; }

int gs_model_order(const gs_model* model) {
  return model ? model->params.order.p : -1;
}

gs_status gs_model_stages(const gs_model* model, int* s_out) {
  return guarded([&] {
    require(model, "model");
    require(s_out, "s_out");
    for (int k = 0; k < model->params.order.p; ++k)
      s_out[k] = model->params.order.s[k];
  });
}

gs_status gs_model_coefficients(const gs_model* model, double* alpha_out,
                                double* beta_out) {
  return guarded([&] {
    require(model, "model");
    require(alpha_out, "alpha_out");
    require(beta_out, "beta_out");
    const auto& p = model->params;
    for (int k = 0; k < p.order.p; ++k) alpha_out[k] = p.alpha(k);
    double* b = beta_out;
    for (const auto& bk : p.beta) {
      for (Eigen::Index r = 0; r < bk.size(); ++r) *b++ = bk(r);
    }
  });
}

double gs_model_sigma2(const gs_model* model) {
  return model ? model->params.sigma2 : 0.0;
}

int gs_model_is_stationary(const gs_model* model) {
  return model && gnarspec::is_stationary(model->params) ? 1 : 0;
}

/* ---- series panels ----------------------------------------------------- */

gs_status gs_panel_read(const char* path, gs_panel** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new gs_panel{gnarspec::SeriesPanel::read_csv(path)};
  });
}

gs_status gs_panel_write(const gs_panel* panel, const char* path) {
  return guarded([&] {
    require(panel, "panel");
    require(path, "path");
    panel->panel.write_csv(path);
  });
}

gs_status gs_panel_create(const double* data, long T, int d, gs_panel** out) {
  return guarded([&] {
    require(data, "data");
    require(out, "out");
    if (T < 1 || d < 1)
      throw gnarspec::InvalidArgument("panel: need T >= 1 and d >= 1");
    Eigen::MatrixXd x(T, d);
    for (long t = 0; t < T; ++t)
      for (int i = 0; i < d; ++i) x(t, i) = data[t * d + i];
    *out = new gs_panel{gnarspec::SeriesPanel::from_matrix(std::move(x))};
  });
}

void gs_panel_free(gs_panel* panel) { delete panel; }

long gs_panel_length(const gs_panel* panel) {
  return panel ? panel->panel.length() : -1;
}

int gs_panel_width(const gs_panel* panel) {
  return panel ? panel->panel.width() : -1;
}

gs_status gs_panel_data(const gs_panel* panel, double* out) {
  return guarded([&] {
    require(panel, "panel");
    require(out, "out");
    const Eigen::MatrixXd& x = panel->panel.x;
    for (Eigen::Index t = 0; t < x.rows(); ++t)
      for (Eigen::Index i = 0; i < x.cols(); ++i)
        out[t * x.cols() + i] = x(t, i);
  });
}

/* ---- simulation and fitting -------------------------------------------- */

gs_status gs_simulate(const gs_model* model, const gs_network* net, long T,
                      long burn_in, uint64_t seed, gs_panel** out) {
  return guarded([&] {
    require(model, "model");
    require(net, "net");
    require(out, "out");
    *out = new gs_panel{
        gnarspec::simulate(model->params, net->st, net->w, T, burn_in, seed)};
  });
}

gs_status gs_fit(const gs_panel* panel, const gs_network* net, int p,
                 const int* s, gs_model** out, double* bic) {
  return guarded([&] {
    require(panel, "panel");
    require(net, "net");
    require(s, "s");
    require(out, "out");
    if (p < 1)
      throw gnarspec::InvalidArgument("fit: lag order must be >= 1");
    gnarspec::GnarOrder order;
    order.p = p;
    order.s.assign(s, s + p);
    const gnarspec::GnarFit fit =
        gnarspec::fit_ols(panel->panel, net->st, net->w, order);
    if (bic) *bic = fit.bic;
    *out = new gs_model{fit.params};
  });
}

gs_status gs_fit_auto(const gs_panel* panel, const gs_network* net, int p_max,
                      int s_max, gs_model** out, double* bic) {
  return guarded([&] {
    require(panel, "panel");
    require(net, "net");
    require(out, "out");
    const gnarspec::OrderSelection sel = gnarspec::select_order_bic(
        panel->panel, net->st, net->w, p_max, s_max);
    const gnarspec::GnarFit fit =
        gnarspec::fit_ols(panel->panel, net->st, net->w, sel.order);
    if (bic) *bic = fit.bic;
    *out = new gs_model{fit.params};
  });
}

/* ---- spectra ----------------------------------------------------------- */

gs_status gs_fourier_grid(long T, double* omega, size_t* n_out) {
  return guarded([&] {
    require(n_out, "n_out");
    const gnarspec::FrequencyGrid grid = gnarspec::FrequencyGrid::fourier(T);
    *n_out = grid.size();
    if (omega)
      std::memcpy(omega, grid.omega.data(), grid.size() * sizeof(double));
  });
}

gs_status gs_spectrum(const gs_model* model, const gs_network* net,
                      const double* omega, size_t n, gs_field** out) {
  return guarded([&] {
    require(model, "model");
    require(net, "net");
    require(out, "out");
    *out = new gs_field{gnarspec::gnar_spectrum(model->params, net->st, net->w,
                                                grid_from(omega, n))};
  });
}

gs_status gs_precision(const gs_field* spectrum, gs_field** out) {
  return guarded([&] {
    require(spectrum, "spectrum");
    require(out, "out");
    *out = new gs_field{gnarspec::precision(spectrum->field)};
  });
}

gs_status gs_coherence(const gs_field* spectrum, gs_field** out) {
  return guarded([&] {
    require(spectrum, "spectrum");
    require(out, "out");
    *out = new gs_field{gnarspec::coherence(spectrum->field)};
  });
}

gs_status gs_partial_coherence(const gs_field* precision_field,
                               gs_field** out) {
  return guarded([&] {
    require(precision_field, "precision_field");
    require(out, "out");
    *out = new gs_field{gnarspec::partial_coherence(precision_field->field)};
  });
}

gs_status gs_np_spectrum(const gs_panel* panel, const gs_network* net,
                         int bandwidth, const char* penalty, int r_star,
                         gs_field** out) {
  return guarded([&] {
    require(panel, "panel");
    require(net, "net");
    require(penalty, "penalty");
    require(out, "out");
    const gnarspec::SmoothingSpec smoothing =
        bandwidth < 0 ? gnarspec::SmoothingSpec::default_for(panel->panel.length())
                      : gnarspec::SmoothingSpec::daniell(bandwidth);
    *out = new gs_field{gnarspec::np_spectrum_penalized(
        panel->panel, net->st, smoothing,
        gnarspec::penalty_from_string(penalty), r_star)};
  });
}

gs_status gs_var_spectrum(const gs_panel* panel, const gs_network* net, int p,
                          int p_max, const char* penalty, int r_star,
                          const double* omega, size_t n, gs_field** out) {
  return guarded([&] {
    require(panel, "panel");
    require(net, "net");
    require(penalty, "penalty");
    require(out, "out");
    *out = new gs_field{gnarspec::parametric_var_penalized(
        panel->panel, net->st, p, p_max, gnarspec::penalty_from_string(penalty),
        r_star, grid_from(omega, n))};
  });
}

/* ---- r-dependent hierarchy --------------------------------------------- */

gs_status gs_hierarchy_thresholds(const gs_field* precision_field,
                                  const gs_network* net, int r_star,
                                  double* xi_out) {
  return guarded([&] {
    require(precision_field, "precision_field");
    require(net, "net");
    require(xi_out, "xi_out");
    const gnarspec::ThresholdLadder ladder =
        gnarspec::select_thresholds(precision_field->field, net->st, r_star);
    for (int r = 0; r < ladder.r_star; ++r) xi_out[r] = ladder.xi[r];
  });
}

gs_status gs_threshold_precision(const gs_field* precision_field, double xi,
                                 gs_field** out) {
  return guarded([&] {
    require(precision_field, "precision_field");
    require(out, "out");
    *out = new gs_field{
        gnarspec::threshold_precision(precision_field->field, xi)};
  });
}

gs_status gs_r_dependent_spectrum(const gs_field* thresholded,
                                  int ridge_fallback, gs_field** out) {
  return guarded([&] {
    require(thresholded, "thresholded");
    require(out, "out");
    *out = new gs_field{gnarspec::r_dependent_spectrum(thresholded->field,
                                                       ridge_fallback != 0)};
  });
}

/* ---- spectral fields --------------------------------------------------- */

const char* gs_field_kind(const gs_field* field) {
  if (!field) return "";
  switch (field->field.kind) {
    case gnarspec::FieldKind::spectrum: return "spectrum";
    case gnarspec::FieldKind::precision: return "precision";
    case gnarspec::FieldKind::coherence: return "coherence";
    case gnarspec::FieldKind::partial_coherence: return "partial_coherence";
  }
  return "";
}

size_t gs_field_size(const gs_field* field) {
  return field ? field->field.size() : 0;
}

int gs_field_dim(const gs_field* field) {
  return field ? field->field.dim() : 0;
}

gs_status gs_field_omega(const gs_field* field, double* out) {
  return guarded([&] {
    require(field, "field");
    require(out, "out");
    std::memcpy(out, field->field.grid.omega.data(),
                field->field.size() * sizeof(double));
  });
}

gs_status gs_field_matrix(const gs_field* field, size_t l, double* re,
                          double* im) {
  return guarded([&] {
    require(field, "field");
    require(re, "re");
    if (l >= field->field.size())
      throw gnarspec::InvalidArgument("field: grid index out of range");
    const Eigen::MatrixXcd& m = field->field.m[l];
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        re[i * m.cols() + j] = m(i, j).real();
        if (im) im[i * m.cols() + j] = m(i, j).imag();
      }
  });
}

gs_status gs_field_write_json(const gs_field* field, const char* path) {
  return guarded([&] {
    require(field, "field");
    require(path, "path");
    field->field.write_json(path);
  });
}

gs_status gs_field_read_json(const char* path, gs_field** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new gs_field{gnarspec::SpectralField::read_json(path)};
  });
}

gs_status gs_field_write_csv(const gs_field* field, const char* path) {
  return guarded([&] {
    require(field, "field");
    require(path, "path");
    field->field.write_csv(path);
  });
}

void gs_field_free(gs_field* field) { delete field; }

/* ---- volatility-network pipeline --------------------------------------- */

gs_status gs_gfevd_run(const char* ohlc_csv, int horizon, int p, int p_max,
                       int folds, int n_lambda, int include_h0,
                       const char* out_json, const char* out_edges,
                       double* tau_out) {
  return guarded([&] {
    require(ohlc_csv, "ohlc_csv");
    gnarspec::LassoVarOptions opt;
    opt.p = p;
    opt.p_max = p_max;
    opt.folds = folds;
    opt.n_lambda = n_lambda;
    const gnarspec::GfevdResult res = gnarspec::run_gfevd(
        gnarspec::OhlcPanel::read_csv(ohlc_csv), horizon, opt,
        include_h0 != 0);
    if (out_json) res.write_json(out_json);
    if (out_edges) res.write_edge_list(out_edges);
    if (tau_out) *tau_out = res.network.tau_star;
  });
}

/* ---- benchmark harness -------------------------------------------------- */

gs_status gs_bench_run(const char* spec_json, const char* out_csv,
                       const char* out_json, int n_threads, int replicates) {
  return guarded([&] {
    require(spec_json, "spec_json");
    require(out_csv, "out_csv");
    gnarspec::bench::ExperimentSpec spec =
        gnarspec::bench::ExperimentSpec::read_json(spec_json);
    if (replicates > 0) spec.replicates = replicates;
    const gnarspec::bench::Report report =
        gnarspec::bench::run_experiment(spec, n_threads);
    report.write_csv(out_csv);
    if (out_json) report.write_json(out_json);
  });
}

}  // extern "C"
