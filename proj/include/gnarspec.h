/*
 * gnarspec C API
 *
 * Spectral analysis of network autoregressive time series behind a flat
 * C interface: opaque handles, status codes, no exceptions across the
 * boundary. Every function that can fail returns gs_status; on failure the
 * thread-local message from gs_last_error() describes what went wrong and
 * all output parameters are left untouched.
 *
 * Handles returned through ** output parameters are owned by the caller and
 * released with the matching *_free function. Freeing NULL is a no-op.
 *
 * Matrix buffers are row-major, d*d doubles unless stated otherwise. Node
 * labels are 1-based everywhere, matching the edge-list file format.
 */
#ifndef GNARSPEC_H
#define GNARSPEC_H

#include <stddef.h>
#include <stdint.h>

#if defined(__GNUC__) && defined(GNARSPEC_BUILD_SHARED)
#define GS_API __attribute__((visibility("default")))
#else
#define GS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct gs_network gs_network; /* undirected graph + stage structure */
typedef struct gs_model gs_model;     /* network autoregressive parameters  */
typedef struct gs_panel gs_panel;     /* T x d multivariate series          */
typedef struct gs_field gs_field;     /* matrix-valued frequency function   */

typedef enum {
  GS_OK = 0,
  GS_ERR_NUMERIC = 1,  /* estimation/linear-algebra failure */
  GS_ERR_INPUT = 2,    /* bad arguments, bad files, bad formats */
  GS_ERR_INTERNAL = 3  /* unexpected; please report */
} gs_status;

/* Message for the most recent failure on this thread ("" when none). The
 * pointer stays valid until the next failing call on the same thread. */
GS_API const char* gs_last_error(void);

GS_API const char* gs_version(void);

/* ---- networks ---------------------------------------------------------- */

GS_API gs_status gs_network_read(const char* path, gs_network** out);
GS_API gs_status gs_network_write(const gs_network* net, const char* path);

/* edge_i/edge_j: n_edges node labels each; weights may be NULL (unweighted).
 * Weighted networks shape the stage-1 neighbourhood averages; deeper stages
 * always use the equal split. */
GS_API gs_status gs_network_create(int d, const int* edge_i, const int* edge_j,
                                   const double* weights, size_t n_edges,
                                   gs_network** out);
GS_API void gs_network_free(gs_network* net);

GS_API int gs_network_order(const gs_network* net);    /* node count */
GS_API int gs_network_diameter(const gs_network* net); /* largest finite distance */
/* shortest-path distance, -1 when disconnected */
GS_API int gs_network_distance(const gs_network* net, int i, int j);
GS_API gs_status gs_network_adjacency(const gs_network* net, double* out);

/* ---- models ------------------------------------------------------------ */

GS_API gs_status gs_model_read(const char* path, gs_model** out);
GS_API gs_status gs_model_write(const gs_model* model, const char* path);

/* s: p stage depths; alpha: p own-lag coefficients; beta: the stage
 * coefficients of every lag concatenated (s[0] values for lag 1, then s[1]
 * for lag 2, ...); innovations are N(0, sigma2 I). */
GS_API gs_status gs_model_create(int p, const int* s, const double* alpha,
                                 const double* beta, double sigma2,
                                 gs_model** out);

/* "M1".."M5": the built-in simulation models used by the benchmark suite */
GS_API gs_status gs_model_builtin(const char* name, gs_model** out);
GS_API void gs_model_free(gs_model* model);

GS_API int gs_model_order(const gs_model* model); /* p */
GS_API gs_status gs_model_stages(const gs_model* model, int* s_out);
/* alpha_out: p values; beta_out: sum(s) values, lag-concatenated order */
GS_API gs_status gs_model_coefficients(const gs_model* model, double* alpha_out,
                                       double* beta_out);
GS_API double gs_model_sigma2(const gs_model* model);
GS_API int gs_model_is_stationary(const gs_model* model); /* 1 or 0 */

/* ---- series panels ----------------------------------------------------- */

GS_API gs_status gs_panel_read(const char* path, gs_panel** out);
GS_API gs_status gs_panel_write(const gs_panel* panel, const char* path);
/* data: T*d doubles, row-major (time runs over rows) */
GS_API gs_status gs_panel_create(const double* data, long T, int d,
                                 gs_panel** out);
GS_API void gs_panel_free(gs_panel* panel);

GS_API long gs_panel_length(const gs_panel* panel);
GS_API int gs_panel_width(const gs_panel* panel);
GS_API gs_status gs_panel_data(const gs_panel* panel, double* out);

/* ---- simulation and fitting -------------------------------------------- */

/* Simulates T observations after discarding burn_in. Deterministic per
 * seed. A nonstationary model warns on stderr and proceeds. */
GS_API gs_status gs_simulate(const gs_model* model, const gs_network* net,
                             long T, long burn_in, uint64_t seed,
                             gs_panel** out);

/* Least-squares fit at order (p, s[0..p-1]). The fitted model carries the
 * residual covariance as its innovation matrix. bic may be NULL. */
GS_API gs_status gs_fit(const gs_panel* panel, const gs_network* net, int p,
                        const int* s, gs_model** out, double* bic);

/* Order selected by BIC over p = 1..p_max, stages 0..min(s_max, diameter) */
GS_API gs_status gs_fit_auto(const gs_panel* panel, const gs_network* net,
                             int p_max, int s_max, gs_model** out,
                             double* bic);

/* ---- spectra ----------------------------------------------------------- */

/* Estimation grid l/T, l = 1..floor(T/2)-1. Call with omega = NULL to get
 * the size, then again with a buffer of that size. */
GS_API gs_status gs_fourier_grid(long T, double* omega, size_t* n_out);

/* Model-implied spectral density on an increasing grid inside [0, 0.5] */
GS_API gs_status gs_spectrum(const gs_model* model, const gs_network* net,
                             const double* omega, size_t n, gs_field** out);

GS_API gs_status gs_precision(const gs_field* spectrum, gs_field** out);
GS_API gs_status gs_coherence(const gs_field* spectrum, gs_field** out);
GS_API gs_status gs_partial_coherence(const gs_field* precision_field,
                                      gs_field** out);

/* Smoothed-periodogram estimate on the Fourier grid of the panel length.
 * bandwidth < 0 picks floor(sqrt(T)); penalty is "none", "a1" or "induced"
 * (the latter needs r_star >= 1). */
GS_API gs_status gs_np_spectrum(const gs_panel* panel, const gs_network* net,
                                int bandwidth, const char* penalty, int r_star,
                                gs_field** out);

/* VAR plug-in spectrum on a caller grid; p < 1 selects the lag by BIC up to
 * p_max. penalty as in gs_np_spectrum. */
GS_API gs_status gs_var_spectrum(const gs_panel* panel, const gs_network* net,
                                 int p, int p_max, const char* penalty,
                                 int r_star, const double* omega, size_t n,
                                 gs_field** out);

/* ---- r-dependent hierarchy --------------------------------------------- */

/* xi_out: r_star thresholds, stage r at xi_out[r-1] */
GS_API gs_status gs_hierarchy_thresholds(const gs_field* precision_field,
                                         const gs_network* net, int r_star,
                                         double* xi_out);

/* Entrywise soft threshold at level xi, diagonal preserved exactly */
GS_API gs_status gs_threshold_precision(const gs_field* precision_field,
                                        double xi, gs_field** out);

/* Inverts a thresholded precision field back to a spectrum field;
 * ridge_fallback != 0 regularizes ill-conditioned frequencies instead of
 * failing. */
GS_API gs_status gs_r_dependent_spectrum(const gs_field* thresholded,
                                         int ridge_fallback, gs_field** out);

/* ---- spectral fields --------------------------------------------------- */

/* "spectrum", "precision", "coherence" or "partial_coherence" */
GS_API const char* gs_field_kind(const gs_field* field);
GS_API size_t gs_field_size(const gs_field* field); /* grid points */
GS_API int gs_field_dim(const gs_field* field);
GS_API gs_status gs_field_omega(const gs_field* field, double* out);
/* matrix at grid index l: real and imaginary parts, d*d row-major each;
 * im may be NULL when only the real part is wanted */
GS_API gs_status gs_field_matrix(const gs_field* field, size_t l, double* re,
                                 double* im);
GS_API gs_status gs_field_write_json(const gs_field* field, const char* path);
GS_API gs_status gs_field_read_json(const char* path, gs_field** out);
GS_API gs_status gs_field_write_csv(const gs_field* field, const char* path);
GS_API void gs_field_free(gs_field* field);

/* ---- volatility-network pipeline --------------------------------------- */

/* Full chain: OHLC CSV (date,node,open,high,low,close) -> range-based
 * log-volatility -> lasso VAR (p < 1 selects the lag by BIC up to p_max) ->
 * H-step forecast-error variance decomposition -> connectivity-preserving
 * threshold network. include_h0 adds the contemporaneous horizon term.
 * out_json / out_edges / tau_out may each be NULL. */
GS_API gs_status gs_gfevd_run(const char* ohlc_csv, int horizon, int p,
                              int p_max, int folds, int n_lambda,
                              int include_h0, const char* out_json,
                              const char* out_edges, double* tau_out);

/* ---- benchmark harness -------------------------------------------------- */

/* Runs the Monte-Carlo experiment described by a spec JSON file and writes
 * the report CSV (and JSON when out_json is non-NULL). n_threads <= 0 uses
 * the machine core count; results do not depend on the thread count.
 * replicates > 0 overrides the spec's replicate count (scaling a desk-scale
 * spec up or down without editing it). */
GS_API gs_status gs_bench_run(const char* spec_json, const char* out_csv,
                              const char* out_json, int n_threads,
                              int replicates);

#ifdef __cplusplus
}
#endif

#endif /* GNARSPEC_H */
