#include "gnarspec/spectra.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>

#include "gnarspec/bench.hpp"
#include "gnarspec/errors.hpp"
#include "gnarspec/graph.hpp"

using namespace gnarspec;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

SpectralField single_matrix_field(FieldKind kind, Eigen::MatrixXcd m,
                                  double omega = 0.25) {
  SpectralField f;
  f.kind = kind;
  f.grid = FrequencyGrid::from({omega});
  f.m.push_back(std::move(m));
  return f;
}

}  // namespace

TEST_CASE("frequency grids") {
  const FrequencyGrid fg = FrequencyGrid::fourier(10);
  REQUIRE(fg.size() == 4);
  CHECK(fg.omega.front() == doctest::Approx(0.1));
  CHECK(fg.omega.back() == doctest::Approx(0.4));
  CHECK_THROWS_AS(FrequencyGrid::fourier(3), InvalidArgument);

  const FrequencyGrid ug = FrequencyGrid::uniform(4);
  REQUIRE(ug.size() == 4);
  CHECK(ug.omega.back() == doctest::Approx(0.5));

  CHECK_THROWS_AS(FrequencyGrid::from({0.2, 0.1}), InvalidArgument);
  CHECK_THROWS_AS(FrequencyGrid::from({0.2, 0.6}), InvalidArgument);
  CHECK_THROWS_AS(FrequencyGrid::from({-0.1}), InvalidArgument);
  CHECK_NOTHROW(FrequencyGrid::from({0.0, 0.5}));
}

TEST_CASE("scalar autoregression has the textbook spectrum") {
  Network g(1, {});
  StageStructure st(g);
  const Eigen::MatrixXd w = equal_stage_weights(st);

  GnarParams m;
  m.order.p = 1;
  m.order.s = {0};
  m.alpha = Eigen::VectorXd::Constant(1, 0.6);
  m.beta = {Eigen::VectorXd()};
  m.sigma2 = 2.0;

  const FrequencyGrid grid = FrequencyGrid::uniform(32);
  const SpectralField f = gnar_spectrum(m, st, w, grid);
  for (size_t l = 0; l < grid.size(); ++l) {
    const double omega = grid.omega[l];
    const double oracle =
        2.0 / (1.0 - 2.0 * 0.6 * std::cos(kTwoPi * omega) + 0.36);
    CHECK(f.m[l](0, 0).real() == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(f.m[l](0, 0).imag() == doctest::Approx(0.0));
  }
}

TEST_CASE("network model spectrum equals its lag-matrix embedding") {
  for (const char* net_file : {"/net5.edges", "/net10.edges"}) {
    const Network g =
        Network::read_edge_list(std::string(GNARSPEC_DATA_DIR) + net_file);
    const StageStructure st(g);
    const Eigen::MatrixXd w = equal_stage_weights(st);
    const FrequencyGrid grid = FrequencyGrid::uniform(64);

    for (const auto& [name, params] : bench::builtin_models()) {
      const SpectralField direct = gnar_spectrum(params, st, w, grid);
      const SpectralField via_var =
          var_spectrum(var_coefficients(params, st, w),
                       params.innovation_cov(g.order()), grid);
      for (size_t l = 0; l < grid.size(); ++l) {
        INFO(name << " on " << net_file << " at omega = " << grid.omega[l]);
        CHECK((direct.m[l] - via_var.m[l]).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }
}

TEST_CASE("spectra are Hermitian and positive semidefinite") {
  const Network g =
      Network::read_edge_list(std::string(GNARSPEC_DATA_DIR) + "/net10.edges");
  const StageStructure st(g);
  const Eigen::MatrixXd w = equal_stage_weights(st);
  const SpectralField f = gnar_spectrum(bench::builtin_model("M3"), st, w,
                                        FrequencyGrid::uniform(16));
  for (const auto& m : f.m) {
    CHECK((m - m.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
  }
}

TEST_CASE("precision inverts the spectrum") {
  const Network g =
      Network::read_edge_list(std::string(GNARSPEC_DATA_DIR) + "/net5.edges");
  const StageStructure st(g);
  const Eigen::MatrixXd w = equal_stage_weights(st);
  const SpectralField f = gnar_spectrum(bench::builtin_model("M1"), st, w,
                                        FrequencyGrid::uniform(16));
  const SpectralField s = precision(f);
  CHECK(s.kind == FieldKind::precision);
  for (size_t l = 0; l < f.size(); ++l) {
    const Eigen::MatrixXcd prod = s.m[l] * f.m[l];
    CHECK((prod - Eigen::MatrixXcd::Identity(5, 5)).cwiseAbs().maxCoeff() <
          1e-10);
    CHECK((s.m[l] - s.m[l].adjoint()).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("precision matches the adjugate formula in three dimensions") {
  Eigen::MatrixXcd a(3, 3);
  const std::complex<double> i(0.0, 1.0);
  a << 4.0, 0.5 + 0.2 * i, 0.1 - 0.3 * i,
       0.5 - 0.2 * i, 3.0, 0.4 + 0.1 * i,
       0.1 + 0.3 * i, 0.4 - 0.1 * i, 2.0;

  const SpectralField f = single_matrix_field(FieldKind::spectrum, a);
  const SpectralField s = precision(f);

  // inverse by cofactors
  const std::complex<double> det =
      a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
      a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
      a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
  Eigen::MatrixXcd adj(3, 3);
  adj(0, 0) = a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1);
  adj(0, 1) = -(a(0, 1) * a(2, 2) - a(0, 2) * a(2, 1));
  adj(0, 2) = a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1);
  adj(1, 0) = -(a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0));
  adj(1, 1) = a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0);
  adj(1, 2) = -(a(0, 0) * a(1, 2) - a(0, 2) * a(1, 0));
  adj(2, 0) = a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0);
  adj(2, 1) = -(a(0, 0) * a(2, 1) - a(0, 1) * a(2, 0));
  adj(2, 2) = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);

  CHECK((s.m[0] - adj / det).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("distant nodes have exactly zero inverse-spectrum entries") {
  // path 1-2-3-4 with one-stage dependence: delta(1,4) = 3 >= 2*1 + 1
  Network g(4, {{1, 2}, {2, 3}, {3, 4}});
  StageStructure st(g);
  const Eigen::MatrixXd w = equal_stage_weights(st);

  GnarParams m;
  m.order.p = 1;
  m.order.s = {1};
  m.alpha = Eigen::VectorXd::Constant(1, 0.3);
  m.beta = {Eigen::VectorXd::Constant(1, 0.4)};

  const FrequencyGrid grid = FrequencyGrid::uniform(32);
  const SpectralField s = precision(gnar_spectrum(m, st, w, grid));
  const SpectralField rho = coherence(gnar_spectrum(m, st, w, grid));
  double max_far = 0.0, min_marginal = 1.0;
  for (size_t l = 0; l < s.size(); ++l) {
    max_far = std::max(max_far, std::abs(s.m[l](0, 3)));
    min_marginal = std::min(min_marginal, rho.m[l](0, 3).real());
  }
  CHECK(max_far < 1e-10);      // no direct association beyond reach
  CHECK(min_marginal > 1e-8);  // yet marginally correlated through the path
}

TEST_CASE("coherence is bounded, symmetric and one on the diagonal") {
  const Network g =
      Network::read_edge_list(std::string(GNARSPEC_DATA_DIR) + "/net10.edges");
  const StageStructure st(g);
  const Eigen::MatrixXd w = equal_stage_weights(st);
  const SpectralField f = gnar_spectrum(bench::builtin_model("M5"), st, w,
                                        FrequencyGrid::uniform(16));

  for (const SpectralField& c : {coherence(f), partial_coherence(precision(f))})
    for (const auto& m : c.m) {
      CHECK(m.imag().cwiseAbs().maxCoeff() == 0.0);
      for (int i = 0; i < 10; ++i) {
        CHECK(m(i, i).real() == 1.0);
        for (int j = 0; j < 10; ++j) {
          CHECK(m(i, j).real() >= 0.0);
          CHECK(m(i, j).real() <= 1.0);
          CHECK(m(i, j).real() == m(j, i).real());
        }
      }
    }
}

TEST_CASE("coherence and partial coherence coincide for two nodes") {
  Network g(2, {{1, 2}});
  StageStructure st(g);
  const Eigen::MatrixXd w = equal_stage_weights(st);

  GnarParams m;
  m.order.p = 1;
  m.order.s = {1};
  m.alpha = Eigen::VectorXd::Constant(1, 0.25);
  m.beta = {Eigen::VectorXd::Constant(1, 0.35)};

  const SpectralField f = gnar_spectrum(m, st, w, FrequencyGrid::uniform(32));
  const SpectralField rho = coherence(f);
  const SpectralField gamma = partial_coherence(precision(f));
  for (size_t l = 0; l < f.size(); ++l)
    CHECK(rho.m[l](0, 1).real() ==
          doctest::Approx(gamma.m[l](0, 1).real()).epsilon(1e-10));
}

TEST_CASE("perfectly dependent pair attains coherence one") {
  Eigen::MatrixXcd m(2, 2);
  m << 1.0, 1.0, 1.0, 1.0;  // rank one
  const SpectralField f = single_matrix_field(FieldKind::spectrum, m);
  const SpectralField rho = coherence(f);
  CHECK(rho.m[0](0, 1).real() == doctest::Approx(1.0));
}

TEST_CASE("kind mismatches and degenerate diagonals are rejected") {
  Eigen::MatrixXcd ok(2, 2);
  ok << 1.0, 0.2, 0.2, 1.0;
  const SpectralField f = single_matrix_field(FieldKind::spectrum, ok);
  const SpectralField c = coherence(f);

  CHECK_THROWS_AS(coherence(c), InvalidArgument);
  CHECK_THROWS_AS(precision(c), InvalidArgument);
  CHECK_THROWS_AS(partial_coherence(f), InvalidArgument);

  Eigen::MatrixXcd degenerate(2, 2);
  degenerate << 0.0, 0.0, 0.0, 1.0;
  CHECK_THROWS_AS(
      coherence(single_matrix_field(FieldKind::spectrum, degenerate)),
      NumericError);
}

TEST_CASE("singular transfer matrices are reported with their frequency") {
  // eigenvalue -1 makes I - Phi e^{-i pi} exactly singular at omega = 0.5
  std::vector<Eigen::MatrixXd> phi = {(Eigen::MatrixXd(2, 2) << 0, 1, 1, 0)
                                          .finished()};
  const Eigen::MatrixXd v = Eigen::MatrixXd::Identity(2, 2);
  try {
    var_spectrum(phi, v, FrequencyGrid::from({0.5}));
    FAIL("expected a singularity error");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("0.5") != std::string::npos);
  }
}

TEST_CASE("spectral field JSON round trip is lossless") {
  const Network g =
      Network::read_edge_list(std::string(GNARSPEC_DATA_DIR) + "/net5.edges");
  const StageStructure st(g);
  const Eigen::MatrixXd w = equal_stage_weights(st);
  const SpectralField f = gnar_spectrum(bench::builtin_model("M2"), st, w,
                                        FrequencyGrid::uniform(8));

  f.write_json("field_roundtrip.json");
  const SpectralField r = SpectralField::read_json("field_roundtrip.json");
  CHECK(r.kind == FieldKind::spectrum);
  REQUIRE(r.size() == f.size());
  for (size_t l = 0; l < f.size(); ++l) {
    CHECK(r.grid.omega[l] == f.grid.omega[l]);
    CHECK((r.m[l] - f.m[l]).cwiseAbs().maxCoeff() == 0.0);
  }

  // real kinds survive too
  const SpectralField c = coherence(f);
  c.write_json("field_roundtrip.json");
  const SpectralField rc = SpectralField::read_json("field_roundtrip.json");
  CHECK(rc.kind == FieldKind::coherence);
  for (size_t l = 0; l < c.size(); ++l)
    CHECK((rc.m[l] - c.m[l]).cwiseAbs().maxCoeff() == 0.0);
  std::remove("field_roundtrip.json");
}

TEST_CASE("field kind names round trip") {
  for (FieldKind k : {FieldKind::spectrum, FieldKind::precision,
                      FieldKind::coherence, FieldKind::partial_coherence})
    CHECK(field_kind_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(field_kind_from_string("nonsense"), InvalidArgument);
}
