#include "gnarspec/periodogram.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "gnarspec/bench.hpp"
#include "gnarspec/errors.hpp"
#include "gnarspec/graph.hpp"
#include "gnarspec/rng.hpp"

using namespace gnarspec;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

SeriesPanel noise_panel(long T, int d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(T, d);
  for (long t = 0; t < T; ++t)
    for (int i = 0; i < d; ++i) x(t, i) = rng.gaussian();
  return SeriesPanel::from_matrix(std::move(x));
}

Eigen::MatrixXd random_pd(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = rng.gaussian();
  return b * b.transpose() + 0.5 * n * Eigen::MatrixXd::Identity(n, n);
}

Eigen::MatrixXd random_mask(int n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      m(i, j) = m(j, i) = rng.uniform() < 0.5 ? 1.0 : 0.0;
  return m;
}

double gaussian_loglik(const Eigen::MatrixXd& sigma_tilde,
                       const Eigen::MatrixXd& theta) {
  Eigen::LLT<Eigen::MatrixXd> llt(theta);
  REQUIRE(llt.info() == Eigen::Success);
  const double logdet =
      2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return logdet - (sigma_tilde * theta).trace();
}

}  // namespace

TEST_CASE("transform matches the direct sum") {
  for (long T : {8L, 9L}) {
    const SeriesPanel panel = noise_panel(T, 2, 100 + T);
    const PanelDft d = dft(panel);
    REQUIRE(d.T == T);
    REQUIRE(d.j.size() == static_cast<size_t>(T));
    for (long l = 0; l < T; ++l) {
      Eigen::VectorXcd oracle = Eigen::VectorXcd::Zero(2);
      for (long t = 1; t <= T; ++t)
        oracle += panel.x.row(t - 1).transpose() *
                  std::polar(1.0, -kTwoPi * double(t) * double(l) / double(T));
      oracle /= std::sqrt(double(T));
      CHECK((d.j[l] - oracle).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("transform preserves total power") {
  const SeriesPanel panel = noise_panel(64, 3, 11);
  const PanelDft d = dft(panel);
  Eigen::Vector3d freq_power = Eigen::Vector3d::Zero();
  for (const auto& j : d.j) freq_power += j.cwiseAbs2();
  const Eigen::Vector3d time_power = panel.x.colwise().squaredNorm();
  CHECK((freq_power - time_power).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("raw periodogram is rank-one Hermitian with mirror symmetry") {
  const SeriesPanel panel = noise_panel(32, 3, 12);
  const PeriodogramCircle raw = raw_periodogram(dft(panel));
  REQUIRE(raw.i.size() == 32);
  for (long l = 0; l < 32; ++l) {
    const Eigen::MatrixXcd& m = raw.i[l];
    CHECK((m - m.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    CHECK(es.eigenvalues().minCoeff() > -1e-12);
    // rank one: a single nonnegligible eigenvalue
    CHECK(es.eigenvalues().head(2).cwiseAbs().maxCoeff() < 1e-10);
  }
  for (long l = 1; l < 32; ++l)
    CHECK((raw.i[32 - l] - raw.i[l].conjugate()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("field restriction exposes the estimation grid") {
  const SeriesPanel panel = noise_panel(20, 2, 13);
  const PeriodogramCircle raw = raw_periodogram(dft(panel));
  const SpectralField f = raw.field();
  CHECK(f.kind == FieldKind::spectrum);
  REQUIRE(f.size() == 9);  // l = 1..9 for T = 20
  for (size_t l = 0; l < f.size(); ++l) {
    CHECK(f.grid.omega[l] == doctest::Approx((l + 1) / 20.0));
    CHECK((f.m[l] - raw.i[l + 1]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("smoothing averages around the circle") {
  const SeriesPanel panel = noise_panel(16, 2, 14);
  const PeriodogramCircle raw = raw_periodogram(dft(panel));
  const PeriodogramCircle sm = smooth(raw, SmoothingSpec::daniell(1));

  for (long l = 0; l < 16; ++l) {
    const Eigen::MatrixXcd oracle =
        (raw.i[(l + 15) % 16] + raw.i[l] + raw.i[(l + 1) % 16]) / 3.0;
    CHECK((sm.i[l] - oracle).cwiseAbs().maxCoeff() < 1e-14);
  }

  SUBCASE("zero half-width is the identity") {
    const PeriodogramCircle id = smooth(raw, SmoothingSpec::daniell(0));
    for (long l = 0; l < 16; ++l)
      CHECK((id.i[l] - raw.i[l]).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("bandwidth must stay below half the circle") {
    CHECK_THROWS_AS(smooth(raw, SmoothingSpec::daniell(8)), InvalidArgument);
  }
}

TEST_CASE("smoothing specs are validated") {
  CHECK(SmoothingSpec::default_for(100).m == 10);
  CHECK(SmoothingSpec::default_for(1000).m == 31);
  CHECK_THROWS_AS(SmoothingSpec::daniell(-1), InvalidArgument);

  SmoothingSpec s = SmoothingSpec::daniell(1);
  s.weights = {0.5, 1.0, 1.5};  // asymmetric
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s.weights = {1.0, 2.0, 1.0};  // mean 4/3, not 1
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s.weights = {0.5, 2.0, 0.5};
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("smoothing slashes the white-noise periodogram variance") {
  const SeriesPanel panel = noise_panel(512, 2, 15);
  const PeriodogramCircle raw = raw_periodogram(dft(panel));
  const PeriodogramCircle sm = smooth(raw, SmoothingSpec::default_for(512));

  const SpectralField raw_f = raw.field();
  const SpectralField sm_f = sm.field();
  double raw_err = 0.0, sm_err = 0.0;
  const Eigen::MatrixXcd truth = Eigen::MatrixXcd::Identity(2, 2);
  for (size_t l = 0; l < raw_f.size(); ++l) {
    raw_err += (raw_f.m[l] - truth).squaredNorm();
    sm_err += (sm_f.m[l] - truth).squaredNorm();
  }
  CHECK(sm_err < raw_err / 4.0);
}

TEST_CASE("augmentation doubles and halves the spectrum eigenvalues") {
  Eigen::MatrixXcd m(2, 2);
  m << 2.0, std::complex<double>(0.5, -0.25), std::complex<double>(0.5, 0.25),
      1.0;
  const Eigen::MatrixXd a = augment(m);
  REQUIRE(a.rows() == 4);
  CHECK(a.isApprox(a.transpose()));

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es_m(m);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_a(a);
  // each eigenvalue of M appears twice in the augmentation, halved
  CHECK(es_a.eigenvalues()(0) == doctest::Approx(es_m.eigenvalues()(0) / 2));
  CHECK(es_a.eigenvalues()(1) == doctest::Approx(es_m.eigenvalues()(0) / 2));
  CHECK(es_a.eigenvalues()(2) == doctest::Approx(es_m.eigenvalues()(1) / 2));
  CHECK(es_a.eigenvalues()(3) == doctest::Approx(es_m.eigenvalues()(1) / 2));

  SUBCASE("non-Hermitian inputs are rejected") {
    Eigen::MatrixXcd bad = m;
    bad(0, 1) += std::complex<double>(0.001, 0.0);
    CHECK_THROWS_AS(augment(bad), InvalidArgument);
  }
}

TEST_CASE("de-augmentation inverts and projects") {
  Eigen::MatrixXcd m(3, 3);
  const std::complex<double> i(0.0, 1.0);
  m << 2.0, 0.3 + 0.4 * i, 0.1 - 0.2 * i,
       0.3 - 0.4 * i, 1.5, 0.05 + 0.15 * i,
       0.1 + 0.2 * i, 0.05 - 0.15 * i, 1.0;

  CHECK((de_augment(augment(m)) - m).cwiseAbs().maxCoeff() < 1e-15);

  // on arbitrary symmetric input: the orthogonal projection onto the
  // augmented subspace, so the residual is Frobenius-orthogonal to it
  Rng rng(77);
  Eigen::MatrixXd s(6, 6);
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b <= a; ++b) s(a, b) = s(b, a) = rng.gaussian();
  const Eigen::MatrixXd residual = s - augment(de_augment(s));
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Rng hr(seed);
    Eigen::MatrixXcd h(3, 3);
    for (int a = 0; a < 3; ++a) {
      h(a, a) = hr.gaussian();
      for (int b = a + 1; b < 3; ++b) {
        h(a, b) = std::complex<double>(hr.gaussian(), hr.gaussian());
        h(b, a) = std::conj(h(a, b));
      }
    }
    CHECK(std::abs((residual.transpose() * augment(h)).trace()) < 1e-12);
  }

  CHECK_THROWS_AS(de_augment(Eigen::MatrixXd::Identity(3, 3)),
                  InvalidArgument);  // odd size
}

TEST_CASE("saturated constraint set returns the input unchanged") {
  const Eigen::MatrixXd target = random_pd(6, 21);
  Eigen::MatrixXd mask = Eigen::MatrixXd::Ones(6, 6);
  mask.diagonal().setZero();

  const ConstrainedMle fit = constrained_mle(target, mask);
  CHECK((fit.sigma - target).cwiseAbs().maxCoeff() == 0.0);
  CHECK((fit.sigma * fit.theta - Eigen::MatrixXd::Identity(6, 6))
            .cwiseAbs()
            .maxCoeff() < 1e-10);
  CHECK(fit.sweeps == 0);
}

TEST_CASE("three-node chain constraint has a closed form") {
  const Eigen::MatrixXd target = random_pd(3, 22);
  Eigen::MatrixXd mask = Eigen::MatrixXd::Zero(3, 3);
  mask(0, 1) = mask(1, 0) = 1.0;
  mask(1, 2) = mask(2, 1) = 1.0;

  const ConstrainedMle fit = constrained_mle(target, mask);
  // the only free entry is (1,3); conditional independence fills it in
  CHECK(fit.sigma(0, 2) ==
        doctest::Approx(target(0, 1) * target(1, 2) / target(1, 1))
            .epsilon(1e-10));
  CHECK(fit.sigma(0, 0) == doctest::Approx(target(0, 0)));
  CHECK(fit.sigma(0, 1) == doctest::Approx(target(0, 1)));
  CHECK(fit.sigma(1, 2) == doctest::Approx(target(1, 2)));
  CHECK(fit.theta(0, 2) == 0.0);
  CHECK(fit.theta(2, 0) == 0.0);
}

TEST_CASE("estimating equations hold on random problems") {
  for (std::uint64_t seed = 30; seed < 40; ++seed) {
    const int n = 3 + static_cast<int>(seed % 4);
    const Eigen::MatrixXd target = random_pd(n, seed);
    const Eigen::MatrixXd mask = random_mask(n, seed + 1000);

    const ConstrainedMle fit = constrained_mle(target, mask);

    for (int i = 0; i < n; ++i) {
      CHECK(fit.sigma(i, i) == doctest::Approx(target(i, i)).epsilon(1e-8));
      for (int j = 0; j < n; ++j) {
        if (mask(i, j) != 0.0)
          CHECK(fit.sigma(i, j) ==
                doctest::Approx(target(i, j)).epsilon(1e-8));
        else if (i != j)
          CHECK(fit.theta(i, j) == 0.0);  // exact zeros, not small values
      }
    }
    CHECK((fit.sigma * fit.theta - Eigen::MatrixXd::Identity(n, n))
              .cwiseAbs()
              .maxCoeff() < 1e-7);

    // no feasible perturbation of the precision improves the likelihood
    const double best = gaussian_loglik(target, fit.theta);
    Rng rng(seed + 2000);
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::MatrixXd dir = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < n; ++i) {
        dir(i, i) = rng.gaussian();
        for (int j = i + 1; j < n; ++j)
          if (mask(i, j) != 0.0)
            dir(i, j) = dir(j, i) = rng.gaussian();
      }
      const Eigen::MatrixXd cand = fit.theta + 1e-4 * dir;
      Eigen::LLT<Eigen::MatrixXd> llt(cand);
      if (llt.info() != Eigen::Success) continue;
      CHECK(gaussian_loglik(target, cand) <= best + 1e-10);
    }
  }
}

TEST_CASE("warm starts do not move the fixed point") {
  const Eigen::MatrixXd target = random_pd(5, 55);
  const Eigen::MatrixXd mask = random_mask(5, 56);
  const ConstrainedMle cold = constrained_mle(target, mask);

  Eigen::MatrixXd warm = target;
  warm(0, 1) += 0.3;
  warm(1, 0) += 0.3;
  const ConstrainedMle warmed = constrained_mle(target, mask, &warm);
  CHECK((cold.sigma - warmed.sigma).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("constraint solver rejects bad inputs") {
  Eigen::MatrixXd mask = Eigen::MatrixXd::Ones(3, 3);
  mask.diagonal().setZero();

  Eigen::MatrixXd asym = random_pd(3, 60);
  asym(0, 1) += 0.1;
  CHECK_THROWS_AS(constrained_mle(asym, mask), InvalidArgument);

  Eigen::MatrixXd bad_mask = mask;
  bad_mask(0, 1) = 0.0;  // asymmetric mask
  CHECK_THROWS_AS(constrained_mle(random_pd(3, 61), bad_mask),
                  InvalidArgument);

  Eigen::MatrixXd not_pd = Eigen::MatrixXd::Identity(3, 3);
  not_pd(2, 2) = -1.0;
  CHECK_THROWS_AS(constrained_mle(not_pd, mask), NumericError);
}

TEST_CASE("unpenalized pipeline equals smoothed periodogram restriction") {
  const Network g =
      Network::read_edge_list(std::string(GNARSPEC_DATA_DIR) + "/net5.edges");
  const StageStructure st(g);
  const SeriesPanel panel = noise_panel(128, 5, 70);

  const SmoothingSpec spec = SmoothingSpec::daniell(5);
  const SpectralField a =
      np_spectrum_penalized(panel, st, spec, Penalty::none);
  const SpectralField b = smooth(raw_periodogram(dft(panel)), spec).field();
  REQUIRE(a.size() == b.size());
  for (size_t l = 0; l < a.size(); ++l)
    CHECK((a.m[l] - b.m[l]).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("penalized estimates keep the masked structure") {
  const Network g =
      Network::read_edge_list(std::string(GNARSPEC_DATA_DIR) + "/net5.edges");
  const StageStructure st(g);
  const Eigen::MatrixXd w = equal_stage_weights(st);
  const SeriesPanel panel =
      simulate(bench::builtin_model("M1"), st, w, 256, 50, 71);

  const SpectralField est = np_spectrum_penalized(
      panel, st, SmoothingSpec::default_for(256), Penalty::a1);
  CHECK(est.kind == FieldKind::spectrum);

  // spectra stay Hermitian PD after the constrained fit
  for (const auto& m : est.m) {
    CHECK((m - m.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
  }

  SUBCASE("induced penalty needs a stage depth") {
    CHECK_THROWS_AS(np_spectrum_penalized(
                        panel, st, SmoothingSpec::default_for(256),
                        Penalty::induced, 0),
                    InvalidArgument);
  }
}

TEST_CASE("network penalty beats no penalty on model data") {
  const Network g =
      Network::read_edge_list(std::string(GNARSPEC_DATA_DIR) + "/net10.edges");
  const StageStructure st(g);
  const Eigen::MatrixXd w = equal_stage_weights(st);
  const GnarParams m1 = bench::builtin_model("M1");
  const FrequencyGrid grid = FrequencyGrid::fourier(300);
  const SpectralField truth =
      gnar_spectrum(m1, st, w, grid);

  double err_pen = 0.0, err_plain = 0.0;
  for (std::uint64_t rep = 0; rep < 5; ++rep) {
    const SeriesPanel panel = simulate(m1, st, w, 300, 50, 7000 + rep);
    const SmoothingSpec spec = SmoothingSpec::default_for(300);
    const SpectralField pen =
        np_spectrum_penalized(panel, st, spec, Penalty::induced, 1);
    const SpectralField plain =
        np_spectrum_penalized(panel, st, spec, Penalty::none);
    for (size_t l = 0; l < grid.size(); ++l) {
      err_pen += (pen.m[l] - truth.m[l]).squaredNorm();
      err_plain += (plain.m[l] - truth.m[l]).squaredNorm();
    }
  }
  CHECK(err_pen < err_plain);
}

TEST_CASE("unrestricted VAR least squares recovers a diagonal system") {
  std::vector<Eigen::MatrixXd> phi = {0.5 * Eigen::MatrixXd::Identity(4, 4)};
  const SeriesPanel panel =
      simulate_var(phi, Eigen::MatrixXd::Identity(4, 4), 2000, 100, 80);

  const VarFit fit = fit_var_ols(panel, 1);
  CHECK(fit.p == 1);
  CHECK((fit.phi[0] - phi[0]).cwiseAbs().maxCoeff() < 0.06);
  CHECK((fit.vhat - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <
        0.15);

  SUBCASE("lag selection finds the true order") {
    const VarFit sel = select_var_ols(panel, 3);
    CHECK(sel.p == 1);
  }

  SUBCASE("overparameterized samples are rejected") {
    SeriesPanel tiny;
    tiny.x = panel.x.topRows(5);
    tiny.names = panel.names;
    CHECK_THROWS_AS(fit_var_ols(tiny, 2), InvalidArgument);
  }
}

TEST_CASE("VAR plug-in spectrum matches the explicit formula") {
  std::vector<Eigen::MatrixXd> phi = {
      (Eigen::MatrixXd(2, 2) << 0.4, 0.1, 0.0, 0.3).finished()};
  const Eigen::MatrixXd v = Eigen::MatrixXd::Identity(2, 2);
  const SeriesPanel panel = simulate_var(phi, v, 4000, 100, 81);

  const Network g(2, {{1, 2}});
  const StageStructure st(g);
  const FrequencyGrid grid = FrequencyGrid::uniform(8);

  const SpectralField est = parametric_var_penalized(
      panel, st, 1, 3, Penalty::none, 0, grid);
  const VarFit fit = fit_var_ols(panel, 1);
  const SpectralField direct = var_spectrum(fit.phi, fit.vhat, grid);
  for (size_t l = 0; l < grid.size(); ++l)
    CHECK((est.m[l] - direct.m[l]).cwiseAbs().maxCoeff() < 1e-12);
}
