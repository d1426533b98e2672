#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <complex>

#include "blinddeconv/charfn.hpp"
#include "blinddeconv/fixtures.hpp"
#include "blinddeconv/parallel.hpp"
#include "blinddeconv/rng.hpp"

using namespace blinddeconv;

namespace {

Sample points_sample(std::vector<Point> pts, std::size_t d1) {
  const std::size_t D = pts.front().size();
  return Sample(PointSet::from_points(pts), d1, D - d1);
}

Sample circle_sample(std::size_t n, std::uint64_t seed, double sigma = 0.1) {
  SignalSpec sig;
  NoiseSpec noise{NoiseKind::gaussian, sigma};
  Rng rng(seed);
  return make_sample(sig, noise, n, 1, rng);
}

// Term-by-term empirical CF in long double.
std::complex<long double> cf_oracle(const std::vector<Point>& pts, const Point& t) {
  std::complex<long double> s = 0;
  for (const auto& y : pts) {
    long double dot = 0;
    for (std::size_t a = 0; a < t.size(); ++a) dot += static_cast<long double>(t[a]) * y[a];
    s += std::complex<long double>(std::cos(dot), std::sin(dot));
  }
  return s / static_cast<long double>(pts.size());
}

// Monomial-by-monomial evaluation with explicit exponents.
Complex brute_poly(const TruncatedAnalytic& phi, const std::vector<Complex>& t) {
  Complex s = 0;
  for (std::size_t k = 0; k < phi.size(); ++k) {
    Complex v = phi.coefficient(k);
    for (std::size_t a = 0; a < t.size(); ++a)
      for (int e = 0; e < phi.indices()[k][a]; ++e) v *= t[a];
    s += v;
  }
  return s;
}

}  // namespace

TEST_CASE("empirical characteristic function") {
  const std::vector<Point> pts{{0.3, -1.2}, {2.0, 0.5}, {-0.7, 0.1}};
  const Sample s = points_sample(pts, 1);
  const std::vector<double> zero{0.0, 0.0};
  CHECK(empirical_cf(s, zero) == Complex(1.0, 0.0));

  const std::vector<double> t{1.0, -2.0};
  const auto oracle = cf_oracle(pts, {1.0, -2.0});
  const Complex v = empirical_cf(s, t);
  CHECK(v.real() == doctest::Approx(static_cast<double>(oracle.real())).epsilon(1e-15));
  CHECK(v.imag() == doctest::Approx(static_cast<double>(oracle.imag())).epsilon(1e-15));

  const Sample one = points_sample({{0.4, -0.9}}, 1);
  for (double a : {-3.0, 0.5, 7.0}) {
    const std::vector<double> u{a, 0.3 * a};
    const double dot = a * 0.4 + 0.3 * a * -0.9;
    CHECK(std::abs(empirical_cf(one, u) - std::polar(1.0, dot)) < 1e-15);
  }
}

TEST_CASE("empirical CF: modulus bound, conjugate symmetry, tensor evaluation") {
  const Sample s = circle_sample(500, 11);
  Rng rng(5);
  for (int r = 0; r < 50; ++r) {
    std::vector<double> t{uniform(rng, -8, 8), uniform(rng, -8, 8)};
    std::vector<double> mt{-t[0], -t[1]};
    const Complex v = empirical_cf(s, t);
    CHECK(std::abs(v) <= 1.0 + 1e-15);
    CHECK(std::abs(empirical_cf(s, mt) - std::conj(v)) < 1e-14);
  }
  const std::vector<std::vector<double>> axes{{-1.5, 0.0, 0.7}, {-2.0, 0.3}};
  const auto tensor = empirical_cf_tensor(s, axes);
  REQUIRE(tensor.size() == 6);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      const std::vector<double> t{axes[0][i], axes[1][j]};
      CHECK(std::abs(tensor[i * 2 + j] - empirical_cf(s, t)) < 1e-13);
    }
}

TEST_CASE("polynomial evaluation") {
  const TruncatedAnalytic one(2, 3);
  const std::vector<Complex> z{{1.5, -2.0}, {0.3, 4.0}};
  CHECK(one(z) == Complex(1.0, 0.0));

  // c_(1,0) = i corresponds to r = 1
  TruncatedAnalytic lin(2, 1);
  lin.set_parameter(2, 1.0);
  REQUIRE(lin.indices()[2] == MultiIndex({1, 0}));
  const std::vector<Complex> t{2.0, 5.0};
  CHECK(std::abs(eval_poly(lin, t) - Complex(1.0, 2.0)) < 1e-15);

  Rng rng(3);
  TruncatedAnalytic cubic(2, 3);
  for (std::size_t k = 1; k < cubic.size(); ++k) cubic.set_parameter(k, uniform(rng, -1, 1));
  for (int r = 0; r < 10; ++r) {
    const std::vector<Complex> u{{uniform(rng, -2, 2), uniform(rng, -2, 2)},
                                 {uniform(rng, -2, 2), uniform(rng, -2, 2)}};
    CHECK(std::abs(eval_poly(cubic, u) - brute_poly(cubic, u)) < 1e-12);
  }
}

TEST_CASE("conjugate symmetry holds by construction") {
  Rng rng(8);
  TruncatedAnalytic phi(3, 5);
  for (std::size_t k = 1; k < phi.size(); ++k) phi.set_parameter(k, uniform(rng, -1, 1));
  for (int r = 0; r < 20; ++r) {
    std::vector<double> t{uniform(rng, -2, 2), uniform(rng, -2, 2), uniform(rng, -2, 2)};
    std::vector<double> mt{-t[0], -t[1], -t[2]};
    CHECK(std::abs(phi.at(mt) - std::conj(phi.at(t))) < 1e-12 * std::max(1.0, std::abs(phi.at(t))));
  }
  std::vector<Complex> c(TruncatedAnalytic(1, 2).size());
  c[0] = 1.0;
  c[1] = Complex(0.0, 0.5);  // i * 0.5: allowed
  c[2] = Complex(-0.25, 0.0);
  CHECK_NOTHROW(TruncatedAnalytic::from_coefficients(1, 2, c));
  c[1] = Complex(0.5, 0.0);  // real first-order coefficient breaks symmetry
  CHECK_THROWS_AS(TruncatedAnalytic::from_coefficients(1, 2, c), InvalidArgument);
}

TEST_CASE("truncation") {
  Rng rng(4);
  TruncatedAnalytic phi(2, 6);
  for (std::size_t k = 1; k < phi.size(); ++k) phi.set_parameter(k, uniform(rng, -1, 1));

  const TruncatedAnalytic t3 = truncate(phi, 3);
  CHECK(t3.degree() == 3);
  std::size_t expected = 0;
  for (std::size_t k = 0; k < phi.size(); ++k) {
    if (phi.indices()[k].total_degree() > 3) continue;
    const auto it = std::find(t3.indices().begin(), t3.indices().end(), phi.indices()[k]);
    REQUIRE(it != t3.indices().end());
    CHECK(t3.parameters()[it - t3.indices().begin()] == phi.parameters()[k]);
    ++expected;
  }
  CHECK(t3.size() == expected);

  const TruncatedAnalytic t0 = truncate(phi, 0);
  CHECK(t0.size() == 1);
  CHECK(t0.parameters()[0] == 1.0);

  const TruncatedAnalytic small = truncate(t3, 5);
  CHECK(small.parameters() == t3.parameters());
  CHECK(truncate(truncate(phi, 3), 3).parameters() == t3.parameters());
  CHECK_THROWS_AS(truncate(phi, -1), InvalidArgument);
}

TEST_CASE("class bound, projection and feasibility") {
  ClassParams p;
  p.S = 2.0;
  p.rho = 1.5;
  CHECK(p.bound(3) == doctest::Approx(std::pow(2.0, 3) / std::pow(3.0, 3 / 1.5)));

  TruncatedAnalytic phi(2, 2);
  const double b1 = p.bound(1);
  phi.set_parameter(2, -10 * b1);  // index (1, 0)
  const TruncatedAnalytic q = project_to_class(phi, p);
  CHECK(q.parameters()[2] == doctest::Approx(-b1));
  CHECK(std::arg(q.coefficient(2)) == doctest::Approx(std::arg(phi.coefficient(2))));

  Rng rng(12);
  TruncatedAnalytic wild(2, 5);
  for (std::size_t k = 1; k < wild.size(); ++k) wild.set_parameter(k, uniform(rng, -20, 20));
  const TruncatedAnalytic proj = project_to_class(wild, p);
  for (std::size_t k = 1; k < proj.size(); ++k) {
    const int deg = proj.indices()[k].total_degree();
    const double bound = std::pow(p.S, deg) / std::pow(static_cast<double>(deg), deg / p.rho);
    CHECK(std::abs(proj.coefficient(k)) <= bound * (1 + 1e-14));
  }
  CHECK(in_class(proj, p, 1e-12));
  CHECK_FALSE(in_class(wild, p));
  CHECK(project_to_class(proj, p).parameters() == proj.parameters());

  TruncatedAnalytic other(2, 5);
  for (std::size_t k = 1; k < other.size(); ++k) other.set_parameter(k, uniform(rng, -20, 20));
  const TruncatedAnalytic proj2 = project_to_class(other, p);
  for (std::size_t k = 1; k < proj.size(); ++k)
    CHECK(std::abs(proj.coefficient(k) - proj2.coefficient(k)) <=
          std::abs(wild.coefficient(k) - other.coefficient(k)) + 1e-15);

  const TruncatedAnalytic feasible = project_to_class(TruncatedAnalytic(2, 3), p);
  CHECK(feasible.parameters() == TruncatedAnalytic(2, 3).parameters());

  ClassParams bad;
  bad.rho = 2.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
  bad.rho = 1.0;
  bad.S = 0.0;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("contrast against a hand-rolled quadrature") {
  const std::vector<Point> pts{{0.4, -0.3}, {-0.8, 1.1}};
  const Sample s = points_sample(pts, 1);
  const double nu = 1.7;
  const TensorRule rule = contrast_rule(2, nu, {5, 1});
  const Rule1D g = gauss_legendre(5, -nu, nu);

  auto cf = [&](double a, double b) {
    const auto v = cf_oracle(pts, {a, b});
    return Complex(static_cast<double>(v.real()), static_cast<double>(v.imag()));
  };
  double oracle = 0.0;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      const double t1 = g.nodes[i], t2 = g.nodes[j];
      // phi = 1: integrand |phi~(t1,0) phi~(0,t2) - phi~(t1,t2)|^2
      oracle += g.weights[i] * g.weights[j] * std::norm(cf(t1, 0) * cf(0, t2) - cf(t1, t2));
    }
  const double v = contrast_mn(TruncatedAnalytic(2, 3), s, nu, rule);
  CHECK(v == doctest::Approx(oracle).epsilon(1e-12));

  // a general phi: explicit integrand with the same nodes
  Rng rng(2);
  TruncatedAnalytic phi(2, 3);
  for (std::size_t k = 1; k < phi.size(); ++k) phi.set_parameter(k, uniform(rng, -0.5, 0.5));
  double oracle2 = 0.0;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      const double t1 = g.nodes[i], t2 = g.nodes[j];
      const std::vector<double> t{t1, t2}, a{t1, 0.0}, b{0.0, t2};
      const Complex r = phi.at(t) * cf(t1, 0) * cf(0, t2) - cf(t1, t2) * phi.at(a) * phi.at(b);
      oracle2 += g.weights[i] * g.weights[j] * std::norm(r);
    }
  CHECK(contrast_mn(phi, s, nu, rule) == doctest::Approx(oracle2).epsilon(1e-12));
  CHECK(contrast_mn(phi, s, nu, rule) >= 0.0);

  const TensorRule small = contrast_rule(2, 1.0, {5, 1});
  CHECK_THROWS_AS(contrast_mn(phi, s, nu, small), InvalidArgument);
}

TEST_CASE("contrast vanishes at the empirical CF and refines under quadrature") {
  // single observation: phi~ = exp(i t.y) and its degree-24 Taylor polynomial agree to ~1e-20
  const Point y{0.1, -0.05};
  const Sample s = points_sample({y}, 1);
  const TruncatedAnalytic phi = TruncatedAnalytic::from_measure(DiscreteMeasure::dirac(y), 24);
  CHECK(contrast_mn(phi, s, 1.0, contrast_rule(2, 1.0)) < 1e-10);

  const Sample c = circle_sample(2000, 21);
  Rng rng(6);
  TruncatedAnalytic psi(2, 4);
  for (std::size_t k = 1; k < psi.size(); ++k) psi.set_parameter(k, uniform(rng, -0.2, 0.2));
  const double coarse = contrast_mn(psi, c, 1.5, contrast_rule(2, 1.5, {33, 1}));
  const double fine = contrast_mn(psi, c, 1.5, contrast_rule(2, 1.5, {33, 2}));
  CHECK(std::abs(coarse - fine) <= 1e-10 * std::max(1.0, fine));
}

TEST_CASE("estimate_cf: point mass") {
  std::vector<Point> pts(200, Point{0.0, 0.0});
  const Sample s = points_sample(pts, 1);
  ClassParams p;
  p.nu_est = 1.0;
  const CfEstimate e = estimate_cf(s, p, 4);
  const TensorRule rule = contrast_rule(2, 1.0);
  const double at_one = contrast_mn(TruncatedAnalytic(2, 4), s, 1.0, rule);
  CHECK(e.contrast <= at_one + 1.0 / 200);
  std::vector<double> t;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    rule.node(k, t);
    CHECK(std::abs(e.phi.at(t) - 1.0) < 1e-6);
  }
}

TEST_CASE("estimate_cf: circle with Gaussian noise") {
  const std::size_t n = 5000;
  const Sample s = circle_sample(n, 31);
  ClassParams p;
  p.S = 3.0;
  p.nu_est = 1.5;
  OptimizerConfig cfg;
  cfg.seed = 4;
  const CfEstimate e = estimate_cf(s, p, 6, cfg);
  const TensorRule rule = contrast_rule(2, p.nu_est, cfg.quadrature);
  const TruncatedAnalytic truth = TruncatedAnalytic::from_measure(truth_quadrature(SignalSpec{}), 6);
  REQUIRE(in_class(truth, p));
  const double truth_contrast = contrast_mn(truth, s, p.nu_est, rule);
  CHECK(e.contrast <= truth_contrast + 1.0 / n);
  CHECK(in_class(e.phi, p, 1e-12));
  CHECK(contrast_mn(e.phi, s, p.nu_est, rule) == doctest::Approx(e.contrast).epsilon(1e-9));
  CHECK(e.start_contrasts.size() == cfg.starts);
  CHECK(e.contrast == *std::min_element(e.start_contrasts.begin(), e.start_contrasts.end()));

  for (std::size_t i = 1; i < e.history.size(); ++i) CHECK(e.history[i] <= e.history[i - 1]);

  // bit-identical reruns, independent of the worker count
  const CfEstimate again = estimate_cf(s, p, 6, cfg);
  CHECK(again.phi.parameters() == e.phi.parameters());
  set_thread_count(1);
  const CfEstimate serial = estimate_cf(s, p, 6, cfg);
  set_thread_count(0);
  CHECK(serial.phi.parameters() == e.phi.parameters());
  CHECK(serial.contrast == e.contrast);
}

TEST_CASE("estimate_cf: consistency trend") {
  ClassParams p;
  p.S = 3.0;
  p.nu_est = 1.0;
  OptimizerConfig cfg;
  cfg.starts = 2;
  const TensorRule rule = contrast_rule(2, p.nu_est, cfg.quadrature);
  const DiscreteMeasure tq = truth_quadrature(SignalSpec{});
  std::vector<Complex> truth(rule.size());
  std::vector<double> t;
  for (std::size_t k = 0; k < rule.size(); ++k) {
    rule.node(k, t);
    truth[k] = signal_cf(tq, t);
  }
  auto median_error = [&](std::size_t n) {
    std::vector<double> errs;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Sample s = circle_sample(n, derive_seed({77, n, seed}));
      const CfEstimate e = estimate_cf(s, p, 8, cfg);
      std::vector<Complex> est(rule.size());
      for (std::size_t k = 0; k < rule.size(); ++k) {
        rule.node(k, t);
        est[k] = e.phi.at(t);
      }
      errs.push_back(grid_l2_distance(rule, est, truth));
    }
    std::nth_element(errs.begin(), errs.begin() + 10, errs.end());
    return errs[10];
  };
  const double small_n = median_error(100);
  const double large_n = median_error(10000);
  MESSAGE("median CF error: n=1e2 " << small_n << ", n=1e4 " << large_n);
  CHECK(large_n < small_n);
}

TEST_CASE("c_nu") {
  auto dirac = [](std::span<const double>) { return Complex(1.0, 0.0); };
  CHECK(c_nu(dirac, dirac, 1, 1, 3.0) == 1.0);

  auto gauss = [](std::span<const double> t) {
    double s = 0;
    for (double v : t) s += v * v;
    return Complex(std::exp(-0.5 * s), 0.0);
  };
  CHECK(c_nu(gauss, gauss, 1, 1, 1.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));

  const NoiseSpec q{NoiseKind::q_density, 2.0};
  auto qcf = [&](std::span<const double> t) { return noise_block_cf(q, t); };
  const QDensity dens(2.0);
  double oracle = INFINITY;
  for (int i = 0; i <= 100; ++i) oracle = std::min(oracle, std::abs(dens.cf(-1.0 + 0.02 * i)));
  const double v = c_nu(qcf, qcf, 1, 1, 1.0);
  CHECK(v > 0);
  CHECK(v == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("estimate_cf preconditions") {
  const Sample s = circle_sample(50, 1);
  ClassParams p;
  CHECK_THROWS_AS(estimate_cf(s, p, 0), InvalidArgument);
  OptimizerConfig none;
  none.starts = 0;
  CHECK_THROWS_AS(estimate_cf(s, p, 3, none), InvalidArgument);
  CHECK_THROWS_AS(default_degree(10), InvalidArgument);
  CHECK(default_degree(100000) == static_cast<int>(std::ceil(4 * std::log(1e5) / std::log(std::log(1e5)))));
}
