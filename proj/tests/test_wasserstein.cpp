#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "blinddeconv/fixtures.hpp"
#include "blinddeconv/wasserstein.hpp"

using namespace blinddeconv;

namespace {

DiscreteMeasure random_measure(Rng& rng, std::size_t dims, std::size_t count, double spread = 1.0) {
  PointSet pts(dims);
  std::vector<double> w;
  for (std::size_t i = 0; i < count; ++i) {
    Point x(dims);
    for (double& c : x) c = uniform(rng, -spread, spread);
    pts.push_back(x);
    w.push_back(uniform(rng, 0.05, 1.0));
  }
  DiscreteMeasure m(pts, w);
  m.normalize();
  return m;
}

// min over vertices of the transport polytope: pick 4 of the 6 variables as a
// basis of the row/column constraints (one column sum is redundant)
double vertex_enumeration(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  REQUIRE(mu.size() == 3);
  REQUIRE(nu.size() == 2);
  Eigen::Matrix<double, 4, 6> A = Eigen::Matrix<double, 4, 6>::Zero();
  Eigen::Vector4d rhs;
  for (int i = 0; i < 3; ++i) {
    A(i, 2 * i) = A(i, 2 * i + 1) = 1;
    rhs(i) = mu.weights[i];
  }
  for (int i = 0; i < 3; ++i) A(3, 2 * i) = 1;
  rhs(3) = nu.weights[0];
  Eigen::Matrix<double, 6, 1> cost;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 2; ++j) cost(2 * i + j) = std::pow(distance(mu.support[i], nu.support[j]), p);
  double best = INFINITY;
  for (int mask = 0; mask < 64; ++mask) {
    if (__builtin_popcount(mask) != 4) continue;
    Eigen::Matrix4d B;
    int col = 0;
    std::array<int, 4> idx{};
    for (int k = 0; k < 6; ++k)
      if (mask >> k & 1) {
        B.col(col) = A.col(k);
        idx[col++] = k;
      }
    if (std::abs(B.determinant()) < 1e-12) continue;
    const Eigen::Vector4d xb = B.lu().solve(rhs);
    if (xb.minCoeff() < -1e-12) continue;
    double c = 0;
    for (int k = 0; k < 4; ++k) c += xb(k) * cost(idx[k]);
    best = std::min(best, c);
  }
  return std::pow(best, 1.0 / p);
}

// uniform n-vs-n measures: optimal plans include a permutation
double permutation_enumeration(const PointSet& x, const PointSet& y, double p) {
  std::vector<int> perm(x.size());
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double c = 0;
    for (std::size_t i = 0; i < x.size(); ++i) c += std::pow(distance(x[i], y[perm[i]]), p);
    best = std::min(best, c / x.size());
  } while (std::next_permutation(perm.begin(), perm.end()));
  return std::pow(best, 1.0 / p);
}

// on the line the monotone (quantile) coupling is optimal for p >= 1
double quantile_coupling(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p) {
  auto sorted = [](const DiscreteMeasure& m) {
    std::vector<std::pair<double, double>> v;
    for (std::size_t i = 0; i < m.size(); ++i) v.emplace_back(m.support[i][0], m.weights[i]);
    std::sort(v.begin(), v.end());
    return v;
  };
  auto a = sorted(mu), b = sorted(nu);
  long double total = 0;
  std::size_t i = 0, j = 0;
  long double ra = a[0].second, rb = b[0].second;
  while (i < a.size() && j < b.size()) {
    const long double m = std::min(ra, rb);
    total += m * std::pow(std::abs(a[i].first - b[j].first), p);
    ra -= m;
    rb -= m;
    if (ra <= 1e-18L && ++i < a.size()) ra = a[i].second;
    if (rb <= 1e-18L && ++j < b.size()) rb = b[j].second;
  }
  return std::pow(static_cast<double>(total), 1.0 / p);
}

SupportEstimate synthetic_estimate(const GridSpec& grid, const std::vector<double>& values,
                                   const PointSet& cells) {
  SupportEstimate est;
  est.grid = grid;
  est.ghat_values = values;
  est.cells = cells;
  est.h = 0.1;
  est.m_kappa = 4;
  return est;
}

Sample box_sample(double lo, double hi) {
  PointSet p(2);
  const std::vector<double> a{lo, lo}, b{hi, hi};
  p.push_back(a);
  p.push_back(b);
  return Sample(p, 1, 1);
}

}  // namespace

TEST_CASE("Dirac masses") {
  Rng rng(1);
  for (int rep = 0; rep < 20; ++rep) {
    const Point a{uniform(rng, -3, 3), uniform(rng, -3, 3)}, b{uniform(rng, -3, 3), uniform(rng, -3, 3)};
    for (double p : {1.0, 2.0, 3.5})
      CHECK(wasserstein_p(DiscreteMeasure::dirac(a), DiscreteMeasure::dirac(b), p) ==
            doctest::Approx(distance(a, b)).epsilon(1e-13));
  }
}

TEST_CASE("identity, including reordered atoms") {
  Rng rng(2);
  for (int rep = 0; rep < 20; ++rep) {
    const DiscreteMeasure m = random_measure(rng, 2, 1 + rep % 9);
    CHECK(wasserstein_p(m, m, 2.0) < 1e-7);
    std::vector<std::size_t> order(m.size());
    std::iota(order.begin(), order.end(), 0);
    std::reverse(order.begin(), order.end());
    PointSet pts(2);
    std::vector<double> w;
    for (auto k : order) {
      pts.push_back(m.support[k]);
      w.push_back(m.weights[k]);
    }
    CHECK(wasserstein_p(m, DiscreteMeasure(pts, w), 1.0) < 1e-12);
  }
}

TEST_CASE("3 vs 2 atoms against vertex enumeration") {
  Rng rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    const DiscreteMeasure mu = random_measure(rng, 2, 3), nu = random_measure(rng, 2, 2);
    for (double p : {1.0, 2.0})
      CHECK(wasserstein_p(mu, nu, p) == doctest::Approx(vertex_enumeration(mu, nu, p)).epsilon(1e-10));
  }
}

TEST_CASE("uniform n vs n against permutation enumeration") {
  Rng rng(4);
  for (int rep = 0; rep < 40; ++rep) {
    const std::size_t n = 2 + rep % 5;
    PointSet x(2), y(2);
    for (std::size_t i = 0; i < n; ++i) {
      const std::vector<double> a{uniform(rng, -1, 1), uniform(rng, -1, 1)};
      const std::vector<double> b{uniform(rng, -1, 1), uniform(rng, -1, 1)};
      x.push_back(a);
      y.push_back(b);
    }
    for (double p : {1.0, 2.0})
      CHECK(wasserstein_p(DiscreteMeasure::uniform(x), DiscreteMeasure::uniform(y), p) ==
            doctest::Approx(permutation_enumeration(x, y, p)).epsilon(1e-10));
  }
}

TEST_CASE("one-dimensional measures against the quantile coupling") {
  Rng rng(5);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t n1 = 1 + static_cast<std::size_t>(uniform(rng, 0, 300));
    const std::size_t n2 = 1 + static_cast<std::size_t>(uniform(rng, 0, 300));
    const DiscreteMeasure mu = random_measure(rng, 1, n1, 2.0), nu = random_measure(rng, 1, n2, 1.0);
    for (double p : {1.0, 2.0, 3.0})
      CHECK(wasserstein_p(mu, nu, p) == doctest::Approx(quantile_coupling(mu, nu, p)).epsilon(1e-9));
  }
}

TEST_CASE("metric axioms on 200 random small measures") {
  Rng rng(6);
  double worst = -INFINITY;
  for (int rep = 0; rep < 200; ++rep) {
    const DiscreteMeasure a = random_measure(rng, 2, 1 + rep % 7);
    const DiscreteMeasure b = random_measure(rng, 2, 1 + (rep / 7) % 7);
    const DiscreteMeasure c = random_measure(rng, 2, 1 + (rep / 3) % 8);
    for (double p : {1.0, 2.0}) {
      const double ab = wasserstein_p(a, b, p), ba = wasserstein_p(b, a, p);
      const double bc = wasserstein_p(b, c, p), ac = wasserstein_p(a, c, p);
      CHECK(ab == doctest::Approx(ba).epsilon(1e-12));
      CHECK(ab >= 0);
      worst = std::max(worst, ac - ab - bc);
      CHECK(ac <= ab + bc + 1e-9);
    }
    // Jensen: W_1 <= W_2 <= W_3
    const double w1 = wasserstein_p(a, b, 1), w2 = wasserstein_p(a, b, 2), w3 = wasserstein_p(a, b, 3);
    CHECK(w1 <= w2 + 1e-12);
    CHECK(w2 <= w3 + 1e-12);
  }
  MESSAGE("largest triangle excess " << worst);
}

TEST_CASE("transport plan marginals and budget") {
  Rng rng(7);
  const DiscreteMeasure mu = random_measure(rng, 2, 30), nu = random_measure(rng, 2, 45);
  std::vector<double> cost(30 * 45);
  for (std::size_t i = 0; i < 30; ++i)
    for (std::size_t j = 0; j < 45; ++j) cost[i * 45 + j] = squared_distance(mu.support[i], nu.support[j]);
  const TransportPlan plan = solve_transport(mu.weights, nu.weights, cost);
  std::vector<double> rows(30, 0), cols(45, 0);
  for (std::size_t k = 0; k < plan.mass.size(); ++k) {
    rows[plan.rows[k]] += plan.mass[k];
    cols[plan.cols[k]] += plan.mass[k];
  }
  for (std::size_t i = 0; i < 30; ++i) CHECK(rows[i] == doctest::Approx(mu.weights[i]).epsilon(1e-12));
  for (std::size_t j = 0; j < 45; ++j) CHECK(cols[j] == doctest::Approx(nu.weights[j]).epsilon(1e-12));
  CHECK(plan.mass.size() <= 30 + 45 - 1);

  TransportOptions small;
  small.max_atoms = 20;
  CHECK_THROWS_AS(wasserstein_p(mu, nu, 2, small), InvalidArgument);
  CHECK_THROWS_AS(wasserstein_p(mu, nu, 0.5), InvalidArgument);
  CHECK_THROWS_AS(solve_transport({0.5, 0.5}, {0.3}, {1, 1}), InvalidArgument);
}

TEST_CASE("2000 x 2000 solve") {
  Rng rng(8);
  const SignalSpec circle;
  const DiscreteMeasure a = DiscreteMeasure::uniform(draw_signal(circle, 2000, rng));
  const DiscreteMeasure b = DiscreteMeasure::uniform(draw_signal(circle, 2000, rng));
  const auto t0 = std::chrono::steady_clock::now();
  const double w = wasserstein_p(a, b, 2);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  MESSAGE("W2 between two 2000-point circle draws " << w << " in " << secs << " s");
  CHECK(w > 0);
  CHECK(w < 0.1);
}

TEST_CASE("build_phat on synthetic estimates") {
  const GridSpec grid = GridSpec::cube(2, -1, 1, 21);
  std::vector<double> values(grid.total());
  for (std::size_t k = 0; k < grid.total(); ++k) {
    const Point x = grid.point(k);
    values[k] = std::exp(-4 * (x[0] * x[0] + x[1] * x[1]));
  }
  const Sample s = box_sample(-1, 1);

  // nonnegative ghat with a full mask gives the normalized values
  const DistributionEstimate full = build_phat(s, synthetic_estimate(grid, values, grid.points()), 10, 100);
  const double total = std::accumulate(values.begin(), values.end(), 0.0);
  REQUIRE(full.measure.size() == grid.total());
  for (std::size_t k = 0; k < grid.total(); ++k) CHECK(full.measure.weights[k] == doctest::Approx(values[k] / total).epsilon(1e-13));
  CHECK(full.mask_mass == doctest::Approx(1.0));
  CHECK(full.c_n == doctest::Approx(1.0 / (total * grid.cell_volume())));

  // negative values outside the mask leave the estimate unchanged
  PointSet centre(2);
  for (std::size_t k = 0; k < grid.total(); ++k) {
    const Point x = grid.point(k);
    if (std::hypot(x[0], x[1]) < 0.3) centre.push_back(x);
  }
  std::vector<double> lobes = values;
  for (std::size_t k = 0; k < grid.total(); ++k) {
    const Point x = grid.point(k);
    if (std::hypot(x[0], x[1]) > 0.8) lobes[k] = -0.5;
  }
  const DistributionEstimate a = build_phat(s, synthetic_estimate(grid, values, centre), 0.2, 100);
  const DistributionEstimate b = build_phat(s, synthetic_estimate(grid, lobes, centre), 0.2, 100);
  CHECK(a.measure.weights == b.measure.weights);
  CHECK(a.measure.support.coords() == b.measure.support.coords());
  CHECK(a.c_n == b.c_n);
  CHECK(a.mask_mass < 1.0);
  CHECK(b.mask_mass > a.mask_mass);  // lobes remove positive mass outside the mask
  for (std::size_t i = 0; i < a.mask.size(); ++i) CHECK(std::hypot(a.mask[i][0], a.mask[i][1]) < 0.3 + 0.2 + 1e-12);

  // defaults scale with the sample bounding box
  const DistributionEstimate d = build_phat(s, synthetic_estimate(grid, values, centre));
  CHECK(d.eta == doctest::Approx(0.1 * std::sqrt(8.0)));
  CHECK(d.radius == doctest::Approx(2 * std::sqrt(8.0)));

  std::vector<double> negative(grid.total(), -1.0);
  CHECK_THROWS_WITH(build_phat(s, synthetic_estimate(grid, negative, centre), 0.2, 100), "degenerate estimate");
  PointSet corner(2);
  corner.push_back(std::vector<double>{0.5, 0.5});
  CHECK_THROWS_WITH(build_phat(s, synthetic_estimate(grid, values, corner), 0.2, 0.1), "degenerate estimate");
}

TEST_CASE("build_phat translation consistency") {
  const GridSpec grid = GridSpec::cube(2, -1, 1, 21);
  const Point shift{0.3, -0.2};
  const GridSpec moved({-0.7, -1.2}, {1.3, 0.8}, {21, 21});
  std::vector<double> values(grid.total());
  PointSet cells(2), moved_cells(2);
  for (std::size_t k = 0; k < grid.total(); ++k) {
    const Point x = grid.point(k);
    values[k] = std::exp(-3 * std::pow(std::hypot(x[0], x[1]) - 0.5, 2));
    if (std::abs(std::hypot(x[0], x[1]) - 0.5) < 0.1) {
      cells.push_back(x);
      const std::vector<double> y{x[0] + shift[0], x[1] + shift[1]};
      moved_cells.push_back(y);
    }
  }
  const DistributionEstimate a = build_phat(box_sample(-1, 1), synthetic_estimate(grid, values, cells), 0.25, 50);
  const DistributionEstimate b = build_phat(box_sample(-1, 1), synthetic_estimate(moved, values, moved_cells), 0.25, 50);
  REQUIRE(a.measure.size() == b.measure.size());
  for (std::size_t i = 0; i < a.measure.size(); ++i) {
    CHECK(b.measure.weights[i] == doctest::Approx(a.measure.weights[i]).epsilon(1e-12));
    CHECK(b.measure.support[i][0] == doctest::Approx(a.measure.support[i][0] + shift[0]).epsilon(1e-12));
    CHECK(b.measure.support[i][1] == doctest::Approx(a.measure.support[i][1] + shift[1]).epsilon(1e-12));
  }
  const Point t{0.1, 0.2}, tm{0.4, 0.0};
  CHECK(wasserstein_p(DiscreteMeasure::dirac(t), a.measure, 2) ==
        doctest::Approx(wasserstein_p(DiscreteMeasure::dirac(tm), b.measure, 2)).epsilon(1e-9));
}

TEST_CASE("oracle phat with a small bandwidth") {
  const RadialKernel k = RadialKernel::build(1.0, 2);
  const SignalSpec circle;
  Rng rng(9);
  const DiscreteMeasure g = DiscreteMeasure::uniform(draw_signal(circle, 1500, rng));
  const DiscreteMeasure g2 = DiscreteMeasure::uniform(draw_signal(circle, 1500, rng));
  const DiscreteMeasure tq = truth_quadrature(circle);
  const GridSpec grid = GridSpec::cube(2, -1.3, 1.3, 41);
  const double slack = grid.half_diagonal();
  for (double h : {0.02, 0.04}) {
    const GhatEvaluator ev([&](std::span<const double> t) { return signal_cf(tq, t); }, k, h);
    const std::vector<double> v = ev.on_grid(grid);
    const double mx = *std::max_element(v.begin(), v.end());
    const PointSet cells = level_set(grid, v, 0.5 * mx);
    SupportEstimate est = synthetic_estimate(grid, v, cells);
    est.h = h;
    const DistributionEstimate phat = build_phat(box_sample(-1, 1), est, 0.2, 10);
    const W2Report r = w2_upper_bound_check(g, g2, phat, grid, k);
    const double bound = 2 * std::sqrt(k.second_moment()) * h;
    MESSAGE("h " << h << " W2 " << r.w2_risk << " bound " << bound << " + grid " << slack << " + draw "
                 << r.discretization << " mask " << phat.mask_mass);
    CHECK(r.w2_risk <= bound + slack + r.discretization);
    CHECK(r.bound_holds);
  }
}

TEST_CASE("Villani bound on random grid measures") {
  const RadialKernel k = RadialKernel::build(1.0, 2);
  const GridSpec grid = GridSpec::cube(2, -1, 1, 15);
  Rng rng(10);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> values(grid.total());
    for (double& v : values) v = uniform(rng, -0.2, 1.0);
    const DiscreteMeasure g = random_measure(rng, 2, 20, 0.8);
    const DistributionEstimate phat = build_phat(box_sample(-1, 1), synthetic_estimate(grid, values, grid.points()), 5, 50);
    const W2Report r = w2_upper_bound_check(g, DiscreteMeasure{}, phat, grid, k);
    CHECK(r.bound_holds);
    CHECK(r.discretization == 0.0);
  }
}

TEST_CASE("csv row") {
  W2Report r;
  r.w2_risk = 0.25;
  r.bias_term = 0.125;
  DistributionEstimate d;
  d.mask_mass = 0.5;
  d.c_n = 2;
  CHECK(w2_csv_header() == "fixture,n,seed,W2_risk,bias_term,mask_mass,c_n\n");
  CHECK(w2_csv_row("circle", 1000, 3, r, d) == "circle,1000,3,0.25,0.125,0.5,2\n");
}

TEST_CASE("circle pipeline: mask retains the mass at n = 1e4") {
  const RadialKernel k = RadialKernel::build(1.0, 2);
  SupportParams p;
  p.h = 0.07;
  p.m_fit = 30;
  p.nu_factor = 0.8;
  p.lambda_rel = 0.9;
  p.eval_grid = GridSpec::cube(2, -1.6, 1.6, 41);
  ClassParams c;
  c.S = 20;
  OptimizerConfig opt;
  opt.starts = 1;
  opt.quadrature.order = 48;
  for (std::uint64_t seed = 0; seed < 2; ++seed) {
    Rng rng(derive_seed({31, 10000, seed}));
    const Sample s = make_sample(SignalSpec{}, NoiseSpec{}, 10000, 1, rng);
    const SupportEstimate est = estimate_support(s, p, c, k, opt);
    const DistributionEstimate narrow = build_phat(s, est);
    const DistributionEstimate phat = build_phat(s, est, practical_eta(s, est, k));
    MESSAGE("seed " << seed << " mask mass " << phat.mask_mass << " (eta " << phat.eta << "), default eta "
                    << narrow.eta << " keeps " << narrow.mask_mass);
    CHECK(phat.eta == doctest::Approx(narrow.eta + k.c_A() * 0.07));
    CHECK(phat.mask_mass >= 0.95);
    double sum = 0;
    for (double w : phat.measure.weights) sum += w;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}
