#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "blinddeconv/core.hpp"
#include "blinddeconv/quadrature.hpp"
#include "blinddeconv/rng.hpp"

using namespace blinddeconv;

namespace {

// Brute-force oracles, written independently of the library routines.
double brute_min_dist(const PointSet& a, std::span<const double> x) {
  double best = INFINITY;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double s = 0;
    for (std::size_t k = 0; k < x.size(); ++k) s += (a[i][k] - x[k]) * (a[i][k] - x[k]);
    best = std::min(best, std::sqrt(s));
  }
  return best;
}

double brute_hausdorff(const PointSet& a, const PointSet& b) {
  double h = 0;
  for (std::size_t i = 0; i < a.size(); ++i) h = std::max(h, brute_min_dist(b, a[i]));
  for (std::size_t i = 0; i < b.size(); ++i) h = std::max(h, brute_min_dist(a, b[i]));
  return h;
}

PointSet random_cloud(Rng& rng, std::size_t n, std::size_t dims, double lo, double hi) {
  PointSet p(dims);
  std::vector<double> x(dims);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : x) v = uniform(rng, lo, hi);
    p.push_back(x);
  }
  return p;
}

}  // namespace

TEST_CASE("multi-index enumeration is graded and complete") {
  auto idx = enumerate_multi_indices(2, 3);
  CHECK(idx.size() == 10);
  CHECK(idx.front().is_zero());
  for (std::size_t i = 1; i < idx.size(); ++i) CHECK(idx[i - 1] < idx[i]);
  for (const auto& m : idx) CHECK(m.total_degree() == m[0] + m[1]);
  CHECK(enumerate_multi_indices(3, 4).size() == 35);
  CHECK_THROWS_AS(MultiIndex({1, -1}), InvalidArgument);
}

TEST_CASE("hausdorff examples") {
  auto a = PointSet::from_points({{0, 0}, {1, 1}});
  CHECK(hausdorff(a, a) == 0.0);
  CHECK(hausdorff(PointSet::from_points({{0, 0}}), PointSet::from_points({{3, 4}})) ==
        doctest::Approx(5.0).epsilon(1e-15));
  auto b = PointSet::from_points({{0, 0}, {2, 0}});
  auto c = PointSet::from_points({{1, 0}});
  CHECK(hausdorff(b, c) == doctest::Approx(brute_hausdorff(b, c)));
  CHECK(hausdorff(b, c) == doctest::Approx(1.0));
  CHECK_THROWS_WITH_AS(hausdorff(PointSet(2), a), "empty set", InvalidArgument);
}

TEST_CASE("hausdorff is a metric on random clouds") {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    auto a = random_cloud(rng, 40, 2, -1, 1);
    auto b = random_cloud(rng, 25, 2, -1, 1);
    auto c = random_cloud(rng, 33, 2, -1, 1);
    const double ab = hausdorff(a, b), ba = hausdorff(b, a);
    CHECK(ab == ba);
    CHECK(ab == doctest::Approx(brute_hausdorff(a, b)).epsilon(1e-14));
    CHECK(hausdorff(a, c) <= ab + hausdorff(b, c) + 1e-12);
    CHECK(hausdorff(a, a) == 0.0);
    CHECK(ab > 0.0);
  }
}

TEST_CASE("truncated hausdorff") {
  auto a = PointSet::from_points({{0, 0}, {10, 0}});
  auto b = PointSet::from_points({{0, 0}});
  CHECK(truncated_hausdorff(a, b, Window::all()) == hausdorff(a, b));
  CHECK(truncated_hausdorff(a, b, Window::make_ball({0, 0}, 1)) == 0.0);
  CHECK_THROWS_WITH_AS(truncated_hausdorff(a, PointSet::from_points({{5, 5}}),
                                           Window::make_ball({0, 0}, 1)),
                       "empty restriction", InvalidArgument);

  Rng rng(5);
  const auto k = Window::make_box({-1, -1}, {1, 1});
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_cloud(rng, 20, 2, -2, 2);
    auto y = random_cloud(rng, 20, 2, -2, 2);
    PointSet fx(2), fy(2);
    for (std::size_t i = 0; i < 20; ++i) {
      if (std::abs(x[i][0]) <= 1 && std::abs(x[i][1]) <= 1) fx.push_back(x[i]);
      if (std::abs(y[i][0]) <= 1 && std::abs(y[i][1]) <= 1) fy.push_back(y[i]);
    }
    if (fx.empty() || fy.empty()) continue;
    CHECK(truncated_hausdorff(x, y, k) == doctest::Approx(brute_hausdorff(fx, fy)).epsilon(1e-14));
  }

  // inside K the truncation is the identity
  auto x = random_cloud(rng, 30, 2, -0.9, 0.9);
  auto y = random_cloud(rng, 30, 2, -0.9, 0.9);
  CHECK(truncated_hausdorff(x, y, k) == hausdorff(x, y));
}

TEST_CASE("offset membership") {
  auto a = PointSet::from_points({{0, 0}});
  CHECK(offset_contains(a, 0.0, std::vector<double>{0, 0}));
  CHECK_FALSE(offset_contains(a, 1.0, std::vector<double>{0, 1.5}));

  PointSet circle(2);
  for (int i = 0; i < 50; ++i) {
    const double th = 2 * std::numbers::pi * i / 50;
    circle.push_back(std::vector<double>{std::cos(th), std::sin(th)});
  }
  std::vector<double> x{1.05, 0};
  CHECK(brute_min_dist(circle, x) <= 0.1);
  CHECK(offset_contains(circle, 0.1, x));

  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> z{uniform(rng, -2, 2), uniform(rng, -2, 2)};
    const double e1 = uniform(rng, 0, 0.5), e2 = e1 + uniform(rng, 0, 0.5);
    if (offset_contains(circle, e1, z)) CHECK(offset_contains(circle, e2, z));
    CHECK(offset_contains(circle, e1, z) == (brute_min_dist(circle, z) <= e1));
  }
}

TEST_CASE("diameter") {
  CHECK(diameter(PointSet::from_points({{1, 2}})) == 0.0);
  CHECK(diameter(PointSet::from_points({{0, 0}, {0, 3}})) == 3.0);
  Rng rng(3);
  auto p = random_cloud(rng, 100, 2, 0, 1);
  double brute = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j) brute = std::max(brute, distance(p[i], p[j]));
  CHECK(diameter(p) == brute);

  // rotation + translation
  const double th = 0.7;
  PointSet q(2);
  for (std::size_t i = 0; i < p.size(); ++i) {
    q.push_back(std::vector<double>{std::cos(th) * p[i][0] - std::sin(th) * p[i][1] + 3,
                                    std::sin(th) * p[i][0] + std::cos(th) * p[i][1] - 1});
  }
  CHECK(diameter(q) == doctest::Approx(diameter(p)).epsilon(1e-13));
  CHECK_THROWS_AS(diameter(PointSet(2)), InvalidArgument);
}

TEST_CASE("nearest neighbour agrees with brute force") {
  Rng rng(21);
  auto p = random_cloud(rng, 500, 3, -1, 1);
  NearestNeighbor nn(p);
  for (int i = 0; i < 300; ++i) {
    std::vector<double> z{uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -3, 3)};
    CHECK(nn.distance(z) == doctest::Approx(brute_min_dist(p, z)).epsilon(1e-14));
  }
}

TEST_CASE("grid and measure plumbing") {
  auto g = GridSpec::cube(2, -1, 1, 5);
  CHECK(g.total() == 25);
  CHECK(g.spacing(0) == 0.5);
  CHECK(g.point(1) == Point{-1, -0.5});
  CHECK(g.cell_volume() == 0.25);
  CHECK_THROWS_AS(GridSpec({0}, {0}, {3}), InvalidArgument);
  CHECK_THROWS_AS(GridSpec({0}, {1}, {1}), InvalidArgument);

  DiscreteMeasure m(PointSet::from_points({{0, 0}, {1, 0}, {2, 0}}), {1, 2, 0});
  m.normalize();
  double s = 0;
  for (double w : m.weights) s += w;
  CHECK(std::abs(s - 1) < 1e-12);
  CHECK(m.pruned().size() == 2);
  CHECK_THROWS_AS(DiscreteMeasure(PointSet::from_points({{0.0}}), {-1.0}), InvalidArgument);

  CHECK_THROWS_AS(Sample(PointSet::from_points({{0, 0}}), 1, 2), InvalidArgument);
  CHECK_THROWS_AS(Sample(PointSet::from_points({{0, 0}}), 0, 2), InvalidArgument);
  CHECK(Sample(PointSet::from_points({{0, 0}}), 1, 1).size() == 1);
}

TEST_CASE("gauss-legendre integrates polynomials exactly") {
  auto r = gauss_legendre(8, -1, 3);
  double s = 0;
  for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], 15);
  CHECK(s == doctest::Approx((std::pow(3.0, 16) - 1.0) / 16.0).epsilon(1e-13));
  auto c = composite_gauss_legendre(7, 5, 0, std::numbers::pi);
  s = 0;
  for (std::size_t i = 0; i < c.size(); ++i) s += c.weights[i] * std::sin(c.nodes[i]);
  CHECK(s == doctest::Approx(2.0).epsilon(1e-12));

  TensorRule t(gauss_legendre(6, -1, 1), 3);
  std::vector<double> x;
  s = 0;
  for (std::size_t f = 0; f < t.size(); ++f) {
    t.node(f, x);
    s += t.weight(f) * x[0] * x[0] * x[1] * x[1] * x[2] * x[2];
  }
  CHECK(s == doctest::Approx(8.0 / 27.0).epsilon(1e-13));
}

TEST_CASE("seed derivation") {
  CHECK(derive_seed({1, 2, 3}) == derive_seed({1, 2, 3}));
  CHECK(derive_seed({1, 2, 3}) != derive_seed({1, 3, 2}));
  Rng a(derive_seed({7})), b(derive_seed({7}));
  for (int i = 0; i < 10; ++i) CHECK(standard_normal(a) == standard_normal(b));
}
