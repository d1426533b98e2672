#include "blinddeconv/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

#include "blinddeconv/parallel.hpp"
#include "blinddeconv/rng.hpp"

namespace blinddeconv {

namespace {

double block_distance(std::span<const double> x, std::span<const double> y, std::size_t from,
                      std::size_t count) {
  double s = 0.0;
  for (std::size_t a = from; a < from + count; ++a) s += (x[a] - y[a]) * (x[a] - y[a]);
  return std::sqrt(s);
}

double projected_diameter(const PointSet& points, const std::vector<std::size_t>& members,
                          std::size_t from, std::size_t count) {
  if (count == 1) {
    double lo = INFINITY, hi = -INFINITY;
    for (auto j : members) {
      lo = std::min(lo, points[j][from]);
      hi = std::max(hi, points[j][from]);
    }
    return hi - lo;
  }
  double best = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i)
    for (std::size_t j = i + 1; j < members.size(); ++j)
      best = std::max(best, block_distance(points[members[i]], points[members[j]], from, count));
  return best;
}

// Slices near the anchor in block `slice_from` projected onto block `proj_from`.
SliceWitness best_slice(const PointSet& points, const SliceCheckConfig& cfg, std::size_t slice_from,
                        std::size_t slice_dims, std::size_t proj_from, std::size_t proj_dims) {
  std::vector<double> eps = cfg.epsilon_grid;
  std::sort(eps.begin(), eps.end());
  const std::size_t n = points.size();
  std::vector<SliceWitness> per_anchor(n);
  parallel_for(n, [&](std::size_t i) {
    std::vector<std::pair<double, std::size_t>> near;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = block_distance(points[i], points[j], slice_from, slice_dims);
      if (d <= eps.back()) near.emplace_back(d, j);
    }
    std::sort(near.begin(), near.end());
    SliceWitness& w = per_anchor[i];
    std::vector<std::size_t> members;
    std::size_t pos = 0;
    for (double e : eps) {
      while (pos < near.size() && near[pos].first <= e) members.push_back(near[pos++].second);
      if (members.size() < cfg.min_slice_count) continue;
      const double diam = projected_diameter(points, members, proj_from, proj_dims);
      // slices grow with epsilon, so the diameter can only increase from here
      if (diam < w.diameter) w = {i, e, diam, members.size()};
      break;
    }
  });
  SliceWitness best;
  for (const auto& w : per_anchor)
    if (w.diameter < best.diameter) best = w;
  return best;
}

std::uint64_t vertex_hash(std::uint64_t seed, const std::vector<long>& v, std::size_t axis) {
  std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
  for (long c : v) h = mix64(h ^ static_cast<std::uint64_t>(c));
  return mix64(h ^ (axis + 1));
}

// Smallest r > 0 at which det(M0 + r S) vanishes for the displacement sign
// pattern s, with M0 the edge matrix of the identity Kuhn simplex.
double first_degeneracy(const Eigen::MatrixXd& m0_inv, const std::vector<int>& s, std::size_t D) {
  Eigen::MatrixXd S(D, D);
  for (std::size_t j = 0; j < D; ++j)
    for (std::size_t a = 0; a < D; ++a) S(a, j) = s[(j + 1) * D + a] - s[a];
  // det(M0 + r S) = det(M0) prod(1 + r lambda), lambda in spec(M0^-1 S)
  const Eigen::VectorXcd lambda = Eigen::EigenSolver<Eigen::MatrixXd>(m0_inv * S, false).eigenvalues();
  double r = INFINITY;
  for (const auto& l : lambda)
    if (std::abs(l.imag()) < 1e-12 && l.real() < 0) r = std::min(r, -1.0 / l.real());
  return r;
}

}  // namespace

void SliceCheckConfig::validate(std::size_t dims) const {
  if (delta_grid.empty() || epsilon_grid.empty()) throw InvalidArgument("slice grids must be non-empty");
  for (double d : delta_grid)
    if (!(d > 0)) throw InvalidArgument("delta values must be positive");
  for (double e : epsilon_grid)
    if (!(e > 0)) throw InvalidArgument("epsilon values must be positive");
  if (d1 == 0 || d2 == 0 || d1 + d2 != dims) throw InvalidArgument("block split does not match the dimension");
  if (min_slice_count == 0) throw InvalidArgument("min_slice_count must be positive");
}

std::vector<SliceReport> check_slices(const PointSet& points, const SliceCheckConfig& cfg) {
  cfg.validate(points.dims());
  if (points.size() < cfg.min_slice_count) throw InvalidArgument("fewer points than min_slice_count");
  const SliceWitness w1 = best_slice(points, cfg, cfg.d1, cfg.d2, 0, cfg.d1);
  const SliceWitness w2 = best_slice(points, cfg, 0, cfg.d1, cfg.d1, cfg.d2);
  std::vector<SliceReport> out;
  for (double delta : cfg.delta_grid) {
    SliceReport r;
    r.delta = delta;
    r.witness1 = w1;
    r.witness2 = w2;
    r.found1 = w1.diameter < delta;
    r.found2 = w2.diameter < delta;
    out.push_back(r);
  }
  return out;
}

std::string slices_to_csv(const std::vector<SliceReport>& reports) {
  std::ostringstream out;
  out.precision(17);
  out << "delta,found1,anchor1,eps1,diam1,found2,anchor2,eps2,diam2\n";
  for (const auto& r : reports)
    out << r.delta << "," << r.found1 << "," << r.witness1.anchor << "," << r.witness1.epsilon << ","
        << r.witness1.diameter << "," << r.found2 << "," << r.witness2.anchor << "," << r.witness2.epsilon
        << "," << r.witness2.diameter << "\n";
  return out.str();
}

StandardnessFit check_standardness(const DiscreteMeasure& g, const std::vector<double>& r_grid,
                                   const Window& k) {
  if (g.size() < 50) throw InvalidArgument("standardness check needs at least 50 points");
  if (r_grid.size() < 2) throw InvalidArgument("need at least two radii");
  for (double r : r_grid)
    if (!(r > 0)) throw InvalidArgument("radii must be positive");
  std::vector<std::size_t> anchors;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (k.contains(g.support[i])) anchors.push_back(i);
  if (anchors.empty()) throw InvalidArgument("no anchor inside the window");
  const double total = std::accumulate(g.weights.begin(), g.weights.end(), 0.0);

  std::vector<std::vector<double>> mass(anchors.size(), std::vector<double>(r_grid.size()));
  parallel_for(anchors.size(), [&](std::size_t ai) {
    std::vector<std::pair<double, double>> dw(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) dw[j] = {distance(g.support[anchors[ai]], g.support[j]), g.weights[j]};
    std::sort(dw.begin(), dw.end());
    for (std::size_t ri = 0; ri < r_grid.size(); ++ri) {
      double m = 0.0;
      for (const auto& [d, w] : dw) {
        if (d > r_grid[ri]) break;
        m += w;
      }
      mass[ai][ri] = m / total;
    }
  });

  StandardnessFit fit;
  fit.min_mass.assign(r_grid.size(), INFINITY);
  for (const auto& row : mass)
    for (std::size_t ri = 0; ri < r_grid.size(); ++ri) fit.min_mass[ri] = std::min(fit.min_mass[ri], row[ri]);
  double mx = 0, my = 0;
  const double nr = static_cast<double>(r_grid.size());
  for (std::size_t ri = 0; ri < r_grid.size(); ++ri) {
    mx += std::log(r_grid[ri]) / nr;
    my += std::log(fit.min_mass[ri]) / nr;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t ri = 0; ri < r_grid.size(); ++ri) {
    const double dx = std::log(r_grid[ri]) - mx;
    sxy += dx * (std::log(fit.min_mass[ri]) - my);
    sxx += dx * dx;
  }
  if (!(sxx > 0)) throw InvalidArgument("radii must not all be equal");
  fit.d_hat = sxy / sxx;
  fit.a_hat = INFINITY;
  for (std::size_t ri = 0; ri < r_grid.size(); ++ri)
    fit.a_hat = std::min(fit.a_hat, fit.min_mass[ri] / std::pow(r_grid[ri], fit.d_hat));
  return fit;
}

double kuhn_r0(std::size_t D) {
  static std::mutex mu;
  static std::map<std::size_t, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  if (const auto it = cache.find(D); it != cache.end()) return it->second;
  if (D == 0) throw InvalidArgument("dimension must be positive");

  Eigen::MatrixXd m0 = Eigen::MatrixXd::Zero(D, D);
  for (std::size_t j = 0; j < D; ++j)
    for (std::size_t a = 0; a <= j; ++a) m0(a, j) = 1.0;
  const Eigen::MatrixXd m0_inv = m0.inverse();
  const std::size_t bits = D * (D + 1);
  std::vector<int> s(bits);
  double r_star = INFINITY;
  const auto visit = [&](std::uint64_t pattern) {
    for (std::size_t b = 0; b < bits; ++b) s[b] = (pattern >> b & 1) ? 1 : -1;
    r_star = std::min(r_star, first_degeneracy(m0_inv, s, D));
  };
  if (bits <= 20) {
    for (std::uint64_t p = 0; p < (std::uint64_t{1} << bits); ++p) visit(p);
  } else {
    // too many corners to enumerate: a fixed pseudo-random subset
    Rng rng(0x9e3779b97f4a7c15ULL + D);
    for (int t = 0; t < (1 << 20); ++t) {
      for (std::size_t b = 0; b < bits; ++b) s[b] = (rng() & 1) ? 1 : -1;
      r_star = std::min(r_star, first_degeneracy(m0_inv, s, D));
    }
  }
  const double r0 = 0.5 * r_star;
  cache[D] = r0;
  return r0;
}

PerturbedTiling::PerturbedTiling(std::size_t dims, double delta, double r, std::uint64_t seed)
    : dims_(dims), delta_(delta), r_(r), seed_(seed) {
  if (dims == 0) throw InvalidArgument("dimension must be positive");
  if (!(delta > 0)) throw InvalidArgument("tiling granularity must be positive");
  if (!(r >= 0)) throw InvalidArgument("perturbation radius must be non-negative");
  if (r > kuhn_r0(dims) * delta) throw InvalidArgument("perturbation radius exceeds validated bound");
}

Point PerturbedTiling::displacement(const std::vector<long>& vertex) const {
  Point e(dims_, 0.0);
  if (r_ == 0.0) return e;
  for (std::size_t a = 0; a < dims_; ++a) {
    const double u = static_cast<double>(vertex_hash(seed_, vertex, a) >> 11) * 0x1.0p-53;
    e[a] = r_ * (2.0 * u - 1.0);
  }
  return e;
}

PerturbedTiling::Location PerturbedTiling::locate(std::span<const double> z) const {
  if (z.size() != dims_) throw InvalidArgument("point dimension does not match the tiling");
  const std::size_t D = dims_;
  std::vector<long> cell(D);
  std::vector<bool> odd(D);
  std::vector<double> u(D);
  for (std::size_t a = 0; a < D; ++a) {
    const double y = z[a] / delta_;
    const double f = std::floor(y);
    cell[a] = static_cast<long>(f);
    odd[a] = (cell[a] % 2) != 0;
    u[a] = odd[a] ? 1.0 - (y - f) : y - f;
  }
  std::vector<std::size_t> order(D);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return u[i] > u[j]; });

  Location loc;
  std::vector<int> local(D, 0);
  const auto lattice = [&]() {
    std::vector<long> v(D);
    for (std::size_t a = 0; a < D; ++a) v[a] = cell[a] + (odd[a] ? 1 - local[a] : local[a]);
    return v;
  };
  loc.vertices.push_back(lattice());
  loc.weights.push_back(1.0 - u[order[0]]);
  for (std::size_t j = 0; j < D; ++j) {
    local[order[j]] = 1;
    loc.vertices.push_back(lattice());
    loc.weights.push_back(j + 1 < D ? u[order[j]] - u[order[j + 1]] : u[order[j]]);
  }
  return loc;
}

Point PerturbedTiling::apply(std::span<const double> z) const {
  Point out(z.begin(), z.end());
  if (r_ == 0.0) return out;
  const Location loc = locate(z);
  for (std::size_t j = 0; j < loc.vertices.size(); ++j) {
    if (loc.weights[j] == 0.0) continue;
    const Point e = displacement(loc.vertices[j]);
    for (std::size_t a = 0; a < dims_; ++a) out[a] += loc.weights[j] * e[a];
  }
  return out;
}

Point PerturbedTiling::invert(std::span<const double> w, int max_iter) const {
  const std::size_t D = dims_;
  Point z(w.begin(), w.end());
  for (int it = 0; it < max_iter; ++it) {
    const Point fz = apply(z);
    double res = 0.0;
    for (std::size_t a = 0; a < D; ++a) res = std::max(res, std::abs(fz[a] - w[a]));
    if (res <= 1e-13 * (1.0 + delta_)) return z;
    // affine piece of the current simplex: f(x) = y0 + A (x - x0)
    const Location loc = locate(z);
    Eigen::MatrixXd X(D, D), Y(D, D);
    const Point e0 = displacement(loc.vertices[0]);
    for (std::size_t j = 1; j <= D; ++j) {
      const Point ej = displacement(loc.vertices[j]);
      for (std::size_t a = 0; a < D; ++a) {
        const double dx = delta_ * double(loc.vertices[j][a] - loc.vertices[0][a]);
        X(a, j - 1) = dx;
        Y(a, j - 1) = dx + ej[a] - e0[a];
      }
    }
    const Eigen::MatrixXd A = Y * X.inverse();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (!lu.isInvertible()) throw NumericalError("perturbed simplex is degenerate");
    Eigen::VectorXd rhs(D);
    for (std::size_t a = 0; a < D; ++a) rhs(a) = w[a] - fz[a];
    const Eigen::VectorXd step = lu.solve(rhs);
    for (std::size_t a = 0; a < D; ++a) z[a] += step(a);
  }
  throw NumericalError("perturbation inverse did not converge");
}

PointSet apply_perturbation(const PerturbedTiling& tiling, const PointSet& points) {
  PointSet out(points.dims());
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) out.push_back(tiling.apply(points[i]));
  return out;
}

GenericityResult genericity_mc(const PointSet& points, std::size_t trials, double r, std::uint64_t seed,
                               std::size_t d1, double delta, double tol_unique) {
  if (points.empty()) throw InvalidArgument("empty point set");
  if (trials == 0) throw InvalidArgument("trials must be at least 1");
  if (d1 == 0 || d1 >= points.dims()) throw InvalidArgument("block split does not match the dimension");
  std::vector<char> b1(trials), b2(trials);
  parallel_for(trials, [&](std::size_t t) {
    const PerturbedTiling tiling(points.dims(), delta, r, derive_seed({seed, t}));
    const PointSet moved = apply_perturbation(tiling, points);
    const auto unique_max = [&](std::size_t axis) {
      double mx = -INFINITY;
      for (std::size_t i = 0; i < moved.size(); ++i) mx = std::max(mx, moved[i][axis]);
      std::size_t count = 0;
      for (std::size_t i = 0; i < moved.size(); ++i)
        if (moved[i][axis] >= mx - tol_unique) ++count;
      return count == 1;
    };
    b1[t] = unique_max(0);
    b2[t] = unique_max(d1);
  });
  GenericityResult res;
  std::size_t ok = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    res.b1.push_back(b1[t]);
    res.b2.push_back(b2[t]);
    ok += b1[t] && b2[t];
  }
  res.fraction = static_cast<double>(ok) / static_cast<double>(trials);
  return res;
}

std::string genericity_to_csv(const GenericityResult& result) {
  std::ostringstream out;
  out << "trial,b1,b2\n";
  for (std::size_t t = 0; t < result.b1.size(); ++t)
    out << t << "," << int(result.b1[t]) << "," << int(result.b2[t]) << "\n";
  return out.str();
}

}  // namespace blinddeconv
