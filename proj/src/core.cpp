#include "blinddeconv/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace blinddeconv {

MultiIndex::MultiIndex(std::vector<int> entries) : entries_(std::move(entries)) {
  for (int e : entries_) {
    if (e < 0) throw InvalidArgument("multi-index entries must be non-negative");
    total_degree_ += e;
  }
}

namespace {

void enumerate_degree(std::size_t axis, int remaining, std::vector<int>& cur,
                      std::vector<MultiIndex>& out) {
  if (axis + 1 == cur.size()) {
    cur[axis] = remaining;
    out.emplace_back(cur);
    return;
  }
  for (int e = 0; e <= remaining; ++e) {
    cur[axis] = e;
    enumerate_degree(axis + 1, remaining - e, cur, out);
  }
}

}  // namespace

std::vector<MultiIndex> enumerate_multi_indices(std::size_t dims, int max_degree) {
  if (dims == 0) throw InvalidArgument("multi-indices need at least one axis");
  if (max_degree < 0) throw InvalidArgument("degree must be non-negative");
  std::vector<MultiIndex> out;
  std::vector<int> cur(dims, 0);
  for (int k = 0; k <= max_degree; ++k) enumerate_degree(0, k, cur, out);
  return out;
}

PointSet::PointSet(std::size_t dims, std::vector<double> coords)
    : dims_(dims), coords_(std::move(coords)) {
  if (dims_ == 0) throw InvalidArgument("point set dimension must be positive");
  if (coords_.size() % dims_ != 0)
    throw InvalidArgument("coordinate count is not a multiple of the dimension");
}

PointSet PointSet::from_points(const std::vector<Point>& points) {
  if (points.empty()) throw InvalidArgument("from_points needs at least one point");
  PointSet out(points.front().size());
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p);
  return out;
}

void PointSet::push_back(std::span<const double> p) {
  if (p.size() != dims_) throw InvalidArgument("point dimension mismatch");
  coords_.insert(coords_.end(), p.begin(), p.end());
}

GridSpec::GridSpec(std::vector<double> lo, std::vector<double> hi,
                   std::vector<std::size_t> n)
    : lower(std::move(lo)), upper(std::move(hi)), count(std::move(n)) {
  if (lower.empty() || lower.size() != upper.size() || lower.size() != count.size())
    throw InvalidArgument("grid bounds and counts must have matching non-zero length");
  for (std::size_t a = 0; a < lower.size(); ++a) {
    if (!(upper[a] > lower[a])) throw InvalidArgument("grid upper bound must exceed lower bound");
    if (count[a] < 2) throw InvalidArgument("grid needs at least two nodes per axis");
  }
}

GridSpec GridSpec::cube(std::size_t dims, double lo, double hi, std::size_t n) {
  return GridSpec(std::vector<double>(dims, lo), std::vector<double>(dims, hi),
                  std::vector<std::size_t>(dims, n));
}

GridSpec GridSpec::bounding(const PointSet& points, double inflate, std::size_t n) {
  if (points.empty()) throw InvalidArgument("bounding grid of an empty set");
  const std::size_t d = points.dims();
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto p = points[i];
    for (std::size_t a = 0; a < d; ++a) {
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  for (std::size_t a = 0; a < d; ++a) {
    double w = hi[a] - lo[a];
    if (w <= 0) w = 1.0;
    lo[a] -= inflate * w;
    hi[a] += inflate * w;
  }
  return GridSpec(lo, hi, std::vector<std::size_t>(d, n));
}

double GridSpec::spacing(std::size_t axis) const {
  return (upper[axis] - lower[axis]) / static_cast<double>(count[axis] - 1);
}

std::size_t GridSpec::total() const {
  std::size_t t = 1;
  for (auto c : count) t *= c;
  return t;
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (std::size_t a = 0; a < dims(); ++a) v *= spacing(a);
  return v;
}

double GridSpec::half_diagonal() const {
  double s = 0.0;
  for (std::size_t a = 0; a < dims(); ++a) s += spacing(a) * spacing(a);
  return 0.5 * std::sqrt(s);
}

double GridSpec::node(std::size_t axis, std::size_t k) const {
  if (k + 1 == count[axis]) return upper[axis];
  return lower[axis] + static_cast<double>(k) * spacing(axis);
}

Point GridSpec::point(std::size_t flat) const {
  Point p(dims());
  for (std::size_t a = dims(); a-- > 0;) {
    p[a] = node(a, flat % count[a]);
    flat /= count[a];
  }
  return p;
}

PointSet GridSpec::points() const {
  PointSet out(dims());
  out.reserve(total());
  for (std::size_t i = 0; i < total(); ++i) out.push_back(point(i));
  return out;
}

bool GridSpec::contains(std::span<const double> x) const {
  for (std::size_t a = 0; a < dims(); ++a)
    if (x[a] < lower[a] || x[a] > upper[a]) return false;
  return true;
}

Window Window::make_box(std::vector<double> lo, std::vector<double> hi) {
  if (lo.size() != hi.size() || lo.empty()) throw InvalidArgument("box bounds mismatch");
  for (std::size_t a = 0; a < lo.size(); ++a)
    if (hi[a] < lo[a]) throw InvalidArgument("box upper bound below lower bound");
  Window w;
  w.kind = Kind::box;
  w.lower = std::move(lo);
  w.upper = std::move(hi);
  return w;
}

Window Window::make_ball(Point c, double r) {
  if (!(r >= 0)) throw InvalidArgument("ball radius must be non-negative");
  Window w;
  w.kind = Kind::ball;
  w.center = std::move(c);
  w.radius = r;
  return w;
}

bool Window::contains(std::span<const double> x) const {
  switch (kind) {
    case Kind::everything:
      return true;
    case Kind::box:
      for (std::size_t a = 0; a < lower.size(); ++a)
        if (x[a] < lower[a] || x[a] > upper[a]) return false;
      return true;
    case Kind::ball:
      return distance(x, center) <= radius;
  }
  return false;
}

PointSet Window::restrict(const PointSet& a) const {
  PointSet out(a.dims());
  for (std::size_t i = 0; i < a.size(); ++i)
    if (contains(a[i])) out.push_back(a[i]);
  return out;
}

double Window::diameter() const {
  switch (kind) {
    case Kind::everything:
      return std::numeric_limits<double>::infinity();
    case Kind::box: {
      double s = 0.0;
      for (std::size_t a = 0; a < lower.size(); ++a)
        s += (upper[a] - lower[a]) * (upper[a] - lower[a]);
      return std::sqrt(s);
    }
    case Kind::ball:
      return 2.0 * radius;
  }
  return 0.0;
}

DiscreteMeasure::DiscreteMeasure(PointSet s, std::vector<double> w)
    : support(std::move(s)), weights(std::move(w)) {
  if (support.size() != weights.size())
    throw InvalidArgument("measure support and weights differ in size");
  for (double x : weights)
    if (!(x >= 0.0) || !std::isfinite(x)) throw InvalidArgument("measure weights must be finite and non-negative");
}

DiscreteMeasure DiscreteMeasure::uniform(PointSet s) {
  const std::size_t n = s.size();
  if (n == 0) throw InvalidArgument("uniform measure on an empty set");
  return DiscreteMeasure(std::move(s), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

DiscreteMeasure DiscreteMeasure::dirac(const Point& x) {
  return DiscreteMeasure(PointSet::from_points({x}), {1.0});
}

void DiscreteMeasure::normalize() {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) throw InvalidArgument("cannot normalize a measure with zero mass");
  for (double& w : weights) w /= total;
}

DiscreteMeasure DiscreteMeasure::pruned() const {
  PointSet s(support.dims());
  std::vector<double> w;
  for (std::size_t i = 0; i < size(); ++i) {
    if (weights[i] > 0.0) {
      s.push_back(support[i]);
      w.push_back(weights[i]);
    }
  }
  return DiscreteMeasure(std::move(s), std::move(w));
}

Sample::Sample(PointSet points, std::size_t d1, std::size_t d2)
    : points_(std::move(points)), d1_(d1), d2_(d2) {
  if (d1_ < 1 || d2_ < 1) throw InvalidArgument("both observation blocks need dimension >= 1");
  if (d1_ + d2_ != points_.dims()) throw InvalidArgument("d1 + d2 must equal the sample dimension");
  if (points_.empty()) throw InvalidArgument("sample must contain at least one observation");
}

double squared_distance(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a) {
    const double d = x[a] - y[a];
    s += d * d;
  }
  return s;
}

double distance(std::span<const double> x, std::span<const double> y) {
  return std::sqrt(squared_distance(x, y));
}

NearestNeighbor::NearestNeighbor(const PointSet& points) : points_(&points) {
  if (points.empty()) throw InvalidArgument("empty set");
  const std::size_t d = points.dims();
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      lo[a] = std::min(lo[a], points[i][a]);
      hi[a] = std::max(hi[a], points[i][a]);
    }
  }
  double volume = 1.0;
  double widest = 0.0;
  for (std::size_t a = 0; a < d; ++a) widest = std::max(widest, hi[a] - lo[a]);
  if (widest <= 0.0) widest = 1.0;
  for (std::size_t a = 0; a < d; ++a) volume *= std::max(hi[a] - lo[a], widest * 1e-3);
  // about two points per occupied cell for full-dimensional clouds
  cell_ = std::pow(2.0 * volume / static_cast<double>(points.size()), 1.0 / static_cast<double>(d));
  cell_ = std::max(cell_, widest / 1024.0);
  origin_ = lo;
  extent_.resize(d);
  std::size_t total = 1;
  for (std::size_t a = 0; a < d; ++a) {
    extent_[a] = static_cast<long>(std::floor((hi[a] - lo[a]) / cell_)) + 1;
    total *= static_cast<std::size_t>(extent_[a]);
  }
  buckets_.resize(total);
  std::vector<long> c(d);
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t a = 0; a < d; ++a)
      c[a] = std::min(extent_[a] - 1, static_cast<long>(std::floor((points[i][a] - lo[a]) / cell_)));
    buckets_[static_cast<std::size_t>(flat(c))].push_back(i);
  }
}

long NearestNeighbor::flat(const std::vector<long>& cell) const {
  long f = 0;
  for (std::size_t a = 0; a < cell.size(); ++a) f = f * extent_[a] + cell[a];
  return f;
}

double NearestNeighbor::distance(std::span<const double> x) const {
  const std::size_t d = extent_.size();
  std::vector<long> q(d);
  long r_start = 0;
  long r_max = 0;
  for (std::size_t a = 0; a < d; ++a) {
    q[a] = static_cast<long>(std::floor((x[a] - origin_[a]) / cell_));
    // distance in cells from the query cell to the occupied range
    long gap = 0;
    if (q[a] < 0) gap = -q[a];
    if (q[a] >= extent_[a]) gap = q[a] - extent_[a] + 1;
    r_start = std::max(r_start, gap);
    r_max = std::max({r_max, std::abs(q[a]), std::abs(q[a] - extent_[a] + 1)});
  }
  double best = std::numeric_limits<double>::infinity();
  std::vector<long> lo(d), hi(d), c(d);
  for (long r = r_start; r <= r_max; ++r) {
    for (std::size_t a = 0; a < d; ++a) {
      lo[a] = std::max(0L, q[a] - r);
      hi[a] = std::min(extent_[a] - 1, q[a] + r);
    }
    bool any = true;
    for (std::size_t a = 0; a < d; ++a)
      if (lo[a] > hi[a]) any = false;
    if (any) {
      c = lo;
      while (true) {
        long cheb = 0;
        for (std::size_t a = 0; a < d; ++a) cheb = std::max(cheb, std::abs(c[a] - q[a]));
        if (cheb == r) {
          for (std::size_t idx : buckets_[static_cast<std::size_t>(flat(c))])
            best = std::min(best, squared_distance(x, (*points_)[idx]));
        }
        std::size_t a = d;
        while (a-- > 0) {
          if (++c[a] <= hi[a]) break;
          c[a] = lo[a];
        }
        if (a == static_cast<std::size_t>(-1)) break;
      }
    }
    // every unvisited cell is at least r cells away from the query's cell
    const double reach = static_cast<double>(r) * cell_;
    if (std::isfinite(best) && best <= reach * reach) break;
  }
  return std::sqrt(best);
}

double directed_deviation(const PointSet& a, const PointSet& b) {
  if (a.empty() || b.empty()) throw InvalidArgument("empty set");
  NearestNeighbor nn(b);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, nn.distance(a[i]));
  return worst;
}

double hausdorff(const PointSet& a, const PointSet& b) {
  if (a.empty() || b.empty()) throw InvalidArgument("empty set");
  return std::max(directed_deviation(a, b), directed_deviation(b, a));
}

double truncated_hausdorff(const PointSet& a, const PointSet& b, const Window& k) {
  const PointSet ak = k.restrict(a);
  const PointSet bk = k.restrict(b);
  if (ak.empty() || bk.empty()) throw InvalidArgument("empty restriction");
  return hausdorff(ak, bk);
}

bool offset_contains(const PointSet& a, double eta, std::span<const double> x) {
  if (a.empty()) throw InvalidArgument("empty set");
  if (eta < 0) throw InvalidArgument("offset radius must be non-negative");
  const double e2 = eta * eta;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (squared_distance(a[i], x) <= e2) return true;
  return false;
}

double bbox_diagonal(const PointSet& pts) {
  const std::size_t D = pts.dims();
  std::vector<double> lo(D, INFINITY), hi(D, -INFINITY);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t a = 0; a < D; ++a) {
      lo[a] = std::min(lo[a], pts[i][a]);
      hi[a] = std::max(hi[a], pts[i][a]);
    }
  double s = 0.0;
  for (std::size_t a = 0; a < D; ++a) s += (hi[a] - lo[a]) * (hi[a] - lo[a]);
  return std::sqrt(s);
}

double diameter(const PointSet& a) {
  if (a.empty()) throw InvalidArgument("empty set");
  double best = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) best = std::max(best, squared_distance(a[i], a[j]));
  return std::sqrt(best);
}

}  // namespace blinddeconv
