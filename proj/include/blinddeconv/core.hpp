#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace blinddeconv {

using Point = std::vector<double>;

//! Raised on violated preconditions or invalid parameter combinations.
class InvalidArgument : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

//! Raised when a numerical procedure cannot produce a trustworthy result.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

//! Multi-index i in N^D with cached total degree |i|_1.
class MultiIndex {
public:
  MultiIndex() = default;
  explicit MultiIndex(std::vector<int> entries);

  const std::vector<int>& entries() const { return entries_; }
  int operator[](std::size_t a) const { return entries_[a]; }
  std::size_t dims() const { return entries_.size(); }
  int total_degree() const { return total_degree_; }
  bool is_zero() const { return total_degree_ == 0; }

  friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
  friend auto operator<=>(const MultiIndex& a, const MultiIndex& b) {
    if (a.total_degree_ != b.total_degree_)
      return a.total_degree_ <=> b.total_degree_;
    return a.entries_ <=> b.entries_;
  }

private:
  std::vector<int> entries_;
  int total_degree_ = 0;
};

//! All multi-indices of length `dims` with total degree <= max_degree,
//! graded by degree and lexicographic inside a degree. Index 0 is the zero
//! multi-index.
std::vector<MultiIndex> enumerate_multi_indices(std::size_t dims, int max_degree);

//! Finite point cloud in R^D stored row-major.
class PointSet {
public:
  PointSet() = default;
  explicit PointSet(std::size_t dims) : dims_(dims) {}
  PointSet(std::size_t dims, std::vector<double> coords);
  static PointSet from_points(const std::vector<Point>& points);

  std::size_t dims() const { return dims_; }
  std::size_t size() const { return dims_ == 0 ? 0 : coords_.size() / dims_; }
  bool empty() const { return size() == 0; }

  std::span<const double> operator[](std::size_t i) const {
    return {coords_.data() + i * dims_, dims_};
  }
  std::span<double> mutable_point(std::size_t i) {
    return {coords_.data() + i * dims_, dims_};
  }
  void push_back(std::span<const double> p);
  void reserve(std::size_t n) { coords_.reserve(n * dims_); }
  const std::vector<double>& coords() const { return coords_; }

private:
  std::size_t dims_ = 0;
  std::vector<double> coords_;
};

//! Axis-aligned lattice: `count[a]` equispaced nodes from lower[a] to upper[a].
struct GridSpec {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<std::size_t> count;

  GridSpec() = default;
  GridSpec(std::vector<double> lo, std::vector<double> hi, std::vector<std::size_t> n);
  //! Same bounds and count on every axis.
  static GridSpec cube(std::size_t dims, double lo, double hi, std::size_t n);
  //! Bounding box of `points` inflated by `inflate` (relative) on every side.
  static GridSpec bounding(const PointSet& points, double inflate, std::size_t n);

  std::size_t dims() const { return lower.size(); }
  double spacing(std::size_t axis) const;
  std::size_t total() const;
  double cell_volume() const;
  //! Half length of the cell diagonal.
  double half_diagonal() const;
  //! Node coordinate along one axis.
  double node(std::size_t axis, std::size_t k) const;
  //! Row-major flat index -> point; the last axis varies fastest.
  Point point(std::size_t flat) const;
  PointSet points() const;
  bool contains(std::span<const double> x) const;
};

//! Truncation compact K used by the truncated Hausdorff loss.
struct Window {
  enum class Kind { everything, box, ball };
  Kind kind = Kind::everything;
  std::vector<double> lower;  // box
  std::vector<double> upper;  // box
  Point center;               // ball
  double radius = 0.0;        // ball

  static Window all() { return {}; }
  static Window make_box(std::vector<double> lo, std::vector<double> hi);
  static Window make_ball(Point c, double r);

  bool contains(std::span<const double> x) const;
  PointSet restrict(const PointSet& a) const;
  //! Diameter of K; infinite for Kind::everything.
  double diameter() const;
};

//! Weighted atoms; weights are non-negative and sum to one once normalized.
struct DiscreteMeasure {
  PointSet support;
  std::vector<double> weights;

  DiscreteMeasure() = default;
  DiscreteMeasure(PointSet s, std::vector<double> w);
  static DiscreteMeasure uniform(PointSet s);
  static DiscreteMeasure dirac(const Point& x);

  std::size_t size() const { return weights.size(); }
  void normalize();
  //! Copy without zero-weight atoms.
  DiscreteMeasure pruned() const;
};

//! n observations in R^D split into blocks of sizes d1 and d2.
class Sample {
public:
  Sample(PointSet points, std::size_t d1, std::size_t d2);
  const PointSet& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  std::size_t dims() const { return points_.dims(); }
  std::size_t d1() const { return d1_; }
  std::size_t d2() const { return d2_; }

private:
  PointSet points_;
  std::size_t d1_;
  std::size_t d2_;
};

double distance(std::span<const double> x, std::span<const double> y);
double squared_distance(std::span<const double> x, std::span<const double> y);

//! Exact nearest-neighbour queries against a fixed point cloud, bucketed on a
//! uniform grid.
class NearestNeighbor {
public:
  explicit NearestNeighbor(const PointSet& points);
  //! Distance from x to the closest point of the cloud.
  double distance(std::span<const double> x) const;

private:
  const PointSet* points_;
  std::vector<double> origin_;
  double cell_ = 1.0;
  std::vector<long> extent_;
  std::vector<std::vector<std::size_t>> buckets_;
  long flat(const std::vector<long>& cell) const;
};

//! Hausdorff distance between finite sets: sup_x |d(x,A) - d(x,B)|.
double hausdorff(const PointSet& a, const PointSet& b);
//! d_H(A ∩ K, B ∩ K); throws if either restriction is empty.
double truncated_hausdorff(const PointSet& a, const PointSet& b, const Window& k);
//! True iff d(x, a) <= eta.
bool offset_contains(const PointSet& a, double eta, std::span<const double> x);
//! sup_{x in a} d(x, b), the one-sided deviation.
double directed_deviation(const PointSet& a, const PointSet& b);
double diameter(const PointSet& a);
//! Diagonal of the axis-aligned bounding box.
double bbox_diagonal(const PointSet& pts);

}  // namespace blinddeconv
