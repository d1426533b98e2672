#include "blinddeconv/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "blinddeconv/core.hpp"

namespace blinddeconv {

Rule1D gauss_legendre(std::size_t order, double lo, double hi) {
  if (order == 0) throw InvalidArgument("quadrature order must be positive");
  Rule1D rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const double mid = 0.5 * (lo + hi);
  const double half = 0.5 * (hi - lo);
  const std::size_t n = order;
  if (n == 1) {
    rule.nodes[0] = mid;
    rule.weights[0] = hi - lo;
    return rule;
  }
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    // Newton iteration on P_n from the Chebyshev-like initial guess
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (std::size_t k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * static_cast<double>(k) - 1.0) * x * p1 - (static_cast<double>(k) - 1.0) * p2) /
             static_cast<double>(k);
      }
      dp = static_cast<double>(n) * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = mid - half * x;
    rule.nodes[n - 1 - i] = mid + half * x;
    rule.weights[i] = half * w;
    rule.weights[n - 1 - i] = half * w;
  }
  return rule;
}

Rule1D composite_gauss_legendre(std::size_t panels, std::size_t order, double lo, double hi) {
  if (panels == 0) throw InvalidArgument("need at least one panel");
  Rule1D out;
  const double width = (hi - lo) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double a = lo + width * static_cast<double>(p);
    Rule1D r = gauss_legendre(order, a, a + width);
    out.nodes.insert(out.nodes.end(), r.nodes.begin(), r.nodes.end());
    out.weights.insert(out.weights.end(), r.weights.begin(), r.weights.end());
  }
  return out;
}

TensorRule::TensorRule(Rule1D axis_rule, std::size_t dims)
    : axis_(std::move(axis_rule)), dims_(dims), size_(1) {
  if (dims_ == 0) throw InvalidArgument("tensor rule needs at least one axis");
  for (std::size_t a = 0; a < dims_; ++a) size_ *= axis_.size();
}

void TensorRule::unflatten(std::size_t flat, std::vector<std::size_t>& idx) const {
  idx.resize(dims_);
  const std::size_t q = axis_.size();
  for (std::size_t a = dims_; a-- > 0;) {
    idx[a] = flat % q;
    flat /= q;
  }
}

double TensorRule::weight(std::size_t flat) const {
  const std::size_t q = axis_.size();
  double w = 1.0;
  for (std::size_t a = 0; a < dims_; ++a) {
    w *= axis_.weights[flat % q];
    flat /= q;
  }
  return w;
}

void TensorRule::node(std::size_t flat, std::vector<double>& t) const {
  t.resize(dims_);
  const std::size_t q = axis_.size();
  for (std::size_t a = dims_; a-- > 0;) {
    t[a] = axis_.nodes[flat % q];
    flat /= q;
  }
}

}  // namespace blinddeconv
