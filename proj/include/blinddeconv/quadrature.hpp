#pragma once

#include <cstddef>
#include <vector>

namespace blinddeconv {

//! One-dimensional quadrature rule.
struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::size_t size() const { return nodes.size(); }
};

//! Gauss-Legendre rule with `order` nodes on [lo, hi].
Rule1D gauss_legendre(std::size_t order, double lo, double hi);

//! Composite Gauss-Legendre: `panels` equal panels of `order` nodes each.
Rule1D composite_gauss_legendre(std::size_t panels, std::size_t order, double lo, double hi);

//! Tensor product of the same 1-D rule on every axis. Flat node index is
//! row-major with the last axis fastest.
class TensorRule {
public:
  TensorRule(Rule1D axis_rule, std::size_t dims);

  std::size_t dims() const { return dims_; }
  std::size_t size() const { return size_; }
  const Rule1D& axis() const { return axis_; }
  //! Per-axis node indices of a flat index.
  void unflatten(std::size_t flat, std::vector<std::size_t>& idx) const;
  double weight(std::size_t flat) const;
  void node(std::size_t flat, std::vector<double>& t) const;

private:
  Rule1D axis_;
  std::size_t dims_;
  std::size_t size_;
};

}  // namespace blinddeconv
