#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "blinddeconv/core.hpp"
#include "blinddeconv/quadrature.hpp"

namespace blinddeconv {

using Complex = std::complex<double>;

//! Concrete choices for the closed class H intersected with the coefficient class.
enum class HConstraint { all, slice };

//! Parameters of the coefficient class: |c_i| <= S^k / k^{k/rho}, k = |i|.
struct ClassParams {
  double rho = 1.0;
  double S = 1.0;
  double nu_est = 1.0;
  HConstraint h_constraint = HConstraint::all;

  void validate() const;
  double kappa() const { return 1.0 / rho; }
  //! Coefficient bound at total degree k >= 1.
  double bound(int degree) const;
};

//! Polynomial sum_{|i| <= m} c_i t^i with c_0 = 1 and c_i = i^{|i|} r_i for
//! real r_i, so that phi(-t) = conj(phi(t)) for real t by construction.
class TruncatedAnalytic {
public:
  TruncatedAnalytic() = default;
  //! The constant function 1.
  TruncatedAnalytic(std::size_t dims, int degree);
  //! r[0] is ignored and forced to 1.
  static TruncatedAnalytic from_parameters(std::size_t dims, int degree, std::vector<double> r);
  //! Throws if the coefficients violate conjugate symmetry beyond tol or c_0 != 1.
  static TruncatedAnalytic from_coefficients(std::size_t dims, int degree,
                                             const std::vector<Complex>& c, double tol = 1e-12);
  //! Taylor coefficients of the characteristic function of a discrete
  //! measure: c_i = i^{|i|} E[X^i] / i!.
  static TruncatedAnalytic from_measure(const DiscreteMeasure& g, int degree);

  std::size_t dims() const { return dims_; }
  int degree() const { return degree_; }
  std::size_t size() const { return indices_.size(); }
  const std::vector<MultiIndex>& indices() const { return indices_; }
  const std::vector<double>& parameters() const { return params_; }
  void set_parameter(std::size_t k, double value);
  Complex coefficient(std::size_t k) const;
  //! i^{|i|} for index k.
  Complex phase(std::size_t k) const;

  Complex operator()(std::span<const Complex> t) const;
  Complex at(std::span<const double> t) const;

private:
  std::size_t dims_ = 0;
  int degree_ = 0;
  std::vector<MultiIndex> indices_;
  std::vector<double> params_;
};

//! sum_i c_i prod_a t_a^{i_a}.
Complex eval_poly(const TruncatedAnalytic& phi, std::span<const Complex> t);
//! Drops the coefficients of total degree > m.
TruncatedAnalytic truncate(const TruncatedAnalytic& phi, int m);
//! Resets c_0 to 1 and clips every |c_i| onto the class bound.
TruncatedAnalytic project_to_class(const TruncatedAnalytic& phi, const ClassParams& params);
bool in_class(const TruncatedAnalytic& phi, const ClassParams& params, double tol = 0.0);
//! Number of coefficients within rel_tol of their bound.
std::size_t boundary_count(const TruncatedAnalytic& phi, const ClassParams& params,
                           double rel_tol = 1e-9);

//! (1/n) sum_l exp(i t . Y_l).
Complex empirical_cf(const Sample& sample, std::span<const double> t);
//! Empirical CF on the tensor grid axis_nodes[0] x ... x axis_nodes[D-1]
//! (row-major, last axis fastest). Summation order is fixed, so the result
//! does not depend on the thread count.
std::vector<Complex> empirical_cf_tensor(const Sample& sample,
                                         const std::vector<std::vector<double>>& axis_nodes);

struct QuadratureConfig {
  std::size_t order = 33;
  std::size_t panels = 1;
};

//! Tensor Gauss-Legendre rule on [-nu, nu]^D.
TensorRule contrast_rule(std::size_t dims, double nu, const QuadratureConfig& q = {});

//! Quadrature value of M_n(phi) over [-nu_est, nu_est]^D. Throws if the rule
//! does not cover that cube.
double contrast_mn(const TruncatedAnalytic& phi, const Sample& sample, double nu_est,
                   const TensorRule& quad);

//! Precomputed data of M_n for a fixed sample, rule and degree. Residuals at
//! node k: R_k = phi(t_k) a_k - b_k phi(t1_k, 0) phi(0, t2_k) with
//! a_k = phi~(t1_k, 0) phi~(0, t2_k) and b_k = phi~(t_k).
class ContrastProblem {
public:
  ContrastProblem(const Sample& sample, double nu, const TensorRule& quad, int degree);

  std::size_t dims() const { return dims_; }
  int degree() const { return degree_; }
  std::size_t parameter_count() const { return indices_.size(); }
  std::size_t node_count() const { return weights_.size(); }

  double value(const std::vector<double>& r) const;
  //! Residuals and their Jacobian in r (complex, node_count x parameter_count).
  void residuals(const std::vector<double>& r, std::vector<Complex>& res,
                 std::vector<Complex>* jacobian) const;
  //! Weighted least-squares fit of the polynomial to phi~ on the nodes.
  std::vector<double> least_squares_fit() const;

  const std::vector<double>& weights() const { return weights_; }

private:
  std::size_t dims_;
  int degree_;
  std::vector<MultiIndex> indices_;
  std::vector<Complex> phase_;
  std::vector<double> weights_;
  std::vector<Complex> a_, b_;
  // monomials t^i at the full node, at (t1, 0) and at (0, t2); row-major
  std::vector<double> mono_, mono1_, mono2_;
};

struct OptimizerConfig {
  std::size_t starts = 4;
  std::size_t max_iter = 500;
  //! Stop when one accepted step improves the contrast by less than this;
  //! a negative value means 1/n.
  double tol = -1.0;
  //! Random starts scale each least-squares coefficient by 1 + perturbation * U(-1, 1).
  double perturbation = 0.5;
  std::uint64_t seed = 0;
  QuadratureConfig quadrature;
};

struct CfEstimate {
  TruncatedAnalytic phi;
  double contrast = 0.0;
  std::size_t best_start = 0;
  std::vector<double> start_contrasts;
  //! Accepted contrast values of the winning start, first entry = its start.
  std::vector<double> history;
  std::size_t boundary_coefficients = 0;
};

//! Multi-start projected Levenberg-Marquardt minimization of M_n(T_m phi)
//! over the coefficient class.
CfEstimate estimate_cf(const Sample& sample, const ClassParams& params, int m,
                       const OptimizerConfig& cfg = {});

//! ceil(4 log n / log log n).
int default_degree(std::size_t n);

//! min over [-nu, nu]^{d1} and [-nu, nu]^{d2} (grid scan with `points` nodes
//! per axis) of the block noise CF moduli.
double c_nu(const std::function<Complex(std::span<const double>)>& block1_cf,
            const std::function<Complex(std::span<const double>)>& block2_cf, std::size_t d1,
            std::size_t d2, double nu, std::size_t points = 101);

//! Grid L2 norm over [-nu, nu]^D of phi - psi for two functions given at the
//! nodes of a rule.
double grid_l2_distance(const TensorRule& quad, const std::vector<Complex>& a,
                        const std::vector<Complex>& b);

}  // namespace blinddeconv
