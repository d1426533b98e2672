#include "blinddeconv/charfn.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "blinddeconv/parallel.hpp"
#include "blinddeconv/rng.hpp"

namespace blinddeconv {

namespace {

constexpr std::size_t kChunk = 2048;

Complex phase_of(int degree) {
  switch (degree % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

// Real monomial t^i for every index.
void monomials(const std::vector<MultiIndex>& idx, std::span<const double> t, int degree,
               std::vector<double>& pw, double* out) {
  const std::size_t D = t.size();
  const auto stride = static_cast<std::size_t>(degree) + 1;
  pw.assign(D * stride, 1.0);
  for (std::size_t a = 0; a < D; ++a)
    for (int e = 1; e <= degree; ++e) pw[a * stride + e] = pw[a * stride + e - 1] * t[a];
  for (std::size_t k = 0; k < idx.size(); ++k) {
    double v = 1.0;
    for (std::size_t a = 0; a < D; ++a) v *= pw[a * stride + static_cast<std::size_t>(idx[k][a])];
    out[k] = v;
  }
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Residual function for the projected Levenberg-Marquardt loop.
using ResidualFn =
    std::function<void(const std::vector<double>&, std::vector<Complex>&, std::vector<Complex>*)>;

struct LmResult {
  std::vector<double> r;
  double value = 0.0;
  std::vector<double> history;
};

LmResult projected_lm(const ResidualFn& fn, const std::vector<double>& weights,
                      std::vector<double> r, const std::vector<double>& lo,
                      const std::vector<double>& hi, std::size_t max_iter, double tol) {
  const std::size_t P = r.size();
  const std::size_t K = weights.size();
  for (std::size_t i = 1; i < P; ++i) r[i] = std::clamp(r[i], lo[i], hi[i]);
  r[0] = 1.0;

  std::vector<Complex> res, jac, trial_res;
  auto objective = [&](const std::vector<Complex>& v) {
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) s += weights[k] * std::norm(v[k]);
    return s;
  };

  fn(r, res, &jac);
  double f = objective(res);
  LmResult out;
  out.history.push_back(f);
  double mu = 1e-3;

  Eigen::MatrixXd A(P, P);
  Eigen::VectorXd g(P);
  for (std::size_t it = 0; it < max_iter; ++it) {
    // Normal equations of the stacked real/imaginary system.
    Eigen::Map<const Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> J(
        jac.data(), static_cast<Eigen::Index>(K), static_cast<Eigen::Index>(P));
    Eigen::VectorXd sw(K);
    Eigen::VectorXcd R(K);
    for (std::size_t k = 0; k < K; ++k) {
      sw[k] = std::sqrt(weights[k]);
      R[k] = res[k] * sw[k];
    }
    const Eigen::MatrixXcd Jw = sw.asDiagonal() * J;
    const Eigen::MatrixXd Jr = Jw.real(), Ji = Jw.imag();
    A.setZero();
    A.selfadjointView<Eigen::Lower>().rankUpdate(Jr.transpose());
    A.selfadjointView<Eigen::Lower>().rankUpdate(Ji.transpose());
    A.triangularView<Eigen::StrictlyUpper>() = A.transpose();
    g.noalias() = Jr.transpose() * R.real() + Ji.transpose() * R.imag();

    std::vector<std::size_t> free;
    for (std::size_t i = 1; i < P; ++i) {
      if (r[i] <= lo[i] && g[i] > 0) continue;
      if (r[i] >= hi[i] && g[i] < 0) continue;
      free.push_back(i);
    }
    if (free.empty()) break;
    const auto F = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd Af(F, F);
    Eigen::VectorXd gf(F);
    double max_diag = 0.0;
    for (Eigen::Index a = 0; a < F; ++a) {
      gf[a] = g[free[a]];
      for (Eigen::Index b = 0; b < F; ++b) Af(a, b) = A(free[a], free[b]);
      max_diag = std::max(max_diag, Af(a, a));
    }
    if (!(max_diag > 0)) break;

    bool accepted = false;
    double improvement = 0.0;
    while (mu < 1e16) {
      Eigen::MatrixXd M = Af;
      for (Eigen::Index a = 0; a < F; ++a)
        M(a, a) += mu * std::max(Af(a, a), 1e-14 * max_diag);
      const Eigen::VectorXd delta = M.ldlt().solve(-gf);
      std::vector<double> trial = r;
      for (Eigen::Index a = 0; a < F; ++a) {
        const std::size_t i = free[a];
        trial[i] = std::clamp(r[i] + delta[a], lo[i], hi[i]);
      }
      fn(trial, trial_res, nullptr);
      const double ft = objective(trial_res);
      if (ft < f) {
        improvement = f - ft;
        r = std::move(trial);
        f = ft;
        mu = std::max(mu / 3.0, 1e-12);
        accepted = true;
        break;
      }
      mu *= 4.0;
    }
    if (!accepted) break;
    out.history.push_back(f);
    fn(r, res, &jac);
    if (improvement < tol || improvement <= 1e-12 * (f + improvement)) break;
  }
  out.r = std::move(r);
  out.value = f;
  return out;
}

}  // namespace

void ClassParams::validate() const {
  if (!(rho >= 1.0 && rho < 2.0)) throw InvalidArgument("rho must lie in [1, 2)");
  if (!(S > 0)) throw InvalidArgument("S must be positive");
  if (!(nu_est > 0)) throw InvalidArgument("nu_est must be positive");
}

double ClassParams::bound(int degree) const {
  if (degree <= 0) return 1.0;
  const double k = degree;
  return std::exp(k * std::log(S) - k / rho * std::log(k));
}

TruncatedAnalytic::TruncatedAnalytic(std::size_t dims, int degree)
    : dims_(dims), degree_(degree), indices_(enumerate_multi_indices(dims, degree)) {
  params_.assign(indices_.size(), 0.0);
  params_[0] = 1.0;
}

TruncatedAnalytic TruncatedAnalytic::from_parameters(std::size_t dims, int degree,
                                                     std::vector<double> r) {
  TruncatedAnalytic phi(dims, degree);
  if (r.size() != phi.size()) throw InvalidArgument("parameter count does not match the degree");
  r[0] = 1.0;
  phi.params_ = std::move(r);
  return phi;
}

TruncatedAnalytic TruncatedAnalytic::from_coefficients(std::size_t dims, int degree,
                                                       const std::vector<Complex>& c,
                                                       double tol) {
  TruncatedAnalytic phi(dims, degree);
  if (c.size() != phi.size()) throw InvalidArgument("coefficient count does not match the degree");
  if (std::abs(c[0] - Complex(1.0, 0.0)) > tol) throw InvalidArgument("c_0 must equal 1");
  for (std::size_t k = 1; k < c.size(); ++k) {
    const Complex r = c[k] / phi.phase(k);
    if (std::abs(r.imag()) > tol * std::max(1.0, std::abs(c[k])))
      throw InvalidArgument("coefficients violate conjugate symmetry");
    phi.params_[k] = r.real();
  }
  return phi;
}

TruncatedAnalytic TruncatedAnalytic::from_measure(const DiscreteMeasure& g, int degree) {
  const std::size_t D = g.support.dims();
  TruncatedAnalytic phi(D, degree);
  std::vector<double> fact(static_cast<std::size_t>(degree) + 1, 1.0);
  for (int e = 1; e <= degree; ++e) fact[e] = fact[e - 1] * e;
  std::vector<double> pw, mono(phi.size());
  std::vector<double> acc(phi.size(), 0.0);
  for (std::size_t j = 0; j < g.size(); ++j) {
    monomials(phi.indices_, g.support[j], degree, pw, mono.data());
    for (std::size_t k = 0; k < phi.size(); ++k) acc[k] += g.weights[j] * mono[k];
  }
  for (std::size_t k = 1; k < phi.size(); ++k) {
    double denom = 1.0;
    for (std::size_t a = 0; a < D; ++a) denom *= fact[phi.indices_[k][a]];
    phi.params_[k] = acc[k] / denom;
  }
  return phi;
}

void TruncatedAnalytic::set_parameter(std::size_t k, double value) {
  if (k == 0) throw InvalidArgument("c_0 is fixed to 1");
  params_.at(k) = value;
}

Complex TruncatedAnalytic::phase(std::size_t k) const {
  return phase_of(indices_[k].total_degree());
}

Complex TruncatedAnalytic::coefficient(std::size_t k) const { return phase(k) * params_[k]; }

Complex TruncatedAnalytic::operator()(std::span<const Complex> t) const {
  if (t.size() != dims_) throw InvalidArgument("evaluation point has the wrong dimension");
  const auto stride = static_cast<std::size_t>(degree_) + 1;
  std::vector<Complex> pw(dims_ * stride, Complex(1.0, 0.0));
  for (std::size_t a = 0; a < dims_; ++a)
    for (int e = 1; e <= degree_; ++e) pw[a * stride + e] = pw[a * stride + e - 1] * t[a];
  Complex sum = 0.0;
  for (std::size_t k = 0; k < indices_.size(); ++k) {
    Complex v = coefficient(k);
    for (std::size_t a = 0; a < dims_; ++a) v *= pw[a * stride + indices_[k][a]];
    sum += v;
  }
  return sum;
}

Complex TruncatedAnalytic::at(std::span<const double> t) const {
  std::vector<Complex> z(t.begin(), t.end());
  return (*this)(z);
}

Complex eval_poly(const TruncatedAnalytic& phi, std::span<const Complex> t) { return phi(t); }

TruncatedAnalytic truncate(const TruncatedAnalytic& phi, int m) {
  if (m < 0) throw InvalidArgument("truncation degree must be non-negative");
  if (m >= phi.degree()) return phi;
  TruncatedAnalytic out(phi.dims(), m);
  // graded order: the first out.size() indices are exactly those with |i| <= m
  std::vector<double> r(phi.parameters().begin(), phi.parameters().begin() + out.size());
  return TruncatedAnalytic::from_parameters(phi.dims(), m, std::move(r));
}

TruncatedAnalytic project_to_class(const TruncatedAnalytic& phi, const ClassParams& params) {
  std::vector<double> r = phi.parameters();
  for (std::size_t k = 1; k < r.size(); ++k) {
    const double b = params.bound(phi.indices()[k].total_degree());
    r[k] = std::clamp(r[k], -b, b);
  }
  return TruncatedAnalytic::from_parameters(phi.dims(), phi.degree(), std::move(r));
}

bool in_class(const TruncatedAnalytic& phi, const ClassParams& params, double tol) {
  if (phi.parameters()[0] != 1.0) return false;
  for (std::size_t k = 1; k < phi.size(); ++k)
    if (std::abs(phi.coefficient(k)) > params.bound(phi.indices()[k].total_degree()) * (1 + tol))
      return false;
  return true;
}

std::size_t boundary_count(const TruncatedAnalytic& phi, const ClassParams& params,
                           double rel_tol) {
  std::size_t count = 0;
  for (std::size_t k = 1; k < phi.size(); ++k) {
    const double b = params.bound(phi.indices()[k].total_degree());
    if (std::abs(phi.parameters()[k]) >= b * (1 - rel_tol)) ++count;
  }
  return count;
}

Complex empirical_cf(const Sample& sample, std::span<const double> t) {
  if (t.size() != sample.dims()) throw InvalidArgument("frequency has the wrong dimension");
  const auto& pts = sample.points();
  Complex sum = 0.0;
  for (std::size_t l = 0; l < pts.size(); ++l) {
    double dot = 0.0;
    for (std::size_t a = 0; a < t.size(); ++a) dot += t[a] * pts[l][a];
    sum += Complex(std::cos(dot), std::sin(dot));
  }
  return sum / static_cast<double>(pts.size());
}

std::vector<Complex> empirical_cf_tensor(const Sample& sample,
                                         const std::vector<std::vector<double>>& axis_nodes) {
  const std::size_t D = sample.dims();
  if (axis_nodes.size() != D) throw InvalidArgument("one node list per axis is required");
  std::size_t total = 1;
  for (const auto& v : axis_nodes) {
    if (v.empty()) throw InvalidArgument("empty node list");
    total *= v.size();
  }
  const auto& pts = sample.points();
  const std::size_t n = pts.size();
  std::vector<Complex> acc(total, 0.0);
  std::vector<std::vector<Complex>> ex(D);
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t len = std::min(kChunk, n - start);
    for (std::size_t a = 0; a < D; ++a) {
      const auto& nodes = axis_nodes[a];
      ex[a].resize(nodes.size() * len);
      for (std::size_t q = 0; q < nodes.size(); ++q)
        for (std::size_t l = 0; l < len; ++l) {
          const double x = nodes[q] * pts[start + l][a];
          ex[a][q * len + l] = Complex(std::cos(x), std::sin(x));
        }
    }
    parallel_for(total, [&](std::size_t flat) {
      std::size_t rem = flat;
      std::vector<const Complex*> rows(D);
      for (std::size_t a = D; a-- > 0;) {
        const std::size_t q = rem % axis_nodes[a].size();
        rem /= axis_nodes[a].size();
        rows[a] = ex[a].data() + q * len;
      }
      // plain real arithmetic: std::complex products carry NaN handling
      double sr = 0.0, si = 0.0;
      for (std::size_t l = 0; l < len; ++l) {
        double vr = rows[0][l].real(), vi = rows[0][l].imag();
        for (std::size_t a = 1; a < D; ++a) {
          const double wr = rows[a][l].real(), wi = rows[a][l].imag();
          const double tr = vr * wr - vi * wi;
          vi = vr * wi + vi * wr;
          vr = tr;
        }
        sr += vr;
        si += vi;
      }
      acc[flat] += Complex(sr, si);
    });
  }
  for (auto& v : acc) v /= static_cast<double>(n);
  return acc;
}

TensorRule contrast_rule(std::size_t dims, double nu, const QuadratureConfig& q) {
  if (!(nu > 0)) throw InvalidArgument("nu must be positive");
  if (q.order < 1 || q.panels < 1) throw InvalidArgument("quadrature order and panels must be positive");
  return TensorRule(composite_gauss_legendre(q.panels, q.order, -nu, nu), dims);
}

ContrastProblem::ContrastProblem(const Sample& sample, double nu, const TensorRule& quad,
                                 int degree)
    : dims_(sample.dims()), degree_(degree), indices_(enumerate_multi_indices(sample.dims(), degree)) {
  if (quad.dims() != dims_) throw InvalidArgument("quadrature dimension does not match the sample");
  const auto& ax = quad.axis();
  double total = 0.0, lo = INFINITY, hi = -INFINITY;
  for (std::size_t q = 0; q < ax.size(); ++q) {
    total += ax.weights[q];
    lo = std::min(lo, ax.nodes[q]);
    hi = std::max(hi, ax.nodes[q]);
  }
  if (std::abs(total - 2.0 * nu) > 1e-10 * std::max(1.0, nu) || lo < -nu * (1 + 1e-12) ||
      hi > nu * (1 + 1e-12))
    throw InvalidArgument("quadrature grid does not cover the contrast domain");

  const std::size_t d1 = sample.d1();
  const std::size_t P = indices_.size();
  const std::size_t K = quad.size();
  phase_.resize(P);
  for (std::size_t i = 0; i < P; ++i) phase_[i] = phase_of(indices_[i].total_degree());

  std::vector<std::vector<double>> full(dims_, ax.nodes), block1(dims_), block2(dims_);
  for (std::size_t a = 0; a < dims_; ++a) {
    block1[a] = a < d1 ? ax.nodes : std::vector<double>{0.0};
    block2[a] = a < d1 ? std::vector<double>{0.0} : ax.nodes;
  }
  b_ = empirical_cf_tensor(sample, full);
  const auto e1 = empirical_cf_tensor(sample, block1);
  const auto e2 = empirical_cf_tensor(sample, block2);
  const std::size_t n2 = e2.size();

  weights_.resize(K);
  a_.resize(K);
  mono_.resize(K * P);
  mono1_.resize(K * P);
  mono2_.resize(K * P);
  std::vector<double> t, pw;
  for (std::size_t k = 0; k < K; ++k) {
    weights_[k] = quad.weight(k);
    a_[k] = e1[k / n2] * e2[k % n2];
    quad.node(k, t);
    monomials(indices_, t, degree, pw, mono_.data() + k * P);
    for (std::size_t i = 0; i < P; ++i) {
      bool only1 = true, only2 = true;
      for (std::size_t a = 0; a < dims_; ++a) {
        if (indices_[i][a] == 0) continue;
        if (a < d1) only2 = false;
        else only1 = false;
      }
      // t^i restricted to one block; the other block's coordinates are zero
      double m1 = only1 ? 1.0 : 0.0, m2 = only2 ? 1.0 : 0.0;
      for (std::size_t a = 0; a < dims_; ++a) {
        const double p = std::pow(t[a], indices_[i][a]);
        if (a < d1) m1 *= p;
        else m2 *= p;
      }
      mono1_[k * P + i] = m1;
      mono2_[k * P + i] = m2;
    }
  }
}

void ContrastProblem::residuals(const std::vector<double>& r, std::vector<Complex>& res,
                                std::vector<Complex>* jacobian) const {
  const std::size_t P = indices_.size();
  const std::size_t K = weights_.size();
  if (r.size() != P) throw InvalidArgument("parameter count does not match the problem");
  Eigen::VectorXd cr(P), ci(P);
  for (std::size_t i = 0; i < P; ++i) {
    cr[i] = phase_[i].real() * r[i];
    ci[i] = phase_[i].imag() * r[i];
  }
  Eigen::Map<const RowMatrix> M(mono_.data(), K, P), M1(mono1_.data(), K, P),
      M2(mono2_.data(), K, P);
  const Eigen::VectorXd fr = M * cr, fi = M * ci;
  const Eigen::VectorXd f1r = M1 * cr, f1i = M1 * ci;
  const Eigen::VectorXd f2r = M2 * cr, f2i = M2 * ci;
  res.resize(K);
  std::vector<Complex> phi1(K), phi2(K);
  for (std::size_t k = 0; k < K; ++k) {
    const Complex phi(fr[k], fi[k]);
    phi1[k] = Complex(f1r[k], f1i[k]);
    phi2[k] = Complex(f2r[k], f2i[k]);
    res[k] = phi * a_[k] - b_[k] * phi1[k] * phi2[k];
  }
  if (!jacobian) return;
  jacobian->resize(K * P);
  for (std::size_t k = 0; k < K; ++k) {
    const Complex u = b_[k] * phi2[k], v = b_[k] * phi1[k];
    const double* m = mono_.data() + k * P;
    const double* m1 = mono1_.data() + k * P;
    const double* m2 = mono2_.data() + k * P;
    Complex* row = jacobian->data() + k * P;
    for (std::size_t i = 0; i < P; ++i) row[i] = phase_[i] * (m[i] * a_[k] - m1[i] * u - m2[i] * v);
  }
}

double ContrastProblem::value(const std::vector<double>& r) const {
  std::vector<Complex> res;
  residuals(r, res, nullptr);
  double s = 0.0;
  for (std::size_t k = 0; k < res.size(); ++k) s += weights_[k] * std::norm(res[k]);
  return s;
}

std::vector<double> ContrastProblem::least_squares_fit() const {
  // Linear in r: column-scaled least squares by pivoted QR, since the
  // monomial basis is badly conditioned at high degree.
  const std::size_t P = indices_.size();
  const std::size_t K = weights_.size();
  const auto Pe = static_cast<Eigen::Index>(P - 1);
  const auto Ke = static_cast<Eigen::Index>(K);
  Eigen::MatrixXd X(2 * Ke, Pe);
  Eigen::VectorXd y(2 * Ke);
  for (std::size_t k = 0; k < K; ++k) {
    const double sw = std::sqrt(weights_[k]);
    const Complex target = (b_[k] - mono_[k * P]) * sw;
    const auto row = static_cast<Eigen::Index>(k);
    y[row] = target.real();
    y[Ke + row] = target.imag();
    for (std::size_t i = 1; i < P; ++i) {
      const Complex x = phase_[i] * (mono_[k * P + i] * sw);
      X(row, static_cast<Eigen::Index>(i - 1)) = x.real();
      X(Ke + row, static_cast<Eigen::Index>(i - 1)) = x.imag();
    }
  }
  Eigen::VectorXd scale(Pe);
  for (Eigen::Index i = 0; i < Pe; ++i) {
    const double nrm = X.col(i).norm();
    scale[i] = nrm > 0 ? 1.0 / nrm : 1.0;
  }
  X = X * scale.asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-13);
  const Eigen::VectorXd z = qr.solve(y);
  std::vector<double> r(P, 0.0);
  r[0] = 1.0;
  for (Eigen::Index i = 0; i < Pe; ++i) r[i + 1] = scale[i] * z[i];
  return r;
}

int default_degree(std::size_t n) {
  if (n < 16) throw InvalidArgument("default degree needs n >= 16");
  const double ln = std::log(static_cast<double>(n));
  return static_cast<int>(std::ceil(4.0 * ln / std::log(ln)));
}

CfEstimate estimate_cf(const Sample& sample, const ClassParams& params, int m,
                       const OptimizerConfig& cfg) {
  params.validate();
  if (m < 1) throw InvalidArgument("degree m must be at least 1");
  if (sample.size() < 2) throw InvalidArgument("estimate_cf needs at least two observations");
  if (cfg.starts < 1) throw InvalidArgument("at least one optimizer start is required");

  const TensorRule quad = contrast_rule(sample.dims(), params.nu_est, cfg.quadrature);
  const ContrastProblem problem(sample, params.nu_est, quad, m);
  const std::size_t P = problem.parameter_count();
  const double tol = cfg.tol < 0 ? 1.0 / static_cast<double>(sample.size()) : cfg.tol;

  const TruncatedAnalytic shape(sample.dims(), m);
  std::vector<double> lo(P), hi(P);
  for (std::size_t i = 0; i < P; ++i) {
    const double b = params.bound(shape.indices()[i].total_degree());
    lo[i] = -b;
    hi[i] = b;
  }
  std::vector<double> fit = problem.least_squares_fit();
  for (std::size_t i = 1; i < P; ++i) fit[i] = std::clamp(fit[i], lo[i], hi[i]);

  ResidualFn fn = [&problem](const std::vector<double>& r, std::vector<Complex>& res,
                             std::vector<Complex>* jac) { problem.residuals(r, res, jac); };

  std::vector<LmResult> runs(cfg.starts);
  parallel_for(cfg.starts, [&](std::size_t s) {
    std::vector<double> start(P, 0.0);
    start[0] = 1.0;
    if (s == 0) {
      start = fit;
    } else if (s >= 2) {
      Rng rng(derive_seed({cfg.seed, 0x63660000ULL, s}));
      start = fit;
      for (std::size_t i = 1; i < P; ++i)
        start[i] = std::clamp(fit[i] * (1.0 + cfg.perturbation * (2.0 * uniform01(rng) - 1.0)), lo[i], hi[i]);
    }
    runs[s] = projected_lm(fn, problem.weights(), start, lo, hi, cfg.max_iter, tol);
  });

  CfEstimate out;
  for (std::size_t s = 0; s < runs.size(); ++s) {
    out.start_contrasts.push_back(runs[s].value);
    if (s == 0 || runs[s].value < runs[out.best_start].value) out.best_start = s;
  }
  const LmResult& best = runs[out.best_start];
  out.phi = TruncatedAnalytic::from_parameters(sample.dims(), m, best.r);
  out.contrast = best.value;
  out.history = best.history;
  out.boundary_coefficients = boundary_count(out.phi, params);
  return out;
}

double c_nu(const std::function<Complex(std::span<const double>)>& block1_cf,
            const std::function<Complex(std::span<const double>)>& block2_cf, std::size_t d1,
            std::size_t d2, double nu, std::size_t points) {
  if (!(nu > 0)) throw InvalidArgument("nu must be positive");
  if (points < 2) throw InvalidArgument("c_nu needs at least two grid points per axis");
  double best = INFINITY;
  for (auto [cf, d] : {std::pair{&block1_cf, d1}, std::pair{&block2_cf, d2}}) {
    const GridSpec g = GridSpec::cube(d, -nu, nu, points);
    for (std::size_t f = 0; f < g.total(); ++f) best = std::min(best, std::abs((*cf)(g.point(f))));
  }
  return best;
}

double grid_l2_distance(const TensorRule& quad, const std::vector<Complex>& a,
                        const std::vector<Complex>& b) {
  if (a.size() != quad.size() || b.size() != quad.size())
    throw InvalidArgument("values must be given at every quadrature node");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += quad.weight(k) * std::norm(a[k] - b[k]);
  return std::sqrt(s);
}

double contrast_mn(const TruncatedAnalytic& phi, const Sample& sample, double nu_est,
                   const TensorRule& quad) {
  const ContrastProblem problem(sample, nu_est, quad, phi.degree());
  return problem.value(phi.parameters());
}

}  // namespace blinddeconv
