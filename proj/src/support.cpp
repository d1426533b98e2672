#include "blinddeconv/support.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "blinddeconv/parallel.hpp"
#include "blinddeconv/quadrature.hpp"

namespace blinddeconv {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// new[o, n, i] = sum_m e[n * mid + m] * t[o, m, i]
std::vector<Complex> contract_axis(const std::vector<Complex>& t, std::vector<std::size_t>& shape,
                                   std::size_t axis, const std::vector<Complex>& e,
                                   std::size_t rows) {
  std::size_t outer = 1, inner = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];
  for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
  const std::size_t mid = shape[axis];
  std::vector<Complex> out(outer * rows * inner);
  parallel_for(outer * rows, [&](std::size_t on) {
    const std::size_t o = on / rows, n = on % rows;
    Complex* dst = out.data() + (o * rows + n) * inner;
    for (std::size_t m = 0; m < mid; ++m) {
      const Complex f = e[n * mid + m];
      if (f == Complex(0.0)) continue;
      const Complex* src = t.data() + (o * mid + m) * inner;
      for (std::size_t i = 0; i < inner; ++i) dst[i] += f * src[i];
    }
  });
  shape[axis] = rows;
  return out;
}

}  // namespace

void SupportParams::validate(std::size_t dims) const {
  if (!(kappa > 0.5 && kappa <= 1.0)) throw InvalidArgument("kappa must lie in (1/2, 1]");
  if (!(A > 0)) throw InvalidArgument("kernel shape A must be positive");
  if (!(ell > 0 && ell < 1)) throw InvalidArgument("ell must lie in (0, 1)");
  if (d < 1 || d > dims) throw InvalidArgument("intrinsic dimension d must satisfy 1 <= d <= D");
  if (!(a_std > 0)) throw InvalidArgument("standardness constant a must be positive");
  if (mode == ScheduleMode::asymptotic && c_h != 0.0 && c_h < std::exp(2.0 * dims + 2.0))
    throw InvalidArgument("c_h must be at least exp(2D + 2)");
  if (m && *m < 1) throw InvalidArgument("m must be at least 1");
  if (m_fit && *m_fit < 1) throw InvalidArgument("m_fit must be at least 1");
  if (h && !(*h > 0)) throw InvalidArgument("bandwidth h must be positive");
  if (!(h_rel > 0)) throw InvalidArgument("h_rel must be positive");
  if (h_reference_n && *h_reference_n < 16) throw InvalidArgument("h_reference_n must be at least 16");
  if (lambda && !(*lambda > 0)) throw InvalidArgument("threshold lambda must be positive");
  if (!(lambda_rel > 0 && lambda_rel < 1)) throw InvalidArgument("lambda_rel must lie in (0, 1)");
  if (nu_factor < 0) throw InvalidArgument("nu_factor must be non-negative");
  if (grid_points < 2) throw InvalidArgument("evaluation grid needs at least two points per axis");
  if (ghat_order < 2) throw InvalidArgument("ghat quadrature order must be at least 2");
  if (eval_grid && eval_grid->dims() != dims)
    throw InvalidArgument("evaluation grid dimension does not match the sample");
}

double SupportParams::c_h_value(std::size_t dims) const {
  return c_h == 0.0 ? std::exp(2.0 * static_cast<double>(dims) + 2.0) : c_h;
}

int schedule_m_kappa(std::size_t n, double kappa) {
  if (n < 16) throw InvalidArgument("schedule needs n >= 16");
  const double ln = std::log(static_cast<double>(n));
  return static_cast<int>(std::floor(ln / (4.0 * kappa * std::log(ln))));
}

Schedule schedule(std::size_t n, const SupportParams& p, double S, std::size_t dims,
                  const RadialKernel& kernel, double data_scale) {
  if (!(S > 0)) throw InvalidArgument("S must be positive");
  Schedule s;
  s.m_kappa = schedule_m_kappa(n, p.kappa);
  if (s.m_kappa < 1) throw InvalidArgument("n too small for schedule");
  s.h = p.c_h_value(dims) * S * std::pow(static_cast<double>(s.m_kappa), -p.kappa);
  if (p.d < dims)
    s.lambda = std::pow(1.0 / s.h, p.ell);
  else
    s.lambda = 0.25 * p.a_std * std::pow(kernel.c_A(), static_cast<double>(dims)) * kernel.d_A();
  s.h_exceeds_scale = s.h > data_scale;
  return s;
}

GhatEvaluator::GhatEvaluator(const CfFunction& cf, const RadialKernel& kernel, double h,
                             std::size_t order)
    : dims_(kernel.dims()), h_(h) {
  if (!(h > 0)) throw InvalidArgument("bandwidth h must be positive");
  const Rule1D rule = gauss_legendre(order, -1.0 / h, 1.0 / h);
  axis_nodes_ = rule.nodes;
  const TensorRule quad(rule, dims_);
  coef_.assign(quad.size(), Complex(0.0));
  cf_values_.assign(quad.size(), Complex(0.0));
  ball_weights_.assign(quad.size(), 0.0);
  const double norm = std::pow(kTwoPi, -static_cast<double>(dims_));
  // Indices are written in place, so the cf callback runs serially.
  std::vector<double> t;
  for (std::size_t k = 0; k < quad.size(); ++k) {
    quad.node(k, t);
    double r2 = 0.0;
    for (double v : t) r2 += v * v;
    const double rho = h * std::sqrt(r2);
    if (rho >= 1.0) continue;
    ball_weights_[k] = quad.weight(k);
    cf_values_[k] = cf(t);
    coef_[k] = norm * quad.weight(k) * kernel.fourier(rho) * cf_values_[k];
  }
}

std::vector<double> GhatEvaluator::node(std::size_t flat) const {
  const std::size_t Q = axis_nodes_.size();
  std::vector<double> t(dims_);
  for (std::size_t a = dims_; a-- > 0;) {
    t[a] = axis_nodes_[flat % Q];
    flat /= Q;
  }
  return t;
}

Complex GhatEvaluator::complex_at(std::span<const double> y) const {
  if (y.size() != dims_) throw InvalidArgument("point dimension does not match the kernel");
  std::vector<Complex> t = coef_;
  std::vector<std::size_t> shape(dims_, axis_nodes_.size());
  const std::size_t Q = axis_nodes_.size();
  for (std::size_t a = 0; a < dims_; ++a) {
    std::vector<Complex> e(Q);
    for (std::size_t m = 0; m < Q; ++m) e[m] = std::polar(1.0, -axis_nodes_[m] * y[a]);
    t = contract_axis(t, shape, a, e, 1);
  }
  return t[0];
}

double GhatEvaluator::at(std::span<const double> y) const { return complex_at(y).real(); }

std::vector<double> GhatEvaluator::on_grid(const GridSpec& grid, double* max_imag) const {
  if (grid.dims() != dims_) throw InvalidArgument("grid dimension does not match the kernel");
  const std::size_t Q = axis_nodes_.size();
  std::vector<Complex> t = coef_;
  std::vector<std::size_t> shape(dims_, Q);
  for (std::size_t a = 0; a < dims_; ++a) {
    const std::size_t N = grid.count[a];
    std::vector<Complex> e(N * Q);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t m = 0; m < Q; ++m)
        e[n * Q + m] = std::polar(1.0, -axis_nodes_[m] * grid.node(a, n));
    t = contract_axis(t, shape, a, e, N);
  }
  std::vector<double> out(t.size());
  double imag = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    out[i] = t[i].real();
    imag = std::max(imag, std::abs(t[i].imag()));
  }
  if (max_imag) *max_imag = imag;
  return out;
}

double GhatEvaluator::l2_gap(const CfFunction& other) const {
  double s = 0.0;
  for (std::size_t k = 0; k < ball_weights_.size(); ++k) {
    if (ball_weights_[k] == 0.0) continue;
    s += ball_weights_[k] * std::norm(cf_values_[k] - other(node(k)));
  }
  return std::sqrt(s);
}

double ghat(const TruncatedAnalytic& phi_hat, const RadialKernel& kernel, double h, int m_kappa,
            std::span<const double> y, std::size_t order) {
  const TruncatedAnalytic t = truncate(phi_hat, m_kappa);
  const GhatEvaluator g([&t](std::span<const double> s) { return t.at(s); }, kernel, h, order);
  return g.at(y);
}

double gbar_oracle(const DiscreteMeasure& g, const RadialKernel& kernel, double h,
                   std::span<const double> y) {
  if (g.support.dims() != y.size()) throw InvalidArgument("point dimension does not match G");
  std::vector<double> diff(y.size());
  double s = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (g.weights[j] == 0.0) continue;
    for (std::size_t a = 0; a < y.size(); ++a) diff[a] = y[a] - g.support[j][a];
    s += g.weights[j] * kernel.eval_psi(h, diff);
  }
  return s;
}

std::vector<double> gbar_on_grid(const DiscreteMeasure& g, const RadialKernel& kernel, double h,
                                 const GridSpec& grid) {
  std::vector<double> out(grid.total());
  parallel_for(out.size(), [&](std::size_t f) { out[f] = gbar_oracle(g, kernel, h, grid.point(f)); });
  return out;
}

double practical_bandwidth(double h, std::size_t n, const SupportParams& params) {
  if (!params.h_reference_n) return h;
  if (n < 16) throw InvalidArgument("n too small for the bandwidth rule");
  const auto r = [](double m) { return std::log(std::log(m)) / std::log(m); };
  return h * std::pow(r(double(n)) / r(double(*params.h_reference_n)), params.kappa);
}

PointSet level_set(const GridSpec& grid, const std::vector<double>& values, double lambda) {
  if (values.size() != grid.total()) throw InvalidArgument("one value per grid node is required");
  PointSet cells(grid.dims());
  for (std::size_t f = 0; f < values.size(); ++f)
    if (values[f] > lambda) cells.push_back(grid.point(f));
  return cells;
}

SupportEstimate support_from_cf(const CfEstimate& cf, const Sample& sample,
                                const SupportParams& params, const RadialKernel& kernel,
                                const Schedule& sched) {
  const std::size_t D = sample.dims();
  if (kernel.dims() != D) throw InvalidArgument("kernel dimension does not match the sample");
  SupportEstimate est;
  est.cf = cf;
  est.h = sched.h;
  est.m_kappa = std::min(sched.m_kappa, cf.phi.degree());
  est.grid = params.eval_grid ? *params.eval_grid
                              : GridSpec::bounding(sample.points(), params.grid_inflate,
                                                   params.grid_points);
  const TruncatedAnalytic t = truncate(cf.phi, est.m_kappa);
  const GhatEvaluator g([&t](std::span<const double> s) { return t.at(s); }, kernel, sched.h,
                        params.ghat_order);
  est.ghat_values = g.on_grid(est.grid, &est.max_imag);
  est.max_ghat = *std::max_element(est.ghat_values.begin(), est.ghat_values.end());
  est.lambda = sched.lambda > 0 ? sched.lambda : params.lambda_rel * est.max_ghat;
  if (!(est.lambda > 0)) {
    est.lambda = std::max(est.lambda, 0.0);
    est.warnings.push_back("non-positive threshold: ghat has no positive values on the grid");
  }
  est.cells = level_set(est.grid, est.ghat_values, est.lambda);
  if (est.cells.empty()) est.warnings.push_back("empty level set");
  return est;
}

SupportEstimate estimate_support(const Sample& sample, const SupportParams& params,
                                 const ClassParams& cls, const RadialKernel& kernel,
                                 const OptimizerConfig& opt) {
  const std::size_t D = sample.dims();
  params.validate(D);
  cls.validate();
  const std::size_t n = sample.size();
  const double scale = bbox_diagonal(sample.points());
  std::vector<std::string> warnings;

  Schedule sched;
  if (params.mode == ScheduleMode::asymptotic) {
    sched = schedule(n, params, cls.S, D, kernel, scale);
    if (sched.h_exceeds_scale) {
      if (!params.rescale_oversized_h) throw InvalidArgument("bandwidth exceeds data scale");
      std::ostringstream msg;
      msg << "bandwidth " << sched.h << " exceeds data scale " << scale << "; using h_rel rule";
      warnings.push_back(msg.str());
      sched.h = params.h_rel * scale;
    }
  } else {
    sched.h = practical_bandwidth(params.h.value_or(params.h_rel * scale), n, params);
    sched.lambda = params.lambda.value_or(0.0);
  }
  if (!(sched.h > 0)) throw InvalidArgument("bandwidth h must be positive");

  const int m_fit = params.m_fit.value_or(default_degree(n));
  if (params.mode == ScheduleMode::practical) sched.m_kappa = params.m.value_or(m_fit);
  if (sched.m_kappa > m_fit)
    warnings.push_back("m_kappa exceeds the fitted degree; truncation has no effect");

  ClassParams fit_cls = cls;
  if (params.nu_factor > 0) fit_cls.nu_est = params.nu_factor / sched.h;
  const CfEstimate cf = estimate_cf(sample, fit_cls, m_fit, opt);
  SupportEstimate est = support_from_cf(cf, sample, params, kernel, sched);
  est.nu_est = fit_cls.nu_est;
  warnings.insert(warnings.end(), est.warnings.begin(), est.warnings.end());
  est.warnings = std::move(warnings);
  return est;
}

GammaReport gamma_bound(const TruncatedAnalytic& phi_hat, const GhatEvaluator::CfFunction& true_cf,
                        const RadialKernel& kernel, double h, int m_kappa, const GridSpec& grid,
                        std::size_t order) {
  const TruncatedAnalytic t = truncate(phi_hat, m_kappa);
  const GhatEvaluator::CfFunction est_cf = [&t](std::span<const double> s) { return t.at(s); };
  const GhatEvaluator ghat_est(est_cf, kernel, h, order);
  const GhatEvaluator ghat_true(true_cf, kernel, h, order);
  const std::vector<double> a = ghat_est.on_grid(grid);
  const std::vector<double> b = ghat_true.on_grid(grid);
  GammaReport r;
  for (std::size_t i = 0; i < a.size(); ++i) r.measured = std::max(r.measured, std::abs(a[i] - b[i]));
  r.cf_gap = ghat_est.l2_gap(true_cf);
  const double D = static_cast<double>(kernel.dims());
  const double hpow = std::pow(h, -D / 2.0);
  r.sharp_bound = std::pow(kTwoPi, -D / 2.0) * kernel.l2_norm() * hpow * r.cf_gap;
  r.kernel_bound = kernel.normalization() * kernel.u_conv_l2() * hpow * r.cf_gap;
  return r;
}

std::string support_to_json(const SupportEstimate& est) {
  nlohmann::json j;
  j["h"] = est.h;
  j["m_kappa"] = est.m_kappa;
  j["lambda"] = est.lambda;
  j["max_ghat"] = est.max_ghat;
  j["max_imag"] = est.max_imag;
  j["nu_est"] = est.nu_est;
  j["contrast"] = est.cf.contrast;
  j["best_start"] = est.cf.best_start;
  j["boundary_coefficients"] = est.cf.boundary_coefficients;
  j["grid"] = {{"lower", est.grid.lower}, {"upper", est.grid.upper}, {"count", est.grid.count}};
  j["warnings"] = est.warnings;
  nlohmann::json cells = nlohmann::json::array();
  for (std::size_t i = 0; i < est.cells.size(); ++i) {
    const auto p = est.cells[i];
    cells.push_back(std::vector<double>(p.begin(), p.end()));
  }
  j["cells"] = std::move(cells);
  return j.dump(2);
}

std::string support_to_csv(const SupportEstimate& est) {
  std::ostringstream out;
  out.precision(17);
  const std::size_t D = est.cells.dims();
  for (std::size_t a = 0; a < D; ++a) out << (a ? "," : "") << "x" << a + 1;
  out << "\n";
  for (std::size_t i = 0; i < est.cells.size(); ++i) {
    for (std::size_t a = 0; a < D; ++a) out << (a ? "," : "") << est.cells[i][a];
    out << "\n";
  }
  return out.str();
}

}  // namespace blinddeconv
