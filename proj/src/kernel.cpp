#include "blinddeconv/kernel.hpp"

#include <gsl/gsl_sf_bessel.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "blinddeconv/quadrature.hpp"

namespace blinddeconv {

namespace {

constexpr double kPi = std::numbers::pi;

// Radial quadrature used for every integral of the profile over R^D.
Rule1D radial_rule(double r_cut) {
  const auto panels = static_cast<std::size_t>(std::ceil(r_cut / 0.5));
  return composite_gauss_legendre(std::max<std::size_t>(panels, 4), 8, 0.0, r_cut);
}

double interpolate(const std::vector<double>& x, const std::vector<double>& y, std::size_t k,
                   double at) {
  const double x0 = x[k], x1 = x[k + 1];
  const double w = (at - x0) / (x1 - x0);
  return (1.0 - w) * y[k] + w * y[k + 1];
}

}  // namespace

double bump_u(double A, double y) {
  if (!(A > 0)) throw InvalidArgument("bump shape A must be positive");
  if (std::abs(y) >= 0.5) return 0.0;
  return std::exp(-std::pow(1.0 - 2.0 * y, -A) - std::pow(1.0 + 2.0 * y, -A));
}

double self_convolve_u_at(double A, double t, std::size_t nodes) {
  t = std::abs(t);
  if (t >= 1.0) return 0.0;
  const double lo = t - 0.5;
  const double hi = 0.5;
  const double step = (hi - lo) / static_cast<double>(nodes);
  double sum = 0.0;
  // endpoints contribute zero
  for (std::size_t k = 1; k < nodes; ++k) {
    const double s = lo + step * static_cast<double>(k);
    sum += bump_u(A, s) * bump_u(A, t - s);
  }
  return sum * step;
}

std::vector<double> self_convolve_u(double A, const GridSpec& grid) {
  if (grid.dims() != 1) throw InvalidArgument("self-convolution grid must be one-dimensional");
  if (grid.lower[0] > -1.0 || grid.upper[0] < 1.0)
    throw InvalidArgument("self-convolution grid must cover [-1, 1]");
  std::vector<double> out(grid.count[0]);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = self_convolve_u_at(A, grid.node(0, k));
  return out;
}

double inverse_fourier_u(double A, double r, std::size_t nodes) {
  const double step = 0.5 / static_cast<double>(nodes);
  double sum = 0.5 * bump_u(A, 0.0);
  for (std::size_t k = 1; k < nodes; ++k) {
    const double y = step * static_cast<double>(k);
    sum += std::cos(r * y) * bump_u(A, y);
  }
  // (1/2pi) * 2 * ∫_0^{1/2}
  return sum * step / kPi;
}

double unit_sphere_area(std::size_t dims) {
  switch (dims) {
    case 1: return 2.0;
    case 2: return 2.0 * kPi;
    case 3: return 4.0 * kPi;
    default: throw InvalidArgument("kernel dimension must be 1, 2 or 3");
  }
}

double radial_fourier(std::size_t dims, std::span<const double> r_nodes,
                      std::span<const double> r_weights, std::span<const double> f_values,
                      double rho) {
  double sum = 0.0;
  for (std::size_t k = 0; k < r_nodes.size(); ++k) {
    const double r = r_nodes[k];
    const double x = rho * r;
    double radial = 0.0;
    switch (dims) {
      case 1: radial = std::cos(x); break;
      case 2: radial = gsl_sf_bessel_J0(x) * r; break;
      case 3: radial = (x == 0.0 ? 1.0 : std::sin(x) / x) * r * r; break;
      default: throw InvalidArgument("kernel dimension must be 1, 2 or 3");
    }
    sum += r_weights[k] * f_values[k] * radial;
  }
  return unit_sphere_area(dims) * sum;
}

RadialKernel RadialKernel::build(double A, std::size_t dims, const KernelOptions& opts) {
  if (!(A > 0)) throw InvalidArgument("bump shape A must be positive");
  if (dims < 1 || dims > 3) throw InvalidArgument("kernel dimension must be 1, 2 or 3");
  if (opts.radius_nodes < 16 || opts.fourier_nodes < 16)
    throw InvalidArgument("kernel tables need at least 16 nodes");

  RadialKernel k;
  k.A_ = A;
  k.dims_ = dims;
  k.margin_ = opts.margin;

  // Unnormalized profile F^{-1}[u*u](r) = 2pi (F^{-1}u(r))^2, with the
  // trapezoid weights of inverse_fourier_u folded into the bump samples.
  constexpr std::size_t trap = 2000;
  const double step = 0.5 / static_cast<double>(trap);
  std::vector<double> bump(trap);
  for (std::size_t i = 0; i < trap; ++i)
    bump[i] = bump_u(A, step * static_cast<double>(i)) * (i == 0 ? 0.5 : 1.0);
  auto raw = [&bump, step](double r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < bump.size(); ++i)
      sum += std::cos(r * step * static_cast<double>(i)) * bump[i];
    const double v = sum * step / kPi;
    return 2.0 * kPi * v * v;
  };

  const double peak = raw(0.0);
  double last_above = 0.0;
  const auto steps = static_cast<std::size_t>(std::ceil(opts.max_radius / opts.scan_step));
  for (std::size_t s = 1; s <= steps; ++s) {
    const double r = opts.scan_step * static_cast<double>(s);
    if (raw(r) >= opts.tol * peak) last_above = r;
  }
  if (last_above + 2.0 * opts.scan_step > opts.max_radius)
    throw NumericalError("kernel tail truncation failed");
  k.r_cut_ = last_above + opts.scan_step;

  // Uniform radius table.
  const std::size_t n = opts.radius_nodes;
  k.radii_.resize(n);
  std::vector<double> raw_values(n);
  for (std::size_t i = 0; i < n; ++i) {
    k.radii_[i] = k.r_cut_ * static_cast<double>(i) / static_cast<double>(n - 1);
    raw_values[i] = raw(k.radii_[i]);
  }

  // I(A) from Gauss-Legendre quadrature of the exact profile.
  const auto D = static_cast<double>(dims);
  const double area = unit_sphere_area(dims);
  const Rule1D rule = radial_rule(k.r_cut_);
  std::vector<double> f(rule.size());
  double integral = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    f[i] = raw(rule.nodes[i]);
    integral += rule.weights[i] * f[i] * std::pow(rule.nodes[i], D - 1);
  }
  integral *= area;
  if (!(integral > 0)) throw NumericalError("kernel normalization is not positive");
  k.normalization_ = 1.0 / integral;
  k.values_.resize(n);
  for (std::size_t i = 0; i < n; ++i) k.values_[i] = k.normalization_ * raw_values[i];
  for (double& v : f) v *= k.normalization_;

  const double rho_max = 1.0 + opts.margin;
  k.rho_.resize(opts.fourier_nodes);
  k.fourier_values_.resize(opts.fourier_nodes);
  for (std::size_t i = 0; i < opts.fourier_nodes; ++i) {
    const double rho = rho_max * static_cast<double>(i) / static_cast<double>(opts.fourier_nodes - 1);
    k.rho_[i] = rho;
    k.fourier_values_[i] = radial_fourier(dims, rule.nodes, rule.weights, f, rho);
  }
  const double f0 = k.fourier_values_[0];
  double outside = 0.0;
  for (int i = 0; i <= 50; ++i) {
    const double rho = rho_max + (2.0 - rho_max) * i / 50.0;
    outside = std::max(outside, std::abs(radial_fourier(dims, rule.nodes, rule.weights, f, rho)));
  }
  k.out_of_ball_ratio_ = outside / f0;

  double l2 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double r = rule.nodes[i];
    const double jac = std::pow(r, D - 1);
    l2 += rule.weights[i] * f[i] * f[i] * jac;
    m2 += rule.weights[i] * f[i] * r * r * jac;
  }
  k.l2_norm_ = std::sqrt(area * l2);
  k.second_moment_ = area * m2;

  const Rule1D conv_rule = composite_gauss_legendre(64, 8, -1.0, 1.0);
  double conv2 = 0.0;
  for (std::size_t i = 0; i < conv_rule.size(); ++i) {
    const double c = self_convolve_u_at(A, conv_rule.nodes[i]);
    conv2 += conv_rule.weights[i] * c * c;
  }
  k.u_conv_l2_ = std::sqrt(conv2);

  // Property (III): half-peak radius and the minimum inside it.
  const double half = 0.5 * k.values_[0];
  std::size_t j = 1;
  while (j < n && k.values_[j] > half) ++j;
  if (j == n) throw NumericalError("kernel profile never drops to half its peak");
  const double v0 = k.values_[j - 1], v1 = k.values_[j];
  k.c_A_ = k.radii_[j - 1] + (v0 - half) / (v0 - v1) * (k.radii_[j] - k.radii_[j - 1]);
  k.d_A_ = half;
  for (std::size_t i = 0; i < j; ++i) k.d_A_ = std::min(k.d_A_, k.values_[i]);

  // Property (V): regress the log upper envelope on r^{A/(A+1)} over the tail.
  const double expo = A / (A + 1.0);
  std::vector<double> env(n);
  double run = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    run = std::max(run, k.values_[i]);
    env[i] = run;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t cnt = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (k.radii_[i] < 0.25 * k.r_cut_ || !(env[i] > 0)) continue;
    const double x = std::pow(k.radii_[i], expo);
    const double y = std::log(env[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
    ++cnt;
  }
  if (cnt < 2) throw NumericalError("not enough tail nodes to fit the decay exponent");
  const double cn = static_cast<double>(cnt);
  k.beta_A_ = -(cn * sxy - sx * sy) / (cn * sxx - sx * sx);
  return k;
}

double RadialKernel::profile(double r) const {
  r = std::abs(r);
  if (r >= r_cut_) return 0.0;
  const std::size_t n = radii_.size();
  const double s = r / r_cut_ * static_cast<double>(n - 1);
  const std::size_t k = std::min(static_cast<std::size_t>(s), n - 2);
  return interpolate(radii_, values_, k, r);
}

double RadialKernel::fourier(double rho) const {
  rho = std::abs(rho);
  const double rho_max = rho_.back();
  if (rho >= rho_max) return 0.0;
  const std::size_t n = rho_.size();
  const double s = rho / rho_max * static_cast<double>(n - 1);
  const std::size_t k = std::min(static_cast<std::size_t>(s), n - 2);
  return interpolate(rho_, fourier_values_, k, rho);
}

double RadialKernel::eval_psi(double h, std::span<const double> x) const {
  if (!(h > 0)) throw InvalidArgument("bandwidth must be positive");
  if (x.size() != dims_) throw InvalidArgument("point dimension does not match the kernel");
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  return profile(std::sqrt(r2) / h) / std::pow(h, static_cast<double>(dims_));
}

double RadialKernel::eval_fourier_psi(std::span<const double> t) const {
  double r2 = 0.0;
  for (double v : t) r2 += v * v;
  return fourier(std::sqrt(r2));
}

}  // namespace blinddeconv
