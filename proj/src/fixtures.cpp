#include "blinddeconv/fixtures.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "blinddeconv/kernel.hpp"
#include "blinddeconv/quadrature.hpp"

namespace blinddeconv {

namespace {

constexpr double kPi = std::numbers::pi;

// (1 + cos u) / (pi^2 - u^2)^2 written without the removable singularity at |u| = pi.
double q_raw(double u) {
  const double a = std::abs(u);
  const double w = 0.5 * (kPi - a);
  const double s = std::abs(w) < 1e-8 ? 1.0 - w * w / 6.0 : std::sin(w) / w;
  return 0.5 * s * s / ((kPi + a) * (kPi + a));
}

template <class T, class Key>
const T& cached(Key key) {
  static std::mutex mutex;
  static std::map<Key, std::unique_ptr<T>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[key];
  if (!slot) slot = std::make_unique<T>(key);
  return *slot;
}

void unit_direction(Rng& rng, std::vector<double>& v) {
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v) {
      x = standard_normal(rng);
      norm += x * x;
    }
  } while (norm < 1e-300);
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
}

std::vector<double> wiggly_point(int index, double gamma, double alpha, std::size_t dims,
                                 double u) {
  std::vector<double> x(dims, 0.0);
  const double s2 = (index == 0 ? 1.0 : -1.0) * gamma * std::cos(u / gamma);
  x[0] = alpha * u;
  x[1] = alpha * u + 0.5 * alpha * s2;
  return x;
}

}  // namespace

std::string to_string(SignalKind k) {
  switch (k) {
    case SignalKind::circle: return "circle";
    case SignalKind::sphere: return "sphere";
    case SignalKind::wiggly: return "wiggly";
    case SignalKind::uniform_ball: return "uniform_ball";
    case SignalKind::point_mass: return "point_mass";
  }
  return "?";
}

std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::laplace: return "laplace";
    case NoiseKind::uniform_box: return "uniform_box";
    case NoiseKind::q_density: return "q_density";
    case NoiseKind::none: return "none";
  }
  return "?";
}

SignalKind parse_signal_kind(const std::string& s) {
  for (auto k : {SignalKind::circle, SignalKind::sphere, SignalKind::wiggly,
                 SignalKind::uniform_ball, SignalKind::point_mass})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown signal kind: " + s);
}

NoiseKind parse_noise_kind(const std::string& s) {
  for (auto k : {NoiseKind::gaussian, NoiseKind::laplace, NoiseKind::uniform_box,
                 NoiseKind::q_density, NoiseKind::none})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown noise kind: " + s);
}

void SignalSpec::validate() const {
  if (dims < 2) throw InvalidArgument("signal dimension must be at least 2");
  if (!(radius > 0)) throw InvalidArgument("radius must be positive");
  if (truth_points < 1) throw InvalidArgument("truth_points must be positive");
  switch (kind) {
    case SignalKind::circle:
      if (dims != 2) throw InvalidArgument("circle fixture needs D = 2");
      break;
    case SignalKind::sphere:
      if (dims != 3) throw InvalidArgument("sphere fixture needs D = 3");
      break;
    case SignalKind::uniform_ball:
      if (dims > 3) throw InvalidArgument("uniform_ball fixture needs D <= 3");
      break;
    case SignalKind::wiggly:
      if (!(gamma > 0 && gamma <= 1)) throw InvalidArgument("gamma must lie in (0, 1]");
      if (!(alpha > 0)) throw InvalidArgument("alpha must be positive");
      if (!(delta > 0 && delta < 1)) throw InvalidArgument("delta must lie in (0, 1)");
      if (wiggly_index != 0 && wiggly_index != 1) throw InvalidArgument("wiggly index must be 0 or 1");
      break;
    case SignalKind::point_mass:
      break;
  }
}

void NoiseSpec::validate() const {
  if (kind != NoiseKind::none && !(scale > 0)) throw InvalidArgument("noise scale must be positive");
}

double draw_noise(const NoiseSpec& spec, Rng& rng) {
  switch (spec.kind) {
    case NoiseKind::gaussian: return spec.scale * standard_normal(rng);
    case NoiseKind::laplace: {
      const double u = uniform01(rng) - 0.5;
      const double a = std::max(1.0 - 2.0 * std::abs(u), 1e-300);
      return -spec.scale * (u < 0 ? -1.0 : 1.0) * std::log(a);
    }
    case NoiseKind::uniform_box: return uniform(rng, -spec.scale, spec.scale);
    case NoiseKind::q_density: return cached<QDensity>(spec.scale).sample(rng);
    case NoiseKind::none: return 0.0;
  }
  return 0.0;
}

Complex noise_cf(const NoiseSpec& spec, double t) {
  switch (spec.kind) {
    case NoiseKind::gaussian: return std::exp(-0.5 * spec.scale * spec.scale * t * t);
    case NoiseKind::laplace: return 1.0 / (1.0 + spec.scale * spec.scale * t * t);
    case NoiseKind::uniform_box: {
      const double x = spec.scale * t;
      return x == 0.0 ? 1.0 : std::sin(x) / x;
    }
    case NoiseKind::q_density: return cached<QDensity>(spec.scale).cf(t);
    case NoiseKind::none: return 1.0;
  }
  return 1.0;
}

Complex noise_block_cf(const NoiseSpec& spec, std::span<const double> t) {
  Complex v = 1.0;
  for (double x : t) v *= noise_cf(spec, x);
  return v;
}

PointSet draw_signal(const SignalSpec& spec, std::size_t n, Rng& rng) {
  spec.validate();
  PointSet out(spec.dims);
  out.reserve(n);
  std::vector<double> x(spec.dims);
  for (std::size_t l = 0; l < n; ++l) {
    switch (spec.kind) {
      case SignalKind::circle: {
        const double th = 2.0 * kPi * uniform01(rng);
        x = {spec.radius * std::cos(th), spec.radius * std::sin(th)};
        break;
      }
      case SignalKind::sphere:
        unit_direction(rng, x);
        for (auto& v : x) v *= spec.radius;
        break;
      case SignalKind::uniform_ball: {
        unit_direction(rng, x);
        const double r = spec.radius * std::pow(uniform01(rng), 1.0 / static_cast<double>(spec.dims));
        for (auto& v : x) v *= r;
        break;
      }
      case SignalKind::wiggly: {
        const double u = cached<F1Density>(spec.delta).sample(rng);
        x = wiggly_point(spec.wiggly_index, spec.gamma, spec.alpha, spec.dims, u);
        break;
      }
      case SignalKind::point_mass:
        std::fill(x.begin(), x.end(), 0.0);
        break;
    }
    out.push_back(x);
  }
  return out;
}

PointSet truth_set(const SignalSpec& spec) {
  spec.validate();
  const std::size_t N = spec.truth_points;
  PointSet out(spec.dims);
  switch (spec.kind) {
    case SignalKind::circle:
      for (std::size_t i = 0; i < N; ++i) {
        const double th = 2.0 * kPi * static_cast<double>(i) / static_cast<double>(N);
        out.push_back(std::vector<double>{spec.radius * std::cos(th), spec.radius * std::sin(th)});
      }
      break;
    case SignalKind::sphere: {
      // Fibonacci lattice
      const double golden = kPi * (3.0 - std::sqrt(5.0));
      for (std::size_t i = 0; i < N; ++i) {
        const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(N);
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double th = golden * static_cast<double>(i);
        out.push_back(std::vector<double>{spec.radius * r * std::cos(th),
                                          spec.radius * r * std::sin(th), spec.radius * z});
      }
      break;
    }
    case SignalKind::uniform_ball: {
      const double D = static_cast<double>(spec.dims);
      const double volume_fraction = spec.dims == 2 ? kPi / 4.0 : spec.dims == 3 ? kPi / 6.0 : 1.0;
      const auto per_axis = static_cast<std::size_t>(
          std::ceil(std::pow(static_cast<double>(N) / volume_fraction, 1.0 / D)));
      const GridSpec g = GridSpec::cube(spec.dims, -spec.radius, spec.radius, std::max<std::size_t>(per_axis, 2));
      for (std::size_t f = 0; f < g.total(); ++f) {
        const Point p = g.point(f);
        double r2 = 0.0;
        for (double v : p) r2 += v * v;
        if (r2 <= spec.radius * spec.radius) out.push_back(p);
      }
      break;
    }
    case SignalKind::wiggly:
      return wiggly_curve(spec.wiggly_index, spec.gamma, spec.alpha, spec.dims, -1.0, 1.0, N);
    case SignalKind::point_mass:
      out.push_back(std::vector<double>(spec.dims, 0.0));
      break;
  }
  return out;
}

DiscreteMeasure truth_quadrature(const SignalSpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case SignalKind::circle: {
      PointSet pts = truth_set(spec);
      return DiscreteMeasure::uniform(std::move(pts));
    }
    case SignalKind::sphere: {
      const auto z = gauss_legendre(64, -1.0, 1.0);
      const std::size_t na = 128;
      PointSet pts(3);
      std::vector<double> w;
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double r = std::sqrt(1.0 - z.nodes[i] * z.nodes[i]);
        for (std::size_t j = 0; j < na; ++j) {
          const double th = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(na);
          pts.push_back(std::vector<double>{spec.radius * r * std::cos(th),
                                            spec.radius * r * std::sin(th), spec.radius * z.nodes[i]});
          w.push_back(0.5 * z.weights[i] / static_cast<double>(na));
        }
      }
      return DiscreteMeasure(std::move(pts), std::move(w));
    }
    case SignalKind::uniform_ball: {
      const double D = static_cast<double>(spec.dims);
      const auto radial = gauss_legendre(48, 0.0, spec.radius);
      PointSet pts(spec.dims);
      std::vector<double> w;
      std::vector<std::vector<double>> dirs;
      std::vector<double> dir_w;
      if (spec.dims == 2) {
        for (std::size_t j = 0; j < 128; ++j) {
          const double th = 2.0 * kPi * static_cast<double>(j) / 128.0;
          dirs.push_back({std::cos(th), std::sin(th)});
          dir_w.push_back(1.0 / 128.0);
        }
      } else {
        const auto z = gauss_legendre(32, -1.0, 1.0);
        for (std::size_t i = 0; i < z.size(); ++i) {
          const double r = std::sqrt(1.0 - z.nodes[i] * z.nodes[i]);
          for (std::size_t j = 0; j < 64; ++j) {
            const double th = 2.0 * kPi * static_cast<double>(j) / 64.0;
            dirs.push_back({r * std::cos(th), r * std::sin(th), z.nodes[i]});
            dir_w.push_back(0.5 * z.weights[i] / 64.0);
          }
        }
      }
      for (std::size_t i = 0; i < radial.size(); ++i) {
        const double r = radial.nodes[i];
        const double density = D * std::pow(r, D - 1) / std::pow(spec.radius, D);
        for (std::size_t j = 0; j < dirs.size(); ++j) {
          std::vector<double> p(spec.dims);
          for (std::size_t a = 0; a < spec.dims; ++a) p[a] = r * dirs[j][a];
          pts.push_back(p);
          w.push_back(radial.weights[i] * density * dir_w[j]);
        }
      }
      DiscreteMeasure m(std::move(pts), std::move(w));
      m.normalize();
      return m;
    }
    case SignalKind::wiggly: {
      const auto& f1 = cached<F1Density>(spec.delta);
      const auto rule = composite_gauss_legendre(250, 8, -1.0, 1.0);
      PointSet pts(spec.dims);
      std::vector<double> w;
      for (std::size_t i = 0; i < rule.size(); ++i) {
        pts.push_back(wiggly_point(spec.wiggly_index, spec.gamma, spec.alpha, spec.dims, rule.nodes[i]));
        w.push_back(rule.weights[i] * f1.pdf(rule.nodes[i]));
      }
      DiscreteMeasure m(std::move(pts), std::move(w));
      m.normalize();
      return m;
    }
    case SignalKind::point_mass:
      return DiscreteMeasure::dirac(std::vector<double>(spec.dims, 0.0));
  }
  throw InvalidArgument("unknown signal kind");
}

Complex signal_cf(const DiscreteMeasure& truth_quad, std::span<const double> t) {
  Complex s = 0.0;
  for (std::size_t j = 0; j < truth_quad.size(); ++j) {
    double dot = 0.0;
    for (std::size_t a = 0; a < t.size(); ++a) dot += t[a] * truth_quad.support[j][a];
    s += truth_quad.weights[j] * Complex(std::cos(dot), std::sin(dot));
  }
  return s;
}

Sample make_sample(const SignalSpec& signal, const NoiseSpec& noise, std::size_t n,
                   std::size_t d1, Rng& rng) {
  noise.validate();
  if (d1 < 1 || d1 >= signal.dims) throw InvalidArgument("block split must satisfy 1 <= d1 < D");
  PointSet x = draw_signal(signal, n, rng);
  PointSet y(signal.dims);
  y.reserve(n);
  std::vector<double> p(signal.dims);
  for (std::size_t l = 0; l < n; ++l) {
    for (std::size_t a = 0; a < signal.dims; ++a) p[a] = x[l][a] + draw_noise(noise, rng);
    y.push_back(p);
  }
  return Sample(std::move(y), d1, signal.dims - d1);
}

PointSet wiggly_curve(int index, double gamma, double alpha, std::size_t dims, double u_lo,
                      double u_hi, std::size_t points) {
  if (points < 2) throw InvalidArgument("curve needs at least two points");
  PointSet out(dims);
  for (std::size_t i = 0; i < points; ++i) {
    const double u = u_lo + (u_hi - u_lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    out.push_back(wiggly_point(index, gamma, alpha, dims, u));
  }
  return out;
}

F1Density::F1Density(double delta, std::size_t nodes) : delta_(delta) {
  if (!(delta > 0 && delta < 1)) throw InvalidArgument("delta must lie in (0, 1)");
  if (nodes < 3 || nodes % 2 == 0) throw InvalidArgument("f1 table needs an odd node count >= 3");
  const double B = 1.0 / (1.0 - delta);
  x_.resize(nodes);
  pdf_.resize(nodes);
  const std::size_t mid = nodes / 2;
  for (std::size_t i = 0; i < nodes; ++i) x_[i] = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(nodes - 1);
  for (std::size_t i = mid; i < nodes; ++i) {
    pdf_[i] = self_convolve_u_at(B, x_[i], 2000);
    pdf_[nodes - 1 - i] = pdf_[i];
  }
  const double dx = x_[1] - x_[0];
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < nodes; ++i) total += 0.5 * dx * (pdf_[i] + pdf_[i + 1]);
  for (auto& v : pdf_) v /= total;
  cdf_.assign(nodes, 0.0);
  for (std::size_t i = 1; i < nodes; ++i) cdf_[i] = cdf_[i - 1] + 0.5 * dx * (pdf_[i - 1] + pdf_[i]);
  cdf_.back() = 1.0;
  max_ = *std::max_element(pdf_.begin(), pdf_.end());
}

double F1Density::pdf(double x) const {
  if (x <= -1.0 || x >= 1.0) return 0.0;
  const double s = (x + 1.0) / (x_[1] - x_[0]);
  const auto i = std::min(static_cast<std::size_t>(s), x_.size() - 2);
  const double w = s - static_cast<double>(i);
  return (1.0 - w) * pdf_[i] + w * pdf_[i + 1];
}

double F1Density::cdf(double x) const {
  if (x <= -1.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double dx = x_[1] - x_[0];
  const auto i = std::min(static_cast<std::size_t>((x + 1.0) / dx), x_.size() - 2);
  const double h = x - x_[i];
  // exact integral of the linear interpolant over [x_i, x]
  const double slope = (pdf_[i + 1] - pdf_[i]) / dx;
  return cdf_[i] + pdf_[i] * h + 0.5 * slope * h * h;
}

double F1Density::sample(Rng& rng) const {
  for (;;) {
    const double x = uniform(rng, -1.0, 1.0);
    if (uniform01(rng) * max_ <= pdf(x)) return x;
  }
}

QDensity::QDensity(double c) : c_(c) {
  if (!(c > 0)) throw InvalidArgument("q density parameter c must be positive");
  // ∫ q_raw(u) du on [0, U] plus the tail ∫_U^∞ (1 + cos u) / u^4 ≈ 1 / (3 U^3)
  const double U = 2000.0;
  const auto rule = composite_gauss_legendre(2000, 8, 0.0, U);
  double z = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) z += rule.weights[i] * q_raw(rule.nodes[i]);
  z = 2.0 * (z + 1.0 / (3.0 * U * U * U));
  c_q_ = c / z;

  core_ = 2.0 * kPi / c;
  double peak = 0.0;
  for (int i = 0; i <= 4000; ++i) peak = std::max(peak, pdf(core_ * i / 4000.0));
  height_ = 1.05 * peak;
  tail_ = c_q_ * 32.0 / (9.0 * c * c * c * c);
}

double QDensity::pdf(double x) const { return c_q_ * q_raw(c_ * x); }

double QDensity::cf(double t) const {
  const double s = std::abs(t) / c_;
  if (s >= 1.0) return 0.0;
  return (1.0 - s) * std::cos(kPi * s) + std::sin(kPi * s) / kPi;
}

double QDensity::sample(Rng& rng) const {
  const double core_mass = 2.0 * core_ * height_;
  const double tail_mass = 2.0 * tail_ / (3.0 * core_ * core_ * core_);
  for (;;) {
    double x = 0.0, env = 0.0;
    if (uniform01(rng) * (core_mass + tail_mass) < core_mass) {
      x = uniform(rng, -core_, core_);
      env = height_;
    } else {
      const double v = 1.0 - uniform01(rng);
      x = core_ * std::pow(v, -1.0 / 3.0);
      if (uniform01(rng) < 0.5) x = -x;
      env = tail_ / (x * x * x * x);
    }
    if (uniform01(rng) * env <= pdf(x)) return x;
  }
}

double QDensity::second_moment() const {
  // (c_q / c^3) ∫ u^2 q_raw(u) du; the tail beyond U contributes ≈ 1 / U per side
  const double U = 20000.0;
  const auto rule = composite_gauss_legendre(20000, 8, 0.0, U);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double u = rule.nodes[i];
    s += rule.weights[i] * u * u * q_raw(u);
  }
  s = 2.0 * (s + 1.0 / U);
  return c_q_ / (c_ * c_ * c_) * s;
}

double sample_f1(double delta, Rng& rng) { return cached<F1Density>(delta).sample(rng); }

double sample_q(double c, Rng& rng) { return cached<QDensity>(c).sample(rng); }

double tv_two_points(double gamma, const TvConfig& cfg) {
  if (!(gamma > 0 && gamma <= 1)) throw InvalidArgument("gamma must lie in (0, 1]");
  if (cfg.grid < 3 || cfg.u_nodes < 8) throw InvalidArgument("tv grid too coarse");
  const QDensity& q = cached<QDensity>(cfg.c);
  const F1Density& f1 = cached<F1Density>(cfg.delta);

  const std::size_t N = cfg.grid;
  const std::size_t panels = std::max<std::size_t>(cfg.u_nodes / 8, 1);
  const auto rule = composite_gauss_legendre(panels, 8, -1.0, 1.0);
  const auto U = static_cast<Eigen::Index>(rule.size());
  const double dy = 2.0 * cfg.half_width / static_cast<double>(N - 1);

  // p_0 - p_1 = sum_u w f1(u) q(y1 - alpha u) [q(y2 - x2^0(u)) - q(y2 - x2^1(u))]
  Eigen::MatrixXd left(N, U), right(U, N);
  for (Eigen::Index k = 0; k < U; ++k) {
    const double u = rule.nodes[k];
    const double wk = rule.weights[k] * f1.pdf(u);
    const auto x0 = wiggly_point(0, gamma, cfg.alpha, 2, u);
    const auto x1 = wiggly_point(cfg.force_equal ? 0 : 1, gamma, cfg.alpha, 2, u);
    for (std::size_t j = 0; j < N; ++j) {
      const double y = -cfg.half_width + dy * static_cast<double>(j);
      left(j, k) = wk * q.pdf(y - x0[0]);
      right(k, j) = q.pdf(y - x0[1]) - q.pdf(y - x1[1]);
    }
  }
  const Eigen::MatrixXd diff = left * right;
  return 0.5 * diff.cwiseAbs().sum() * dy * dy;
}

}  // namespace blinddeconv
