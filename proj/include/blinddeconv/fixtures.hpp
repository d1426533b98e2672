#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "blinddeconv/charfn.hpp"
#include "blinddeconv/core.hpp"
#include "blinddeconv/rng.hpp"

namespace blinddeconv {

enum class SignalKind { circle, sphere, wiggly, uniform_ball, point_mass };
enum class NoiseKind { gaussian, laplace, uniform_box, q_density, none };

std::string to_string(SignalKind k);
std::string to_string(NoiseKind k);
SignalKind parse_signal_kind(const std::string& s);
NoiseKind parse_noise_kind(const std::string& s);

struct SignalSpec {
  SignalKind kind = SignalKind::circle;
  std::size_t dims = 2;
  double radius = 1.0;
  // wiggly curve A_alpha (u, (-1)^i gamma cos(u / gamma), 0, ...), u ~ f1
  int wiggly_index = 0;
  double gamma = 1.0;
  double alpha = 1.0;
  double delta = 0.5;
  //! Points in the dense discretization of the support.
  std::size_t truth_points = 2000;

  void validate() const;
};

struct NoiseSpec {
  NoiseKind kind = NoiseKind::gaussian;
  //! sigma, Laplace b, half-width, or c of the q density
  double scale = 0.1;

  void validate() const;
};

//! One-dimensional law of the per-coordinate noise.
double draw_noise(const NoiseSpec& spec, Rng& rng);
Complex noise_cf(const NoiseSpec& spec, double t);
//! CF of a block of iid coordinates.
Complex noise_block_cf(const NoiseSpec& spec, std::span<const double> t);

//! n i.i.d. draws of X.
PointSet draw_signal(const SignalSpec& spec, std::size_t n, Rng& rng);
//! Dense deterministic discretization of the support of G.
PointSet truth_set(const SignalSpec& spec);
//! Quadrature measure reproducing E f(X) for smooth f; used for exact
//! characteristic functions and moments of the truth.
DiscreteMeasure truth_quadrature(const SignalSpec& spec);
//! Characteristic function of G at t, by the truth quadrature.
Complex signal_cf(const DiscreteMeasure& truth_quad, std::span<const double> t);

//! Y = X + eps with iid noise coordinates, split into blocks (d1, D - d1).
Sample make_sample(const SignalSpec& signal, const NoiseSpec& noise, std::size_t n,
                   std::size_t d1, Rng& rng);

//! Discretized wiggly curve A_alpha M_i(gamma) for u in [u_lo, u_hi].
PointSet wiggly_curve(int index, double gamma, double alpha, std::size_t dims, double u_lo,
                      double u_hi, std::size_t points);

//! f1 = c (u_B * u_B) with B = 1 / (1 - delta), supported on [-1, 1],
//! tabulated on a uniform grid.
class F1Density {
public:
  explicit F1Density(double delta, std::size_t nodes = 4001);
  double pdf(double x) const;
  double cdf(double x) const;
  //! Rejection sampling against the uniform law on [-1, 1].
  double sample(Rng& rng) const;
  double delta() const { return delta_; }
  double max_pdf() const { return max_; }

private:
  double delta_;
  std::vector<double> x_, pdf_, cdf_;
  double max_ = 0.0;
};

//! q(x) = c_q (1 + cos(cx)) / (pi^2 - (cx)^2)^2.
class QDensity {
public:
  explicit QDensity(double c);
  double c() const { return c_; }
  //! Normalizing constant, computed by quadrature.
  double c_q() const { return c_q_; }
  double pdf(double x) const;
  //! Closed form, supported on [-c, c].
  double cf(double t) const;
  //! Rejection sampling against a flat core with x^-4 tails.
  double sample(Rng& rng) const;
  //! ∫ x^2 q(x) dx by quadrature.
  double second_moment() const;

private:
  double c_;
  double c_q_ = 1.0;
  double core_ = 0.0;   // half-width of the flat envelope part
  double height_ = 0.0; // envelope height on the core
  double tail_ = 0.0;   // envelope is tail_ / x^4 beyond the core
};

double sample_f1(double delta, Rng& rng);
double sample_q(double c, Rng& rng);

struct TvConfig {
  double c = 1.0;       // q noise parameter
  double alpha = 1.0;
  double delta = 0.5;
  double half_width = 20.0;
  std::size_t grid = 801;      // per axis
  std::size_t u_nodes = 2400;  // mixture quadrature nodes
  bool force_equal = false;    // use G_0 for both laws
};

//! TV distance between G_0 * Q and G_1 * Q in D = 2 by mixture quadrature
//! on a shared grid.
double tv_two_points(double gamma, const TvConfig& cfg = {});

}  // namespace blinddeconv
