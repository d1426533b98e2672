#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "blinddeconv/core.hpp"

namespace blinddeconv {

//! Smooth bump supported on [-1/2, 1/2]:
//! u_A(y) = exp(-(1-2y)^-A - (1+2y)^-A) inside, 0 outside.
double bump_u(double A, double y);

//! (u_A * u_A)(t), supported on [-1, 1].
double self_convolve_u_at(double A, double t, std::size_t nodes = 4000);

//! Samples of u_A * u_A at the nodes of a 1-D grid covering [-1, 1].
std::vector<double> self_convolve_u(double A, const GridSpec& grid);

//! (1/2pi) ∫ e^{-iry} u_A(y) dy, evaluated by the trapezoid rule, which is
//! spectrally accurate because u_A vanishes with all derivatives at ±1/2.
double inverse_fourier_u(double A, double r, std::size_t nodes = 2000);

struct KernelOptions {
  std::size_t radius_nodes = 16384;
  std::size_t fourier_nodes = 1024;
  double tol = 1e-8;        // tail truncation, relative to the peak
  double margin = 0.05;     // F[psi] is reported as 0 beyond 1 + margin
  double max_radius = 400;  // give up if the tail is still above tol here
  double scan_step = 0.1;
};

//! Isotropic kernel psi_A on R^D whose Fourier transform is supported in the
//! unit ball, tabulated on a radius grid and interpolated linearly.
class RadialKernel {
public:
  //! Throws NumericalError("kernel tail truncation failed") when the profile
  //! does not fall below tol * peak before opts.max_radius.
  static RadialKernel build(double A, std::size_t dims, const KernelOptions& opts = {});

  double A() const { return A_; }
  std::size_t dims() const { return dims_; }
  //! I(A): makes the D-dimensional integral of psi_A equal to one.
  double normalization() const { return normalization_; }
  double r_cut() const { return r_cut_; }
  double margin() const { return margin_; }

  //! psi_A at radius r; 0 beyond r_cut.
  double profile(double r) const;
  //! F[psi_A] at frequency radius rho; 0 at and beyond 1 + margin.
  double fourier(double rho) const;

  //! psi_{A,h}(x) = h^-D psi_A(x / h).
  double eval_psi(double h, std::span<const double> x) const;
  //! F[psi_A](t), radial.
  double eval_fourier_psi(std::span<const double> t) const;

  //! Radius nodes and psi_A values of the table.
  const std::vector<double>& radius_grid() const { return radii_; }
  const std::vector<double>& radial_profile() const { return values_; }
  const std::vector<double>& fourier_grid() const { return rho_; }
  const std::vector<double>& fourier_profile() const { return fourier_values_; }

  //! psi_A >= d_A on the ball of radius c_A.
  double c_A() const { return c_A_; }
  double d_A() const { return d_A_; }
  //! Fitted envelope decay: psi_A(r) <~ exp(-beta_A r^{A/(A+1)}).
  double beta_A() const { return beta_A_; }
  //! ||u_A * u_A||_2 on the real line.
  double u_conv_l2() const { return u_conv_l2_; }
  //! ||psi_A||_2 on R^D.
  double l2_norm() const { return l2_norm_; }
  //! ∫ ||u||^2 psi_A(u) du.
  double second_moment() const { return second_moment_; }
  //! max |F[psi_A]| over rho in [1 + margin, 2], relative to F[psi_A](0),
  //! computed by direct quadrature rather than read from the table.
  double out_of_ball_ratio() const { return out_of_ball_ratio_; }

private:
  double A_ = 1.0;
  std::size_t dims_ = 1;
  double normalization_ = 1.0;
  double r_cut_ = 0.0;
  double margin_ = 0.05;
  std::vector<double> radii_;
  std::vector<double> values_;
  std::vector<double> rho_;
  std::vector<double> fourier_values_;
  double c_A_ = 0.0, d_A_ = 0.0, beta_A_ = 0.0;
  double u_conv_l2_ = 0.0, l2_norm_ = 0.0, second_moment_ = 0.0;
  double out_of_ball_ratio_ = 0.0;
};

//! Surface area of the unit sphere S^{D-1} (2 for D = 1).
double unit_sphere_area(std::size_t dims);

//! D-dimensional Fourier transform of a radial function given by its values
//! on a radial quadrature rule: S * ∫ f(r) j_D(rho r) r^{D-1} dr with the
//! appropriate radial kernel j_D (cos, J0, sinc).
double radial_fourier(std::size_t dims, std::span<const double> r_nodes,
                      std::span<const double> r_weights, std::span<const double> f_values,
                      double rho);

}  // namespace blinddeconv
