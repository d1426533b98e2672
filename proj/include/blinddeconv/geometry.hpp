#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "blinddeconv/core.hpp"

namespace blinddeconv {

struct SliceCheckConfig {
  std::vector<double> delta_grid{0.5, 0.25, 0.1, 0.05};
  std::vector<double> epsilon_grid{0.2, 0.1, 0.05, 0.02, 0.01};
  std::size_t d1 = 1;
  std::size_t d2 = 1;
  //! Slices with fewer points are ignored.
  std::size_t min_slice_count = 3;

  void validate(std::size_t dims) const;
};

//! Best slice found in one direction: anchor index, epsilon and the diameter
//! of the projected slice (infinite when no slice was large enough).
struct SliceWitness {
  std::size_t anchor = 0;
  double epsilon = 0.0;
  double diameter = INFINITY;
  std::size_t count = 0;
};

struct SliceReport {
  double delta = 0.0;
  //! Direction 1: slice on block 2 near x_2, projected to block 1 (set A_1).
  bool found1 = false;
  //! Direction 2: slice on block 1 near x_1, projected to block 2 (set A_2).
  bool found2 = false;
  SliceWitness witness1;
  SliceWitness witness2;
};

//! One report per delta, in the order of cfg.delta_grid. The witness is the
//! smallest projected diameter over all anchors and epsilons, so a slice
//! found at delta is found at every larger delta.
std::vector<SliceReport> check_slices(const PointSet& points, const SliceCheckConfig& cfg);

std::string slices_to_csv(const std::vector<SliceReport>& reports);

struct StandardnessFit {
  double a_hat = 0.0;
  double d_hat = 0.0;
  //! Minimum over anchors of the mass of B(x, r), one per radius.
  std::vector<double> min_mass;
};

//! Log-log fit of the smallest ball mass against r; a_hat is the largest
//! constant with mass >= a_hat r^d_hat at every anchor in K and radius.
StandardnessFit check_standardness(const DiscreteMeasure& g, const std::vector<double>& r_grid,
                                   const Window& k = Window::all());

//! Largest per-coordinate vertex displacement (in units of the tiling cell)
//! that keeps every simplex of the Kuhn tiling positively oriented, found over
//! corner displacement patterns and divided by 2.
double kuhn_r0(std::size_t dims);

//! Mirrored Kuhn tiling of R^D with cell size delta whose vertices are moved by
//! i.i.d. uniform draws in [-r, r]^D; the draws are a pure function of
//! (seed, vertex lattice coordinates).
class PerturbedTiling {
public:
  PerturbedTiling(std::size_t dims, double delta, double r, std::uint64_t seed);

  std::size_t dims() const { return dims_; }
  double delta() const { return delta_; }
  double r() const { return r_; }

  //! Displacement of the lattice vertex (in cell units).
  Point displacement(const std::vector<long>& vertex) const;

  struct Location {
    std::vector<std::vector<long>> vertices;  // D + 1 lattice vertices
    std::vector<double> weights;              // barycentric coordinates
  };
  //! Simplex of the unperturbed tiling containing z and barycentric weights.
  Location locate(std::span<const double> z) const;

  //! f(z) = sum_i alpha_i (x_i + eps_i).
  Point apply(std::span<const double> z) const;
  //! Solves f(z) = w by Newton steps on the piecewise affine map.
  Point invert(std::span<const double> w, int max_iter = 50) const;

private:
  std::size_t dims_;
  double delta_;
  double r_;
  std::uint64_t seed_;
};

PointSet apply_perturbation(const PerturbedTiling& tiling, const PointSet& points);

struct GenericityResult {
  double fraction = 0.0;
  //! Per trial: unique maximizer of coordinate 0 and of coordinate d1.
  std::vector<bool> b1;
  std::vector<bool> b2;
};

//! Fraction of independent perturbations after which both maximizers are
//! unique (within tol_unique).
GenericityResult genericity_mc(const PointSet& points, std::size_t trials, double r, std::uint64_t seed,
                               std::size_t d1 = 1, double delta = 1.0, double tol_unique = 1e-9);

std::string genericity_to_csv(const GenericityResult& result);

}  // namespace blinddeconv
