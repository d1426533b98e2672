#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "blinddeconv/core.hpp"
#include "blinddeconv/kernel.hpp"
#include "blinddeconv/rng.hpp"
#include "blinddeconv/support.hpp"

namespace blinddeconv {

struct TransportOptions {
  //! Largest support size accepted on either side after dropping zero weights.
  std::size_t max_atoms = 3000;
  //! Safety cap on simplex pivots.
  std::size_t max_pivots = 50'000'000;
};

struct TransportPlan {
  double cost = 0.0;  // sum of flow * ||x - y||^p
  //! (row, column, mass) triples with positive mass.
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
  std::vector<double> mass;
  std::size_t pivots = 0;
};

//! Exact discrete optimal transport between two probability vectors with a
//! dense cost matrix (row-major, a.size() x b.size()), by network simplex.
TransportPlan solve_transport(const std::vector<double>& a, const std::vector<double>& b,
                              const std::vector<double>& cost, std::size_t max_pivots = 50'000'000);

//! W_p between normalized discrete measures. Throws InvalidArgument when a
//! support exceeds the atom budget.
double wasserstein_p(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                     const TransportOptions& opt = {});

struct DistributionEstimate {
  DiscreteMeasure measure;
  //! Grid cells inside the eta-offset of the support estimate cut to the ball B(0, R_n).
  PointSet mask;
  double c_n = 0.0;
  //! Positive part of ghat inside the mask over the total positive part.
  double mask_mass = 0.0;
  double eta = 0.0;
  double radius = 0.0;
  double h = 0.0;
  int m = 0;
};

//! Renormalized positive part of ghat restricted to the offset mask. eta and
//! radius default (when <= 0) to 0.1 and 2 times the sample bounding-box diagonal.
DistributionEstimate build_phat(const Sample& sample, const SupportEstimate& est, double eta = 0,
                                double radius = 0);

//! Practical-mode mask width: the default 0.1 x bounding-box diagonal widened by
//! the half-peak radius c_A h of the smoothing kernel.
double practical_eta(const Sample& sample, const SupportEstimate& est, const RadialKernel& kernel);

//! Positive part of grid values, times cell volume, normalized and pruned.
DiscreteMeasure grid_measure(const GridSpec& grid, const std::vector<double>& values);

struct W2Report {
  double w2_risk = 0.0;         // W2(G, P̂)
  double bias_term = 0.0;       // W2(G, P_psi), P_psi the grid discretization of psi_h * G
  double villani_bound = 0.0;   // 2 min_a sum ||x - a||^2 |p_psi - p̂|
  double w2_smoothed = 0.0;     // W2(P_psi, P̂)
  double discretization = 0.0;  // W2 between two independent draws of G
  bool bound_holds = false;     // w2_smoothed <= sqrt(villani_bound) (1 + tol)
};

//! G is the ground truth as a discrete measure (fixtures draw it), g2 a second
//! independent draw used for the discretization error (may be empty).
W2Report w2_upper_bound_check(const DiscreteMeasure& g, const DiscreteMeasure& g2,
                              const DistributionEstimate& phat, const GridSpec& grid,
                              const RadialKernel& kernel, double tol = 1e-9,
                              const TransportOptions& opt = {});

//! CSV header "fixture,n,seed,W2_risk,bias_term,mask_mass,c_n".
std::string w2_csv_header();
std::string w2_csv_row(const std::string& fixture, std::size_t n, std::uint64_t seed,
                       const W2Report& r, const DistributionEstimate& phat);

}  // namespace blinddeconv
