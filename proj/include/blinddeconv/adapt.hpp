#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "blinddeconv/support.hpp"

namespace blinddeconv {

struct LepskiConfig {
  double kappa0 = 0.6;
  std::vector<double> kappa_grid{0.6, 0.7, 0.8, 0.9, 1.0};
  double c_sigma = 1.0;
  double A = 1.0;
  //! Practical mode only: the bandwidth at kappa is h * kappa^h_exponent.
  double h_exponent = 0.5;

  void validate() const;
};

//! c_sigma (log log n)^{kappa + (A+1)/A} / (log n)^kappa.
double sigma_n(std::size_t n, double kappa, const LepskiConfig& cfg);

//! Support estimates keyed by kappa.
using EstimateMap = std::map<double, PointSet>;

//! H_K between two estimates; diam(K) when exactly one of them is empty
//! inside K, 0 when both are.
double capped_hausdorff(const PointSet& a, const PointSet& b, const Window& k);

//! max(0, sup over grid kappa' in [kappa0, kappa] of H_K(M_kappa, M_kappa') - sigma_n(kappa')).
double bias_proxy(const EstimateMap& estimates, double kappa, const LepskiConfig& cfg,
                  std::size_t n, const Window& k);

struct KappaReport {
  double kappa = 0.0;
  double sigma = 0.0;
  double bias = 0.0;
  double criterion = 0.0;
};

struct Selection {
  double kappa_hat = 0.0;
  //! One row per grid value, ascending in kappa.
  std::vector<KappaReport> table;
};

//! Grid argmin of B_n + sigma_n; ties go to the largest kappa.
Selection select_kappa(const EstimateMap& estimates, const LepskiConfig& cfg, std::size_t n,
                       const Window& k);

//! Parameters of the support estimate at one kappa: the asymptotic schedule
//! is driven by kappa directly, the practical family rescales h.
SupportParams params_for_kappa(const SupportParams& base, double kappa, const LepskiConfig& cfg);

struct AdaptiveResult {
  Selection selection;
  std::map<double, SupportEstimate> estimates;
  const SupportEstimate& chosen() const { return estimates.at(selection.kappa_hat); }
};

//! Estimates on the whole grid from the same sample, then selection.
AdaptiveResult adaptive_support(const Sample& sample, const SupportParams& base,
                                const ClassParams& cls, const RadialKernel& kernel,
                                const OptimizerConfig& opt, const LepskiConfig& cfg,
                                const Window& k);

//! c_sigma that makes sigma_n(1) equal to a measured risk at sample size n.
double calibrate_c_sigma(double measured_risk, std::size_t n, const LepskiConfig& cfg);

std::string selection_to_json(const Selection& s);

}  // namespace blinddeconv
