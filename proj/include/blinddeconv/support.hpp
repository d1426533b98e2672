#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "blinddeconv/charfn.hpp"
#include "blinddeconv/core.hpp"
#include "blinddeconv/kernel.hpp"

namespace blinddeconv {

enum class ScheduleMode { asymptotic, practical };

struct SupportParams {
  double kappa = 1.0;
  double A = 1.0;
  double c_h = 0.0;   // 0 means exp(2D + 2)
  double ell = 0.5;
  std::size_t d = 1;
  double a_std = 1.0;
  ScheduleMode mode = ScheduleMode::practical;

  //! Degree of the contrast fit; default_degree(n) when absent.
  std::optional<int> m_fit;
  // practical-mode overrides
  //! Truncation degree used in ghat; m_fit when absent.
  std::optional<int> m;
  std::optional<double> h;
  //! h as a fraction of the data diameter when h is not given
  double h_rel = 0.1;
  //! When set, the practical h is taken as calibrated at this sample size and
  //! scaled to n by (r(n) / r(h_reference_n))^kappa, r(n) = log log n / log n.
  std::optional<std::size_t> h_reference_n;
  std::optional<double> lambda;
  //! lambda as a fraction of max ghat on the grid when lambda is not given
  double lambda_rel = 0.5;
  //! If positive, the contrast is fitted on [-nu_factor / h, nu_factor / h]^D
  //! instead of the class nu_est.
  double nu_factor = 0.0;
  //! Asymptotic-mode bandwidths larger than the data diameter are replaced by the
  //! practical rule when true and rejected otherwise.
  bool rescale_oversized_h = false;

  std::optional<GridSpec> eval_grid;
  std::size_t grid_points = 101;
  double grid_inflate = 0.1;
  std::size_t ghat_order = 64;

  void validate(std::size_t dims) const;
  double c_h_value(std::size_t dims) const;
};

struct Schedule {
  int m_kappa = 0;
  double h = 0.0;
  //! Non-positive means lambda_rel times the grid maximum of ghat.
  double lambda = 0.0;
  //! True when h exceeds the supplied data scale.
  bool h_exceeds_scale = false;
};

//! Asymptotic parameter schedule. lambda for d = D uses the kernel
//! diagnostics c_A and d_A. Throws "n too small for schedule" if m_kappa < 1.
Schedule schedule(std::size_t n, const SupportParams& p, double S, std::size_t dims,
                  const RadialKernel& kernel, double data_scale = INFINITY);

//! floor(log n / (4 kappa log log n)), without the m_kappa >= 1 check.
int schedule_m_kappa(std::size_t n, double kappa);

//! ghat(y) = (2 pi)^-D ∫_{|t| <= 1/h} e^{-i t.y} F[psi_A](h t) cf(t) dt on a
//! tensor Gauss-Legendre rule over [-1/h, 1/h]^D with zero weight outside the ball.
class GhatEvaluator {
public:
  using CfFunction = std::function<Complex(std::span<const double>)>;
  GhatEvaluator(const CfFunction& cf, const RadialKernel& kernel, double h,
                std::size_t order = 64);

  double h() const { return h_; }
  double at(std::span<const double> y) const;
  //! Complex value; the imaginary part is a quadrature residual.
  Complex complex_at(std::span<const double> y) const;
  //! Values on every node of the grid (row-major, last axis fastest).
  std::vector<double> on_grid(const GridSpec& grid, double* max_imag = nullptr) const;
  //! Grid L2 norm over the ball |t| <= 1/h of cf - other.
  double l2_gap(const CfFunction& other) const;

private:
  std::size_t dims_;
  double h_;
  std::vector<double> axis_nodes_;
  std::vector<Complex> coef_;  // weight * F[psi](h t) * cf(t) on the tensor nodes
  std::vector<Complex> cf_values_;
  std::vector<double> ball_weights_;
  std::vector<double> node(std::size_t flat) const;
};

//! ghat for an estimated CF truncated at m_kappa.
double ghat(const TruncatedAnalytic& phi_hat, const RadialKernel& kernel, double h,
            int m_kappa, std::span<const double> y, std::size_t order = 64);

//! sum_j w_j psi_{A,h}(y - x_j).
double gbar_oracle(const DiscreteMeasure& g, const RadialKernel& kernel, double h,
                   std::span<const double> y);
std::vector<double> gbar_on_grid(const DiscreteMeasure& g, const RadialKernel& kernel, double h,
                                 const GridSpec& grid);

struct SupportEstimate {
  PointSet cells;
  GridSpec grid;
  std::vector<double> ghat_values;
  double h = 0.0;
  int m_kappa = 0;
  double lambda = 0.0;
  double max_ghat = 0.0;
  double max_imag = 0.0;
  double nu_est = 0.0;
  CfEstimate cf;
  std::vector<std::string> warnings;

  bool empty() const { return cells.empty(); }
};

//! Practical bandwidth at sample size n (h_reference_n rule applied).
double practical_bandwidth(double h, std::size_t n, const SupportParams& params);

//! Cells of the grid where values > lambda.
PointSet level_set(const GridSpec& grid, const std::vector<double>& values, double lambda);

//! Full pipeline: CF estimate, truncation at m_kappa, ghat on the grid, threshold.
SupportEstimate estimate_support(const Sample& sample, const SupportParams& params,
                                 const ClassParams& cls, const RadialKernel& kernel,
                                 const OptimizerConfig& opt = {});

//! Level set of an already estimated CF (skips the contrast minimization).
SupportEstimate support_from_cf(const CfEstimate& cf, const Sample& sample,
                                const SupportParams& params, const RadialKernel& kernel,
                                const Schedule& sched);

struct GammaReport {
  double measured = 0.0;     // max over the grid of |ghat - gbar|
  double sharp_bound = 0.0;  // (2 pi)^{-D/2} ||psi_A||_2 h^{-D/2} ||T_m phi - Phi_X||_{2,1/h}
  double kernel_bound = 0.0; // I(A) ||u*u||_2 h^{-D/2} ||T_m phi - Phi_X||_{2,1/h}
  double cf_gap = 0.0;       // ||T_m phi - Phi_X||_{2,1/h}
};

//! Gap between ghat built from phi_hat and gbar built from the true CF,
//! both evaluated by the same Fourier quadrature on the grid.
GammaReport gamma_bound(const TruncatedAnalytic& phi_hat, const GhatEvaluator::CfFunction& true_cf,
                        const RadialKernel& kernel, double h, int m_kappa, const GridSpec& grid,
                        std::size_t order = 64);

//! JSON and CSV forms of an estimate.
std::string support_to_json(const SupportEstimate& est);
std::string support_to_csv(const SupportEstimate& est);

}  // namespace blinddeconv
