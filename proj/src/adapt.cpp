#include "blinddeconv/adapt.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "blinddeconv/parallel.hpp"

namespace blinddeconv {

void LepskiConfig::validate() const {
  if (!(kappa0 > 0.5 && kappa0 <= 1.0)) throw InvalidArgument("kappa0 must lie in (1/2, 1]");
  if (kappa_grid.empty()) throw InvalidArgument("kappa grid is empty");
  for (double k : kappa_grid)
    if (!(k >= kappa0 && k <= 1.0)) throw InvalidArgument("kappa grid must lie in [kappa0, 1]");
  if (!(c_sigma > 0)) throw InvalidArgument("c_sigma must be positive");
  if (!(A > 0)) throw InvalidArgument("kernel shape A must be positive");
}

double sigma_n(std::size_t n, double kappa, const LepskiConfig& cfg) {
  if (n < 16) throw InvalidArgument("sigma_n needs n >= 16");
  const double ln = std::log(static_cast<double>(n));
  const double lln = std::log(ln);
  return cfg.c_sigma * std::pow(lln, kappa + (cfg.A + 1.0) / cfg.A) / std::pow(ln, kappa);
}

double capped_hausdorff(const PointSet& a, const PointSet& b, const Window& k) {
  const PointSet ra = k.restrict(a), rb = k.restrict(b);
  if (ra.empty() && rb.empty()) return 0.0;
  if (ra.empty() || rb.empty()) {
    const double cap = k.diameter();
    if (!std::isfinite(cap)) throw InvalidArgument("empty estimate needs a bounded window");
    return cap;
  }
  return hausdorff(ra, rb);
}

double bias_proxy(const EstimateMap& estimates, double kappa, const LepskiConfig& cfg,
                  std::size_t n, const Window& k) {
  const auto self = estimates.find(kappa);
  if (self == estimates.end()) throw InvalidArgument("missing estimate for kappa");
  double b = 0.0;
  for (double kp : cfg.kappa_grid) {
    if (kp < cfg.kappa0 || kp > kappa) continue;
    const auto other = estimates.find(kp);
    if (other == estimates.end()) throw InvalidArgument("missing estimate for kappa'");
    b = std::max(b, capped_hausdorff(self->second, other->second, k) - sigma_n(n, kp, cfg));
  }
  return b;
}

Selection select_kappa(const EstimateMap& estimates, const LepskiConfig& cfg, std::size_t n,
                       const Window& k) {
  cfg.validate();
  std::vector<double> grid = cfg.kappa_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  Selection sel;
  double best = INFINITY;
  for (double kappa : grid) {
    KappaReport r;
    r.kappa = kappa;
    r.sigma = sigma_n(n, kappa, cfg);
    r.bias = bias_proxy(estimates, kappa, cfg, n, k);
    r.criterion = r.bias + r.sigma;
    if (r.criterion <= best) {
      best = r.criterion;
      sel.kappa_hat = kappa;
    }
    sel.table.push_back(r);
  }
  return sel;
}

SupportParams params_for_kappa(const SupportParams& base, double kappa, const LepskiConfig& cfg) {
  SupportParams p = base;
  p.kappa = kappa;
  if (p.mode == ScheduleMode::practical) {
    const double scale = std::pow(kappa, cfg.h_exponent);
    if (p.h) p.h = *p.h * scale;
    p.h_rel *= scale;
  }
  return p;
}

AdaptiveResult adaptive_support(const Sample& sample, const SupportParams& base,
                                const ClassParams& cls, const RadialKernel& kernel,
                                const OptimizerConfig& opt, const LepskiConfig& cfg,
                                const Window& k) {
  cfg.validate();
  std::vector<double> grid = cfg.kappa_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::vector<SupportEstimate> runs(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    runs[i] = estimate_support(sample, params_for_kappa(base, grid[i], cfg), cls, kernel, opt);
  });
  AdaptiveResult out;
  EstimateMap sets;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    sets[grid[i]] = runs[i].cells;
    out.estimates[grid[i]] = std::move(runs[i]);
  }
  out.selection = select_kappa(sets, cfg, sample.size(), k);
  return out;
}

double calibrate_c_sigma(double measured_risk, std::size_t n, const LepskiConfig& cfg) {
  if (!(measured_risk > 0)) throw InvalidArgument("measured risk must be positive");
  LepskiConfig unit = cfg;
  unit.c_sigma = 1.0;
  return measured_risk / sigma_n(n, 1.0, unit);
}

std::string selection_to_json(const Selection& s) {
  nlohmann::json j;
  j["kappa_hat"] = s.kappa_hat;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : s.table)
    rows.push_back({{"kappa", r.kappa}, {"sigma_n", r.sigma}, {"B_n", r.bias}, {"sum", r.criterion}});
  j["table"] = std::move(rows);
  return j.dump(2);
}

}  // namespace blinddeconv
