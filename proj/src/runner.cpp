#include "blinddeconv/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "blinddeconv/geometry.hpp"
#include "blinddeconv/kernel.hpp"
#include "blinddeconv/parallel.hpp"
#include "blinddeconv/rng.hpp"
#include "blinddeconv/wasserstein.hpp"

namespace blinddeconv {

using nlohmann::json;

namespace {

const std::vector<std::pair<Command, std::string>>& command_names() {
  static const std::vector<std::pair<Command, std::string>> names{
      {Command::estimate_cf, "estimate-cf"},
      {Command::estimate_support, "estimate-support"},
      {Command::adapt, "adapt"},
      {Command::estimate_distribution, "estimate-distribution"},
      {Command::lower_bound_check, "lower-bound-check"},
      {Command::genericity, "genericity"},
      {Command::kernel_diagnostics, "kernel-diagnostics"}};
  return names;
}

bool uses_replicates(Command c) {
  return c == Command::estimate_cf || c == Command::estimate_support || c == Command::adapt ||
         c == Command::estimate_distribution;
}

// FNV-1a, stable across platforms and runs
std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Typed access to one JSON object; remembers the keys it was asked about so
// that finish() can reject the rest.
class Section {
public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InvalidArgument(path_ + " must be an object");
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) out = as_double(*v, key);
  }
  void number(const std::string& key, std::optional<double>& out) {
    if (const json* v = find(key)) out = as_double(*v, key);
  }
  void count(const std::string& key, std::size_t& out) {
    if (const json* v = find(key)) out = as_size(*v, key);
  }
  void count(const std::string& key, std::optional<std::size_t>& out) {
    if (const json* v = find(key)) out = as_size(*v, key);
  }
  void integer(const std::string& key, int& out) {
    if (const json* v = find(key)) out = as_int(*v, key);
  }
  void integer(const std::string& key, std::optional<int>& out) {
    if (const json* v = find(key)) out = as_int(*v, key);
  }
  void seed(const std::string& key, std::uint64_t& out) {
    if (const json* v = find(key)) out = as_size(*v, key);
  }
  void flag(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw InvalidArgument(where(key) + " must be a boolean");
      out = v->get<bool>();
    }
  }
  void text(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw InvalidArgument(where(key) + " must be a string");
      out = v->get<std::string>();
    }
  }
  template <class T, class F>
  void list(const std::string& key, std::vector<T>& out, F convert) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw InvalidArgument(where(key) + " must be an array");
      out.clear();
      for (const auto& e : *v) out.push_back(convert(e, key));
    }
  }
  void numbers(const std::string& key, std::vector<double>& out) {
    list(key, out, [this](const json& e, const std::string& k) { return as_double(e, k); });
  }
  template <class T>
  void counts(const std::string& key, std::vector<T>& out) {
    list(key, out, [this](const json& e, const std::string& k) { return static_cast<T>(as_size(e, k)); });
  }
  std::optional<Section> child(const std::string& key) {
    if (const json* v = find(key)) return Section(*v, where(key));
    return std::nullopt;
  }
  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw InvalidArgument("unknown key " + where(it.key()));
  }
  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;

  double as_double(const json& v, const std::string& key) const {
    if (!v.is_number()) throw InvalidArgument(where(key) + " must be a number");
    return v.get<double>();
  }
  std::uint64_t as_size(const json& v, const std::string& key) const {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      throw InvalidArgument(where(key) + " must be a non-negative integer");
    return v.get<std::uint64_t>();
  }
  int as_int(const json& v, const std::string& key) const {
    if (!v.is_number_integer()) throw InvalidArgument(where(key) + " must be an integer");
    return v.get<int>();
  }
};

std::vector<double> bound_vector(const json& v, std::size_t dims, const std::string& what) {
  if (v.is_number()) return std::vector<double>(dims, v.get<double>());
  if (v.is_array() && v.size() == dims) {
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw InvalidArgument(what + " entries must be numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }
  throw InvalidArgument(what + " must be a number or an array of length D");
}

template <class T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

std::string status_text(const char* kind, const std::exception& e) {
  return std::string(kind) + ": " + e.what();
}

struct Replicate {
  std::size_t n = 0;
  std::uint64_t index = 0;
  std::uint64_t seed = 0;
};

std::vector<Replicate> replicates(const RunConfig& cfg) {
  std::vector<Replicate> out;
  for (std::size_t n : cfg.n)
    for (std::uint64_t s : cfg.seeds) out.push_back({n, s, replicate_seed(cfg, n, s)});
  return out;
}

Sample draw_sample(const RunConfig& cfg, const Replicate& r) {
  Rng rng(r.seed);
  return make_sample(cfg.fixture.signal, cfg.fixture.noise, r.n, cfg.fixture.d1, rng);
}

// One metric column collected per replicate for plotdata.
struct Metric {
  std::string name;
  std::vector<std::pair<std::size_t, double>> values;  // (n, value) of ok rows
};

std::string plotdata(const std::vector<std::size_t>& ns, const Metric& m) {
  std::string out = "x,y,y_lo,y_hi\n";
  for (std::size_t n : ns) {
    std::vector<double> v;
    for (const auto& [k, x] : m.values)
      if (k == n) v.push_back(x);
    if (v.empty()) continue;
    const Quartiles q = quartiles(v);
    out += std::to_string(n) + "," + csv_number(q.median) + "," + csv_number(q.q25) + "," +
           csv_number(q.q75) + "\n";
  }
  return out;
}

// Runs body on every replicate (bounded pool); rows come back in replicate order.
struct RowResult {
  std::string row;
  bool ok = false;
  std::vector<double> metrics;
};

void collect(const RunConfig& cfg, const std::vector<Replicate>& reps,
             const std::function<RowResult(const Replicate&)>& body, const std::string& header,
             const std::vector<std::string>& metric_names, const std::string& file, Artifacts& art) {
  std::vector<RowResult> rows(reps.size());
  parallel_for(reps.size(), [&](std::size_t i) { rows[i] = body(reps[i]); });
  std::string csv = header;
  std::vector<Metric> metrics;
  for (const auto& name : metric_names) metrics.push_back({name, {}});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    csv += rows[i].row;
    if (!rows[i].ok) {
      ++art.failed;
      continue;
    }
    for (std::size_t k = 0; k < metrics.size(); ++k)
      metrics[k].values.emplace_back(reps[i].n, rows[i].metrics[k]);
  }
  art.replicates += reps.size();
  art.files[file] = csv;
  for (const auto& m : metrics) art.files["plotdata/" + m.name + ".csv"] = plotdata(cfg.n, m);
}

std::string row_prefix(const RunConfig& cfg, const Replicate& r) {
  return csv_field(cfg.fixture.name()) + "," + std::to_string(r.n) + "," + std::to_string(r.index) + ",";
}

// Empty metrics after a failed replicate keep the column count.
std::string failed_row(const RunConfig& cfg, const Replicate& r, const std::string& status,
                       std::size_t columns) {
  return row_prefix(cfg, r) + csv_field(status) + std::string(columns, ',') + "\n";
}

template <class F>
RowResult guarded(const RunConfig& cfg, const Replicate& r, std::size_t columns, F&& body) {
  try {
    return body();
  } catch (const NumericalError& e) {
    return {failed_row(cfg, r, status_text("numerical_error", e), columns), false, {}};
  } catch (const InvalidArgument& e) {
    return {failed_row(cfg, r, status_text("invalid", e), columns), false, {}};
  }
}

double window_risk(const PointSet& est, const PointSet& truth, const std::optional<Window>& k) {
  const Window w = k.value_or(Window::all());
  if (w.kind != Window::Kind::everything) return capped_hausdorff(est, truth, w);
  if (est.empty()) return INFINITY;
  return hausdorff(est, truth);
}

bool sandwich(const PointSet& est, const PointSet& truth, double c) {
  if (est.empty()) return false;
  for (std::size_t i = 0; i < truth.size(); ++i)
    if (!offset_contains(est, c, truth[i])) return false;
  for (std::size_t i = 0; i < est.size(); ++i)
    if (!offset_contains(truth, c, est[i])) return false;
  return true;
}

OptimizerConfig optimizer_for(const RunConfig& cfg, const Replicate& r) {
  OptimizerConfig opt = cfg.optimizer;
  opt.seed = derive_seed({r.seed, 1});
  return opt;
}

Complex true_y_cf(const RunConfig& cfg, const DiscreteMeasure& quad, std::span<const double> t) {
  return signal_cf(quad, t) * noise_block_cf(cfg.fixture.noise, t);
}

void run_estimate_cf(const RunConfig& cfg, const RadialKernel& kernel, Artifacts& art) {
  const DiscreteMeasure quad = truth_quadrature(cfg.fixture.signal);
  const std::size_t D = cfg.fixture.signal.dims;
  collect(
      cfg, replicates(cfg),
      [&](const Replicate& r) {
        return guarded(cfg, r, 6, [&]() -> RowResult {
          const Sample s = draw_sample(cfg, r);
          const SupportEstimate est = estimate_support(s, cfg.support, cfg.cls, kernel, optimizer_for(cfg, r));
          const TensorRule rule = contrast_rule(D, est.nu_est, cfg.optimizer.quadrature);
          std::vector<Complex> fit(rule.size()), x(rule.size()), y(rule.size());
          Point t;
          for (std::size_t k = 0; k < rule.size(); ++k) {
            rule.node(k, t);
            fit[k] = est.cf.phi.at(t);
            x[k] = signal_cf(quad, t);
            y[k] = true_y_cf(cfg, quad, t);
          }
          const double gap_x = grid_l2_distance(rule, fit, x);
          const double gap_y = grid_l2_distance(rule, fit, y);
          std::string row = row_prefix(cfg, r) + "ok," + std::to_string(est.cf.phi.degree()) + "," +
                            csv_number(est.nu_est) + "," + csv_number(est.cf.contrast) + "," +
                            csv_number(gap_x) + "," + csv_number(gap_y) + "," +
                            std::to_string(est.cf.boundary_coefficients) + "\n";
          return {row, true, {gap_x, gap_y, est.cf.contrast}};
        });
      },
      "fixture,n,seed,status,m,nu,contrast,cf_gap_x,cf_gap_y,boundary_coefficients\n",
      {"cf_gap_x", "cf_gap_y", "contrast"}, "cf.csv", art);
}

void run_estimate_support(const RunConfig& cfg, const RadialKernel& kernel, Artifacts& art) {
  const PointSet truth = truth_set(cfg.fixture.signal);
  collect(
      cfg, replicates(cfg),
      [&](const Replicate& r) {
        return guarded(cfg, r, 7, [&]() -> RowResult {
          const Sample s = draw_sample(cfg, r);
          const SupportEstimate est = estimate_support(s, cfg.support, cfg.cls, kernel, optimizer_for(cfg, r));
          const PointSet cells = cfg.window ? cfg.window->restrict(est.cells) : est.cells;
          const double risk = window_risk(est.cells, truth, cfg.window);
          const bool sw = sandwich(cells, truth, 0.25);
          std::string row = row_prefix(cfg, r) + "ok," + csv_number(risk) + "," + (sw ? "1" : "0") + "," +
                            csv_number(est.h) + "," + std::to_string(est.m_kappa) + "," +
                            csv_number(est.lambda) + "," + std::to_string(est.cells.size()) + "," +
                            csv_number(est.cf.contrast) + "\n";
          return {row, true, {risk, sw ? 1.0 : 0.0}};
        });
      },
      "fixture,n,seed,status,risk,sandwich,h,m_kappa,lambda,cells,contrast\n", {"risk", "sandwich"},
      "support_risk.csv", art);
}

void run_adapt(const RunConfig& cfg, const RadialKernel& kernel, Artifacts& art) {
  const PointSet truth = truth_set(cfg.fixture.signal);
  const std::vector<Replicate> reps = replicates(cfg);
  std::vector<std::string> tables(reps.size());
  collect(
      cfg, reps,
      [&](const Replicate& r) {
        const std::size_t i = static_cast<std::size_t>(&r - reps.data());
        return guarded(cfg, r, 6, [&]() -> RowResult {
          const Sample s = draw_sample(cfg, r);
          const AdaptiveResult res = adaptive_support(s, cfg.support, cfg.cls, kernel, optimizer_for(cfg, r),
                                                      cfg.lepski, *cfg.window);
          const double risk = capped_hausdorff(res.chosen().cells, truth, *cfg.window);
          const KappaReport* truth_row = nullptr;
          for (const auto& t : res.selection.table) {
            if (t.kappa == cfg.kappa_true) truth_row = &t;
            tables[i] += row_prefix(cfg, r) + csv_number(t.kappa) + "," + csv_number(t.sigma) + "," +
                         csv_number(t.bias) + "," + csv_number(t.criterion) + "\n";
          }
          const double bound = 2 * truth_row->bias + 3 * truth_row->sigma;
          std::string row = row_prefix(cfg, r) + "ok," + csv_number(res.selection.kappa_hat) + "," +
                            csv_number(risk) + "," + csv_number(truth_row->bias) + "," +
                            csv_number(truth_row->sigma) + "," + csv_number(bound) + "," +
                            csv_number(res.chosen().h) + "\n";
          return {row, true, {risk, res.selection.kappa_hat}};
        });
      },
      "fixture,n,seed,status,kappa_hat,risk,B_true,sigma_true,bound,h\n", {"adaptive_risk", "kappa_hat"},
      "adapt.csv", art);
  std::string table = "fixture,n,seed,kappa,sigma_n,B_n,criterion\n";
  for (const auto& t : tables) table += t;
  art.files["adapt_table.csv"] = table;
}

void run_estimate_distribution(const RunConfig& cfg, const RadialKernel& kernel, Artifacts& art) {
  Rng truth_rng(derive_seed({cfg.master_seed, fnv1a(cfg.fixture.name()), 0, 0x7472757468ULL}));
  const DiscreteMeasure g = DiscreteMeasure::uniform(draw_signal(cfg.fixture.signal, cfg.distribution.truth_draws, truth_rng));
  const DiscreteMeasure g2 = DiscreteMeasure::uniform(draw_signal(cfg.fixture.signal, cfg.distribution.truth_draws, truth_rng));
  TransportOptions topt;
  topt.max_atoms = cfg.distribution.max_atoms;
  collect(
      cfg, replicates(cfg),
      [&](const Replicate& r) {
        return guarded(cfg, r, 9, [&]() -> RowResult {
          const Sample s = draw_sample(cfg, r);
          const SupportEstimate est = estimate_support(s, cfg.support, cfg.cls, kernel, optimizer_for(cfg, r));
          double eta = cfg.distribution.eta;
          if (eta <= 0 && cfg.support.mode == ScheduleMode::practical) eta = practical_eta(s, est, kernel);
          const DistributionEstimate ph = build_phat(s, est, eta, cfg.distribution.radius);
          const W2Report w = w2_upper_bound_check(g, g2, ph, est.grid, kernel, 1e-9, topt);
          std::string row = row_prefix(cfg, r) + "ok," + csv_number(w.w2_risk) + "," + csv_number(w.bias_term) +
                            "," + csv_number(w.w2_smoothed) + "," + csv_number(std::sqrt(w.villani_bound)) +
                            "," + (w.bound_holds ? "1" : "0") + "," + csv_number(ph.mask_mass) + "," +
                            csv_number(ph.c_n) + "," + csv_number(ph.eta) + "," + csv_number(ph.h) + "\n";
          return {row, true, {w.w2_risk, ph.mask_mass}};
        });
      },
      "fixture,n,seed,status,W2_risk,bias_term,W2_smoothed,villani_sqrt,bound_holds,mask_mass,c_n,eta,h\n",
      {"w2_risk", "mask_mass"}, "w2.csv", art);
}

void run_lower_bound(const RunConfig& cfg, Artifacts& art) {
  std::vector<double> tv(cfg.gammas.size());
  parallel_for(tv.size(), [&](std::size_t i) { tv[i] = tv_two_points(cfg.gammas[i], cfg.tv); });
  std::string csv = "gamma,tv\n", plot = "x,y,y_lo,y_hi\n";
  for (std::size_t i = 0; i < tv.size(); ++i) {
    csv += csv_number(cfg.gammas[i]) + "," + csv_number(tv[i]) + "\n";
    plot += csv_number(cfg.gammas[i]) + "," + csv_number(tv[i]) + "," + csv_number(tv[i]) + "," +
            csv_number(tv[i]) + "\n";
  }
  art.files["tv.csv"] = csv;
  art.files["plotdata/tv.csv"] = plot;
}

PointSet genericity_cloud(const RunConfig& cfg) {
  const GenericityConfig& g = cfg.genericity;
  if (g.cloud == "fixture") return truth_set(cfg.fixture.signal);
  // equispaced on the boundary of [-1, 1]^2
  PointSet p(2);
  for (std::size_t i = 0; i < g.per_side; ++i) {
    const double s = -1.0 + 2.0 * double(i) / double(g.per_side);
    p.push_back(std::vector<double>{s, -1.0});
    p.push_back(std::vector<double>{1.0, s});
    p.push_back(std::vector<double>{-s, 1.0});
    p.push_back(std::vector<double>{-1.0, -s});
  }
  return p;
}

void run_genericity(const RunConfig& cfg, Artifacts& art) {
  const GenericityConfig& g = cfg.genericity;
  const PointSet cloud = genericity_cloud(cfg);
  const std::size_t D = cloud.dims();
  const std::size_t d1 = g.cloud == "fixture" ? cfg.fixture.d1 : 1;
  std::string trials = "seed,trial,b1,b2\n";
  std::string summary = "seed,points,trials,r,delta,fraction,unperturbed_b1,unperturbed_b2,max_displacement,displacement_bound\n";
  const GenericityResult base = genericity_mc(cloud, 1, 0.0, 0, d1, g.delta, g.tol_unique);
  for (std::uint64_t s : cfg.seeds) {
    const std::uint64_t seed = derive_seed({cfg.master_seed, fnv1a("genericity"), s});
    const GenericityResult res = genericity_mc(cloud, g.trials, g.r, seed, d1, g.delta, g.tol_unique);
    for (std::size_t t = 0; t < res.b1.size(); ++t)
      trials += std::to_string(s) + "," + std::to_string(t) + "," + (res.b1[t] ? "1" : "0") + "," +
                (res.b2[t] ? "1" : "0") + "\n";
    // displacement of the first trial's tiling on the whole cloud
    const PerturbedTiling tiling(D, g.delta, g.r, derive_seed({seed, 0}));
    const PointSet moved = apply_perturbation(tiling, cloud);
    double worst = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) worst = std::max(worst, distance(cloud[i], moved[i]));
    summary += std::to_string(s) + "," + std::to_string(cloud.size()) + "," + std::to_string(g.trials) + "," +
               csv_number(g.r) + "," + csv_number(g.delta) + "," + csv_number(res.fraction) + "," +
               (base.b1[0] ? "1" : "0") + "," + (base.b2[0] ? "1" : "0") + "," + csv_number(worst) + "," +
               csv_number(g.r * std::sqrt(double(D))) + "\n";
  }
  art.files["genericity_trials.csv"] = trials;
  art.files["genericity.csv"] = summary;
}

void run_kernel_diagnostics(const RunConfig& cfg, Artifacts& art) {
  const KernelDiagConfig& k = cfg.kernel;
  std::string csv =
      "A,dims,h,integral,l2_norm_h,normalization,c_A,d_A,beta_A,second_moment,out_of_ball_ratio,r_cut\n";
  for (double A : k.A)
    for (std::size_t D : k.dims) {
      const RadialKernel kernel = RadialKernel::build(A, D);
      const auto& r = kernel.radius_grid();
      for (double h : k.h) {
        // radial trapezoid of psi_{A,h} on the scaled table
        double integral = 0.0;
        for (std::size_t i = 1; i < r.size(); ++i) {
          Point a(D, 0.0), b(D, 0.0);
          a[0] = h * r[i - 1];
          b[0] = h * r[i];
          const double fa = kernel.eval_psi(h, a) * std::pow(a[0], double(D - 1));
          const double fb = kernel.eval_psi(h, b) * std::pow(b[0], double(D - 1));
          integral += 0.5 * (fa + fb) * (b[0] - a[0]);
        }
        integral *= unit_sphere_area(D);
        csv += csv_number(A) + "," + std::to_string(D) + "," + csv_number(h) + "," + csv_number(integral) + "," +
               csv_number(kernel.l2_norm() * std::pow(h, -0.5 * double(D))) + "," +
               csv_number(kernel.normalization()) + "," + csv_number(kernel.c_A()) + "," +
               csv_number(kernel.d_A()) + "," + csv_number(kernel.beta_A()) + "," +
               csv_number(kernel.second_moment()) + "," + csv_number(kernel.out_of_ball_ratio()) + "," +
               csv_number(kernel.r_cut()) + "\n";
      }
    }
  art.files["kernel.csv"] = csv;
}

}  // namespace

std::string to_string(Command c) {
  for (const auto& [k, name] : command_names())
    if (k == c) return name;
  return "unknown";
}

Command parse_command(const std::string& s) {
  for (const auto& [k, name] : command_names())
    if (name == s) return k;
  throw InvalidArgument("unknown command '" + s + "'");
}

std::string FixtureConfig::name() const { return to_string(signal.kind) + "-" + to_string(noise.kind); }

void RunConfig::validate() const {
  fixture.signal.validate();
  fixture.noise.validate();
  const std::size_t D = fixture.signal.dims;
  if (fixture.d1 < 1 || fixture.d1 >= D) throw InvalidArgument("fixture.d1 must satisfy 1 <= d1 < D");
  cls.validate();
  support.validate(D);
  lepski.validate();
  if (lepski.A != support.A) throw InvalidArgument("lepski.A must equal schedule.A");
  if (window && window->kind == Window::Kind::box && window->lower.size() != D)
    throw InvalidArgument("window dimension does not match the fixture");
  if (uses_replicates(command)) {
    if (n.empty()) throw InvalidArgument("n list is empty");
    for (std::size_t k : n)
      if (k < 16) throw InvalidArgument("every n must be at least 16");
  }
  if (seeds.empty() && (uses_replicates(command) || command == Command::genericity))
    throw InvalidArgument("seeds list is empty");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw InvalidArgument("seeds list has duplicates");
  if (std::set<std::size_t>(n.begin(), n.end()).size() != n.size()) throw InvalidArgument("n list has duplicates");
  if (command == Command::adapt) {
    if (!window) throw InvalidArgument("adapt needs a window (or grid bounds)");
    if (std::find(lepski.kappa_grid.begin(), lepski.kappa_grid.end(), kappa_true) == lepski.kappa_grid.end())
      throw InvalidArgument("lepski.kappa_true must be on the kappa grid");
  }
  if (distribution.eta < 0 || distribution.radius < 0) throw InvalidArgument("distribution.eta and radius must be non-negative");
  if (distribution.truth_draws < 1) throw InvalidArgument("distribution.truth_draws must be positive");
  if (genericity.cloud != "square_boundary" && genericity.cloud != "fixture")
    throw InvalidArgument("genericity.cloud must be square_boundary or fixture");
  if (genericity.trials < 1) throw InvalidArgument("genericity.trials must be positive");
  if (genericity.per_side < 1) throw InvalidArgument("genericity.per_side must be positive");
  if (genericity.r < 0 || !(genericity.delta > 0)) throw InvalidArgument("genericity needs r >= 0 and delta > 0");
  if (command == Command::genericity) {
    const std::size_t gd = genericity.cloud == "fixture" ? D : 2;
    if (genericity.r > kuhn_r0(gd) * genericity.delta)
      throw InvalidArgument("perturbation radius exceeds validated bound");
  }
  if (gammas.empty()) throw InvalidArgument("lower_bound.gammas is empty");
  for (double g : gammas)
    if (!(g > 0)) throw InvalidArgument("lower_bound.gammas must be positive");
  if (!(tv.c > 0 && tv.alpha > 0 && tv.delta > 0 && tv.delta < 1 && tv.half_width > 0) || tv.grid < 3 ||
      tv.u_nodes < 2)
    throw InvalidArgument("invalid lower_bound parameters");
  if (kernel.A.empty() || kernel.dims.empty() || kernel.h.empty()) throw InvalidArgument("kernel lists must be non-empty");
  for (double a : kernel.A)
    if (!(a > 0)) throw InvalidArgument("kernel.A must be positive");
  for (std::size_t d : kernel.dims)
    if (d < 1) throw InvalidArgument("kernel.dims must be positive");
  for (double h : kernel.h)
    if (!(h > 0)) throw InvalidArgument("kernel.h must be positive");
}

RunConfig parse_config(const json& input) {
  const json* jp = &input;
  if (input.is_object() && input.contains("library_version") && input.contains("config")) jp = &input.at("config");
  Section top(*jp, "");
  RunConfig c;
  std::string command;
  top.text("command", command);
  if (!command.empty()) c.command = parse_command(command);
  top.seed("master_seed", c.master_seed);
  top.counts("n", c.n);
  top.counts("seeds", c.seeds);
  std::string mode = "practical";
  top.text("mode", mode);
  if (mode == "practical") c.support.mode = ScheduleMode::practical;
  else if (mode == "paper") c.support.mode = ScheduleMode::asymptotic;
  else throw InvalidArgument("mode must be paper or practical");

  if (auto s = top.child("fixture")) {
    std::string kind = to_string(c.fixture.signal.kind), noise = to_string(c.fixture.noise.kind);
    s->text("signal", kind);
    c.fixture.signal.kind = parse_signal_kind(kind);
    s->count("dims", c.fixture.signal.dims);
    s->number("radius", c.fixture.signal.radius);
    s->integer("wiggly_index", c.fixture.signal.wiggly_index);
    s->number("gamma", c.fixture.signal.gamma);
    s->number("alpha", c.fixture.signal.alpha);
    s->number("delta", c.fixture.signal.delta);
    s->count("truth_points", c.fixture.signal.truth_points);
    s->text("noise", noise);
    c.fixture.noise.kind = parse_noise_kind(noise);
    s->number("noise_scale", c.fixture.noise.scale);
    s->count("d1", c.fixture.d1);
    s->finish();
  }
  if (auto s = top.child("class")) {
    s->number("rho", c.cls.rho);
    s->number("S", c.cls.S);
    s->number("nu_est", c.cls.nu_est);
    std::string h = c.cls.h_constraint == HConstraint::all ? "all" : "slice";
    s->text("h_constraint", h);
    if (h == "all") c.cls.h_constraint = HConstraint::all;
    else if (h == "slice") c.cls.h_constraint = HConstraint::slice;
    else throw InvalidArgument("class.h_constraint must be all or slice");
    s->finish();
  }
  SupportParams& p = c.support;
  if (auto s = top.child("schedule")) {
    s->number("kappa", p.kappa);
    s->number("A", p.A);
    s->number("c_h", p.c_h);
    s->number("ell", p.ell);
    s->count("d", p.d);
    s->number("a", p.a_std);
    s->integer("m", p.m);
    s->integer("m_fit", p.m_fit);
    s->number("h", p.h);
    s->number("h_rel", p.h_rel);
    s->count("h_reference_n", p.h_reference_n);
    s->number("lambda", p.lambda);
    s->number("lambda_rel", p.lambda_rel);
    s->number("nu_factor", p.nu_factor);
    s->flag("rescale_oversized_h", p.rescale_oversized_h);
    s->finish();
  }
  c.lepski.A = p.A;
  const std::size_t D = c.fixture.signal.dims;
  if (auto s = top.child("grid")) {
    std::optional<double> lo, hi;
    s->number("lo", lo);
    s->number("hi", hi);
    s->count("points", p.grid_points);
    s->number("inflate", p.grid_inflate);
    s->count("ghat_order", p.ghat_order);
    s->finish();
    if (lo.has_value() != hi.has_value()) throw InvalidArgument("grid.lo and grid.hi go together");
    if (lo) {
      if (!(*lo < *hi)) throw InvalidArgument("grid.lo must be below grid.hi");
      p.eval_grid = GridSpec::cube(D, *lo, *hi, p.grid_points);
    }
  }
  if (auto s = top.child("optimizer")) {
    OptimizerConfig& o = c.optimizer;
    s->count("starts", o.starts);
    s->count("max_iter", o.max_iter);
    s->number("tol", o.tol);
    s->number("perturbation", o.perturbation);
    s->count("quadrature_order", o.quadrature.order);
    s->count("quadrature_panels", o.quadrature.panels);
    s->finish();
    if (o.starts < 1 || o.max_iter < 1 || o.quadrature.order < 2 || o.quadrature.panels < 1)
      throw InvalidArgument("invalid optimizer settings");
  }
  if (auto s = top.child("window")) {
    const json* lo = s->find("lo");
    const json* hi = s->find("hi");
    s->finish();
    if (!lo || !hi) throw InvalidArgument("window needs lo and hi");
    c.window = Window::make_box(bound_vector(*lo, D, "window.lo"), bound_vector(*hi, D, "window.hi"));
  } else if (p.eval_grid) {
    c.window = Window::make_box(p.eval_grid->lower, p.eval_grid->upper);
  }
  if (auto s = top.child("lepski")) {
    s->number("kappa0", c.lepski.kappa0);
    s->numbers("kappa_grid", c.lepski.kappa_grid);
    s->number("c_sigma", c.lepski.c_sigma);
    s->number("h_exponent", c.lepski.h_exponent);
    s->number("kappa_true", c.kappa_true);
    s->finish();
  }
  if (auto s = top.child("distribution")) {
    s->number("eta", c.distribution.eta);
    s->number("radius", c.distribution.radius);
    s->count("truth_draws", c.distribution.truth_draws);
    s->count("max_atoms", c.distribution.max_atoms);
    s->finish();
  }
  if (auto s = top.child("genericity")) {
    s->text("cloud", c.genericity.cloud);
    s->count("per_side", c.genericity.per_side);
    s->count("trials", c.genericity.trials);
    s->number("r", c.genericity.r);
    s->number("delta", c.genericity.delta);
    s->number("tol_unique", c.genericity.tol_unique);
    s->finish();
  }
  if (auto s = top.child("lower_bound")) {
    s->numbers("gammas", c.gammas);
    s->number("c", c.tv.c);
    s->number("alpha", c.tv.alpha);
    s->number("delta", c.tv.delta);
    s->number("half_width", c.tv.half_width);
    s->count("grid", c.tv.grid);
    s->count("u_nodes", c.tv.u_nodes);
    s->finish();
  }
  if (auto s = top.child("kernel")) {
    s->numbers("A", c.kernel.A);
    s->counts("dims", c.kernel.dims);
    s->numbers("h", c.kernel.h);
    s->finish();
  }
  top.finish();
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

json config_to_json(const RunConfig& c) {
  const SupportParams& p = c.support;
  json j;
  j["command"] = to_string(c.command);
  j["master_seed"] = c.master_seed;
  j["n"] = c.n;
  j["seeds"] = c.seeds;
  j["mode"] = p.mode == ScheduleMode::practical ? "practical" : "paper";
  const SignalSpec& s = c.fixture.signal;
  j["fixture"] = {{"signal", to_string(s.kind)},   {"dims", s.dims},
                  {"radius", s.radius},            {"wiggly_index", s.wiggly_index},
                  {"gamma", s.gamma},              {"alpha", s.alpha},
                  {"delta", s.delta},              {"truth_points", s.truth_points},
                  {"noise", to_string(c.fixture.noise.kind)}, {"noise_scale", c.fixture.noise.scale},
                  {"d1", c.fixture.d1}};
  j["class"] = {{"rho", c.cls.rho},
                {"S", c.cls.S},
                {"nu_est", c.cls.nu_est},
                {"h_constraint", c.cls.h_constraint == HConstraint::all ? "all" : "slice"}};
  j["schedule"] = {{"kappa", p.kappa},
                   {"A", p.A},
                   {"c_h", p.c_h},
                   {"ell", p.ell},
                   {"d", p.d},
                   {"a", p.a_std},
                   {"m", optional_json(p.m)},
                   {"m_fit", optional_json(p.m_fit)},
                   {"h", optional_json(p.h)},
                   {"h_rel", p.h_rel},
                   {"h_reference_n", optional_json(p.h_reference_n)},
                   {"lambda", optional_json(p.lambda)},
                   {"lambda_rel", p.lambda_rel},
                   {"nu_factor", p.nu_factor},
                   {"rescale_oversized_h", p.rescale_oversized_h}};
  j["grid"] = {{"lo", p.eval_grid ? json(p.eval_grid->lower[0]) : json(nullptr)},
               {"hi", p.eval_grid ? json(p.eval_grid->upper[0]) : json(nullptr)},
               {"points", p.grid_points},
               {"inflate", p.grid_inflate},
               {"ghat_order", p.ghat_order}};
  j["optimizer"] = {{"starts", c.optimizer.starts},
                    {"max_iter", c.optimizer.max_iter},
                    {"tol", c.optimizer.tol},
                    {"perturbation", c.optimizer.perturbation},
                    {"quadrature_order", c.optimizer.quadrature.order},
                    {"quadrature_panels", c.optimizer.quadrature.panels}};
  if (c.window) j["window"] = {{"lo", c.window->lower}, {"hi", c.window->upper}};
  j["lepski"] = {{"kappa0", c.lepski.kappa0},
                 {"kappa_grid", c.lepski.kappa_grid},
                 {"c_sigma", c.lepski.c_sigma},
                 {"h_exponent", c.lepski.h_exponent},
                 {"kappa_true", c.kappa_true}};
  j["distribution"] = {{"eta", c.distribution.eta},
                       {"radius", c.distribution.radius},
                       {"truth_draws", c.distribution.truth_draws},
                       {"max_atoms", c.distribution.max_atoms}};
  j["genericity"] = {{"cloud", c.genericity.cloud}, {"per_side", c.genericity.per_side},
                     {"trials", c.genericity.trials}, {"r", c.genericity.r},
                     {"delta", c.genericity.delta}, {"tol_unique", c.genericity.tol_unique}};
  j["lower_bound"] = {{"gammas", c.gammas},         {"c", c.tv.c},
                      {"alpha", c.tv.alpha},         {"delta", c.tv.delta},
                      {"half_width", c.tv.half_width}, {"grid", c.tv.grid},
                      {"u_nodes", c.tv.u_nodes}};
  j["kernel"] = {{"A", c.kernel.A}, {"dims", c.kernel.dims}, {"h", c.kernel.h}};
  return j;
}

std::uint64_t replicate_seed(const RunConfig& cfg, std::size_t n, std::uint64_t replicate) {
  return derive_seed({cfg.master_seed, fnv1a(cfg.fixture.name()), n, replicate});
}

Artifacts execute(const RunConfig& cfg) {
  cfg.validate();
  Artifacts art;
  switch (cfg.command) {
    case Command::estimate_cf:
    case Command::estimate_support:
    case Command::adapt:
    case Command::estimate_distribution: {
      const RadialKernel kernel = RadialKernel::build(cfg.support.A, cfg.fixture.signal.dims);
      if (cfg.command == Command::estimate_cf) run_estimate_cf(cfg, kernel, art);
      else if (cfg.command == Command::estimate_support) run_estimate_support(cfg, kernel, art);
      else if (cfg.command == Command::adapt) run_adapt(cfg, kernel, art);
      else run_estimate_distribution(cfg, kernel, art);
      break;
    }
    case Command::lower_bound_check: run_lower_bound(cfg, art); break;
    case Command::genericity: run_genericity(cfg, art); break;
    case Command::kernel_diagnostics: run_kernel_diagnostics(cfg, art); break;
  }
  json reps = json::array();
  if (uses_replicates(cfg.command))
    for (const Replicate& r : replicates(cfg))
      reps.push_back({{"fixture", cfg.fixture.name()}, {"n", r.n}, {"seed", r.index}, {"replicate_seed", r.seed}});
  json files = json::array();
  for (const auto& [name, body] : art.files) files.push_back(name);
  art.manifest = {{"library_version", kLibraryVersion},
                  {"config", config_to_json(cfg)},
                  {"replicates", reps},
                  {"files", files},
                  {"failed_replicates", art.failed}};
  return art;
}

void write_artifacts(const std::filesystem::path& dir, const Artifacts& a, const std::string& timestamp) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "plotdata");
  for (const auto& [name, body] : a.files) {
    std::ofstream out(dir / name, std::ios::binary);
    out << body;
    if (!out) throw NumericalError("cannot write " + (dir / name).string());
  }
  json m = a.manifest;
  m["created"] = timestamp;
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  out << m.dump(2) << "\n";
  if (!out) throw NumericalError("cannot write manifest");
}

Quartiles quartiles(std::vector<double> v) {
  if (v.empty()) throw InvalidArgument("no values");
  std::sort(v.begin(), v.end());
  const auto at = [&](double q) {
    const double pos = q * double(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - double(lo);
    if (frac == 0.0 || v[lo] == v[hi]) return v[lo];
    return v[lo] + frac * (v[hi] - v[lo]);
  };
  return {at(0.25), at(0.5), at(0.75)};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string csv_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace blinddeconv
