#include "blinddeconv/wasserstein.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include "blinddeconv/parallel.hpp"

namespace blinddeconv {

namespace {

// Network simplex on the complete bipartite graph rows -> columns with an
// artificial root joined to every node. Tree arcs are kept in adjacency
// lists; after each pivot only the re-hung subtree is relabelled.
class TransportSimplex {
public:
  TransportSimplex(const std::vector<double>& a, const std::vector<double>& b,
                   const std::vector<double>& cost)
      : n1_(a.size()), n2_(b.size()), arcs_(n1_ * n2_), nodes_(n1_ + n2_), root_(nodes_),
        cost_(cost) {
    double max_cost = 0.0;
    for (double c : cost_) max_cost = std::max(max_cost, std::abs(c));
    tol_ = 1e-13 * (1.0 + max_cost);
    art_cost_ = (max_cost + 1.0) * static_cast<double>(nodes_ + 1);
    flow_.assign(arcs_ + nodes_, 0.0);
    state_.assign(arcs_, 1);
    parent_.assign(nodes_ + 1, root_);
    pred_.assign(nodes_ + 1, 0);
    forward_.assign(nodes_ + 1, 1);
    depth_.assign(nodes_ + 1, 1);
    pi_.assign(nodes_ + 1, 0.0);
    adj_.assign(nodes_ + 1, {});
    art_forward_.assign(nodes_, 1);
    depth_[root_] = 0;
    for (std::size_t u = 0; u < nodes_; ++u) {
      const double supply = u < n1_ ? a[u] : -b[u - n1_];
      const std::size_t e = arcs_ + u;
      pred_[u] = e;
      adj_[u].push_back(e);
      adj_[root_].push_back(e);
      if (supply >= 0) {
        art_forward_[u] = 1;
        forward_[u] = 1;
        flow_[e] = supply;
      } else {
        art_forward_[u] = 0;
        forward_[u] = 0;
        flow_[e] = -supply;
        pi_[u] = art_cost_;
      }
    }
    block_ = std::max<std::size_t>(10, static_cast<std::size_t>(std::ceil(std::sqrt(double(arcs_)))));
  }

  std::size_t run(std::size_t max_pivots) {
    std::size_t pivots = 0;
    std::size_t in = 0;
    while (find_entering(in)) {
      if (++pivots > max_pivots) throw NumericalError("transport simplex pivot limit reached");
      pivot(in);
    }
    double leftover = 0.0;
    for (std::size_t u = 0; u < nodes_; ++u) leftover += flow_[arcs_ + u];
    if (leftover > 1e-9) throw NumericalError("transport problem is infeasible");
    return pivots;
  }

  double flow(std::size_t e) const { return flow_[e]; }

private:
  std::size_t n1_, n2_, arcs_, nodes_, root_;
  const std::vector<double>& cost_;
  double tol_ = 0.0, art_cost_ = 0.0;
  std::vector<double> flow_;
  std::vector<signed char> state_;  // 1 at lower bound, 0 in the tree
  std::vector<std::size_t> parent_, pred_, depth_;
  std::vector<signed char> forward_;  // pred arc points from the node to its parent
  std::vector<double> pi_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<signed char> art_forward_;
  std::size_t block_ = 10, next_arc_ = 0;

  std::size_t source(std::size_t e) const {
    if (e < arcs_) return e / n2_;
    const std::size_t u = e - arcs_;
    return art_forward_[u] ? u : root_;
  }
  std::size_t target(std::size_t e) const {
    if (e < arcs_) return n1_ + e % n2_;
    const std::size_t u = e - arcs_;
    return art_forward_[u] ? root_ : u;
  }
  double arc_cost(std::size_t e) const {
    if (e < arcs_) return cost_[e];
    return art_forward_[e - arcs_] ? 0.0 : art_cost_;
  }
  double reduced(std::size_t e) const {
    return state_[e] * (cost_[e] + pi_[e / n2_] - pi_[n1_ + e % n2_]);
  }

  bool find_entering(std::size_t& in) {
    double best = 0.0;
    std::size_t count = block_;
    for (std::size_t step = 0; step < arcs_; ++step) {
      const std::size_t e = (next_arc_ + step) % arcs_;
      const double c = reduced(e);
      if (c < best) {
        best = c;
        in = e;
      }
      if (--count == 0) {
        if (best < -tol_) {
          next_arc_ = (e + 1) % arcs_;
          return true;
        }
        count = block_;
      }
    }
    if (best < -tol_) {
      next_arc_ = (in + 1) % arcs_;
      return true;
    }
    return false;
  }

  void pivot(std::size_t in) {
    const std::size_t first = source(in), second = target(in);
    std::size_t u = first, v = second;
    while (u != v) {
      if (depth_[u] >= depth_[v]) u = parent_[u];
      else v = parent_[v];
    }
    const std::size_t join = u;

    double delta = INFINITY;
    std::size_t u_out = root_;
    int side = 0;
    for (u = first; u != join; u = parent_[u])
      if (forward_[u] && flow_[pred_[u]] < delta) {
        delta = flow_[pred_[u]];
        u_out = u;
        side = 1;
      }
    for (u = second; u != join; u = parent_[u])
      if (!forward_[u] && flow_[pred_[u]] <= delta) {
        delta = flow_[pred_[u]];
        u_out = u;
        side = 2;
      }
    if (side == 0) throw NumericalError("unbounded transport cycle");

    if (delta > 0) {
      flow_[in] += delta;
      for (u = first; u != join; u = parent_[u]) {
        double& f = flow_[pred_[u]];
        f += forward_[u] ? -delta : delta;
      }
      for (u = second; u != join; u = parent_[u]) {
        double& f = flow_[pred_[u]];
        f += forward_[u] ? delta : -delta;
      }
    }
    const std::size_t out = pred_[u_out];
    flow_[out] = 0.0;
    if (out < arcs_) state_[out] = 1;
    state_[in] = 0;
    erase_arc(u_out, out);
    erase_arc(parent_[u_out], out);
    adj_[first].push_back(in);
    adj_[second].push_back(in);

    const std::size_t top = side == 1 ? first : second;
    const std::size_t hang = side == 1 ? second : first;
    relabel(top, hang, in);
  }

  void erase_arc(std::size_t node, std::size_t e) {
    auto& list = adj_[node];
    const auto it = std::find(list.begin(), list.end(), e);
    *it = list.back();
    list.pop_back();
  }

  void attach(std::size_t u, std::size_t p, std::size_t e) {
    parent_[u] = p;
    pred_[u] = e;
    forward_[u] = source(e) == u;
    depth_[u] = depth_[p] + 1;
    pi_[u] = forward_[u] ? pi_[p] - arc_cost(e) : pi_[p] + arc_cost(e);
  }

  void relabel(std::size_t top, std::size_t p, std::size_t e) {
    attach(top, p, e);
    std::vector<std::size_t> stack{top};
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t f : adj_[u]) {
        if (f == pred_[u]) continue;
        const std::size_t w = source(f) == u ? target(f) : source(f);
        attach(w, u, f);
        stack.push_back(w);
      }
    }
  }
};

}  // namespace

TransportPlan solve_transport(const std::vector<double>& a, const std::vector<double>& b,
                              const std::vector<double>& cost, std::size_t max_pivots) {
  if (a.empty() || b.empty()) throw InvalidArgument("empty marginal");
  if (cost.size() != a.size() * b.size()) throw InvalidArgument("cost matrix size mismatch");
  const double sa = std::accumulate(a.begin(), a.end(), 0.0);
  const double sb = std::accumulate(b.begin(), b.end(), 0.0);
  if (std::abs(sa - sb) > 1e-9 * std::max(sa, sb)) throw InvalidArgument("marginals have different mass");
  for (double w : a)
    if (!(w >= 0)) throw InvalidArgument("negative weight");
  for (double w : b)
    if (!(w >= 0)) throw InvalidArgument("negative weight");
  std::vector<double> bb = b;
  for (double& w : bb) w *= sa / sb;

  TransportSimplex simplex(a, bb, cost);
  TransportPlan plan;
  plan.pivots = simplex.run(max_pivots);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      const std::size_t e = i * b.size() + j;
      const double f = simplex.flow(e);
      if (f <= 0) continue;
      plan.rows.push_back(i);
      plan.cols.push_back(j);
      plan.mass.push_back(f);
      plan.cost += f * cost[e];
    }
  return plan;
}

double wasserstein_p(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p,
                     const TransportOptions& opt) {
  if (!(p >= 1)) throw InvalidArgument("p must be at least 1");
  if (mu.support.dims() != nu.support.dims()) throw InvalidArgument("dimension mismatch");
  const DiscreteMeasure m1 = mu.pruned(), m2 = nu.pruned();
  if (m1.size() == 0 || m2.size() == 0) throw InvalidArgument("empty measure");
  if (m1.size() > opt.max_atoms || m2.size() > opt.max_atoms)
    throw InvalidArgument("measure exceeds the transport atom budget; coarsen the grid");
  const std::size_t n1 = m1.size(), n2 = m2.size();
  std::vector<double> cost(n1 * n2);
  parallel_for(n1, [&](std::size_t i) {
    for (std::size_t j = 0; j < n2; ++j) {
      const double d = distance(m1.support[i], m2.support[j]);
      cost[i * n2 + j] = p == 1 ? d : p == 2 ? d * d : std::pow(d, p);
    }
  });
  const auto total = [](const std::vector<double>& w) { return std::accumulate(w.begin(), w.end(), 0.0); };
  std::vector<double> a = m1.weights, b = m2.weights;
  const double ta = total(a), tb = total(b);
  for (double& w : a) w /= ta;
  for (double& w : b) w /= tb;
  const TransportPlan plan = solve_transport(a, b, cost, opt.max_pivots);
  return std::pow(std::max(plan.cost, 0.0), 1.0 / p);
}

DiscreteMeasure grid_measure(const GridSpec& grid, const std::vector<double>& values) {
  if (values.size() != grid.total()) throw InvalidArgument("values do not match the grid");
  PointSet pts(grid.dims());
  std::vector<double> w;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!(values[k] > 0)) continue;
    pts.push_back(grid.point(k));
    w.push_back(values[k] * grid.cell_volume());
  }
  if (w.empty()) throw NumericalError("degenerate estimate");
  DiscreteMeasure m(pts, w);
  m.normalize();
  return m;
}

DistributionEstimate build_phat(const Sample& sample, const SupportEstimate& est, double eta,
                                double radius) {
  const GridSpec& grid = est.grid;
  if (est.ghat_values.size() != grid.total()) throw InvalidArgument("ghat does not match the grid");
  const double scale = bbox_diagonal(sample.points());
  DistributionEstimate out;
  out.eta = eta > 0 ? eta : 0.1 * scale;
  out.radius = radius > 0 ? radius : 2.0 * scale;
  out.h = est.h;
  out.m = est.m_kappa;

  PointSet cut(grid.dims());
  const Point origin(grid.dims(), 0.0);
  for (std::size_t i = 0; i < est.cells.size(); ++i)
    if (distance(est.cells[i], origin) <= out.radius) cut.push_back(est.cells[i]);
  if (cut.empty()) throw NumericalError("degenerate estimate");
  const NearestNeighbor nn(cut);

  const double vol = grid.cell_volume();
  double masked = 0.0, positive = 0.0;
  out.mask = PointSet(grid.dims());
  PointSet atoms(grid.dims());
  std::vector<double> w;
  for (std::size_t k = 0; k < grid.total(); ++k) {
    const Point x = grid.point(k);
    const double g = std::max(est.ghat_values[k], 0.0) * vol;
    positive += g;
    if (nn.distance(x) > out.eta) continue;
    out.mask.push_back(x);
    masked += g;
    if (g > 0) {
      atoms.push_back(x);
      w.push_back(g);
    }
  }
  if (!(masked > 0)) throw NumericalError("degenerate estimate");
  out.c_n = 1.0 / masked;
  out.mask_mass = masked / positive;
  out.measure = DiscreteMeasure(atoms, w);
  out.measure.normalize();
  return out;
}

double practical_eta(const Sample& sample, const SupportEstimate& est, const RadialKernel& kernel) {
  return 0.1 * bbox_diagonal(sample.points()) + kernel.c_A() * est.h;
}

W2Report w2_upper_bound_check(const DiscreteMeasure& g, const DiscreteMeasure& g2,
                              const DistributionEstimate& phat, const GridSpec& grid,
                              const RadialKernel& kernel, double tol, const TransportOptions& opt) {
  W2Report r;
  const std::vector<double> smooth = gbar_on_grid(g, kernel, phat.h, grid);
  const DiscreteMeasure p_psi = grid_measure(grid, smooth);
  r.w2_risk = wasserstein_p(g, phat.measure, 2.0, opt);
  r.bias_term = wasserstein_p(g, p_psi, 2.0, opt);
  r.w2_smoothed = wasserstein_p(p_psi, phat.measure, 2.0, opt);
  if (g2.size() > 0) r.discretization = wasserstein_p(g, g2, 2.0, opt);

  // both measures live on grid nodes; pair them through the node coordinates
  std::map<Point, double> signed_mass;
  for (std::size_t i = 0; i < p_psi.size(); ++i)
    signed_mass[Point(p_psi.support[i].begin(), p_psi.support[i].end())] += p_psi.weights[i];
  for (std::size_t i = 0; i < phat.measure.size(); ++i)
    signed_mass[Point(phat.measure.support[i].begin(), phat.measure.support[i].end())] -= phat.measure.weights[i];
  std::vector<Point> nodes;
  std::vector<double> diff;
  for (const auto& [x, w] : signed_mass) {
    nodes.push_back(x);
    diff.push_back(w);
  }
  const std::size_t D = grid.dims();
  Point center(D, 0.0);
  double mass = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const double w = std::abs(diff[k]);
    mass += w;
    for (std::size_t a = 0; a < D; ++a) center[a] += w * nodes[k][a];
  }
  if (mass > 0)
    for (double& c : center) c /= mass;
  double bound = 0.0;
  for (std::size_t k = 0; k < nodes.size(); ++k) bound += std::abs(diff[k]) * squared_distance(nodes[k], center);
  r.villani_bound = 2.0 * bound;
  r.bound_holds = r.w2_smoothed <= std::sqrt(r.villani_bound) * (1.0 + tol) + 1e-12;
  return r;
}

std::string w2_csv_header() { return "fixture,n,seed,W2_risk,bias_term,mask_mass,c_n\n"; }

std::string w2_csv_row(const std::string& fixture, std::size_t n, std::uint64_t seed,
                       const W2Report& r, const DistributionEstimate& phat) {
  std::ostringstream out;
  out.precision(17);
  out << fixture << "," << n << "," << seed << "," << r.w2_risk << "," << r.bias_term << ","
      << phat.mask_mass << "," << phat.c_n << "\n";
  return out.str();
}

}  // namespace blinddeconv
