#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "percobound/engine.hpp"
#include "percobound/errors.hpp"
#include "percobound/estimate.hpp"
#include "percobound/graph.hpp"
#include "percobound/packing.hpp"

namespace percobound {

/// (1-c)*eps/c + (1+eps)*(1-c)^k.  Domain is permissive at the edges the
/// formula tolerates: eps = 0 (equality case) and c = 1 (bound 0 for k >= 1).
inline double lemma_bound(double eps, double c, std::uint64_t k) {
  if (!(c > 0.0 && c <= 1.0)) throw parameter_error("c must be in (0,1]");
  if (!(eps >= 0.0 && eps < 1.0)) throw parameter_error("eps must be in [0,1)");
  const double q = 1.0 - c;
  return q * eps / c + (1.0 + eps) * std::pow(q, static_cast<double>(k));
}

// ---------------------------------------------------------------------------
// Grid infimum with the proof's substitution c = 1 - ((1-p)/(1-p1))^(1-eps).
// ---------------------------------------------------------------------------

using PkOracle = std::function<std::uint64_t(double delta, double c)>;

struct TheoremBoundInput {
  double p = 0.0;
  double ptilde_c = 0.0;
  std::vector<double> grid_p1;     // each must lie in (ptilde_c, p)
  std::vector<double> grid_eps;    // in (0,1)
  std::vector<double> grid_delta;  // in (0,1)
  PkOracle oracle;                 // (delta, c) -> certified packing count
  bool prune = true;  // skip the oracle when the additive floor already loses
};

/// Default grid: 8 geometric p1 values spanning (ptilde_c + 0.01, p - 0.01)
/// and eps, delta in {0.05, 0.1, 0.2, 0.4}.
inline TheoremBoundInput default_theorem_grid(double p, double ptilde_c,
                                              int p1_count = 8) {
  if (!(p > 0.0 && p < 1.0 && ptilde_c > 0.0 && ptilde_c < 1.0))
    throw parameter_error("p and ptilde_c must be in (0,1)");
  if (!(p - ptilde_c > 0.02))
    throw parameter_error("need p > ptilde_c + 0.02 for the default grid");
  if (p1_count < 1) throw parameter_error("p1 grid must be nonempty");
  TheoremBoundInput inp;
  inp.p = p;
  inp.ptilde_c = ptilde_c;
  const double a = ptilde_c + 0.01;
  const double b = p - 0.01;
  if (p1_count == 1) {
    inp.grid_p1.push_back(a);
  } else {
    for (int i = 0; i < p1_count; ++i)
      inp.grid_p1.push_back(a * std::pow(b / a, static_cast<double>(i) /
                                                    static_cast<double>(p1_count - 1)));
  }
  inp.grid_eps = {0.05, 0.1, 0.2, 0.4};
  inp.grid_delta = {0.05, 0.1, 0.2, 0.4};
  return inp;
}

struct TheoremGridPoint {
  double p1 = 0.0, eps = 0.0, delta = 0.0;
  double r = 0.0;  // ((1-p)/(1-p1))^(1-eps)
  double c = 0.0;  // 1 - r
  double floor = 0.0;  // delta*(1-c)/c, the k-independent additive term
  bool evaluated = false;  // oracle consulted and value exact
  bool pruned = false;     // value field holds only the floor lower bound
  bool skipped = false;    // constraint violation; warning attached
  std::uint64_t k = 0;
  double value = std::numeric_limits<double>::infinity();
  std::string note;
};

struct TheoremBoundResult {
  double value = std::numeric_limits<double>::infinity();
  TheoremGridPoint argmin;
  std::vector<TheoremGridPoint> points;
  std::vector<std::string> warnings;
};

inline TheoremBoundResult theorem_bound(const TheoremBoundInput& inp) {
  if (!(inp.p > 0.0 && inp.p < 1.0))
    throw parameter_error("p must be in (0,1)");
  if (inp.grid_p1.empty() || inp.grid_eps.empty() || inp.grid_delta.empty())
    throw parameter_error("theorem grid must be nonempty");
  if (!inp.oracle) throw parameter_error("packing oracle is required");

  TheoremBoundResult out;
  std::map<std::pair<double, double>, std::uint64_t> memo;
  auto oracle = [&](double delta, double c) {
    auto key = std::make_pair(delta, c);
    auto it = memo.find(key);
    if (it == memo.end()) it = memo.emplace(key, inp.oracle(delta, c)).first;
    return it->second;
  };

  for (double delta : inp.grid_delta) {
    for (double eps : inp.grid_eps) {
      for (double p1 : inp.grid_p1) {
        TheoremGridPoint pt;
        pt.p1 = p1;
        pt.eps = eps;
        pt.delta = delta;
        if (!(p1 > inp.ptilde_c && p1 < inp.p)) {
          pt.skipped = true;
          pt.note = "skipped: p1 outside (ptilde_c, p)";
          out.warnings.push_back("grid point p1=" + std::to_string(p1) +
                                 " violates p1 in (ptilde_c, p); skipped");
          out.points.push_back(pt);
          continue;
        }
        if (!(eps > 0.0 && eps < 1.0 && delta > 0.0 && delta < 1.0)) {
          pt.skipped = true;
          pt.note = "skipped: eps or delta outside (0,1)";
          out.warnings.push_back("grid point with eps=" + std::to_string(eps) +
                                 ", delta=" + std::to_string(delta) +
                                 " outside (0,1); skipped");
          out.points.push_back(pt);
          continue;
        }
        pt.r = std::pow((1.0 - inp.p) / (1.0 - p1), 1.0 - eps);
        pt.c = 1.0 - pt.r;
        pt.floor = delta * pt.r / (1.0 - pt.r);
        if (inp.prune && pt.floor >= out.value) {
          pt.pruned = true;
          pt.value = pt.floor;  // lower bound on the point's true value
          pt.note = "pruned: additive floor already exceeds the running minimum";
          out.points.push_back(pt);
          continue;
        }
        pt.k = oracle(delta, pt.c);
        pt.value = lemma_bound(delta, pt.c, pt.k);
        // The displayed form of the bound and the substituted form must agree.
        const double direct =
            delta * pt.r / (1.0 - pt.r) +
            (1.0 + delta) * std::pow(pt.r, static_cast<double>(pt.k));
        if (std::abs(direct - pt.value) >
            1e-12 * (1.0 + static_cast<double>(pt.k)))
          throw error("internal invariant violated: substitution identity failed");
        pt.evaluated = true;
        if (pt.value < out.value) {
          out.value = pt.value;
          out.argmin = pt;
        }
        out.points.push_back(pt);
      }
    }
  }
  if (!std::isfinite(out.value))
    throw parameter_error("no admissible grid point: every point was skipped");
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic check of the induction structure behind the k-step bound.
//
// Model: independent coordinates, one per step.  Step i has a nested event
// pair inner_i ⊆ outer_i with
//     P(inner_i) = a_i,   P(outer_i) = a_i + e_i,
// subject to the certified-step constraints
//     a_i + e_i <= 1 - c          (connection condition)
//     e_i       <= eps * a_i      (ball-vs-infinity comparison).
// Exact joint probabilities are products; the check asserts
//     P(all outer) <= lemma_bound(eps, c, k)
// and the intermediate inequality
//     P(all outer) - P(all inner) <= eps * (1-c) / c.
// ---------------------------------------------------------------------------

struct InductionReport {
  std::uint64_t k = 0;
  double c = 0.0, eps = 0.0;
  std::uint64_t seed = 0;
  std::size_t instances = 0;
  bool pass = true;
  // Smallest observed slack of each inequality (negative means violation).
  double min_slack_bound = std::numeric_limits<double>::infinity();
  double min_slack_intermediate = std::numeric_limits<double>::infinity();
};

inline InductionReport induction_check(std::uint64_t k, double c, double eps,
                                       std::uint64_t seed,
                                       std::size_t random_instances = 25) {
  if (k < 1 || k > 20) throw parameter_error("k must be in [1, 20]");
  if (!(c > 0.0 && c < 1.0)) throw parameter_error("c must be in (0,1)");
  if (!(eps >= 0.0 && eps < 1.0)) throw parameter_error("eps must be in [0,1)");

  InductionReport rep;
  rep.k = k;
  rep.c = c;
  rep.eps = eps;
  rep.seed = seed;

  const double bound = lemma_bound(eps, c, k);
  const double intermediate = eps * (1.0 - c) / c;
  auto run_instance = [&](const std::vector<double>& a, const std::vector<double>& e) {
    double p_outer = 1.0, p_inner = 1.0;
    for (std::uint64_t i = 0; i < k; ++i) {
      p_outer *= a[i] + e[i];
      p_inner *= a[i];
    }
    rep.min_slack_bound = std::min(rep.min_slack_bound, bound - p_outer);
    rep.min_slack_intermediate =
        std::min(rep.min_slack_intermediate, intermediate - (p_outer - p_inner));
    rep.instances += 1;
  };

  // Extremal instance: every step saturates both constraints.
  {
    std::vector<double> a(k, (1.0 - c) / (1.0 + eps));
    std::vector<double> e(k);
    for (std::uint64_t i = 0; i < k; ++i) e[i] = eps * a[i];
    run_instance(a, e);
  }
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t t = 0; t < random_instances; ++t) {
    std::vector<double> a(k), e(k);
    for (std::uint64_t i = 0; i < k; ++i) {
      a[i] = unit(gen) * (1.0 - c);
      e[i] = unit(gen) * std::min(eps * a[i], (1.0 - c) - a[i]);
    }
    run_instance(a, e);
  }
  rep.pass = rep.min_slack_bound >= -1e-12 && rep.min_slack_intermediate >= -1e-12;
  return rep;
}

// ---------------------------------------------------------------------------
// End-to-end comparison of the empirical truncated disconnection against both
// bound forms.
// ---------------------------------------------------------------------------

struct VerifyOptions {
  // Direct certificate parameters.
  double eps = 0.2;
  double c = 0.5;
  int d_min = 1;
  int d_max = 3;
  int r_proxy = 16;
  std::size_t spacing = 1;
  PackingRequest::Order order = PackingRequest::Order::origin_distance;
  std::optional<AnalyticWilParams> analytic;
  PhiOptions phi;
  PercolationParams params;
  // Grid parameters.
  double ptilde_c = 0.0;
  int grid_p1_count = 8;
  std::vector<double> grid_eps = {0.05, 0.1, 0.2, 0.4};
  std::vector<double> grid_delta = {0.05, 0.1, 0.2, 0.4};
  bool prune = true;
  // Radius schedule growth factor for the disconnection sweep.
  double radius_growth = 1.5;
};

struct BoundReport {
  bool degenerate = false;
  double p = 0.0;
  std::vector<int> radii;
  std::vector<Estimate> disconnection;  // one per radius, coupled replicas
  Estimate empirical;                   // the largest-radius estimate
  double stabilization_gap = 0.0;       // last two point estimates
  PackingCertificate certificate;      // at (eps, c)
  double lemma_eps = 0.0, lemma_c = 0.0;
  double lemma_rhs = std::numeric_limits<double>::infinity();
  TheoremBoundResult theorem;
  double rhs_min = std::numeric_limits<double>::infinity();
  double slack = 0.0;  // three half-widths of the empirical interval
  std::string verdict;  // "consistent" | "violation_candidate" | "degenerate"
  std::vector<std::string> diagnostics;
};

namespace detail_bounds {

/// Largest radius around the origin whose full interior is stored, i.e. the
/// largest R for which the shell sweep is exact.
inline int max_sweep_radius(const GraphView& view) {
  auto dist = view.distances_from(view.origin(), static_cast<std::uint16_t>(0xfffe));
  int limit = std::numeric_limits<int>::max();
  int max_dist = 0;
  for (std::uint32_t d = 0; d < view.stored_size(); ++d) {
    if (dist[d] == kUnreached) continue;
    max_dist = std::max(max_dist, static_cast<int>(dist[d]));
    if (!view.base().complete(d)) limit = std::min(limit, static_cast<int>(dist[d]));
  }
  // A fully stored finite component has no incomplete vertex: any radius up
  // to the eccentricity is meaningful.
  return limit == std::numeric_limits<int>::max() ? max_dist : limit;
}

}  // namespace detail_bounds

inline BoundReport verify_disconnection(const GraphView& view, const VertexSet& S,
                                        const VerifyOptions& opt) {
  opt.params.validate();
  BoundReport report;
  report.p = opt.params.p;
  if (S.empty()) {
    report.degenerate = true;
    report.verdict = "degenerate";
    report.diagnostics.push_back(
        "S is empty: the disconnection event is the empty intersection, "
        "probability 1 by convention; no comparison performed");
    return report;
  }
  for (VertexId v : S) view.dense_checked(v);
  if (!(opt.radius_growth > 1.0))
    throw parameter_error("radius growth factor must exceed 1");

  // Radius schedule: from just beyond S to the largest exact radius.
  auto dist = view.distances_from(view.origin(), static_cast<std::uint16_t>(0xfffe));
  int r0 = 0;
  for (VertexId v : S) {
    std::uint16_t d = dist[view.base().dense_of(v)];
    if (d == kUnreached)
      throw parameter_error("S must be reachable from the origin in this view");
    r0 = std::max(r0, static_cast<int>(d) + 1);
  }
  const int r_limit = detail_bounds::max_sweep_radius(view);
  if (r0 > r_limit)
    throw truncation_error("truncation too small: S reaches within distance " +
                           std::to_string(r0 - 1) +
                           " of the origin but the stored graph is only exact to " +
                           std::to_string(r_limit));
  std::vector<int> radii;
  for (int r = r0; r < r_limit && radii.size() < 31;) {
    radii.push_back(r);
    r = std::max(r + 1, static_cast<int>(std::ceil(static_cast<double>(r) *
                                                   opt.radius_growth)));
  }
  if (radii.empty() || radii.back() != r_limit) radii.push_back(r_limit);

  DisconnectionSweep sweep =
      truncated_disconnection_sweep(view, S, radii, opt.params);
  report.radii = sweep.radii;
  report.disconnection = sweep.estimates;
  report.empirical = sweep.estimates.back();
  report.stabilization_gap =
      sweep.estimates.size() >= 2
          ? std::abs(sweep.estimates.back().point -
                     sweep.estimates[sweep.estimates.size() - 2].point)
          : 0.0;

  // Direct certificate at (eps, c).
  PackingRequest pack{view, S};
  pack.eps = opt.eps;
  pack.c = opt.c;
  pack.d_min = opt.d_min;
  pack.d_max = opt.d_max;
  pack.r_proxy = opt.r_proxy;
  pack.spacing = opt.spacing;
  pack.order = opt.order;
  pack.params = opt.params;
  pack.analytic = opt.analytic;
  pack.phi = opt.phi;
  report.certificate = certify_packing(pack);
  report.lemma_eps = opt.eps;
  report.lemma_c = opt.c;
  report.lemma_rhs = lemma_bound(opt.eps, opt.c, report.certificate.k);
  if (report.certificate.k == 0)
    report.diagnostics.push_back(
        "packing certificate is empty (k = 0): the k-dependent term equals "
        "1 + eps and the bound is vacuous");

  // Grid infimum with a packing oracle at each substituted (delta, c).
  if (!(opt.ptilde_c > 0.0 && opt.ptilde_c < opt.params.p))
    throw parameter_error("ptilde_c must be in (0, p) for the grid bound");
  TheoremBoundInput grid =
      default_theorem_grid(opt.params.p, opt.ptilde_c, opt.grid_p1_count);
  grid.grid_eps = opt.grid_eps;
  grid.grid_delta = opt.grid_delta;
  grid.prune = opt.prune;
  grid.oracle = [&](double delta, double c) -> std::uint64_t {
    PackingRequest r = pack;
    r.eps = delta;
    r.c = c;
    return certify_packing(r).k;
  };
  report.theorem = theorem_bound(grid);

  report.rhs_min = std::min(report.lemma_rhs, report.theorem.value);
  report.slack = 3.0 * report.empirical.halfwidth();
  const bool consistent = report.empirical.ci_high <= report.rhs_min + report.slack;
  report.verdict = consistent ? "consistent" : "violation_candidate";
  if (!consistent) {
    report.diagnostics.push_back(
        "empirical upper interval " + std::to_string(report.empirical.ci_high) +
        " exceeds the smaller bound " + std::to_string(report.rhs_min) +
        " plus slack " + std::to_string(report.slack));
    report.diagnostics.push_back(
        "one-sided caveats: the empirical value is a truncated lower bound "
        "(the radius window may understate disconnection) and k is a certified "
        "lower bound (the packing search may be too weak); neither side "
        "refutes the inequality");
  }
  return report;
}

}  // namespace percobound
