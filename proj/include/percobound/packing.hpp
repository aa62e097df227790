#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "percobound/engine.hpp"
#include "percobound/errors.hpp"
#include "percobound/estimate.hpp"
#include "percobound/graph.hpp"
#include "percobound/pc.hpp"

namespace percobound {

/// Parameters enabling the analytic route of the connection check: a
/// constraint-validated (p1, eps1) pair plus the audit grid for the
/// local-functional condition on the current punctured view.
struct AnalyticWilParams {
  double p1 = 0.0;
  double eps1 = 0.0;
  double eps = 0.0;       // the epsilon of the constraint set, not the packing one
  double ptilde_c = 0.0;  // threshold estimate the constraints are checked against
  int audit_r_max = 2;
  int audit_q_points = 3;
};

struct PackingRequest {
  PackingRequest(GraphView view_, VertexSet S_)
      : view(std::move(view_)), S(std::move(S_)) {}

  GraphView view;  // the unpunctured starting graph G_0
  VertexSet S;
  // p, seed, replicas, and confidence all live in params.
  double eps = 0.2;
  double c = 0.5;
  int d_min = 1;
  int d_max = 3;
  int r_proxy = 16;
  std::size_t spacing = 1;  // take every spacing-th candidate of the order
  enum class Order { origin_distance, as_given } order = Order::origin_distance;
  PercolationParams params;
  std::optional<AnalyticWilParams> analytic;
  PhiOptions phi;  // used by the analytic audit only

  void validate() const {
    params.validate();
    if (!(eps > 0.0 && eps < 1.0)) throw parameter_error("eps must be in (0,1)");
    if (!(c > 0.0 && c < 1.0)) throw parameter_error("c must be in (0,1)");
    if (d_min < 1) throw parameter_error("d_min must be >= 1");
    if (d_min > d_max) throw parameter_error("d_min must not exceed d_max");
    if (r_proxy <= d_max) throw parameter_error("r_proxy must exceed d_max");
    if (spacing < 1) throw parameter_error("spacing must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Condition checks.  Both consume one coupled shell sweep around the
// candidate: reach counts for every ball radius, the proxy radius R, and the
// stabilization radius 2R come from the same replicas.
// ---------------------------------------------------------------------------

struct CtdCheck {
  int D = 0;
  Estimate q_ball;       // disconnection from the D-shell
  Estimate q_inf_proxy;  // disconnection from the R-proxy shell
  Estimate q_far;        // disconnection from the 2R shell
  // Coupled difference q_inf_proxy - q_ball, exact per replica: the count of
  // replicas reaching the D-shell but not the proxy shell.
  Estimate excess;
  double excess_budget = 0.0;      // eps * lower CI of q_ball
  bool shells_identical = false;   // D-shell and proxy shell are the same set
  bool pass_excess = false;
  bool pass_marginal = false;      // diagnostic: marginal-CI form of the test
  double stabilization_gap = 0.0;  // |q_far - q_inf_proxy| point gap
  double stabilization_limit = 0.0;  // eps * q_ball.point / 4
  bool pass_stabilization = false;
  bool pass = false;
};

struct WilCheck {
  double c = 0.0;
  Estimate conn_proxy;  // connection to the R-proxy shell (upper-bounds
                        // connection to infinity)
  Estimate conn_far;    // connection to the 2R shell
  double stabilization_gap = 0.0;  // conn_proxy.point - conn_far.point, >= 0
  std::string method;              // "analytic" or "proxy"
  std::string status;  // "pass" | "proxy pass" | "fail" | "inconclusive"
  bool pass = false;
  // Analytic route details (when attempted).
  bool analytic_attempted = false;
  bool pepe_pass = false;
  std::vector<std::string> pepe_violations;
  double analytic_bound = std::numeric_limits<double>::quiet_NaN();
  bool audit_holds = false;
};

namespace detail_pack {

struct SweepIndex {
  std::vector<int> radii;
  std::size_t of(int r) const {
    for (std::size_t j = 0; j < radii.size(); ++j)
      if (radii[j] == r) return j;
    throw error("internal: radius missing from sweep");
  }
};

inline bool shells_equal(const ShellSweep& sweep, std::size_t j1, std::size_t j2) {
  const std::uint32_t b1 = 1u << j1, b2 = 1u << j2;
  for (std::uint32_t bits : sweep.shell_bits) {
    if (((bits & b1) != 0) != ((bits & b2) != 0)) return false;
  }
  return true;
}

/// eps >= 0 is accepted here: with structurally identical shells the coupled
/// difference is identically zero and the comparison holds for every eps.
inline CtdCheck ctd_from_counts(const ShellSweep& sweep, const SweepCounts& counts,
                                const SweepIndex& index, int D, int r_proxy,
                                double eps) {
  if (eps < 0.0) throw parameter_error("eps must be >= 0");
  CtdCheck out;
  out.D = D;
  const std::size_t jD = index.of(D);
  const std::size_t jR = index.of(r_proxy);
  const std::size_t jF = index.of(2 * r_proxy);
  out.q_ball = counts.disconnect_estimate(jD);
  out.q_inf_proxy = counts.disconnect_estimate(jR);
  out.q_far = counts.disconnect_estimate(jF);
  const std::uint64_t excess_count =
      counts.connect_counts[jD] - counts.connect_counts[jR];
  out.excess = Estimate::from_counts(excess_count, counts.replicas, counts.confidence);
  out.excess_budget = eps * out.q_ball.ci_low;
  out.shells_identical = shells_equal(sweep, jD, jR);
  out.pass_excess = out.shells_identical || out.excess.ci_high <= out.excess_budget;
  out.pass_marginal = out.q_inf_proxy.ci_high <= (1.0 + eps) * out.q_ball.ci_low;
  out.stabilization_gap = std::abs(out.q_far.point - out.q_inf_proxy.point);
  out.stabilization_limit = eps * out.q_ball.point / 4.0;
  out.pass_stabilization =
      out.shells_identical || out.stabilization_gap <= out.stabilization_limit;
  out.pass = out.pass_excess && out.pass_stabilization;
  return out;
}

inline WilCheck wil_from_counts(const GraphView& view, VertexId w,
                                const SweepCounts& counts, const SweepIndex& index,
                                int r_proxy, double p, double c,
                                const std::optional<AnalyticWilParams>& analytic,
                                const PhiOptions& phi_opts,
                                const PercolationParams& params) {
  WilCheck out;
  out.c = c;
  const std::size_t jR = index.of(r_proxy);
  const std::size_t jF = index.of(2 * r_proxy);
  out.conn_proxy = counts.connect_estimate(jR);
  out.conn_far = counts.connect_estimate(jF);
  out.stabilization_gap = out.conn_proxy.point - out.conn_far.point;

  if (analytic) {
    out.analytic_attempted = true;
    ConstraintCheck pepe =
        check_pepe(p, analytic->p1, analytic->eps, analytic->eps1, analytic->ptilde_c);
    out.pepe_pass = pepe.pass;
    out.pepe_violations = pepe.violations;
    if (pepe.pass) {
      out.analytic_bound = connection_lower_bound(p, analytic->p1, analytic->eps1);
      Wc1AuditOptions audit_opt;
      audit_opt.eps1 = analytic->eps1;
      audit_opt.q_lo = analytic->p1;
      audit_opt.q_hi = p;
      audit_opt.q_points = analytic->audit_q_points;
      audit_opt.r_max = analytic->audit_r_max;
      audit_opt.phi = phi_opts;
      audit_opt.params = params;
      Wc1Audit audit = audit_wc1(view, w, audit_opt);
      out.audit_holds = audit.holds;
      if (audit.holds && out.analytic_bound >= c) {
        out.method = "analytic";
        out.status = "pass";
        out.pass = true;
        return out;
      }
    }
  }

  // Proxy route: connection to the R-proxy shell upper-bounds connection to
  // infinity, so an interval entirely below c is a definitive fail; an
  // interval entirely above c passes only as a proxy, with the stabilization
  // gap attached as the honesty diagnostic.
  out.method = "proxy";
  if (out.conn_proxy.ci_high < c) {
    out.status = "fail";
    out.pass = false;
  } else if (out.conn_proxy.ci_low >= c) {
    out.status = "proxy pass";
    out.pass = true;
  } else {
    out.status = "inconclusive";
    out.pass = false;
  }
  return out;
}

}  // namespace detail_pack

/// One-off evaluation of the ball-vs-proxy disconnection comparison.
inline CtdCheck check_ctd(const GraphView& view, VertexId w, int D, int r_proxy,
                          double p, double eps, const PercolationParams& params) {
  if (D < 1) throw parameter_error("D must be >= 1");
  if (r_proxy <= D) throw parameter_error("r_proxy must exceed D");
  PercolationParams run = params;
  run.p = p;
  detail_pack::SweepIndex index;
  index.radii = {D, r_proxy, 2 * r_proxy};
  ShellSweep sweep = ShellSweep::around(view, w, index.radii);
  SweepCounts counts = shell_sweep_counts(view, VertexSet::of({w}), sweep, run);
  return detail_pack::ctd_from_counts(sweep, counts, index, D, r_proxy, eps);
}

/// One-off evaluation of the connection condition.
inline WilCheck check_wil(const GraphView& view, VertexId w, int r_proxy, double p,
                          double c, const PercolationParams& params,
                          const std::optional<AnalyticWilParams>& analytic = std::nullopt,
                          const PhiOptions& phi_opts = {}) {
  if (r_proxy < 1) throw parameter_error("r_proxy must be >= 1");
  PercolationParams run = params;
  run.p = p;
  detail_pack::SweepIndex index;
  index.radii = {r_proxy, 2 * r_proxy};
  ShellSweep sweep = ShellSweep::around(view, w, index.radii);
  SweepCounts counts = shell_sweep_counts(view, VertexSet::of({w}), sweep, run);
  return detail_pack::wil_from_counts(view, w, counts, index, r_proxy, p, c, analytic,
                                      phi_opts, run);
}

// ---------------------------------------------------------------------------
// Greedy certification.
// ---------------------------------------------------------------------------

struct PackingStep {
  std::size_t index = 0;
  VertexId w = 0;
  std::string label;
  int D = 0;
  CtdCheck ctd;
  WilCheck wil;
  std::vector<VertexId> dependency;  // ball of the accepted step, pre-puncture
};

struct PackingRejection {
  VertexId w = 0;
  std::string reason;
};

struct PackingCertificate {
  double p = 0.0, eps = 0.0, c = 0.0;
  int d_min = 0, d_max = 0, r_proxy = 0;
  std::size_t spacing = 1;
  std::string order;
  std::uint64_t seed = 0, replicas = 0;
  double confidence = 0.0;
  std::vector<PackingStep> steps;
  std::vector<PackingRejection> rejections;
  std::size_t k = 0;
  bool dependency_sets_disjoint = false;
  std::string truncation_note;  // set when the candidate scan hit the rim
};

/// Candidates of S in the requested order, thinned to every spacing-th entry.
inline std::vector<VertexId> order_candidates(const GraphView& view, const VertexSet& S,
                                              PackingRequest::Order order,
                                              std::size_t spacing) {
  std::vector<VertexId> all(S.begin(), S.end());
  if (order == PackingRequest::Order::origin_distance) {
    auto dist = view.distances_from(view.origin(), static_cast<std::uint16_t>(0xfffe));
    auto key = [&](VertexId v) -> std::uint32_t {
      if (!view.base().knows(v)) return kUnreached;
      return dist[view.base().dense_of(v)];
    };
    std::stable_sort(all.begin(), all.end(), [&](VertexId a, VertexId b) {
      std::uint32_t da = key(a), db = key(b);
      return da != db ? da < db : a < b;
    });
  }
  std::vector<VertexId> out;
  for (std::size_t i = 0; i < all.size(); i += spacing) out.push_back(all[i]);
  return out;
}

inline PackingCertificate certify_packing(const PackingRequest& req) {
  req.validate();
  for (VertexId v : req.S) req.view.dense_checked(v);

  PackingCertificate cert;
  cert.p = req.params.p;
  cert.eps = req.eps;
  cert.c = req.c;
  cert.d_min = req.d_min;
  cert.d_max = req.d_max;
  cert.r_proxy = req.r_proxy;
  cert.spacing = req.spacing;
  cert.order = req.order == PackingRequest::Order::origin_distance ? "origin_distance"
                                                                   : "as_given";
  cert.seed = req.params.seed;
  cert.replicas = req.params.replicas;
  cert.confidence = req.params.confidence;

  detail_pack::SweepIndex index;
  for (int D = req.d_min; D <= req.d_max; ++D) index.radii.push_back(D);
  index.radii.push_back(req.r_proxy);
  index.radii.push_back(2 * req.r_proxy);

  GraphView cur = req.view;
  const std::vector<VertexId> candidates =
      order_candidates(req.view, req.S, req.order, req.spacing);

  for (VertexId w : candidates) {
    if (!cur.is_live(w)) {
      cert.rejections.push_back({w, "removed by an earlier puncture"});
      continue;
    }
    ShellSweep sweep;
    SweepCounts counts;
    try {
      sweep = ShellSweep::around(cur, w, index.radii);
      counts = shell_sweep_counts(cur, VertexSet::of({w}), sweep, req.params);
    } catch (const truncation_error& e) {
      cert.rejections.push_back({w, std::string("truncation exhausted: ") + e.what()});
      cert.truncation_note =
          "candidate scan stopped: the stabilization ball around vertex " +
          std::to_string(w) + " exceeds the stored graph";
      break;
    }
    WilCheck wil =
        detail_pack::wil_from_counts(cur, w, counts, index, req.r_proxy, req.params.p,
                                     req.c, req.analytic, req.phi, req.params);
    if (!wil.pass) {
      cert.rejections.push_back({w, "connection condition failed (" + wil.status + ")"});
      continue;
    }
    std::optional<CtdCheck> accepted;  // smallest passing D
    for (int D = req.d_min; D <= req.d_max; ++D) {
      CtdCheck check = detail_pack::ctd_from_counts(sweep, counts, index, D,
                                                    req.r_proxy, req.eps);
      if (check.pass) {
        accepted = std::move(check);
        break;
      }
    }
    if (!accepted) {
      cert.rejections.push_back(
          {w, "ball-to-proxy disconnection comparison failed for every D"});
      continue;
    }

    PackingStep step;
    step.index = cert.steps.size() + 1;
    step.w = w;
    step.label = cur.base().label(cur.base().dense_of(w));
    step.D = accepted->D;
    step.ctd = std::move(*accepted);
    step.wil = std::move(wil);
    VertexSet dep = cur.ball(w, step.D);
    step.dependency.assign(dep.begin(), dep.end());
    // The new dependency set lives in the current punctured view, so it
    // cannot meet any earlier step's removed ball; assert it anyway.
    for (const PackingStep& prior : cert.steps) {
      std::vector<VertexId> meet;
      std::set_intersection(prior.dependency.begin(), prior.dependency.end(),
                            step.dependency.begin(), step.dependency.end(),
                            std::back_inserter(meet));
      if (!meet.empty())
        throw error("internal invariant violated: dependency sets overlap");
    }
    cur = cur.puncture({{w, step.D}});
    cert.steps.push_back(std::move(step));
  }

  cert.k = cert.steps.size();
  cert.dependency_sets_disjoint = true;
  return cert;
}

/// The lattice vertices (x, 0, ..., 0) for 0 <= x < length.
inline VertexSet lattice_segment(const GraphView& view, int length) {
  if (length < 0) throw parameter_error("segment length must be >= 0");
  const TruncatedGraph& g = view.base();
  std::vector<VertexId> ids;
  std::vector<int> coords(static_cast<std::size_t>(g.spec().dimension), 0);
  for (int x = 0; x < length; ++x) {
    coords[0] = x;
    std::optional<VertexId> id = g.lattice_vertex(coords);
    if (!id)
      throw truncation_error("segment of length " + std::to_string(length) +
                             " exceeds the stored graph");
    if (!view.is_live(*id))
      throw parameter_error("segment vertex " + std::to_string(*id) +
                            " is removed in this view");
    ids.push_back(*id);
  }
  return VertexSet(std::move(ids));
}

}  // namespace percobound
