#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "percobound/errors.hpp"
#include "percobound/graph.hpp"
#include "percobound/phi.hpp"

namespace percobound {

// ---------------------------------------------------------------------------
// Supercritical parameter constraints and the analytic connection lower bound.
// ---------------------------------------------------------------------------

struct SupercriticalParams {
  double p = 0.0;
  double p1 = 0.0;
  double eps = 0.0;
  double eps1 = 0.0;
  double ptilde_c = 0.0;  // certified or assumed critical-threshold estimate
};

struct ConstraintCheck {
  bool pass = true;
  std::vector<std::string> violations;
};

/// The three parameter constraints gating the analytic bound:
///   p1 in (ptilde_c, p),   eps1 in (0, eps),
///   ((1-p)/(1-p1))^(1-eps1) < ((1-p)/(1-ptilde_c))^(1-eps).
/// Reported, never thrown; domain problems are reported as violations too.
inline ConstraintCheck check_pepe(double p, double p1, double eps, double eps1,
                                  double ptilde_c) {
  ConstraintCheck r;
  auto violated = [&](const std::string& s) {
    r.pass = false;
    r.violations.push_back(s);
  };
  if (!(p > 0.0 && p < 1.0)) violated("p in (0,1)");
  if (!(p1 > 0.0 && p1 < 1.0)) violated("p1 in (0,1)");
  if (!(eps > 0.0 && eps < 1.0)) violated("eps in (0,1)");
  if (!(ptilde_c > 0.0 && ptilde_c < 1.0)) violated("ptilde_c in (0,1)");
  if (!(p > ptilde_c)) violated("p > ptilde_c");
  if (!r.pass) return r;
  if (!(p1 > ptilde_c && p1 < p)) violated("p1 in (ptilde_c, p)");
  if (!(eps1 > 0.0 && eps1 < eps)) violated("eps1 in (0, eps)");
  const double lhs = std::pow((1.0 - p) / (1.0 - p1), 1.0 - eps1);
  const double rhs = std::pow((1.0 - p) / (1.0 - ptilde_c), 1.0 - eps);
  if (!(lhs < rhs))
    violated("((1-p)/(1-p1))^(1-eps1) < ((1-p)/(1-ptilde_c))^(1-eps)");
  return r;
}

inline ConstraintCheck check_pepe(const SupercriticalParams& sp) {
  return check_pepe(sp.p, sp.p1, sp.eps, sp.eps1, sp.ptilde_c);
}

/// 1 - ((1-p)/(1-p1))^(1-eps1): lower bound on the probability that a vertex
/// satisfying the local-functional condition connects to infinity.  This
/// overload validates only the formula's own domain (eps1 = 0 is allowed, as
/// the degenerate arithmetic case); the full constraint set is check_pepe.
inline double connection_lower_bound(double p, double p1, double eps1) {
  if (!(p > 0.0 && p < 1.0))
    throw parameter_error("connection bound: p in (0,1) violated");
  if (!(p1 > 0.0 && p1 < 1.0))
    throw parameter_error("connection bound: p1 in (0,1) violated");
  if (!(p1 <= p)) throw parameter_error("connection bound: p1 <= p violated");
  if (!(eps1 >= 0.0 && eps1 < 1.0))
    throw parameter_error("connection bound: eps1 in [0,1) violated");
  return 1.0 - std::pow((1.0 - p) / (1.0 - p1), 1.0 - eps1);
}

/// Strict version: every constraint must hold, named on failure.
inline double connection_lower_bound(const SupercriticalParams& sp) {
  ConstraintCheck c = check_pepe(sp);
  if (!c.pass) {
    std::string msg = "parameter constraint violated:";
    for (const auto& v : c.violations) msg += " [" + v + "]";
    throw parameter_error(msg);
  }
  return connection_lower_bound(sp.p, sp.p1, sp.eps1);
}

// ---------------------------------------------------------------------------
// Subcritical witnesses: smallest ball radius r with phi_p(B(v,r)) <= 1-eps0.
// ---------------------------------------------------------------------------

struct WitnessOptions {
  double eps0 = 0.5;
  int r_max = 6;
  bool allow_mc = true;
  PhiOptions phi;
  PercolationParams params;  // Monte Carlo settings; p is set per query
};

struct WitnessProbe {
  int radius = 0;
  double value = 0.0;    // point value of phi
  double ci_high = 0.0;  // equals value for exact evaluations
  std::string method;
  bool pass = false;
};

struct WitnessResult {
  bool found = false;
  int radius = 0;
  double threshold = 0.0;  // 1 - eps0
  PhiResult phi;           // evaluation at the certified radius
  std::vector<WitnessProbe> trajectory;
  std::string failure;  // empty on success
};

namespace detail_pc {

/// Shared searcher: caches the p-independent exact coefficients per radius so
/// that a bisection over p pays the enumeration once per (vertex, radius).
class WitnessSearcher {
 public:
  WitnessSearcher(const GraphView& view, WitnessOptions opt)
      : view_(&view), opt_(std::move(opt)) {
    if (!(opt_.eps0 > 0.0 && opt_.eps0 < 1.0))
      throw parameter_error("eps0 must be in (0,1)");
    if (opt_.r_max < 1) throw parameter_error("witness radius bound must be >= 1");
  }

  WitnessResult search(VertexId v, double p) {
    WitnessResult res;
    res.threshold = 1.0 - opt_.eps0;
    for (int r = 1; r <= opt_.r_max; ++r) {
      VertexSet S = view_->ball(v, r);  // throws truncation_error when the
                                        // true ball exceeds the stored graph
      const VertexSet interior = view_->interior(S);
      PhiResult pr;
      WitnessProbe probe;
      probe.radius = r;
      if (interior.size() <= opt_.phi.exact_cap) {
        pr = polynomial(v, r, S).evaluate(p);
        probe.value = pr.value;
        probe.ci_high = pr.value;
        probe.method = "exact";
        probe.pass = pr.value <= res.threshold;
      } else if (opt_.allow_mc) {
        PhiQuery q;
        q.view = view_;
        q.v = v;
        q.S = S;
        q.p = p;
        q.method = PhiQuery::Method::mc;
        q.params = opt_.params;
        q.opts = opt_.phi;
        pr = phi_mc(q);
        probe.value = pr.value;
        probe.ci_high = pr.ci ? pr.ci->second : pr.value;
        probe.method = "mc";
        // Monte Carlo certifies only when the whole interval clears the bar.
        probe.pass = probe.ci_high <= res.threshold;
      } else {
        probe.value = std::numeric_limits<double>::quiet_NaN();
        probe.ci_high = probe.value;
        probe.method = "skipped (interior too large, mc disabled)";
        probe.pass = false;
        res.trajectory.push_back(probe);
        continue;
      }
      res.trajectory.push_back(probe);
      if (probe.pass) {
        res.found = true;
        res.radius = r;
        res.phi = std::move(pr);
        return res;
      }
    }
    res.failure = "no ball up to radius " + std::to_string(opt_.r_max) +
                  " certifies phi <= " + std::to_string(res.threshold);
    return res;
  }

 private:
  const PhiPolynomial& polynomial(VertexId v, int r, const VertexSet& S) {
    auto key = std::make_pair(v, r);
    auto it = poly_cache_.find(key);
    if (it == poly_cache_.end())
      it = poly_cache_.emplace(key, build_phi_polynomial(*view_, v, S, opt_.phi)).first;
    return it->second;
  }

  const GraphView* view_;
  WitnessOptions opt_;
  std::map<std::pair<VertexId, int>, PhiPolynomial> poly_cache_;
};

}  // namespace detail_pc

inline WitnessResult find_witness(const GraphView& view, VertexId v, double p,
                                  const WitnessOptions& opt) {
  if (!(p > 0.0 && p < 1.0)) throw parameter_error("p must be in (0,1)");
  detail_pc::WitnessSearcher searcher(view, opt);
  return searcher.search(v, p);
}

// ---------------------------------------------------------------------------
// Threshold lower bound by bisection over p.
// ---------------------------------------------------------------------------

struct PcBoundOptions {
  WitnessOptions witness;
  double p_tol = 0.01;
  double p_lo = 0.05;  // initial known-pass probe; failing here returns 0
  double p_hi = 0.99;  // initial known-fail probe
};

struct PcProbe {
  double p = 0.0;
  bool certified = false;
  // Largest radius needed over the family (0 when not certified).
  int max_radius = 0;
};

struct PcBoundResult {
  double value = 0.0;  // largest certified p; 0 when even p_lo fails
  bool certified = false;
  double p_tol = 0.0;
  std::vector<PcProbe> probes;
  // Witness details per family vertex at the certified p.
  std::vector<std::pair<VertexId, WitnessResult>> witnesses;
};

/// Largest p on the bisection grid such that every vertex of the family has a
/// ball witness.  Monotone in p under the shared-uniform coupling, so the
/// accept region is an interval and bisection is sound within one seed.
inline PcBoundResult pc_lower_bound(const GraphView& view, const VertexSet& family,
                                    const PcBoundOptions& opt) {
  if (family.empty()) throw parameter_error("vertex family must be nonempty");
  if (!(opt.p_tol > 0.0)) throw parameter_error("p tolerance must be positive");
  if (!(opt.p_lo > 0.0 && opt.p_hi < 1.0 && opt.p_lo < opt.p_hi))
    throw parameter_error("need 0 < p_lo < p_hi < 1");
  detail_pc::WitnessSearcher searcher(view, opt.witness);

  PcBoundResult out;
  out.p_tol = opt.p_tol;
  auto certifies = [&](double p) {
    PcProbe probe;
    probe.p = p;
    probe.certified = true;
    for (VertexId v : family) {
      WitnessResult w = searcher.search(v, p);
      if (!w.found) {
        probe.certified = false;
        break;
      }
      probe.max_radius = std::max(probe.max_radius, w.radius);
    }
    out.probes.push_back(probe);
    return probe.certified;
  };

  if (!certifies(opt.p_lo)) return out;  // value 0: even tiny p fails
  double lo = opt.p_lo;
  double hi = opt.p_hi;
  if (certifies(opt.p_hi)) {
    lo = opt.p_hi;
  } else {
    while (hi - lo > opt.p_tol) {
      double mid = 0.5 * (lo + hi);
      if (certifies(mid)) lo = mid;
      else hi = mid;
    }
  }
  out.value = lo;
  out.certified = true;
  for (VertexId v : family)
    out.witnesses.emplace_back(v, searcher.search(v, lo));
  return out;
}

// ---------------------------------------------------------------------------
// Bounded audit of the local-functional condition used by the analytic
// connection bound: phi_q(B(w,r)) > 1 - eps1 for every q in a grid over
// [q_lo, q_hi] and every radius r <= r_max.  A finite audit, not a proof over
// all finite sets; reports carry that caveat verbatim.
// ---------------------------------------------------------------------------

struct Wc1AuditOptions {
  double eps1 = 0.1;
  double q_lo = 0.0;  // typically p1
  double q_hi = 0.0;  // typically p
  int q_points = 3;
  int r_max = 2;
  PhiOptions phi;
  PercolationParams params;
  bool allow_mc = true;
};

struct Wc1Audit {
  bool holds = false;
  double threshold = 0.0;  // 1 - eps1
  struct Entry {
    double q = 0.0;
    int r = 0;
    double value = 0.0;
    double ci_low = 0.0;  // equals value for exact evaluations
    std::string method;
    bool ok = false;
  };
  std::vector<Entry> entries;
  std::string caveat = "audited on a finite (q, r) grid, not proven for all finite sets";
};

inline Wc1Audit audit_wc1(const GraphView& view, VertexId w,
                          const Wc1AuditOptions& opt) {
  if (!(opt.eps1 > 0.0 && opt.eps1 < 1.0))
    throw parameter_error("eps1 must be in (0,1)");
  if (!(opt.q_lo > 0.0 && opt.q_hi < 1.0 && opt.q_lo <= opt.q_hi))
    throw parameter_error("need 0 < q_lo <= q_hi < 1 for the audit grid");
  if (opt.q_points < 1 || opt.r_max < 1)
    throw parameter_error("audit grid must be nonempty");

  Wc1Audit audit;
  audit.threshold = 1.0 - opt.eps1;
  audit.holds = true;

  std::vector<double> qs;
  if (opt.q_points == 1) {
    qs.push_back(opt.q_lo);
  } else {
    for (int i = 0; i < opt.q_points; ++i)
      qs.push_back(opt.q_lo +
                   (opt.q_hi - opt.q_lo) * static_cast<double>(i) /
                       static_cast<double>(opt.q_points - 1));
  }

  for (int r = 1; r <= opt.r_max; ++r) {
    VertexSet S = view.ball(w, r);
    const VertexSet interior = view.interior(S);
    const bool exact = interior.size() <= opt.phi.exact_cap;
    PhiPolynomial poly;
    if (exact) poly = build_phi_polynomial(view, w, S, opt.phi);
    for (double q : qs) {
      Wc1Audit::Entry e;
      e.q = q;
      e.r = r;
      if (!interior.contains(w)) {
        // w on the boundary of its own ball (heavily punctured view): phi = 1.
        e.value = 1.0;
        e.ci_low = 1.0;
        e.method = "exact";
        e.ok = true;
      } else if (exact) {
        PhiResult pr = poly.evaluate(q);
        e.value = pr.value;
        e.ci_low = pr.value;
        e.method = "exact";
        e.ok = pr.value > audit.threshold;
      } else if (opt.allow_mc) {
        PhiQuery fq;
        fq.view = &view;
        fq.v = w;
        fq.S = S;
        fq.p = q;
        fq.method = PhiQuery::Method::mc;
        fq.params = opt.params;
        fq.opts = opt.phi;
        PhiResult pr = phi_mc(fq);
        e.value = pr.value;
        e.ci_low = pr.ci ? pr.ci->first : pr.value;
        e.method = "mc";
        e.ok = e.ci_low > audit.threshold;
      } else {
        e.value = std::numeric_limits<double>::quiet_NaN();
        e.ci_low = e.value;
        e.method = "skipped (interior too large, mc disabled)";
        e.ok = false;
      }
      audit.holds = audit.holds && e.ok;
      audit.entries.push_back(std::move(e));
    }
  }
  return audit;
}

}  // namespace percobound
