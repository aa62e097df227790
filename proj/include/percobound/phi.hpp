#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "percobound/engine.hpp"
#include "percobound/errors.hpp"
#include "percobound/estimate.hpp"
#include "percobound/graph.hpp"

namespace percobound {

struct PhiOptions {
  std::size_t exact_cap = 25;    // largest interior size enumerated exactly
  bool endpoint_interior = true;  // path endpoint must itself be interior
  bool requires_source_open = true;
};

struct PhiQuery {
  const GraphView* view = nullptr;
  VertexId v = 0;
  VertexSet S;
  double p = 0.5;
  enum class Method { exact, mc } method = Method::exact;
  PercolationParams params;  // Monte Carlo settings (seed, replicas, ...)
  PhiOptions opts;
};

struct PhiTermResult {
  VertexId y = 0;
  double value = 0.0;
  std::optional<Estimate> estimate;  // mc only
};

struct PhiResult {
  double value = 0.0;
  bool degenerate = false;  // v in S \ S°: value is exactly 1, no terms
  std::string method;       // "exact" or "mc"
  std::size_t interior_size = 0;
  std::vector<PhiTermResult> terms;
  std::optional<std::pair<double, double>> ci;  // mc: conservative sum interval
};

/// Vertices of S with at least one neighbor outside S (live neighbors in the
/// view; unstored neighbors beyond the truncation count as outside).
inline VertexSet boundary_terms(const GraphView& view, const VertexSet& S) {
  std::vector<VertexId> out;
  for (VertexId y : S) {
    std::uint32_t d = view.dense_checked(y);
    bool boundary = !view.base().complete(d);
    if (!boundary) {
      for (std::uint32_t w : view.base().adj(d)) {
        if (view.live_dense(w) && !S.contains(view.base().id_of(w))) {
          boundary = true;
          break;
        }
      }
    }
    if (boundary) out.push_back(y);
  }
  return VertexSet(std::move(out));
}

// ---------------------------------------------------------------------------
// Exact evaluation.
//
// The connection events for every boundary term are decided by the states of
// the interior vertices (plus, in endpoint-exterior mode, an independent coin
// per exterior endpoint).  One sweep over all interior configurations
// therefore yields, per term, integer coefficient counts N_k = number of
// configurations with k open interior vertices realizing the event.  The
// value at any p is sum_k N_k p^k (1-p)^(n-k); the counts are the exact
// (rational) object and are exposed for cross-checking.
// ---------------------------------------------------------------------------

struct PhiTermPoly {
  VertexId y = 0;
  std::vector<VertexId> targets_in;   // neighbors of y inside the interior
  std::vector<VertexId> targets_out;  // live neighbors of y outside it
  // hit[k]: configurations with k open interior vertices reaching targets_in.
  std::vector<std::uint64_t> hit;
  // miss_m[k][m]: configurations not reaching targets_in where exactly m
  // exterior endpoints are adjacent to the open cluster of v (endpoint-
  // exterior mode only; each such endpoint is open independently).
  std::vector<std::vector<std::uint64_t>> miss_m;

  double eval(double p, const std::vector<double>& w) const {
    double value = 0.0;
    for (std::size_t k = 0; k < hit.size(); ++k)
      if (hit[k]) value += static_cast<double>(hit[k]) * w[k];
    if (!miss_m.empty()) {
      const double q = 1.0 - p;
      for (std::size_t k = 0; k < miss_m.size(); ++k) {
        for (std::size_t m = 1; m < miss_m[k].size(); ++m) {
          if (miss_m[k][m])
            value += static_cast<double>(miss_m[k][m]) * w[k] *
                     (1.0 - std::pow(q, static_cast<double>(m)));
        }
      }
    }
    return value;
  }
};

struct PhiPolynomial {
  VertexId v = 0;
  VertexSet S;
  VertexSet interior;
  bool degenerate = false;
  bool source_open = true;
  bool endpoint_interior = true;
  std::size_t n_weight_bits = 0;  // weighted interior states per configuration
  std::vector<PhiTermPoly> terms;

  std::vector<double> weights(double p) const {
    // w[k] = p^k (1-p)^(n-k), built by repeated multiplication so dyadic p
    // evaluates exactly at small n.
    const std::size_t n = n_weight_bits;
    std::vector<double> pk(n + 1, 1.0), qk(n + 1, 1.0), w(n + 1);
    for (std::size_t k = 1; k <= n; ++k) pk[k] = pk[k - 1] * p;
    for (std::size_t k = 1; k <= n; ++k) qk[k] = qk[k - 1] * (1.0 - p);
    for (std::size_t k = 0; k <= n; ++k) w[k] = pk[k] * qk[n - k];
    return w;
  }

  PhiResult evaluate(double p) const {
    PhiResult r;
    r.method = "exact";
    r.interior_size = interior.size();
    if (degenerate) {
      r.degenerate = true;
      r.value = 1.0;
      return r;
    }
    const std::vector<double> w = weights(p);
    for (const auto& t : terms) {
      PhiTermResult tr;
      tr.y = t.y;
      tr.value = t.eval(p, w);
      r.value += tr.value;
      r.terms.push_back(std::move(tr));
    }
    return r;
  }
};

namespace detail_phi {

/// Adjacency of an exterior endpoint restricted to the interior bit order.
inline std::uint32_t exterior_adj_mask(const GraphView& view, std::uint32_t x,
                                       const std::vector<std::uint32_t>& dense,
                                       std::size_t n) {
  std::uint32_t mask = 0;
  for (std::uint32_t w : view.base().adj(x)) {
    for (std::size_t i = 0; i < n; ++i)
      if (dense[i] == w) mask |= (1u << i);
  }
  return mask;
}

}  // namespace detail_phi

/// Exact coefficient counts for every boundary term, reusable across p.
inline PhiPolynomial build_phi_polynomial(const GraphView& view, VertexId v,
                                          const VertexSet& S,
                                          const PhiOptions& opts = {}) {
  if (S.empty()) throw parameter_error("S must be nonempty");
  if (!S.contains(v)) throw parameter_error("v must belong to S");
  for (VertexId s : S) view.dense_checked(s);

  PhiPolynomial poly;
  poly.v = v;
  poly.S = S;
  poly.interior = view.interior(S);
  poly.source_open = opts.requires_source_open;
  poly.endpoint_interior = opts.endpoint_interior;
  if (!poly.interior.contains(v)) {
    poly.degenerate = true;
    return poly;
  }

  const std::size_t n = poly.interior.size();
  if (n > opts.exact_cap)
    throw interior_too_large("interior too large for exact enumeration (" +
                             std::to_string(n) + " > cap " +
                             std::to_string(opts.exact_cap) +
                             "); use the Monte Carlo method");
  if (n > 28)
    throw interior_too_large("interior too large for exact enumeration (hard cap 28)");

  // Interior vertex order: v first, the rest ascending by id.
  std::vector<VertexId> order;
  order.push_back(v);
  for (VertexId u : poly.interior)
    if (u != v) order.push_back(u);
  std::vector<std::uint32_t> dense(n);
  for (std::size_t i = 0; i < n; ++i) dense[i] = view.dense_checked(order[i]);
  auto bit_of = [&](std::uint32_t d) -> int {
    for (std::size_t i = 0; i < n; ++i)
      if (dense[i] == d) return static_cast<int>(i);
    return -1;
  };

  // Adjacency masks restricted to the interior.
  std::vector<std::uint32_t> adj_mask(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint32_t w : view.base().adj(dense[i])) {
      if (!view.live_dense(w)) continue;
      int j = bit_of(w);
      if (j >= 0) adj_mask[i] |= (1u << j);
    }
  }

  const VertexSet boundary = boundary_terms(view, S);
  struct TermScratch {
    std::uint32_t tin_mask = 0;
    std::vector<std::uint32_t> tout_adj;  // adjacency mask per exterior endpoint
  };
  std::vector<TermScratch> scratch;
  for (VertexId y : boundary) {
    PhiTermPoly term;
    term.y = y;
    TermScratch ts;
    std::uint32_t dy = view.dense_checked(y);
    if (!opts.endpoint_interior && !view.base().complete(dy))
      throw truncation_error("endpoint-exterior mode needs stored neighbors of " +
                             std::to_string(y));
    for (std::uint32_t w : view.base().adj(dy)) {
      if (!view.live_dense(w)) continue;
      int j = bit_of(w);
      if (j >= 0) {
        ts.tin_mask |= (1u << j);
        term.targets_in.push_back(view.base().id_of(w));
      } else if (!opts.endpoint_interior) {
        term.targets_out.push_back(view.base().id_of(w));
        ts.tout_adj.push_back(detail_phi::exterior_adj_mask(view, w, dense, n));
      }
    }
    poly.terms.push_back(std::move(term));
    scratch.push_back(std::move(ts));
  }

  const std::size_t n_weight = poly.source_open ? n : n - 1;
  poly.n_weight_bits = n_weight;
  for (std::size_t t = 0; t < poly.terms.size(); ++t) {
    poly.terms[t].hit.assign(n_weight + 1, 0);
    if (!opts.endpoint_interior)
      poly.terms[t].miss_m.assign(
          n_weight + 1,
          std::vector<std::uint64_t>(poly.terms[t].targets_out.size() + 1, 0));
  }

  // Enumerate interior configurations with v treated as open (when the
  // source-open convention holds, v's own factor is part of the weight).
  const std::uint32_t sub_count = (n >= 1) ? (1u << (n - 1)) : 1u;
  for (std::uint32_t sub = 0; sub < sub_count; ++sub) {
    const std::uint32_t omega = (sub << 1) | 1u;
    const int k_others = std::popcount(sub);
    const std::size_t k = poly.source_open ? static_cast<std::size_t>(k_others) + 1
                                           : static_cast<std::size_t>(k_others);
    // Open cluster of v within the interior.
    std::uint32_t comp = 1u, frontier = 1u;
    while (frontier) {
      std::uint32_t next = 0;
      std::uint32_t f = frontier;
      while (f) {
        int i = std::countr_zero(f);
        f &= f - 1;
        next |= adj_mask[i];
      }
      next &= omega & ~comp;
      comp |= next;
      frontier = next;
    }
    for (std::size_t t = 0; t < poly.terms.size(); ++t) {
      if (comp & scratch[t].tin_mask) {
        ++poly.terms[t].hit[k];
      } else if (!opts.endpoint_interior) {
        std::size_t m = 0;
        for (std::uint32_t xa : scratch[t].tout_adj)
          if (comp & xa) ++m;
        ++poly.terms[t].miss_m[k][m];
      }
    }
  }
  return poly;
}

inline PhiResult phi_exact(const PhiQuery& q) {
  if (!(q.p > 0.0 && q.p < 1.0)) throw parameter_error("p must be in (0,1)");
  PhiPolynomial poly = build_phi_polynomial(*q.view, q.v, q.S, q.opts);
  return poly.evaluate(q.p);
}

/// Monte Carlo evaluation: one sampled interior configuration per replica
/// serves every boundary term; the interval on the sum adds the per-term
/// Wilson bounds, which is conservative.
inline PhiResult phi_mc(const PhiQuery& q) {
  const GraphView& view = *q.view;
  if (q.S.empty()) throw parameter_error("S must be nonempty");
  if (!q.S.contains(q.v)) throw parameter_error("v must belong to S");
  for (VertexId s : q.S) view.dense_checked(s);
  PercolationParams params = q.params;
  params.p = q.p;
  params.validate();

  PhiResult r;
  r.method = "mc";
  const VertexSet interior = view.interior(q.S);
  r.interior_size = interior.size();
  if (!interior.contains(q.v)) {
    r.degenerate = true;
    r.value = 1.0;
    r.method = "exact";  // no sampling happens for boundary vertices
    return r;
  }

  const VertexSet boundary = boundary_terms(view, q.S);
  const std::size_t n_terms = boundary.size();
  if (n_terms == 0) {
    r.ci = std::make_pair(0.0, 0.0);
    return r;
  }
  std::vector<std::uint64_t> interior_words((view.stored_size() + 63) / 64, 0);
  for (VertexId u : interior) {
    std::uint32_t d = view.base().dense_of(u);
    interior_words[d >> 6] |= (std::uint64_t{1} << (d & 63));
  }
  auto in_interior = [&](std::uint32_t d) {
    return (interior_words[d >> 6] >> (d & 63)) & 1u;
  };

  struct Term {
    VertexId y;
    std::vector<std::uint32_t> tin;
    std::vector<std::uint32_t> tout;  // endpoint-exterior mode
  };
  std::vector<Term> terms;
  for (VertexId y : boundary) {
    Term t;
    t.y = y;
    std::uint32_t dy = view.dense_checked(y);
    if (!q.opts.endpoint_interior && !view.base().complete(dy))
      throw truncation_error("endpoint-exterior mode needs stored neighbors of " +
                             std::to_string(y));
    for (std::uint32_t w : view.base().adj(dy)) {
      if (!view.live_dense(w)) continue;
      if (in_interior(w)) t.tin.push_back(w);
      else if (!q.opts.endpoint_interior) t.tout.push_back(w);
    }
    terms.push_back(std::move(t));
  }

  const std::uint32_t src = view.dense_checked(q.v);
  auto totals = run_counting_replicas(
      params.replicas, n_terms, params.workers, [&] { return SampleCtx(view); },
      [&](SampleCtx& ctx, std::uint64_t rep, std::span<std::uint64_t> acc) {
        ctx.begin(params.p, params.seed, rep);
        ctx.reset_visits();
        auto& queue = ctx.queue();
        bool source_ok = !q.opts.requires_source_open || ctx.open(src);
        if (source_ok) {
          ctx.mark(src);
          queue.push_back(src);
          for (std::size_t head = 0; head < queue.size(); ++head) {
            for (std::uint32_t w : view.base().adj(queue[head])) {
              if (ctx.visited(w) || !in_interior(w) || !ctx.open(w)) continue;
              ctx.mark(w);
              queue.push_back(w);
            }
          }
          for (std::size_t t = 0; t < terms.size(); ++t) {
            bool success = false;
            for (std::uint32_t x : terms[t].tin)
              if (ctx.visited(x)) { success = true; break; }
            if (!success) {
              for (std::uint32_t x : terms[t].tout) {
                if (!ctx.open(x)) continue;
                for (std::uint32_t w : view.base().adj(x))
                  if (ctx.visited(w) && in_interior(w)) { success = true; break; }
                if (success) break;
              }
            }
            acc[t] += success ? 1 : 0;
          }
        }
      });

  double lo_sum = 0.0, hi_sum = 0.0;
  for (std::size_t t = 0; t < n_terms; ++t) {
    Estimate e = Estimate::from_counts(totals[t], params.replicas, params.confidence);
    PhiTermResult tr;
    tr.y = terms[t].y;
    tr.value = e.point;
    r.value += e.point;
    lo_sum += e.ci_low;
    hi_sum += e.ci_high;
    tr.estimate = e;
    r.terms.push_back(std::move(tr));
  }
  r.ci = std::make_pair(std::max(0.0, lo_sum),
                        std::min(static_cast<double>(n_terms), hi_sum));
  return r;
}

inline PhiResult phi(const PhiQuery& q) {
  return q.method == PhiQuery::Method::exact ? phi_exact(q) : phi_mc(q);
}

}  // namespace percobound
