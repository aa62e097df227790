#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "percobound/errors.hpp"
#include "percobound/estimate.hpp"
#include "percobound/graph.hpp"
#include "percobound/parallel.hpp"
#include "percobound/rng.hpp"

namespace percobound {

struct PercolationParams {
  double p = 0.5;
  std::uint64_t seed = 0;
  std::uint64_t replicas = 10000;
  double confidence = 0.99;
  unsigned workers = 0;  // 0: PERCOBOUND_THREADS, then hardware

  void validate() const {
    if (!(p > 0.0 && p < 1.0))
      throw parameter_error("p must be in (0,1) exclusive");
    if (replicas < 1) throw parameter_error("replicas must be >= 1");
    if (!(confidence > 0.0 && confidence < 1.0))
      throw parameter_error("confidence must be in (0,1)");
  }
};

// Per-worker scratch bound to one view: lazily evaluated vertex states for
// the current replica plus BFS buffers, epoch-stamped so rebinding is O(1).
class SampleCtx {
 public:
  explicit SampleCtx(const GraphView& view)
      : view_(&view),
        n_(view.stored_size()),
        open_stamp_(n_, 0),
        open_val_(n_, 0),
        visit_stamp_(n_, 0) {
    queue_.reserve(256);
  }

  void begin(double p, std::uint64_t seed, std::uint64_t replica) {
    p_ = p;
    seed_ = seed;
    replica_ = replica;
    ++open_epoch_;
  }

  const GraphView& view() const { return *view_; }

  bool open(std::uint32_t d) {
    if (!view_->live_dense(d)) return false;
    if (open_stamp_[d] != open_epoch_) {
      open_stamp_[d] = open_epoch_;
      open_val_[d] =
          vertex_open(seed_, replica_, view_->base().id_of(d), p_) ? 1 : 0;
    }
    return open_val_[d] != 0;
  }

  void reset_visits() { ++visit_epoch_; queue_.clear(); }
  bool visited(std::uint32_t d) const { return visit_stamp_[d] == visit_epoch_; }
  void mark(std::uint32_t d) { visit_stamp_[d] = visit_epoch_; }
  std::vector<std::uint32_t>& queue() { return queue_; }

 private:
  const GraphView* view_;
  std::size_t n_;
  double p_ = 0.5;
  std::uint64_t seed_ = 0, replica_ = 0;
  std::vector<std::uint64_t> open_stamp_;
  std::vector<std::uint8_t> open_val_;
  std::vector<std::uint64_t> visit_stamp_;
  std::uint64_t open_epoch_ = 1, visit_epoch_ = 1;
  std::vector<std::uint32_t> queue_;
};

/// One sampled configuration, regenerable bit-identically from
/// (seed, replica_index).
struct Configuration {
  GraphView view;
  double p = 0.5;
  std::uint64_t seed = 0;
  std::uint64_t replica_index = 0;
  std::vector<std::uint64_t> open_words;

  bool open_dense(std::uint32_t d) const {
    return (open_words[d >> 6] >> (d & 63)) & 1u;
  }
  bool is_open(VertexId v) const {
    return view.base().knows(v) && open_dense(view.base().dense_of(v));
  }
  VertexSet open_vertices() const {
    std::vector<VertexId> out;
    for (std::uint32_t d = 0; d < view.stored_size(); ++d)
      if (open_dense(d)) out.push_back(view.base().id_of(d));
    return VertexSet(std::move(out));
  }
};

inline Configuration sample(const GraphView& view, const PercolationParams& params,
                            std::uint64_t replica_index) {
  params.validate();
  Configuration cfg{view, params.p, params.seed, replica_index, {}};
  cfg.open_words.assign((view.stored_size() + 63) / 64, 0);
  for (std::uint32_t d = 0; d < view.stored_size(); ++d) {
    if (view.live_dense(d) &&
        vertex_open(params.seed, replica_index, view.base().id_of(d), params.p))
      cfg.open_words[d >> 6] |= (std::uint64_t{1} << (d & 63));
  }
  return cfg;
}

/// Connectivity event specification.
///   connect:        v reaches some target through open vertices
///   disconnect_all: no vertex of S reaches any target
/// A path is v = u_0, ..., u_m = x with x in targets, every u_j open and (when
/// an allowed set is given) every u_j in allowed; m = 0 counts when v is
/// itself a target.  With requires_source_open (default) the source must be
/// open; switching it off treats the source as open regardless of its state.
struct EventSpec {
  enum class Kind { connect, disconnect_all };
  Kind kind = Kind::connect;
  VertexId v = 0;
  VertexSet S;
  VertexSet targets;
  std::optional<VertexSet> allowed;
  bool requires_source_open = true;

  static EventSpec connect(VertexId v, VertexSet targets,
                           std::optional<VertexSet> allowed = std::nullopt) {
    EventSpec e;
    e.kind = Kind::connect;
    e.v = v;
    e.targets = std::move(targets);
    e.allowed = std::move(allowed);
    return e;
  }
  static EventSpec disconnect_all(VertexSet S, VertexSet targets) {
    EventSpec e;
    e.kind = Kind::disconnect_all;
    e.S = std::move(S);
    e.targets = std::move(targets);
    return e;
  }
};

namespace detail {

struct CompiledEvent {
  EventSpec::Kind kind;
  std::vector<std::uint32_t> sources;
  std::vector<std::uint64_t> target_words;
  std::vector<std::uint64_t> allowed_words;  // empty: everything allowed
  bool requires_source_open = true;

  bool in_targets(std::uint32_t d) const {
    return (target_words[d >> 6] >> (d & 63)) & 1u;
  }
  bool in_allowed(std::uint32_t d) const {
    return allowed_words.empty() || ((allowed_words[d >> 6] >> (d & 63)) & 1u);
  }
};

inline CompiledEvent compile_event(const GraphView& view, const EventSpec& ev) {
  if (ev.targets.empty()) throw parameter_error("event targets must be nonempty");
  CompiledEvent ce;
  ce.kind = ev.kind;
  ce.requires_source_open = ev.requires_source_open;
  const std::size_t words = (view.stored_size() + 63) / 64;
  ce.target_words.assign(words, 0);
  for (VertexId t : ev.targets) {
    std::uint32_t d = view.dense_checked(t);
    ce.target_words[d >> 6] |= (std::uint64_t{1} << (d & 63));
  }
  if (ev.kind == EventSpec::Kind::connect) {
    ce.sources.push_back(view.dense_checked(ev.v));
  } else {
    for (VertexId s : ev.S) ce.sources.push_back(view.dense_checked(s));
  }
  if (ev.allowed) {
    ce.allowed_words.assign(words, 0);
    for (VertexId a : *ev.allowed) {
      if (!view.is_live(a)) continue;
      std::uint32_t d = view.base().dense_of(a);
      ce.allowed_words[d >> 6] |= (std::uint64_t{1} << (d & 63));
    }
  }
  return ce;
}

/// True iff some source reaches a target in the current replica.
inline bool any_source_connects(SampleCtx& ctx, const CompiledEvent& ev) {
  const GraphView& view = ctx.view();
  const TruncatedGraph& g = view.base();
  ctx.reset_visits();
  auto& queue = ctx.queue();
  for (std::uint32_t src : ev.sources) {
    if (ctx.visited(src)) continue;
    if (!view.live_dense(src)) continue;
    if (!ev.in_allowed(src)) continue;
    if (ev.requires_source_open && !ctx.open(src)) continue;
    ctx.mark(src);
    if (ev.in_targets(src)) return true;  // m = 0
    queue.push_back(src);
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    std::uint32_t u = queue[head];
    for (std::uint32_t w : g.adj(u)) {
      if (ctx.visited(w)) continue;
      if (!ev.in_allowed(w)) continue;
      if (!ctx.open(w)) continue;  // open() implies live
      ctx.mark(w);
      if (ev.in_targets(w)) return true;
      queue.push_back(w);
    }
  }
  return false;
}

}  // namespace detail

/// Path query against one materialized configuration.
inline bool connects(const Configuration& cfg, VertexId v, const VertexSet& targets,
                     std::optional<VertexSet> allowed = std::nullopt,
                     bool requires_source_open = true) {
  EventSpec ev = EventSpec::connect(v, targets, std::move(allowed));
  ev.requires_source_open = requires_source_open;
  detail::CompiledEvent ce = detail::compile_event(cfg.view, ev);
  // BFS directly over the stored open words.
  const GraphView& view = cfg.view;
  const TruncatedGraph& g = view.base();
  std::vector<std::uint8_t> visited(view.stored_size(), 0);
  std::vector<std::uint32_t> queue;
  std::uint32_t src = ce.sources[0];
  if (!view.live_dense(src) || !ce.in_allowed(src)) return false;
  if (requires_source_open && !cfg.open_dense(src)) return false;
  visited[src] = 1;
  if (ce.in_targets(src)) return true;
  queue.push_back(src);
  for (std::size_t head = 0; head < queue.size(); ++head) {
    for (std::uint32_t w : g.adj(queue[head])) {
      if (visited[w] || !ce.in_allowed(w) || !cfg.open_dense(w)) continue;
      visited[w] = 1;
      if (ce.in_targets(w)) return true;
      queue.push_back(w);
    }
  }
  return false;
}

/// Monte Carlo probability of an event over independent replicas.
inline Estimate mc_estimate(const GraphView& view, const EventSpec& event,
                            const PercolationParams& params) {
  params.validate();
  detail::CompiledEvent ce = detail::compile_event(view, event);
  auto totals = run_counting_replicas(
      params.replicas, 1, params.workers, [&] { return SampleCtx(view); },
      [&](SampleCtx& ctx, std::uint64_t r, std::span<std::uint64_t> acc) {
        ctx.begin(params.p, params.seed, r);
        bool conn = detail::any_source_connects(ctx, ce);
        bool success = (ce.kind == EventSpec::Kind::connect) ? conn : !conn;
        acc[0] += success ? 1 : 0;
      });
  return Estimate::from_counts(totals[0], params.replicas, params.confidence);
}

// ---------------------------------------------------------------------------
// Nested-shell sweeps.
//
// For radii r_1 < ... < r_m around a center (or around the origin with a
// source set S), shell j is the inner boundary of B(center, r_j) in the view.
// Reaching shell r_j from inside is equivalent to reaching it by a path that
// never leaves B(center, r_j): the first step outside the ball must cross the
// shell.  Hence one BFS capped at r_m decides all m events exactly, and the
// reached-shell set is always downward closed; that containment is asserted
// for every replica.
// ---------------------------------------------------------------------------

struct ShellSweep {
  const GraphView* view = nullptr;
  std::vector<int> radii;
  std::vector<std::uint32_t> shell_bits;  // per dense vertex
  std::vector<std::uint64_t> cap_words;   // ball(center, radii.back())
  std::vector<std::uint32_t> shell_sizes;
  std::uint32_t all_mask = 0;

  bool in_cap(std::uint32_t d) const {
    return (cap_words[d >> 6] >> (d & 63)) & 1u;
  }

  static ShellSweep around(const GraphView& view, VertexId center,
                           std::vector<int> radii) {
    if (radii.empty()) throw parameter_error("shell sweep needs at least one radius");
    for (std::size_t i = 1; i < radii.size(); ++i)
      if (radii[i] <= radii[i - 1])
        throw parameter_error("shell radii must be strictly increasing");
    if (radii.front() < 1) throw parameter_error("shell radii must be >= 1");
    if (radii.size() > 32) throw parameter_error("at most 32 shell radii");

    ShellSweep s;
    s.view = &view;
    s.radii = radii;
    const TruncatedGraph& g = view.base();
    const int rmax = radii.back();
    std::vector<std::uint16_t> dist = view.distances_from(center, static_cast<std::uint16_t>(rmax));
    s.shell_bits.assign(g.size(), 0);
    s.cap_words.assign((g.size() + 63) / 64, 0);
    s.shell_sizes.assign(radii.size(), 0);
    for (std::uint32_t d = 0; d < g.size(); ++d) {
      if (dist[d] == kUnreached) continue;
      if (dist[d] < rmax && !g.complete(d))
        throw truncation_error(
            "truncation too small: shell sweep of radius " + std::to_string(rmax) +
            " around vertex " + std::to_string(center) + " exits the stored graph");
      s.cap_words[d >> 6] |= (std::uint64_t{1} << (d & 63));
      for (std::size_t j = 0; j < radii.size(); ++j) {
        if (dist[d] != radii[j]) continue;
        bool boundary = !g.complete(d);
        if (!boundary) {
          for (std::uint32_t w : g.adj(d)) {
            if (view.live_dense(w) && dist[w] > radii[j]) { boundary = true; break; }
          }
        }
        if (boundary) {
          s.shell_bits[d] |= (1u << j);
          ++s.shell_sizes[j];
        }
      }
    }
    for (std::size_t j = 0; j < radii.size(); ++j) s.all_mask |= (1u << j);
    return s;
  }
};

namespace detail {

/// Shells reached from the sources through open vertices; downward closed.
inline std::uint32_t reach_shells(SampleCtx& ctx, const ShellSweep& sweep,
                                  std::span<const std::uint32_t> sources,
                                  bool requires_source_open) {
  const GraphView& view = ctx.view();
  const TruncatedGraph& g = view.base();
  ctx.reset_visits();
  auto& queue = ctx.queue();
  std::uint32_t flags = 0;
  for (std::uint32_t src : sources) {
    if (ctx.visited(src) || !view.live_dense(src)) continue;
    if (requires_source_open && !ctx.open(src)) continue;
    ctx.mark(src);
    flags |= sweep.shell_bits[src];
    queue.push_back(src);
  }
  for (std::size_t head = 0; head < queue.size() && flags != sweep.all_mask; ++head) {
    std::uint32_t u = queue[head];
    for (std::uint32_t w : g.adj(u)) {
      if (ctx.visited(w) || !sweep.in_cap(w) || !ctx.open(w)) continue;
      ctx.mark(w);
      flags |= sweep.shell_bits[w];
      queue.push_back(w);
    }
  }
  // Pathwise containment: reaching a larger shell forces all smaller ones,
  // so the flag word must be of the form 0...01...1.
  if (flags & (flags + 1))
    throw error("internal invariant violated: reached shells not nested");
  return flags;
}

}  // namespace detail

struct SweepCounts {
  std::vector<int> radii;
  std::vector<std::uint64_t> connect_counts;  // per radius: replicas where some source reached the shell
  std::uint64_t replicas = 0;
  double confidence = 0.99;

  Estimate connect_estimate(std::size_t j) const {
    return Estimate::from_counts(connect_counts[j], replicas, confidence);
  }
  Estimate disconnect_estimate(std::size_t j) const {
    return Estimate::from_counts(replicas - connect_counts[j], replicas, confidence);
  }
};

/// Coupled estimates for all shells in one replica loop.  `flags_out`, when
/// given, receives the per-replica reached-shell bitmask (indexed by replica).
inline SweepCounts shell_sweep_counts(const GraphView& view,
                                      const VertexSet& sources,
                                      const ShellSweep& sweep,
                                      const PercolationParams& params,
                                      bool requires_source_open = true,
                                      std::vector<std::uint32_t>* flags_out = nullptr) {
  params.validate();
  std::vector<std::uint32_t> src;
  for (VertexId s : sources) src.push_back(view.dense_checked(s));
  if (flags_out) flags_out->assign(params.replicas, 0);
  auto totals = run_counting_replicas(
      params.replicas, sweep.radii.size(), params.workers,
      [&] { return SampleCtx(view); },
      [&](SampleCtx& ctx, std::uint64_t r, std::span<std::uint64_t> acc) {
        ctx.begin(params.p, params.seed, r);
        std::uint32_t flags =
            detail::reach_shells(ctx, sweep, src, requires_source_open);
        if (flags_out) (*flags_out)[r] = flags;
        for (std::size_t j = 0; j < sweep.radii.size(); ++j)
          acc[j] += (flags >> j) & 1u;
      });
  SweepCounts out;
  out.radii = sweep.radii;
  out.connect_counts = std::move(totals);
  out.replicas = params.replicas;
  out.confidence = params.confidence;
  // Counts inherit the per-replica nesting.
  for (std::size_t j = 1; j < out.connect_counts.size(); ++j) {
    if (out.connect_counts[j] > out.connect_counts[j - 1])
      throw error("internal invariant violated: shell counts not monotone");
  }
  return out;
}

/// Lower bound on the probability that no vertex of S joins the infinite
/// cluster: probability that no vertex of S reaches the inner boundary of
/// B(origin, R).  Nondecreasing in R pathwise.
inline Estimate truncated_disconnection(const GraphView& view, const VertexSet& S,
                                        int R, const PercolationParams& params) {
  if (S.empty()) throw parameter_error("S must be nonempty");
  if (R < 1) throw parameter_error("R must be >= 1");
  auto dist = view.distances_from(view.origin(), static_cast<std::uint16_t>(R));
  for (VertexId v : S) {
    std::uint32_t d = view.dense_checked(v);
    if (dist[d] == kUnreached || dist[d] > R - 1)
      throw parameter_error("S must lie within B(origin, R-1); vertex " +
                            std::to_string(v) + " does not");
  }
  ShellSweep sweep = ShellSweep::around(view, view.origin(), {R});
  SweepCounts counts = shell_sweep_counts(view, S, sweep, params);
  return counts.disconnect_estimate(0);
}

struct DisconnectionSweep {
  std::vector<int> radii;
  std::vector<Estimate> estimates;  // disconnection per radius, coupled replicas
};

inline DisconnectionSweep truncated_disconnection_sweep(
    const GraphView& view, const VertexSet& S, const std::vector<int>& radii,
    const PercolationParams& params,
    std::vector<std::uint32_t>* flags_out = nullptr) {
  if (S.empty()) throw parameter_error("S must be nonempty");
  if (radii.empty()) throw parameter_error("sweep needs at least one radius");
  auto dist = view.distances_from(view.origin(),
                                  static_cast<std::uint16_t>(radii.front()));
  for (VertexId v : S) {
    std::uint32_t d = view.dense_checked(v);
    if (dist[d] == kUnreached || dist[d] > radii.front() - 1)
      throw parameter_error("S must lie within B(origin, R-1) for the smallest R");
  }
  ShellSweep sweep = ShellSweep::around(view, view.origin(), radii);
  SweepCounts counts = shell_sweep_counts(view, S, sweep, params, true, flags_out);
  DisconnectionSweep out;
  out.radii = radii;
  for (std::size_t j = 0; j < radii.size(); ++j)
    out.estimates.push_back(counts.disconnect_estimate(j));
  return out;
}

}  // namespace percobound
