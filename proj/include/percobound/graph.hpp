#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "percobound/errors.hpp"

namespace percobound {

using VertexId = std::uint64_t;

/// Sorted, duplicate-free set of vertex ids.
class VertexSet {
 public:
  VertexSet() = default;
  explicit VertexSet(std::vector<VertexId> ids) : ids_(std::move(ids)) {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  }
  static VertexSet of(std::initializer_list<VertexId> ids) {
    return VertexSet(std::vector<VertexId>(ids));
  }

  bool contains(VertexId v) const {
    return std::binary_search(ids_.begin(), ids_.end(), v);
  }
  void insert(VertexId v) {
    auto it = std::lower_bound(ids_.begin(), ids_.end(), v);
    if (it == ids_.end() || *it != v) ids_.insert(it, v);
  }
  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  auto begin() const { return ids_.begin(); }
  auto end() const { return ids_.end(); }
  const std::vector<VertexId>& ids() const { return ids_; }
  friend bool operator==(const VertexSet& a, const VertexSet& b) = default;

 private:
  std::vector<VertexId> ids_;
};

/// Which infinite (or finite) graph to materialize, and how far out.
struct GraphSpec {
  enum class Family { lattice, regular_tree, file, edges };

  Family family = Family::lattice;
  int dimension = 2;       // lattice
  int offspring = 2;       // regular_tree: children per vertex, rooted at origin
  std::string path;        // file
  std::vector<std::pair<VertexId, VertexId>> edge_list;  // edges (in-memory)
  int truncation_radius = 16;
  VertexId origin = 0;

  static GraphSpec lattice(int dimension, int truncation_radius) {
    if (dimension < 1) throw parameter_error("lattice dimension must be >= 1");
    if (truncation_radius < 1) throw parameter_error("truncation radius must be >= 1");
    GraphSpec s;
    s.family = Family::lattice;
    s.dimension = dimension;
    s.truncation_radius = truncation_radius;
    return s;
  }
  static GraphSpec regular_tree(int offspring, int truncation_radius) {
    if (offspring < 1) throw parameter_error("tree offspring count must be >= 1");
    if (truncation_radius < 1) throw parameter_error("truncation radius must be >= 1");
    GraphSpec s;
    s.family = Family::regular_tree;
    s.offspring = offspring;
    s.truncation_radius = truncation_radius;
    return s;
  }
  static GraphSpec from_file(std::string path, int truncation_radius,
                             std::optional<VertexId> origin = std::nullopt) {
    GraphSpec s;
    s.family = Family::file;
    s.path = std::move(path);
    s.truncation_radius = truncation_radius;
    if (origin) s.origin = *origin;
    return s;
  }
  /// Finite graph given directly as an edge list (used heavily by tests).
  static GraphSpec from_edges(std::vector<std::pair<VertexId, VertexId>> edges,
                              VertexId origin, int truncation_radius = 1 << 20) {
    GraphSpec s;
    s.family = Family::edges;
    s.edge_list = std::move(edges);
    s.origin = origin;
    s.truncation_radius = truncation_radius;
    return s;
  }
};

inline constexpr std::uint16_t kUnreached = 0xffff;

/// Immutable materialization of the ball of radius `truncation_radius` around
/// the origin.  Vertices carry their base-graph distance from the origin and a
/// flag saying whether their full neighborhood is stored; operations that
/// would need unstored neighbors fail loudly instead of silently truncating.
class TruncatedGraph {
 public:
  struct BuildInfo {
    std::size_t dropped_truncated = 0;     // vertices beyond the radius (file/edges)
    std::size_t dropped_disconnected = 0;  // vertices unreachable from the origin
    int max_degree = 0;
  };

  static std::shared_ptr<const TruncatedGraph> build(const GraphSpec& spec) {
    auto g = std::make_shared<TruncatedGraph>();
    g->spec_ = spec;
    switch (spec.family) {
      case GraphSpec::Family::lattice: g->build_lattice(); break;
      case GraphSpec::Family::regular_tree: g->build_tree(); break;
      case GraphSpec::Family::file: g->build_from_file(); break;
      case GraphSpec::Family::edges: g->build_from_edges(spec.edge_list, spec.origin); break;
    }
    return g;
  }

  const GraphSpec& spec() const { return spec_; }
  const BuildInfo& info() const { return info_; }
  std::size_t size() const { return ids_.size(); }
  VertexId origin_id() const { return ids_[origin_dense_]; }
  std::uint32_t origin_dense() const { return origin_dense_; }

  bool knows(VertexId v) const { return dense_.find(v) != dense_.end(); }
  std::uint32_t dense_of(VertexId v) const {
    auto it = dense_.find(v);
    if (it == dense_.end())
      throw dead_vertex_error("dead vertex: id " + std::to_string(v) +
                              " is not in the stored graph");
    return it->second;
  }
  VertexId id_of(std::uint32_t dense) const { return ids_[dense]; }
  std::uint16_t base_dist(std::uint32_t dense) const { return base_dist_[dense]; }
  /// True when every base-graph neighbor of the vertex is stored.
  bool complete(std::uint32_t dense) const { return complete_[dense] != 0; }

  std::span<const std::uint32_t> adj(std::uint32_t dense) const {
    return {adj_.data() + adj_off_[dense], adj_off_[dense + 1] - adj_off_[dense]};
  }

  /// Human-readable vertex label (lattice coordinates when available).
  std::string label(std::uint32_t dense) const {
    if (spec_.family == GraphSpec::Family::lattice) {
      std::ostringstream os;
      os << '(';
      for (int k = 0; k < spec_.dimension; ++k) {
        if (k) os << ',';
        os << coords_[static_cast<std::size_t>(dense) * spec_.dimension + k];
      }
      os << ')';
      return os.str();
    }
    return std::to_string(ids_[dense]);
  }

  /// Id of the stored lattice vertex at the given coordinates, if any.
  std::optional<VertexId> lattice_vertex(const std::vector<int>& coords) const {
    if (spec_.family != GraphSpec::Family::lattice)
      throw parameter_error("coordinate lookup requires a lattice graph");
    if (static_cast<int>(coords.size()) != spec_.dimension)
      throw parameter_error("coordinate arity does not match the lattice dimension");
    const auto d = static_cast<std::size_t>(spec_.dimension);
    for (std::size_t i = 0; i < ids_.size(); ++i) {
      bool match = true;
      for (std::size_t k = 0; k < d; ++k) {
        if (coords_[i * d + k] != coords[k]) { match = false; break; }
      }
      if (match) return ids_[i];
    }
    return std::nullopt;
  }

  // -- construction ---------------------------------------------------------

  TruncatedGraph() = default;

 private:
  void finalize_edges(const std::vector<std::vector<std::uint32_t>>& nbrs) {
    adj_off_.assign(nbrs.size() + 1, 0);
    std::size_t total = 0;
    for (std::size_t i = 0; i < nbrs.size(); ++i) {
      adj_off_[i] = static_cast<std::uint32_t>(total);
      total += nbrs[i].size();
    }
    adj_off_[nbrs.size()] = static_cast<std::uint32_t>(total);
    adj_.resize(total);
    std::size_t k = 0;
    for (const auto& row : nbrs) {
      for (auto u : row) adj_[k++] = u;
    }
  }

  void build_lattice() {
    const int d = spec_.dimension;
    const int R = spec_.truncation_radius;
    std::map<std::vector<int>, std::uint32_t> seen;
    std::vector<std::vector<int>> coord_of;
    std::vector<std::uint32_t> queue;
    std::vector<int> org(d, 0);
    seen.emplace(org, 0);
    coord_of.push_back(org);
    base_dist_.push_back(0);
    queue.push_back(0);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      std::uint32_t u = queue[head];
      if (base_dist_[u] >= R) continue;
      std::vector<int> c = coord_of[u];
      for (int k = 0; k < d; ++k) {
        for (int s : {+1, -1}) {
          c[k] += s;
          if (seen.find(c) == seen.end()) {
            auto idx = static_cast<std::uint32_t>(coord_of.size());
            seen.emplace(c, idx);
            coord_of.push_back(c);
            base_dist_.push_back(static_cast<std::uint16_t>(base_dist_[u] + 1));
            queue.push_back(idx);
          }
          c[k] -= s;
        }
      }
    }
    const std::size_t n = coord_of.size();
    ids_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      ids_[i] = static_cast<VertexId>(i);
      dense_.emplace(ids_[i], static_cast<std::uint32_t>(i));
    }
    std::vector<std::vector<std::uint32_t>> nbrs(n);
    complete_.assign(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<int> c = coord_of[i];
      for (int k = 0; k < d; ++k) {
        for (int s : {+1, -1}) {
          c[k] += s;
          auto it = seen.find(c);
          if (it != seen.end()) nbrs[i].push_back(it->second);
          else complete_[i] = 0;
          c[k] -= s;
        }
      }
      std::sort(nbrs[i].begin(), nbrs[i].end());
    }
    finalize_edges(nbrs);
    coords_.reserve(n * d);
    for (const auto& c : coord_of)
      for (int x : c) coords_.push_back(x);
    origin_dense_ = 0;
    info_.max_degree = 2 * d;
  }

  void build_tree() {
    const int b = spec_.offspring;
    const int R = spec_.truncation_radius;
    // Rooted: the origin has b children, every other vertex has one parent
    // and b children.
    std::vector<std::vector<std::uint32_t>> nbrs;
    nbrs.emplace_back();
    base_dist_.push_back(0);
    std::size_t level_begin = 0, level_end = 1;
    for (int depth = 0; depth < R; ++depth) {
      for (std::size_t u = level_begin; u < level_end; ++u) {
        for (int k = 0; k < b; ++k) {
          auto child = static_cast<std::uint32_t>(nbrs.size());
          nbrs.emplace_back();
          base_dist_.push_back(static_cast<std::uint16_t>(depth + 1));
          nbrs[u].push_back(child);
          nbrs[child].push_back(static_cast<std::uint32_t>(u));
        }
      }
      level_begin = level_end;
      level_end = nbrs.size();
    }
    const std::size_t n = nbrs.size();
    ids_.resize(n);
    complete_.assign(n, 1);
    for (std::size_t i = 0; i < n; ++i) {
      ids_[i] = static_cast<VertexId>(i);
      dense_.emplace(ids_[i], static_cast<std::uint32_t>(i));
      std::sort(nbrs[i].begin(), nbrs[i].end());
      if (base_dist_[i] == R) complete_[i] = 0;  // children not stored
    }
    finalize_edges(nbrs);
    origin_dense_ = 0;
    info_.max_degree = b + 1;
  }

  void build_from_file() {
    std::ifstream in(spec_.path);
    if (!in) throw parse_error("cannot open graph file: " + spec_.path);
    std::string line;
    std::size_t lineno = 0;
    std::uint64_t declared_n = 0;
    VertexId origin = 0;
    bool have_header = false;
    std::vector<std::pair<VertexId, VertexId>> edges;
    std::set<std::pair<VertexId, VertexId>> edge_seen;
    std::unordered_set<VertexId> mentioned;
    auto fail = [&](const std::string& msg) {
      throw parse_error(spec_.path + ":" + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
      ++lineno;
      std::string trimmed = line;
      auto pos = trimmed.find('#');
      if (pos != std::string::npos) trimmed.resize(pos);
      std::istringstream is(trimmed);
      std::string tok;
      if (!(is >> tok)) continue;  // blank or comment-only line
      if (!have_header) {
        if (tok != "vertices") fail("expected header 'vertices N origin ID'");
        std::string okw;
        if (!(is >> declared_n >> okw >> origin) || okw != "origin")
          fail("expected header 'vertices N origin ID'");
        std::string extra;
        if (is >> extra) fail("trailing tokens after header");
        have_header = true;
        continue;
      }
      VertexId u, v;
      std::istringstream es(trimmed);
      if (!(es >> u >> v)) fail("malformed edge line (expected 'u v')");
      std::string extra;
      if (es >> extra) fail("trailing tokens after edge");
      if (u == v) fail("self-loop on vertex " + std::to_string(u));
      VertexId lo = std::min(u, v), hi = std::max(u, v);
      if (!edge_seen.emplace(lo, hi).second)
        fail("duplicate edge " + std::to_string(u) + " " + std::to_string(v));
      edges.emplace_back(u, v);
      mentioned.insert(u);
      mentioned.insert(v);
    }
    if (!have_header) throw parse_error(spec_.path + ": no vertices (empty file)");
    mentioned.insert(origin);
    if (mentioned.size() != declared_n)
      throw parse_error(spec_.path + ": vertex count mismatch (declared " +
                        std::to_string(declared_n) + ", found " +
                        std::to_string(mentioned.size()) + ")");
    // Per-vertex degree cap: guards against absurd inputs.
    std::unordered_map<VertexId, std::size_t> degree;
    for (const auto& e : edges) {
      if (++degree[e.first] > 4096 || ++degree[e.second] > 4096)
        throw parse_error(spec_.path + ": vertex of unbounded degree (cap 4096)");
    }
    spec_.origin = origin;
    build_from_edges(edges, origin);
  }

  void build_from_edges(const std::vector<std::pair<VertexId, VertexId>>& edges,
                        VertexId origin) {
    std::unordered_map<VertexId, std::vector<VertexId>> adj_by_id;
    adj_by_id[origin];
    for (const auto& [u, v] : edges) {
      if (u == v) throw parse_error("self-loop on vertex " + std::to_string(u));
      adj_by_id[u].push_back(v);
      adj_by_id[v].push_back(u);
    }
    for (auto& [id, row] : adj_by_id) {
      std::sort(row.begin(), row.end());
      if (std::adjacent_find(row.begin(), row.end()) != row.end())
        throw parse_error("duplicate edge at vertex " + std::to_string(id));
      info_.max_degree = std::max(info_.max_degree, static_cast<int>(row.size()));
    }
    auto oit = adj_by_id.find(origin);
    if (oit == adj_by_id.end())
      throw parse_error("origin " + std::to_string(origin) + " is not in the graph");
    if (oit->second.empty() && adj_by_id.size() > 1)
      throw parse_error("disconnected origin " + std::to_string(origin));
    // BFS from the origin; keep the component within the truncation radius.
    const int R = spec_.truncation_radius;
    std::unordered_map<VertexId, std::uint32_t> dense;
    std::vector<VertexId> order;
    std::vector<std::uint16_t> dist;
    dense.emplace(origin, 0);
    order.push_back(origin);
    dist.push_back(0);
    std::size_t beyond = 0;
    for (std::size_t head = 0; head < order.size(); ++head) {
      VertexId u = order[head];
      if (dist[head] >= R) continue;
      for (VertexId w : adj_by_id[u]) {
        if (dense.find(w) == dense.end()) {
          dense.emplace(w, static_cast<std::uint32_t>(order.size()));
          order.push_back(w);
          dist.push_back(static_cast<std::uint16_t>(dist[head] + 1));
        }
      }
    }
    for (const auto& [id, row] : adj_by_id) {
      if (dense.find(id) == dense.end()) {
        // Unreachable from the origin within R: beyond the radius or in
        // another component.  Distinguish for the report.
        bool adjacent_to_kept = false;
        for (VertexId w : row)
          if (dense.find(w) != dense.end()) adjacent_to_kept = true;
        if (adjacent_to_kept) ++beyond;
        else ++info_.dropped_disconnected;
      }
    }
    info_.dropped_truncated = beyond;
    const std::size_t n = order.size();
    ids_ = order;
    dense_ = std::move(dense);
    base_dist_ = std::move(dist);
    complete_.assign(n, 1);
    std::vector<std::vector<std::uint32_t>> nbrs(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (VertexId w : adj_by_id[ids_[i]]) {
        auto it = dense_.find(w);
        if (it != dense_.end()) nbrs[i].push_back(it->second);
        else complete_[i] = 0;
      }
      std::sort(nbrs[i].begin(), nbrs[i].end());
    }
    finalize_edges(nbrs);
    origin_dense_ = 0;
  }

  GraphSpec spec_;
  std::vector<VertexId> ids_;
  std::unordered_map<VertexId, std::uint32_t> dense_;
  std::vector<std::uint32_t> adj_off_, adj_;
  std::vector<std::uint16_t> base_dist_;
  std::vector<std::uint8_t> complete_;
  std::vector<int> coords_;
  std::uint32_t origin_dense_ = 0;
  BuildInfo info_;
};

/// Immutable live-vertex view of a truncated graph.  Puncturing returns a new
/// view; removed vertices stay removed and their ids are never reused.
class GraphView {
 public:
  explicit GraphView(std::shared_ptr<const TruncatedGraph> g)
      : g_(std::move(g)),
        removed_((g_->size() + 63) / 64, 0),
        live_count_(g_->size()) {}

  static GraphView of(const GraphSpec& spec) {
    return GraphView(TruncatedGraph::build(spec));
  }

  const TruncatedGraph& base() const { return *g_; }
  std::shared_ptr<const TruncatedGraph> base_ptr() const { return g_; }
  std::size_t stored_size() const { return g_->size(); }
  std::size_t live_count() const { return live_count_; }
  VertexId origin() const { return g_->origin_id(); }

  bool removed_dense(std::uint32_t d) const {
    return (removed_[d >> 6] >> (d & 63)) & 1u;
  }
  bool live_dense(std::uint32_t d) const { return !removed_dense(d); }
  bool is_live(VertexId v) const {
    return g_->knows(v) && live_dense(g_->dense_of(v));
  }
  std::uint32_t dense_checked(VertexId v) const {
    std::uint32_t d = g_->dense_of(v);
    if (removed_dense(d))
      throw dead_vertex_error("dead vertex: id " + std::to_string(v) +
                              " was removed from this view");
    return d;
  }

  /// Live neighbors of a live vertex, ascending by id.  Fails loudly when the
  /// stored neighborhood is incomplete (vertex sits on the truncation rim).
  VertexSet neighbors(VertexId v) const {
    std::uint32_t d = dense_checked(v);
    if (!g_->complete(d))
      throw truncation_error("truncation too small: vertex " + std::to_string(v) +
                             " has neighbors beyond the stored radius");
    std::vector<VertexId> out;
    for (std::uint32_t w : g_->adj(d))
      if (live_dense(w)) out.push_back(g_->id_of(w));
    return VertexSet(std::move(out));
  }

  /// BFS distances from v through live vertices, capped at `cap`.
  /// Unreached entries are kUnreached.
  std::vector<std::uint16_t> distances_from(VertexId v, std::uint16_t cap) const {
    std::uint32_t src = dense_checked(v);
    std::vector<std::uint16_t> dist(g_->size(), kUnreached);
    std::vector<std::uint32_t> queue;
    dist[src] = 0;
    queue.push_back(src);
    for (std::size_t head = 0; head < queue.size(); ++head) {
      std::uint32_t u = queue[head];
      if (dist[u] >= cap) continue;
      for (std::uint32_t w : g_->adj(u)) {
        if (live_dense(w) && dist[w] == kUnreached) {
          dist[w] = static_cast<std::uint16_t>(dist[u] + 1);
          queue.push_back(w);
        }
      }
    }
    return dist;
  }

  /// B(v, D): vertices within live-graph distance D of v.  Throws when the
  /// ball could extend past the stored truncation.
  VertexSet ball(VertexId v, int D) const {
    if (D < 0) throw parameter_error("ball radius must be >= 0");
    auto dense = ball_dense(v, D);
    std::vector<VertexId> out;
    out.reserve(dense.size());
    for (auto d : dense) out.push_back(g_->id_of(d));
    return VertexSet(std::move(out));
  }

  std::vector<std::uint32_t> ball_dense(VertexId v, int D) const {
    std::uint32_t src = dense_checked(v);
    std::vector<std::uint32_t> out;
    std::vector<std::uint16_t> dist(g_->size(), kUnreached);
    dist[src] = 0;
    out.push_back(src);
    for (std::size_t head = 0; head < out.size(); ++head) {
      std::uint32_t u = out[head];
      // A vertex with unstored neighbors strictly inside the ball means the
      // true ball may contain vertices we do not have.
      if (dist[u] < D && !g_->complete(u))
        throw truncation_error("truncation too small: ball of radius " +
                               std::to_string(D) + " around vertex " +
                               std::to_string(v) + " exits the stored graph");
      if (dist[u] >= D) continue;
      for (std::uint32_t w : g_->adj(u)) {
        if (live_dense(w) && dist[w] == kUnreached) {
          dist[w] = static_cast<std::uint16_t>(dist[u] + 1);
          out.push_back(w);
        }
      }
    }
    return out;
  }

  /// Inner boundary of B(v, D): ball vertices with at least one live neighbor
  /// outside the ball (unstored neighbors count as outside).
  VertexSet inner_boundary(VertexId v, int D) const {
    auto ball = ball_dense(v, D);
    std::vector<std::uint8_t> in_ball(g_->size(), 0);
    for (auto d : ball) in_ball[d] = 1;
    std::vector<VertexId> out;
    for (auto d : ball) {
      bool boundary = !g_->complete(d);
      if (!boundary) {
        for (std::uint32_t w : g_->adj(d)) {
          if (live_dense(w) && !in_ball[w]) { boundary = true; break; }
        }
      }
      if (boundary) out.push_back(g_->id_of(d));
    }
    return VertexSet(std::move(out));
  }

  /// S° = vertices of S all of whose live neighbors lie in S.  A vertex with
  /// unstored neighbors is never interior (those neighbors are outside S).
  VertexSet interior(const VertexSet& S) const {
    std::vector<VertexId> out;
    for (VertexId v : S) {
      std::uint32_t d = dense_checked(v);
      if (!g_->complete(d)) continue;
      bool inside = true;
      for (std::uint32_t w : g_->adj(d)) {
        if (live_dense(w) && !S.contains(g_->id_of(w))) { inside = false; break; }
      }
      if (inside) out.push_back(v);
    }
    return VertexSet(std::move(out));
  }

  /// New view with the listed balls removed.  Balls are taken in the view as
  /// punctured so far, matching the iterated construction G_i = G_{i-1} \ B.
  /// A ball whose center is already removed contributes nothing, which makes
  /// puncturing idempotent.
  GraphView puncture(const std::vector<std::pair<VertexId, int>>& balls) const {
    GraphView next(*this);
    for (const auto& [center, radius] : balls) {
      if (radius < 0) throw parameter_error("puncture radius must be >= 0");
      std::uint32_t c = g_->dense_of(center);
      if (next.removed_dense(c)) continue;
      for (auto d : next.ball_dense(center, radius)) next.remove_dense(d);
    }
    return next;
  }

  /// All live vertices, ascending by id.
  VertexSet live_vertices() const {
    std::vector<VertexId> out;
    out.reserve(live_count_);
    for (std::uint32_t d = 0; d < g_->size(); ++d)
      if (live_dense(d)) out.push_back(g_->id_of(d));
    return VertexSet(std::move(out));
  }

  friend bool operator==(const GraphView& a, const GraphView& b) {
    return a.g_ == b.g_ && a.removed_ == b.removed_;
  }

 private:
  void remove_dense(std::uint32_t d) {
    if (!removed_dense(d)) {
      removed_[d >> 6] |= (std::uint64_t{1} << (d & 63));
      --live_count_;
    }
  }

  std::shared_ptr<const TruncatedGraph> g_;
  std::vector<std::uint64_t> removed_;
  std::size_t live_count_;
};

/// Loads a graph file eagerly so parse errors surface immediately.
inline GraphSpec load_graph(const std::string& path, int truncation_radius,
                            std::optional<VertexId> origin = std::nullopt) {
  GraphSpec spec = GraphSpec::from_file(path, truncation_radius, origin);
  TruncatedGraph::build(spec);
  return spec;
}

}  // namespace percobound
