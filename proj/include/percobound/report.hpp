#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "percobound/bounds.hpp"
#include "percobound/engine.hpp"
#include "percobound/errors.hpp"
#include "percobound/estimate.hpp"
#include "percobound/graph.hpp"
#include "percobound/packing.hpp"
#include "percobound/pc.hpp"
#include "percobound/phi.hpp"
#include "percobound/version.hpp"

namespace percobound {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// JSON serializers.  Field order is fixed so that reruns are byte-identical.
// Reports carry the resolved configuration and the library version but never
// a timestamp.
// ---------------------------------------------------------------------------

inline ordered_json json_of(const Estimate& e) {
  return ordered_json{{"successes", e.successes}, {"replicas", e.replicas},
                      {"point", e.point},         {"ci_low", e.ci_low},
                      {"ci_high", e.ci_high},     {"confidence", e.confidence}};
}

inline ordered_json json_of(const PercolationParams& p) {
  return ordered_json{{"p", p.p},
                      {"seed", p.seed},
                      {"replicas", p.replicas},
                      {"confidence", p.confidence},
                      {"workers", p.workers}};
}

inline ordered_json json_of(const GraphSpec& s) {
  ordered_json j;
  switch (s.family) {
    case GraphSpec::Family::lattice:
      j["family"] = "lattice";
      j["dimension"] = s.dimension;
      break;
    case GraphSpec::Family::regular_tree:
      j["family"] = "regular_tree";
      j["offspring"] = s.offspring;
      break;
    case GraphSpec::Family::file:
      j["family"] = "file";
      j["path"] = s.path;
      break;
    case GraphSpec::Family::edges:
      j["family"] = "edges";
      j["edges"] = s.edge_list.size();
      break;
  }
  j["truncation_radius"] = s.truncation_radius;
  j["origin"] = s.origin;
  return j;
}

inline ordered_json json_of_view(const GraphView& view) {
  ordered_json j = json_of(view.base().spec());
  j["stored_vertices"] = view.stored_size();
  j["live_vertices"] = view.live_count();
  return j;
}

inline ordered_json json_of(const PhiResult& r) {
  ordered_json j;
  j["value"] = r.value;
  j["degenerate"] = r.degenerate;
  j["method"] = r.method;
  j["interior_size"] = r.interior_size;
  if (r.ci) j["ci"] = ordered_json{{"low", r.ci->first}, {"high", r.ci->second}};
  ordered_json terms = ordered_json::array();
  for (const auto& t : r.terms) {
    ordered_json tj{{"y", t.y}, {"value", t.value}};
    if (t.estimate) tj["estimate"] = json_of(*t.estimate);
    terms.push_back(std::move(tj));
  }
  j["terms"] = std::move(terms);
  return j;
}

inline ordered_json json_of(const WitnessResult& w) {
  ordered_json j;
  j["found"] = w.found;
  j["radius"] = w.radius;
  j["threshold"] = w.threshold;
  if (!w.failure.empty()) j["failure"] = w.failure;
  ordered_json traj = ordered_json::array();
  for (const auto& pr : w.trajectory)
    traj.push_back(ordered_json{{"radius", pr.radius},
                                {"value", pr.value},
                                {"ci_high", pr.ci_high},
                                {"method", pr.method},
                                {"pass", pr.pass}});
  j["trajectory"] = std::move(traj);
  if (w.found) j["phi"] = json_of(w.phi);
  return j;
}

inline ordered_json json_of(const PcBoundResult& r) {
  ordered_json j;
  j["value"] = r.value;
  j["certified"] = r.certified;
  j["p_tol"] = r.p_tol;
  ordered_json probes = ordered_json::array();
  for (const auto& pr : r.probes)
    probes.push_back(ordered_json{{"p", pr.p},
                                  {"certified", pr.certified},
                                  {"max_radius", pr.max_radius}});
  j["probes"] = std::move(probes);
  ordered_json wit = ordered_json::array();
  for (const auto& [v, w] : r.witnesses) {
    ordered_json e = json_of(w);
    e["vertex"] = v;
    wit.push_back(std::move(e));
  }
  j["witnesses"] = std::move(wit);
  return j;
}

inline ordered_json json_of(const ConstraintCheck& c) {
  return ordered_json{{"pass", c.pass}, {"violations", c.violations}};
}

inline ordered_json json_of(const Wc1Audit& a) {
  ordered_json j;
  j["holds"] = a.holds;
  j["threshold"] = a.threshold;
  ordered_json entries = ordered_json::array();
  for (const auto& e : a.entries)
    entries.push_back(ordered_json{{"q", e.q},
                                   {"r", e.r},
                                   {"value", e.value},
                                   {"ci_low", e.ci_low},
                                   {"method", e.method},
                                   {"ok", e.ok}});
  j["entries"] = std::move(entries);
  j["caveat"] = a.caveat;
  return j;
}

inline ordered_json json_of(const CtdCheck& c) {
  ordered_json j;
  j["D"] = c.D;
  j["est_disc_ball"] = json_of(c.q_ball);
  j["est_disc_inf"] = json_of(c.q_inf_proxy);  // proxy-radius stand-in
  j["est_disc_far"] = json_of(c.q_far);
  j["excess"] = json_of(c.excess);
  j["excess_budget"] = c.excess_budget;
  j["shells_identical"] = c.shells_identical;
  j["pass_excess"] = c.pass_excess;
  j["pass_marginal"] = c.pass_marginal;
  j["stabilization_gap"] = c.stabilization_gap;
  j["stabilization_limit"] = c.stabilization_limit;
  j["pass_stabilization"] = c.pass_stabilization;
  j["pass"] = c.pass;
  return j;
}

inline ordered_json json_of(const WilCheck& w) {
  ordered_json j;
  j["c"] = w.c;
  j["est_conn_inf"] = json_of(w.conn_proxy);  // proxy-radius stand-in
  j["est_conn_far"] = json_of(w.conn_far);
  j["stabilization_gap"] = w.stabilization_gap;
  j["method"] = w.method;
  j["status"] = w.status;
  j["pass"] = w.pass;
  if (w.analytic_attempted) {
    j["analytic"] = ordered_json{{"pepe_pass", w.pepe_pass},
                                 {"pepe_violations", w.pepe_violations},
                                 {"bound", w.analytic_bound},
                                 {"audit_holds", w.audit_holds}};
  }
  return j;
}

inline ordered_json json_of(const PackingStep& s) {
  ordered_json j;
  j["index"] = s.index;
  j["vertex"] = s.w;
  j["label"] = s.label;
  j["D"] = s.D;
  j["ctd"] = json_of(s.ctd);
  j["wil"] = json_of(s.wil);
  j["dependency"] = s.dependency;
  return j;
}

inline ordered_json json_of(const PackingCertificate& c) {
  ordered_json j;
  j["p"] = c.p;
  j["eps"] = c.eps;
  j["c"] = c.c;
  j["d_min"] = c.d_min;
  j["d_max"] = c.d_max;
  j["r_proxy"] = c.r_proxy;
  j["spacing"] = c.spacing;
  j["order"] = c.order;
  j["seed"] = c.seed;
  j["replicas"] = c.replicas;
  j["confidence"] = c.confidence;
  j["k"] = c.k;
  j["dependency_sets_disjoint"] = c.dependency_sets_disjoint;
  ordered_json steps = ordered_json::array();
  for (const auto& s : c.steps) steps.push_back(json_of(s));
  j["steps"] = std::move(steps);
  ordered_json rej = ordered_json::array();
  for (const auto& r : c.rejections)
    rej.push_back(ordered_json{{"vertex", r.w}, {"reason", r.reason}});
  j["rejections"] = std::move(rej);
  if (!c.truncation_note.empty()) j["truncation_note"] = c.truncation_note;
  return j;
}

inline ordered_json json_of(const TheoremGridPoint& p) {
  ordered_json j;
  j["p1"] = p.p1;
  j["eps"] = p.eps;
  j["delta"] = p.delta;
  j["r"] = p.r;
  j["c"] = p.c;
  j["floor"] = p.floor;
  j["status"] = p.skipped ? "skipped" : (p.pruned ? "pruned" : "evaluated");
  if (p.evaluated) j["k"] = p.k;
  j["value"] = p.value;
  if (!p.note.empty()) j["note"] = p.note;
  return j;
}

inline ordered_json json_of(const TheoremBoundResult& r) {
  ordered_json j;
  j["value"] = r.value;
  j["argmin"] = json_of(r.argmin);
  ordered_json pts = ordered_json::array();
  for (const auto& p : r.points) pts.push_back(json_of(p));
  j["points"] = std::move(pts);
  j["warnings"] = r.warnings;
  return j;
}

inline ordered_json json_of(const InductionReport& r) {
  return ordered_json{{"k", r.k},
                      {"c", r.c},
                      {"eps", r.eps},
                      {"seed", r.seed},
                      {"instances", r.instances},
                      {"pass", r.pass},
                      {"min_slack_bound", r.min_slack_bound},
                      {"min_slack_intermediate", r.min_slack_intermediate}};
}

inline ordered_json json_of(const DisconnectionSweep& s) {
  ordered_json j;
  j["radii"] = s.radii;
  ordered_json est = ordered_json::array();
  for (const auto& e : s.estimates) est.push_back(json_of(e));
  j["estimates"] = std::move(est);
  return j;
}

inline ordered_json json_of(const BoundReport& r) {
  ordered_json j;
  j["degenerate"] = r.degenerate;
  j["p"] = r.p;
  j["verdict"] = r.verdict;
  if (!r.degenerate) {
    j["radii"] = r.radii;
    ordered_json est = ordered_json::array();
    for (const auto& e : r.disconnection) est.push_back(json_of(e));
    j["disconnection"] = std::move(est);
    j["empirical"] = json_of(r.empirical);
    j["stabilization_gap"] = r.stabilization_gap;
    j["lemma"] = ordered_json{{"eps", r.lemma_eps},
                              {"c", r.lemma_c},
                              {"k", r.certificate.k},
                              {"rhs", r.lemma_rhs}};
    j["certificate"] = json_of(r.certificate);
    j["theorem"] = json_of(r.theorem);
    j["rhs_min"] = r.rhs_min;
    j["slack"] = r.slack;
  }
  j["diagnostics"] = r.diagnostics;
  return j;
}

/// Standard envelope: tool name, library version, report kind, then payload
/// fields merged in.  No timestamps, so identical runs serialize identically.
inline ordered_json wrap_report(const std::string& kind, ordered_json payload) {
  ordered_json j;
  j["tool"] = "percobound";
  j["version"] = kVersion;
  j["kind"] = kind;
  for (auto& [key, val] : payload.items()) j[key] = std::move(val);
  return j;
}

inline void save_report(const ordered_json& j, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw parameter_error("cannot open output file: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw error("failed while writing output file: " + path);
}

// ---------------------------------------------------------------------------
// CSV writers.  First line is always the header; doubles are shortest-exact.
// ---------------------------------------------------------------------------

namespace detail_report {

inline std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace detail_report

inline std::string csv_phi_terms(const PhiResult& r) {
  using detail_report::fmt;
  std::string out = "y,value,ci_low,ci_high\n";
  for (const auto& t : r.terms) {
    double lo = t.value, hi = t.value;
    if (t.estimate) {
      lo = t.estimate->ci_low;
      hi = t.estimate->ci_high;
    }
    out += std::to_string(t.y) + "," + fmt(t.value) + "," + fmt(lo) + "," +
           fmt(hi) + "\n";
  }
  return out;
}

inline std::string csv_pc_probes(const PcBoundResult& r) {
  using detail_report::fmt;
  std::string out = "p,certified,max_radius\n";
  for (const auto& pr : r.probes)
    out += fmt(pr.p) + "," + (pr.certified ? "1" : "0") + "," +
           std::to_string(pr.max_radius) + "\n";
  return out;
}

inline std::string csv_packing_steps(const PackingCertificate& c) {
  using detail_report::fmt;
  std::string out =
      "index,vertex,label,D,disc_ball,disc_ball_low,disc_ball_high,"
      "disc_proxy,disc_proxy_low,disc_proxy_high,excess_high,excess_budget,"
      "conn,conn_low,conn_high,wil_method,wil_status\n";
  for (const auto& s : c.steps) {
    out += std::to_string(s.index) + "," + std::to_string(s.w) + "," + s.label +
           "," + std::to_string(s.D) + "," + fmt(s.ctd.q_ball.point) + "," +
           fmt(s.ctd.q_ball.ci_low) + "," + fmt(s.ctd.q_ball.ci_high) + "," +
           fmt(s.ctd.q_inf_proxy.point) + "," + fmt(s.ctd.q_inf_proxy.ci_low) +
           "," + fmt(s.ctd.q_inf_proxy.ci_high) + "," +
           fmt(s.ctd.excess.ci_high) + "," + fmt(s.ctd.excess_budget) + "," +
           fmt(s.wil.conn_proxy.point) + "," + fmt(s.wil.conn_proxy.ci_low) +
           "," + fmt(s.wil.conn_proxy.ci_high) + "," + s.wil.method + "," +
           s.wil.status + "\n";
  }
  return out;
}

inline std::string csv_verify_radii(const BoundReport& r) {
  using detail_report::fmt;
  std::string out = "radius,point,ci_low,ci_high\n";
  for (std::size_t i = 0; i < r.radii.size(); ++i)
    out += std::to_string(r.radii[i]) + "," + fmt(r.disconnection[i].point) +
           "," + fmt(r.disconnection[i].ci_low) + "," +
           fmt(r.disconnection[i].ci_high) + "\n";
  return out;
}

inline std::string csv_verify_grid(const TheoremBoundResult& r) {
  using detail_report::fmt;
  std::string out = "p1,eps,delta,r,c,floor,status,k,value\n";
  for (const auto& p : r.points) {
    std::string status = p.skipped ? "skipped" : (p.pruned ? "pruned" : "evaluated");
    out += fmt(p.p1) + "," + fmt(p.eps) + "," + fmt(p.delta) + "," + fmt(p.r) +
           "," + fmt(p.c) + "," + fmt(p.floor) + "," + status + "," +
           (p.evaluated ? std::to_string(p.k) : std::string()) + "," +
           fmt(p.value) + "\n";
  }
  return out;
}

inline void save_text(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw parameter_error("cannot open output file: " + path);
  out << text;
  if (!out) throw error("failed while writing output file: " + path);
}

}  // namespace percobound
