// Command-line driver: builds a truncated graph, runs one of the library's
// analyses, and emits a deterministic JSON report (plus optional CSV tables).
//
// Exit codes: 0 success, 1 bad parameters or input, 2 truncation too small
// for the requested computation, 3 bound-verification flagged a violation
// candidate.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "percobound/bounds.hpp"
#include "percobound/engine.hpp"
#include "percobound/errors.hpp"
#include "percobound/graph.hpp"
#include "percobound/packing.hpp"
#include "percobound/pc.hpp"
#include "percobound/phi.hpp"
#include "percobound/report.hpp"
#include "percobound/version.hpp"

namespace {

using namespace percobound;

struct CommonArgs {
  std::string graph = "lattice:2";
  int rmax = 16;
  std::optional<VertexId> origin;
  double p = 0.5;
  std::optional<std::uint64_t> seed;
  std::uint64_t replicas = 10000;
  double confidence = 0.99;
  unsigned workers = 0;
  std::string out;
  std::string csv;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--graph", args.graph,
                  "Graph family: lattice:<dim>, tree:<offspring>, or file:<path>")
      ->capture_default_str();
  cmd->add_option("--rmax", args.rmax, "Truncation radius around the origin")
      ->capture_default_str();
  cmd->add_option("--origin", args.origin,
                  "Origin vertex id (file graphs only; defaults to 0)");
  cmd->add_option("--p", args.p, "Site openness probability")
      ->capture_default_str();
  cmd->add_option("--seed", args.seed,
                  "Base seed for Monte Carlo sampling (required when sampling)");
  cmd->add_option("--replicas", args.replicas, "Monte Carlo replica count")
      ->capture_default_str();
  cmd->add_option("--confidence", args.confidence,
                  "Confidence level for all intervals")
      ->capture_default_str();
  cmd->add_option("--workers", args.workers,
                  "Worker thread cap (0: PERCOBOUND_THREADS, then hardware)");
  cmd->add_option("--out", args.out, "Write the JSON report here instead of stdout");
  cmd->add_option("--csv", args.csv, "Also write the module's CSV table(s) here");
}

GraphView build_view(const CommonArgs& args) {
  const auto colon = args.graph.find(':');
  const std::string kind = args.graph.substr(0, colon);
  const std::string rest =
      colon == std::string::npos ? std::string() : args.graph.substr(colon + 1);
  GraphSpec spec;
  if (kind == "lattice") {
    if (rest.empty()) throw parameter_error("--graph lattice:<dim> needs a dimension");
    spec = GraphSpec::lattice(std::stoi(rest), args.rmax);
  } else if (kind == "tree") {
    if (rest.empty()) throw parameter_error("--graph tree:<b> needs an offspring count");
    spec = GraphSpec::regular_tree(std::stoi(rest), args.rmax);
  } else if (kind == "file") {
    if (rest.empty()) throw parameter_error("--graph file:<path> needs a path");
    spec = GraphSpec::from_file(rest, args.rmax, args.origin);
  } else {
    throw parameter_error("unknown graph family '" + kind +
                          "' (expected lattice:<dim>, tree:<b>, or file:<path>)");
  }
  return GraphView(TruncatedGraph::build(spec));
}

PercolationParams resolve_params(const CommonArgs& args, bool needs_seed) {
  PercolationParams params;
  params.p = args.p;
  if (needs_seed && !args.seed)
    throw parameter_error("--seed is required for Monte Carlo runs");
  params.seed = args.seed.value_or(0);
  params.replicas = args.replicas;
  params.confidence = args.confidence;
  params.workers = args.workers;
  return params;
}

/// Vertex set selection shared by pack / verify-bound / simulate.
struct SetArgs {
  int segment_length = -1;
  std::vector<VertexId> ids;
};

void add_set_args(CLI::App* cmd, SetArgs& set) {
  cmd->add_option("--segment-length", set.segment_length,
                  "Take S as the axis segment (0,0..),(1,0..),... (lattice only)");
  cmd->add_option("--set", set.ids, "Take S as this list of vertex ids")
      ->delimiter(',');
}

VertexSet resolve_set(const GraphView& view, const SetArgs& set) {
  if (set.segment_length >= 0 && !set.ids.empty())
    throw parameter_error("--segment-length and --set are mutually exclusive");
  if (set.segment_length >= 0) return lattice_segment(view, set.segment_length);
  if (!set.ids.empty()) return VertexSet(std::vector<VertexId>(set.ids));
  throw parameter_error("choose S with --segment-length or --set");
}

void emit(const ordered_json& j, const CommonArgs& args) {
  if (args.out.empty())
    std::cout << j.dump(2) << "\n";
  else
    save_report(j, args.out);
}

int exit_code_for(const std::string& verdict) {
  if (verdict == "violation_candidate") return 3;
  if (verdict == "degenerate") return 1;  // empty S: nothing was compared
  return 0;
}

// ---------------------------------------------------------------------------

int run_phi(const CommonArgs& common, VertexId vertex, bool vertex_given, int ball,
            const std::vector<VertexId>& set_ids, const std::string& method,
            std::size_t exact_cap, bool endpoint_exterior) {
  GraphView view = build_view(common);
  PhiQuery q;
  q.view = &view;
  q.v = vertex_given ? vertex : view.origin();
  if (ball >= 0 && !set_ids.empty())
    throw parameter_error("--ball and --set are mutually exclusive");
  if (ball >= 0)
    q.S = view.ball(q.v, ball);
  else if (!set_ids.empty())
    q.S = VertexSet(std::vector<VertexId>(set_ids));
  else
    throw parameter_error("choose S with --ball or --set");
  q.p = common.p;
  q.opts.exact_cap = exact_cap;
  q.opts.endpoint_interior = !endpoint_exterior;
  if (method == "exact") {
    q.method = PhiQuery::Method::exact;
  } else if (method == "mc") {
    q.method = PhiQuery::Method::mc;
    q.params = resolve_params(common, true);
  } else {
    throw parameter_error("--method must be exact or mc");
  }
  PhiResult r = phi(q);

  ordered_json payload;
  payload["graph"] = json_of_view(view);
  payload["vertex"] = q.v;
  payload["p"] = q.p;
  if (ball >= 0) payload["ball_radius"] = ball;
  payload["set_size"] = q.S.size();
  if (q.method == PhiQuery::Method::mc) payload["params"] = json_of(q.params);
  payload["result"] = json_of(r);
  emit(wrap_report("phi", payload), common);
  if (!common.csv.empty()) save_text(csv_phi_terms(r), common.csv);
  return 0;
}

int run_pc_bound(const CommonArgs& common, std::vector<VertexId> family,
                 double eps0, int witness_rmax, double p_tol, double p_lo,
                 double p_hi, bool no_mc, std::size_t exact_cap) {
  GraphView view = build_view(common);
  PcBoundOptions opt;
  opt.witness.eps0 = eps0;
  opt.witness.r_max = witness_rmax;
  opt.witness.allow_mc = !no_mc;
  opt.witness.phi.exact_cap = exact_cap;
  opt.witness.params = resolve_params(common, !no_mc);
  opt.p_tol = p_tol;
  opt.p_lo = p_lo;
  opt.p_hi = p_hi;
  VertexSet fam = family.empty() ? VertexSet::of({view.origin()})
                                 : VertexSet(std::move(family));
  PcBoundResult res = pc_lower_bound(view, fam, opt);

  ordered_json payload;
  payload["graph"] = json_of_view(view);
  payload["family"] = std::vector<VertexId>(fam.begin(), fam.end());
  payload["eps0"] = eps0;
  payload["witness_rmax"] = witness_rmax;
  payload["params"] = json_of(opt.witness.params);
  payload["result"] = json_of(res);
  emit(wrap_report("pc_bound", payload), common);
  if (!common.csv.empty()) save_text(csv_pc_probes(res), common.csv);
  return 0;
}

struct PackArgs {
  double eps = 0.2;
  double c = 0.5;
  int d_min = 1;
  int d_max = 3;
  int r_proxy = 16;
  std::size_t spacing = 1;
  std::string order = "origin-distance";
  // Optional analytic connection certificate.
  double p1 = -1.0;
  double eps1 = -1.0;
  double ptilde = -1.0;
};

void add_pack_args(CLI::App* cmd, PackArgs& p) {
  cmd->add_option("--eps", p.eps, "Comparison tolerance eps")->capture_default_str();
  cmd->add_option("--c", p.c, "Connection constant c")->capture_default_str();
  cmd->add_option("--dmin", p.d_min, "Smallest ball radius to try")
      ->capture_default_str();
  cmd->add_option("--dmax", p.d_max, "Largest ball radius to try")
      ->capture_default_str();
  cmd->add_option("--rproxy", p.r_proxy, "Proxy radius standing in for infinity")
      ->capture_default_str();
  cmd->add_option("--spacing", p.spacing, "Keep every spacing-th candidate")
      ->capture_default_str();
  cmd->add_option("--order", p.order,
                  "Candidate order: origin-distance or as-given")
      ->capture_default_str();
  cmd->add_option("--p1", p.p1, "Analytic route: comparison probability p1");
  cmd->add_option("--eps1", p.eps1, "Analytic route: exponent tolerance eps1");
  cmd->add_option("--ptilde", p.ptilde,
                  "Analytic route: certified threshold estimate");
}

std::optional<AnalyticWilParams> resolve_analytic(const PackArgs& p) {
  const bool any = p.p1 >= 0.0 || p.eps1 >= 0.0 || p.ptilde >= 0.0;
  if (!any) return std::nullopt;
  if (p.p1 < 0.0 || p.eps1 < 0.0 || p.ptilde < 0.0)
    throw parameter_error("the analytic route needs --p1, --eps1, and --ptilde");
  AnalyticWilParams an;
  an.p1 = p.p1;
  an.eps1 = p.eps1;
  an.eps = p.eps1 * 2.0;  // placeholder; overwritten below where eps is known
  an.ptilde_c = p.ptilde;
  return an;
}

PackingRequest::Order resolve_order(const std::string& name) {
  if (name == "origin-distance") return PackingRequest::Order::origin_distance;
  if (name == "as-given") return PackingRequest::Order::as_given;
  throw parameter_error("--order must be origin-distance or as-given");
}

int run_pack(const CommonArgs& common, const SetArgs& set, const PackArgs& pk) {
  GraphView view = build_view(common);
  PackingRequest req{view, resolve_set(view, set)};
  req.eps = pk.eps;
  req.c = pk.c;
  req.d_min = pk.d_min;
  req.d_max = pk.d_max;
  req.r_proxy = pk.r_proxy;
  req.spacing = pk.spacing;
  req.order = resolve_order(pk.order);
  req.params = resolve_params(common, true);
  req.analytic = resolve_analytic(pk);
  if (req.analytic) req.analytic->eps = pk.eps;
  PackingCertificate cert = certify_packing(req);

  ordered_json payload;
  payload["graph"] = json_of_view(view);
  payload["S"] = std::vector<VertexId>(req.S.begin(), req.S.end());
  payload["params"] = json_of(req.params);
  payload["certificate"] = json_of(cert);
  emit(wrap_report("packing", payload), common);
  if (!common.csv.empty()) save_text(csv_packing_steps(cert), common.csv);
  return 0;
}

int run_verify(const CommonArgs& common, const SetArgs& set, const PackArgs& pk,
               double ptilde, int grid_p1, std::vector<double> grid_eps,
               std::vector<double> grid_delta, double growth, bool no_prune) {
  GraphView view = build_view(common);
  VertexSet S = resolve_set(view, set);
  VerifyOptions opt;
  opt.eps = pk.eps;
  opt.c = pk.c;
  opt.d_min = pk.d_min;
  opt.d_max = pk.d_max;
  opt.r_proxy = pk.r_proxy;
  opt.spacing = pk.spacing;
  opt.order = resolve_order(pk.order);
  opt.analytic = resolve_analytic(pk);
  if (opt.analytic) opt.analytic->eps = pk.eps;
  opt.params = resolve_params(common, true);
  opt.ptilde_c = ptilde;
  opt.grid_p1_count = grid_p1;
  if (!grid_eps.empty()) opt.grid_eps = std::move(grid_eps);
  if (!grid_delta.empty()) opt.grid_delta = std::move(grid_delta);
  opt.prune = !no_prune;
  opt.radius_growth = growth;
  BoundReport report = verify_disconnection(view, S, opt);

  ordered_json payload;
  payload["graph"] = json_of_view(view);
  payload["S"] = std::vector<VertexId>(S.begin(), S.end());
  payload["params"] = json_of(opt.params);
  payload["report"] = json_of(report);
  emit(wrap_report("verify_bound", payload), common);
  if (!common.csv.empty()) {
    save_text(csv_verify_radii(report), common.csv);
    save_text(csv_verify_grid(report.theorem), common.csv + ".grid.csv");
  }
  return exit_code_for(report.verdict);
}

int run_simulate(const CommonArgs& common, const SetArgs& set,
                 std::vector<int> radii) {
  GraphView view = build_view(common);
  VertexSet S = resolve_set(view, set);
  if (radii.empty()) throw parameter_error("--rlist needs at least one radius");
  PercolationParams params = resolve_params(common, true);
  DisconnectionSweep sweep = truncated_disconnection_sweep(view, S, radii, params);

  ordered_json payload;
  payload["graph"] = json_of_view(view);
  payload["S"] = std::vector<VertexId>(S.begin(), S.end());
  payload["params"] = json_of(params);
  payload["sweep"] = json_of(sweep);
  emit(wrap_report("simulate", payload), common);
  if (!common.csv.empty()) {
    std::string csv = "radius,point,ci_low,ci_high\n";
    for (std::size_t i = 0; i < sweep.radii.size(); ++i) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g\n", sweep.radii[i],
                    sweep.estimates[i].point, sweep.estimates[i].ci_low,
                    sweep.estimates[i].ci_high);
      csv += buf;
    }
    save_text(csv, common.csv);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Local percolation functional, packing certificates, and "
               "disconnection bound verification on truncated graphs"};
  app.set_version_flag("--version", std::string(kVersion));
  app.set_config("--config", "", "Read defaults from an INI/TOML file");
  app.require_subcommand(1);
  app.fallthrough();  // lets --config appear after the subcommand name

  CommonArgs common;

  // phi ----------------------------------------------------------------
  auto* phi_cmd = app.add_subcommand(
      "phi", "Evaluate the local functional on a finite vertex set");
  add_common(phi_cmd, common);
  VertexId phi_vertex = 0;
  int phi_ball = -1;
  std::vector<VertexId> phi_set;
  std::string phi_method = "exact";
  std::size_t phi_cap = 25;
  bool phi_ext = false;
  auto* phi_vertex_opt =
      phi_cmd->add_option("--vertex", phi_vertex, "Source vertex (default: origin)");
  phi_cmd->add_option("--ball", phi_ball, "Use S = ball(vertex, r)");
  phi_cmd->add_option("--set", phi_set, "Use S = this id list")->delimiter(',');
  phi_cmd->add_option("--method", phi_method, "exact or mc")->capture_default_str();
  phi_cmd->add_option("--exact-cap", phi_cap,
                      "Largest interior enumerated exactly")
      ->capture_default_str();
  phi_cmd->add_flag("--endpoint-exterior", phi_ext,
                    "Count connections that end on open vertices outside the "
                    "interior");

  // pc-bound -----------------------------------------------------------
  auto* pc_cmd = app.add_subcommand(
      "pc-bound", "Certify a threshold lower bound by bisection over p");
  add_common(pc_cmd, common);
  std::vector<VertexId> pc_family;
  double pc_eps0 = 0.5, pc_ptol = 0.01, pc_plo = 0.05, pc_phi = 0.99;
  int pc_rmax = 6;
  bool pc_nomc = false;
  std::size_t pc_cap = 25;
  pc_cmd->add_option("--family", pc_family,
                     "Vertices that all need witnesses (default: origin)")
      ->delimiter(',');
  pc_cmd->add_option("--eps0", pc_eps0, "Witness threshold is 1 - eps0")
      ->capture_default_str();
  pc_cmd->add_option("--witness-rmax", pc_rmax, "Largest witness radius tried")
      ->capture_default_str();
  pc_cmd->add_option("--ptol", pc_ptol, "Bisection stops at this width")
      ->capture_default_str();
  pc_cmd->add_option("--p-lo", pc_plo, "Left end of the bisection bracket")
      ->capture_default_str();
  pc_cmd->add_option("--p-hi", pc_phi, "Right end of the bisection bracket")
      ->capture_default_str();
  pc_cmd->add_flag("--no-mc", pc_nomc, "Only certify with exact enumeration");
  pc_cmd->add_option("--exact-cap", pc_cap, "Largest interior enumerated exactly")
      ->capture_default_str();

  // pack ----------------------------------------------------------------
  auto* pack_cmd = app.add_subcommand(
      "pack", "Greedily certify a packing of condition-satisfying balls");
  add_common(pack_cmd, common);
  SetArgs pack_set;
  PackArgs pack_args;
  add_set_args(pack_cmd, pack_set);
  add_pack_args(pack_cmd, pack_args);

  // verify-bound ----------------------------------------------------------
  auto* verify_cmd = app.add_subcommand(
      "verify-bound",
      "Compare empirical truncated disconnection against both bound forms");
  add_common(verify_cmd, common);
  SetArgs verify_set;
  PackArgs verify_pack;
  add_set_args(verify_cmd, verify_set);
  add_pack_args(verify_cmd, verify_pack);
  double verify_ptilde = 0.593;
  int verify_gp1 = 8;
  std::vector<double> verify_geps, verify_gdelta;
  double verify_growth = 1.5;
  bool verify_noprune = false;
  verify_cmd->add_option("--grid-ptilde", verify_ptilde,
                         "Threshold estimate anchoring the p1 grid")
      ->capture_default_str();
  verify_cmd->add_option("--grid-p1", verify_gp1, "Number of p1 grid points")
      ->capture_default_str();
  verify_cmd->add_option("--grid-eps", verify_geps, "Grid eps values")
      ->delimiter(',');
  verify_cmd->add_option("--grid-delta", verify_gdelta, "Grid delta values")
      ->delimiter(',');
  verify_cmd->add_option("--growth", verify_growth,
                         "Radius schedule growth factor")
      ->capture_default_str();
  verify_cmd->add_flag("--no-prune", verify_noprune,
                       "Evaluate every grid point (skip the additive-floor cut)");

  // simulate -------------------------------------------------------------
  auto* sim_cmd = app.add_subcommand(
      "simulate", "Coupled truncated disconnection estimates over a radius list");
  add_common(sim_cmd, common);
  SetArgs sim_set;
  std::vector<int> sim_radii;
  add_set_args(sim_cmd, sim_set);
  sim_cmd->add_option("--rlist", sim_radii, "Shell radii, ascending")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (phi_cmd->parsed())
      return run_phi(common, phi_vertex, phi_vertex_opt->count() > 0, phi_ball,
                     phi_set, phi_method, phi_cap, phi_ext);
    if (pc_cmd->parsed())
      return run_pc_bound(common, pc_family, pc_eps0, pc_rmax, pc_ptol, pc_plo,
                          pc_phi, pc_nomc, pc_cap);
    if (pack_cmd->parsed()) return run_pack(common, pack_set, pack_args);
    if (verify_cmd->parsed())
      return run_verify(common, verify_set, verify_pack, verify_ptilde,
                        verify_gp1, verify_geps, verify_gdelta, verify_growth,
                        verify_noprune);
    if (sim_cmd->parsed()) return run_simulate(common, sim_set, sim_radii);
  } catch (const truncation_error& e) {
    std::cerr << "truncation error: " << e.what() << "\n";
    return 2;
  } catch (const parse_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const parameter_error& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return 1;
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
