#include "qgraph/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qgraph/boundary.hpp"
#include "qgraph/expansion.hpp"
#include "qgraph/fem.hpp"
#include "qgraph/funcspace.hpp"
#include "qgraph/graph.hpp"
#include "qgraph/potentials.hpp"
#include "qgraph/secular.hpp"

namespace qgraph {

namespace {

using Json = nlohmann::ordered_json;

std::string read_text(const std::string& path, const std::string& what) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + what + " '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

MetricGraph load_graph(const RunConfig& cfg) {
  if (cfg.graph.empty()) throw InputError("--graph is required");
  return MetricGraph::build(read_graph_file(cfg.graph));
}

BoundaryCondition load_bc(const RunConfig& cfg, const MetricGraph& g) {
  if (cfg.bc.empty()) throw InputError("--bc is required");
  return read_bc_file(g, cfg.bc);
}

BcReport require_valid_bc(const MetricGraph& g, const BoundaryCondition& bc) {
  BcReport r = validate_bc(g, bc);
  if (!r.ok()) {
    std::string msg = "invalid boundary condition:";
    for (const auto& v : r.violations) msg += " " + v.subject + " (" + v.condition + ": " + v.message + ")";
    throw InputError(msg);
  }
  return r;
}

Json violations_json(const std::vector<Violation>& vs) {
  Json arr = Json::array();
  for (const auto& v : vs) arr.push_back({{"subject", v.subject}, {"condition", v.condition}, {"message", v.message}});
  return arr;
}

Json heins_json(const HeinsConstant& hc) { return {{"S", hc.S}, {"u", hc.u}, {"eps0", hc.eps0}, {"C", hc.C}}; }

// null for non-finite numbers, which JSON cannot carry.
Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Point parse_base(const MetricGraph& g, const std::string& spec) {
  if (spec.empty()) return Point::vertex(0);
  const auto at = spec.find('@');
  if (at == std::string::npos) {
    const auto v = g.find_vertex(spec);
    if (!v) throw InputError("unknown weight base vertex '" + spec + "'");
    return Point::vertex(*v);
  }
  const auto e = g.find_edge(spec.substr(0, at));
  if (!e) throw InputError("unknown weight base edge '" + spec.substr(0, at) + "'");
  double t = 0.0;
  try {
    t = std::stod(spec.substr(at + 1));
  } catch (const std::exception&) {
    throw InputError("malformed weight base '" + spec + "'");
  }
  return g.point(*e, t);
}

WeightFunction make_weight(const RunConfig& cfg, const MetricGraph& g) {
  if (!cfg.weight_eps) return WeightFunction::constant(1.0);
  return WeightFunction::ball(g, parse_base(g, cfg.weight_base), *cfg.weight_eps);
}

Json weight_json(const RunConfig& cfg, const MetricGraph& g, const WeightFunction& w) {
  Json j;
  j["kind"] = w.is_constant() ? "constant" : "ball";
  if (!w.is_constant()) {
    j["eps"] = *cfg.weight_eps;
    j["base"] = cfg.weight_base.empty() ? g.vertex_id(0) : cfg.weight_base;
  }
  j["sup_inverse"] = w.sup_inverse();
  j["integral_inverse_sq"] = number(w.integral_inverse_sq(g));
  return j;
}

void require_compact(const MetricGraph& g) {
  if (!g.compact()) throw UnsupportedError("spectral computations need a compact graph (all edges finite)");
}

// Distinct secular eigenvalues, expanded by multiplicity.
std::vector<double> expand(const std::vector<SecularRoot>& roots) {
  std::vector<double> out;
  for (const auto& r : roots) out.insert(out.end(), r.multiplicity, r.lambda);
  return out;
}

// Keeps whole eigenspaces until at least `modes` functions are covered.
std::vector<SecularRoot> first_modes(const std::vector<SecularRoot>& roots, std::size_t modes) {
  std::vector<SecularRoot> out;
  std::size_t count = 0;
  for (const auto& r : roots) {
    if (count >= modes) break;
    out.push_back(r);
    count += r.multiplicity;
  }
  return out;
}

}  // namespace

CommandResult cmd_validate(const RunConfig& cfg) {
  if (cfg.graph.empty()) throw InputError("--graph is required");
  const GraphSpec spec = read_graph_file(cfg.graph);
  Json report;
  report["command"] = "validate";
  const auto gv = validate(spec);
  Json graph;
  graph["valid"] = gv.empty();
  graph["violations"] = violations_json(gv);
  graph["u"] = spec.u;
  graph["vertices"] = spec.vertices.size();
  graph["edges"] = spec.edges.size();
  bool ok = gv.empty();
  if (ok) {
    const MetricGraph g = MetricGraph::build(spec);
    graph["compact"] = g.compact();
    graph["connected"] = g.connected();
    graph["total_length"] = number(g.total_length());
    report["graph"] = graph;
    if (!cfg.bc.empty()) {
      const BoundaryCondition bc = load_bc(cfg, g);
      const BcReport br = validate_bc(g, bc);
      Json b;
      b["valid"] = br.ok();
      b["violations"] = violations_json(br.violations);
      b["notes"] = br.notes;
      b["S"] = br.S;
      report["bc"] = b;
      report["heins"] = heins_json(heins_constant(br.S, g.u()));
      ok = ok && br.ok();
    }
  } else {
    report["graph"] = graph;
  }
  report["valid"] = ok;
  return {ok ? kPass : kCheckFailed, report.dump(2)};
}

CommandResult cmd_spectrum(const RunConfig& cfg) {
  const MetricGraph g = load_graph(cfg);
  require_compact(g);
  const BoundaryCondition bc = load_bc(cfg, g);
  const BcReport br = require_valid_bc(g, bc);
  const HeinsConstant hc = heins_constant(br.S, g.u());

  const FormAssembly fa = assemble(g, bc, cfg.mesh);
  DiscreteEigensystem es;
  if (cfg.lambda_max && !cfg.modes) {
    es = eigensystem_below(fa, *cfg.lambda_max);
  } else {
    es = eigensystem(fa, std::min<std::size_t>(cfg.modes.value_or(10), fa.dim));
  }
  const double h = fa.mesh.h_max();

  ScanOptions scan;
  scan.lambda_min = cfg.lambda_min;
  scan.tol = 1e-8;
  const double fem_top = es.values.size() > 0 ? es.values(es.values.size() - 1) : 0.0;
  scan.lambda_max = cfg.lambda_max.value_or(fem_top + 1.0 + 0.01 * std::abs(fem_top));
  if (cfg.lambda_max) scan.lambda_max = std::max(*cfg.lambda_max, fem_top + 1.0);
  const auto roots = eigenvalues_scan(g, bc, scan);
  const auto exact = expand(roots);

  Json report;
  report["command"] = "spectrum";
  report["h_max"] = h;
  report["heins"] = heins_json(hc);
  report["fem_residual"] = es.max_residual;
  report["fem_solver"] = es.iterative ? "subspace-iteration" : "dense";
  Json fem = Json::array();
  for (Eigen::Index k = 0; k < es.values.size(); ++k) fem.push_back(es.values(k));
  report["fem"] = fem;
  Json sec = Json::array();
  for (const auto& r : roots) sec.push_back({{"lambda", r.lambda}, {"multiplicity", r.multiplicity}, {"sigma_min", r.sigma_min}});
  report["secular"] = sec;

  Json cmp = Json::array();
  double worst = 0.0;
  bool ok = exact.size() >= static_cast<std::size_t>(es.values.size());
  for (Eigen::Index k = 0; k < es.values.size(); ++k) {
    const double f = es.values(k);
    const double budget = 10.0 * h * h * std::max(1.0, std::abs(f));
    Json row{{"index", k + 1}, {"fem", f}};
    if (static_cast<std::size_t>(k) < exact.size()) {
      const double s = exact[static_cast<std::size_t>(k)];
      const double diff = std::abs(f - s);
      worst = std::max(worst, diff);
      row["secular"] = s;
      row["difference"] = diff;
      row["budget"] = budget;
      row["ok"] = diff <= budget;
      ok = ok && diff <= budget;
    } else {
      row["secular"] = nullptr;
      row["ok"] = false;
    }
    cmp.push_back(row);
  }
  report["comparison"] = cmp;
  report["max_disagreement"] = worst;
  report["within_budget"] = ok;
  report["anomalies"] = br.notes;

  if (!cfg.out.empty()) {
    std::filesystem::create_directories(cfg.out);
    std::ofstream(std::filesystem::path(cfg.out) / "spectrum_fem.csv") << spectrum_csv(es.values);
    std::ofstream(std::filesystem::path(cfg.out) / "spectrum_secular.csv") << roots_csv(roots);
  }
  return {ok ? kPass : kCheckFailed, report.dump(2)};
}

CommandResult cmd_expansion(const RunConfig& cfg) {
  const MetricGraph g = load_graph(cfg);
  require_compact(g);
  const BoundaryCondition bc = load_bc(cfg, g);
  const BcReport br = require_valid_bc(g, bc);
  const HeinsConstant hc = heins_constant(br.S, g.u());
  const double tol = cfg.tol.value_or(1e-6);
  const std::size_t modes = cfg.modes.value_or(20);
  const WeightFunction w = make_weight(cfg, g);
  const Mesh mesh = Mesh::uniform(g, cfg.mesh);

  ScanOptions scan;
  scan.lambda_min = cfg.lambda_min;
  if (cfg.lambda_max) {
    scan.lambda_max = *cfg.lambda_max;
  } else {
    const FormAssembly fa = assemble(g, bc, mesh);
    const DiscreteEigensystem es = eigensystem(fa, std::min(modes, fa.dim));
    const double top = es.values(es.values.size() - 1);
    scan.lambda_max = top + 1.0 + 0.01 * std::abs(top);
  }
  auto roots = eigenvalues_scan(g, bc, scan);
  if (!cfg.lambda_max) roots = first_modes(roots, modes);
  if (roots.empty()) throw InputError("no eigenvalues in the scanned range");
  // gamma(t) = (C + t)^(-1/2) needs C + lambda > 0 on the spectrum.
  const double C = cfg.gamma_shift.value_or(1.0 + std::max(0.0, -roots.front().lambda));
  const DiscreteSpectralRep rep = spectral_rep(g, bc, roots, mesh);
  const HsReport hs = hs_norm(g, rep, w, C);

  Json report;
  report["command"] = "expansion";
  report["spectral_measure"] = "counting";
  report["C"] = C;
  report["heins"] = heins_json(hc);
  report["weight"] = weight_json(cfg, g, w);
  report["modes"] = rep.num_modes();
  report["layers"] = rep.layers();
  Json levels = Json::array();
  for (std::size_t j = 1; j <= rep.layers(); ++j) {
    Json lv = Json::array();
    for (auto i : rep.level_set(j)) lv.push_back(rep.eigenvalues[i]);
    levels.push_back(lv);
  }
  report["level_sets"] = levels;
  report["hs_norm_sq"] = number(hs.value);
  report["hs_partial"] = hs.partial;
  report["tail_bound"] = number(hs.tail_bound);
  report["tail_estimate"] = number(hs.tail_estimate);
  if (mesh.total_nodes() <= 4000) report["kernel_quadrature"] = kernel_hs_quadrature(rep, w, C);

  // Parseval battery: one function inside the computed span, plus the test battery.
  const auto tests = standard_tests(g, bc);
  Json pars = Json::array();
  GridFunction span(mesh);
  {
    const Complex weights[3] = {{1.0, 0.0}, {0.0, 0.5}, {-0.25, 0.0}};
    std::size_t n = 0;
    for (std::size_t i = 0; i < rep.functions.size() && n < 3; ++i) {
      for (std::size_t j = 0; j < rep.functions[i].size() && n < 3; ++j, ++n) span += weights[n] * rep.functions[i][j];
    }
  }
  const ParsevalReport span_report = parseval(g, rep, span);
  pars.push_back({{"label", "span"}, {"gap", span_report.gap}, {"relative_gap", span_report.relative_gap}});
  for (const auto& t : tests) {
    const GridFunction f = GridFunction::sample(mesh, [&t](std::size_t e, double x) { return t.at(e, x)[0]; });
    const ParsevalReport pr = parseval(g, rep, f);
    pars.push_back({{"label", t.label},
                    {"gap", pr.gap},
                    {"relative_gap", pr.relative_gap},
                    {"tail_estimate", pr.tail_estimate}});
  }
  report["parseval_gap"] = span_report.gap;
  report["parseval"] = pars;

  double worst = 0.0;
  Json per_mode = Json::array();
  std::size_t index = 0;
  for (std::size_t i = 0; i < rep.exact.size(); ++i) {
    for (std::size_t j = 0; j < rep.exact[i].size(); ++j, ++index) {
      const auto& phi = rep.exact[i][j];
      const GenefReport gr = genef_residual(g, bc, phi, phi.lambda, tests);
      const double cond = max_condition_residual(g, bc, traces(g, phi));
      worst = std::max(worst, gr.worst);
      per_mode.push_back({{"index", index + 1},
                          {"lambda", phi.lambda},
                          {"layer", j + 1},
                          {"weighted_norm", std::sqrt(hs.weighted_norm_sq[index])},
                          {"genef_residual", gr.worst},
                          {"condition_residual", cond}});
    }
  }
  report["worst_genef_residual"] = worst;
  report["per_mode"] = per_mode;
  bool ok = worst <= tol && span_report.gap <= tol;

  if (!cfg.check_file.empty()) {
    const GridFunction phi = grid_function_from_csv(g, read_text(cfg.check_file, "check file"));
    const double lam = cfg.check_lambda.value_or(fit_lambda(g, phi, tests));
    const double nphi = norm(phi);
    if (!(nphi > 0.0)) throw InputError("check function is zero");
    const GenefReport gr = genef_residual(g, bc, (1.0 / nphi) * phi, lam, tests);
    report["check"] = {{"lambda", lam},
                       {"worst", gr.worst},
                       {"worst_interior", gr.worst_interior},
                       {"worst_vertex", gr.worst_vertex},
                       {"worst_test", gr.worst_label},
                       {"passed", gr.worst <= tol}};
    ok = ok && gr.worst <= tol;
  }
  report["tol"] = tol;
  report["passed"] = ok;

  if (!cfg.out.empty()) {
    std::filesystem::create_directories(cfg.out);
    std::ofstream(std::filesystem::path(cfg.out) / "eigenvalues.csv") << roots_csv(roots);
    std::size_t k = 0;
    for (const auto& level : rep.functions) {
      for (const auto& f : level) {
        std::ofstream(std::filesystem::path(cfg.out) / ("mode_" + std::to_string(++k) + ".csv")) << to_csv(g, f);
      }
    }
  }
  return {ok ? kPass : kCheckFailed, report.dump(2)};
}

CommandResult cmd_potential(const RunConfig& cfg) {
  const MetricGraph g = load_graph(cfg);
  require_compact(g);
  const BoundaryCondition bc = load_bc(cfg, g);
  require_valid_bc(g, bc);
  if (cfg.potential.empty()) throw InputError("--potential is required");
  const double tol = cfg.tol.value_or(1e-6);
  const std::size_t modes = cfg.modes.value_or(10);
  const WeightFunction w = make_weight(cfg, g);

  const FormAssembly fa = assemble(g, bc, cfg.mesh);
  const Potential V = parse_potential(g, fa.mesh, cfg.potential);
  const double step = g.u() / 20.0;
  const UniformL2Norm mv = m_v(g, V, step);

  Json report;
  report["command"] = "potential";
  report["heins"] = heins_json(fa.heins);
  report["M_V"] = {{"M", mv.M}, {"edge", g.edge(mv.edge).id}, {"t0", mv.t0}, {"t1", mv.t1}, {"step", step}};

  const auto samples = form_samples(fa, cfg.samples, cfg.seed);
  Json rb = Json::array();
  bool ok = true;
  for (double a : {g.u() / 4.0, g.u() / 2.0, g.u()}) {
    const RelativeBoundReport r = check_relative_bound(fa, V, a, samples, step);
    rb.push_back({{"a", a},
                  {"M", r.M},
                  {"C_a", r.Ca},
                  {"worst_margin", r.worst},
                  {"worst_window_margin", r.worst_window},
                  {"samples", r.samples}});
    ok = ok && r.worst >= -1e-8 && r.worst_window >= -1e-8;
  }
  report["relative_bound"] = rb;

  const FormAssembly pf = assemble_perturbed(fa, V);
  const std::size_t k = std::min(modes, fa.dim);
  const DiscreteEigensystem es0 = eigensystem(fa, k);
  const DiscreteEigensystem es = eigensystem(pf, k);
  Json rows = Json::array();
  double min_shift = kInfinity, max_shift = -kInfinity;
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    const double shift = es.values(i) - es0.values(i);
    min_shift = std::min(min_shift, shift);
    max_shift = std::max(max_shift, shift);
    rows.push_back({{"index", i + 1}, {"unperturbed", es0.values(i)}, {"perturbed", es.values(i)}, {"shift", shift}});
  }
  report["h_max"] = fa.mesh.h_max();
  report["spectrum"] = rows;
  report["min_shift"] = number(min_shift);
  report["max_shift"] = number(max_shift);

  const PerturbedReport pr = perturbed_genef_check(g, bc, V, pf, es, w);
  Json pm = Json::array();
  for (const auto& m : pr.modes) {
    pm.push_back({{"discrete_lambda", m.discrete_lambda},
                  {"lambda", m.lambda},
                  {"sigma_min", m.sigma},
                  {"interior", m.interior},
                  {"vertex", m.vertex},
                  {"condition_residual", m.condition},
                  {"weighted_norm", m.weighted_norm}});
  }
  report["genef"] = {{"worst", pr.worst},
                     {"worst_condition_residual", pr.worst_condition},
                     {"max_discretization_shift", pr.worst_shift},
                     {"per_mode", pm}};
  report["weight"] = weight_json(cfg, g, w);
  ok = ok && pr.worst <= tol && pr.worst_condition <= tol;
  report["tol"] = tol;
  report["passed"] = ok;

  if (!cfg.out.empty()) {
    std::filesystem::create_directories(cfg.out);
    std::ofstream(std::filesystem::path(cfg.out) / "spectrum_perturbed.csv") << spectrum_csv(es.values);
  }
  return {ok ? kPass : kCheckFailed, report.dump(2)};
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Quantum graph spectra, expansions and perturbation checks", "qgraph"};
  RunConfig cfg;
  app.add_option("command", cfg.command, "validate | spectrum | expansion | potential")
      ->required()
      ->check(CLI::IsMember({"validate", "spectrum", "expansion", "potential"}));
  app.add_option("--graph", cfg.graph, "graph JSON file");
  app.add_option("--bc", cfg.bc, "boundary-condition JSON file");
  app.add_option("--mesh", cfg.mesh, "largest mesh width")->check(CLI::PositiveNumber);
  app.add_option("--lambda-min", cfg.lambda_min, "lower end of the secular scan");
  app.add_option("--lambda-max", cfg.lambda_max, "upper end of the secular scan");
  app.add_option("--modes", cfg.modes, "number of modes");
  app.add_option("--tol", cfg.tol, "residual tolerance (default 1e-6)")->check(CLI::PositiveNumber);
  app.add_option("--seed", cfg.seed, "seed for randomized checks");
  app.add_option("--out", cfg.out, "output directory for CSV files");
  app.add_option("--potential", cfg.potential, "const:c | well:edge,t0,t1,depth | CSV file");
  app.add_option("--weight-eps", cfg.weight_eps, "use the ball weight with this exponent")->check(CLI::PositiveNumber);
  app.add_option("--weight-base", cfg.weight_base, "base point: vertex id or edge@t");
  app.add_option("--check-file", cfg.check_file, "CSV function to test as a generalized eigenfunction");
  app.add_option("--check-lambda", cfg.check_lambda, "energy for --check-file (default: fitted)");
  app.add_option("--gamma-shift", cfg.gamma_shift, "C in (C + t)^(-1/2) (default: 1 + max(0, -lambda_1))");
  app.add_option("--samples", cfg.samples, "random samples per inequality check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << "qgraph: " << e.what() << "\n";
    return kInputError;
  }

  try {
    CommandResult r;
    if (cfg.command == "validate") r = cmd_validate(cfg);
    if (cfg.command == "spectrum") r = cmd_spectrum(cfg);
    if (cfg.command == "expansion") r = cmd_expansion(cfg);
    if (cfg.command == "potential") r = cmd_potential(cfg);
    out << r.report << "\n";
    if (!cfg.out.empty()) {
      std::filesystem::create_directories(cfg.out);
      std::ofstream(std::filesystem::path(cfg.out) / (cfg.command + ".json")) << r.report << "\n";
    }
    return r.exit_code;
  } catch (const InputError& e) {
    err << "qgraph: " << e.what() << "\n";
    return kInputError;
  } catch (const UnsupportedError& e) {
    err << "qgraph: " << e.what() << "\n";
    return kInputError;
  } catch (const NumericalError& e) {
    err << "qgraph: numerical failure: " << e.what() << "\n";
    return kCheckFailed;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "qgraph: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace qgraph
