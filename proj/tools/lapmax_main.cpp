#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lapmax/errors.hpp"
#include "lapmax/fixtures.hpp"
#include "lapmax/optimize.hpp"

namespace {

using namespace lapmax;
using nlohmann::json;

constexpr int EXIT_PASS = 0;
constexpr int EXIT_VERIFY_FAIL = 1;
constexpr int EXIT_USAGE = 2;
constexpr int EXIT_NUMERICAL = 3;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw IoError("cannot write '" + out_path + "'");
  out << text;
}

json lengths_json(const Graph& g, const Vec& values) {
  json j = json::object();
  for (int e = 0; e < g.edge_count(); ++e) j[g.edge_label(e)] = values[e];
  return j;
}

json result_json(const Graph& g, const OptResult& r, bool ghw) {
  json j;
  j["termination"] = termination_name(r.termination);
  j["lambda1"] = r.lambda1;
  j["multiplicity"] = r.multiplicity;
  if (ghw) {
    j["weights"] = lengths_json(g, r.weights.value);
    j["degenerate"] = r.ghw_degenerate;
    j["duality_gap"] = r.ghw_duality_gap;
  } else {
    j["lengths"] = lengths_json(g, r.lengths.value);
  }
  if (r.extremality) {
    j["extremality_pass"] = r.extremality->pass;
    j["extremality_tol"] = r.extremality->tol;
    j["extremality_label"] = r.extremality->label;
    double worst_min = 0.0, worst_max = 0.0;
    for (const auto& d : r.extremality->directions) {
      worst_min = std::max(worst_min, d.min_branch);
      worst_max = std::min(worst_max, d.max_branch);
    }
    j["extremality_worst_min_branch"] = worst_min;
    j["extremality_worst_max_branch"] = worst_max;
    j["extremality_directions"] = r.extremality->directions.size();
  }
  if (r.feasibility) {
    const char* s = r.feasibility->status == FeasibilityStatus::feasible     ? "feasible"
                    : r.feasibility->status == FeasibilityStatus::infeasible ? "infeasible"
                                                                             : "max_iter";
    j["cone_feasibility"] = s;
    j["cone_iterations"] = r.feasibility->iterations;
  }
  if (r.certificate && r.certificate_report) {
    j["certificate"] = json::parse(
        certificate_to_json(*r.certificate, *r.certificate_report, r.multiplicity));
  }
  j["trace_length"] = r.trace.size();
  return j;
}

void print_result_text(const Graph& g, const OptResult& r, bool ghw) {
  std::printf("termination: %s\n", termination_name(r.termination));
  std::printf("lambda1: %.12g  multiplicity: %d\n", r.lambda1, r.multiplicity);
  const Vec& params = ghw ? r.weights.value : r.lengths.value;
  std::printf("%s:", ghw ? "weights" : "lengths");
  for (int e = 0; e < g.edge_count(); ++e)
    std::printf(" %s=%.10g", g.edge_label(e).c_str(), params[e]);
  std::printf("\n");
  if (r.extremality)
    std::printf("extremality: %s (%zu directions, tol %.3g, %s)\n",
                r.extremality->pass ? "PASS" : "FAIL", r.extremality->directions.size(),
                r.extremality->tol, r.extremality->label.c_str());
  if (r.feasibility) {
    const char* s = r.feasibility->status == FeasibilityStatus::feasible     ? "feasible"
                    : r.feasibility->status == FeasibilityStatus::infeasible ? "infeasible"
                                                                             : "max_iter";
    std::printf("cone feasibility: %s (%d iterations, affine residual %.3g)\n", s,
                r.feasibility->iterations, r.feasibility->affine_residual);
  }
  if (r.certificate && r.certificate_report)
    std::printf("certificate: N=%d, C=%.6g, max edge residual %.3g, eigen residual %.3g%s\n",
                r.certificate->dim, r.certificate->constant,
                r.certificate_report->max_edge_residual, r.certificate_report->max_eigen_residual,
                r.certificate_report->mass_term_constant ? ", isometric rescale available" : "");
  if (ghw) {
    std::printf("degenerate weights: %s\n", r.ghw_degenerate ? "yes" : "no");
    std::printf("duality gap: %.3g\n", r.ghw_duality_gap);
  }
}

std::vector<int> resolve_edges(const Graph& g, const json& pairs, const std::string& what) {
  std::vector<int> ids;
  for (const auto& p : pairs) {
    if (!p.is_array() || p.size() != 2)
      throw ParseError("'" + what + "' entries must be [u, v] pairs");
    int u = p[0].get<int>(), v = p[1].get<int>();
    int id = -1;
    for (int e = 0; e < g.edge_count(); ++e) {
      auto [a, b] = std::pair(g.edge(e).u + 1, g.edge(e).v + 1);
      if ((a == u && b == v) || (a == v && b == u)) id = e;
    }
    if (id < 0)
      throw ParseError("edge " + std::to_string(u) + "-" + std::to_string(v) + " not in graph");
    ids.push_back(id);
  }
  return ids;
}

GridSpec parse_scan_spec(const Graph& g, const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError("scan spec is not valid JSON");
  GridSpec spec;
  if (!j.contains("axes") || !j["axes"].is_array() || j["axes"].empty())
    throw ParseError("scan spec needs a nonempty 'axes' array");
  for (const auto& a : j["axes"]) {
    GridAxis ax;
    ax.label = a.value("label", std::string("axis") + std::to_string(spec.axes.size()));
    ax.edge_ids = resolve_edges(g, a.at("edges"), "axes.edges");
    ax.lo = a.at("min").get<double>();
    ax.hi = a.at("max").get<double>();
    ax.count = a.at("count").get<int>();
    spec.axes.push_back(std::move(ax));
  }
  if (j.contains("fixed"))
    for (const auto& fx : j["fixed"])
      spec.fixed.emplace_back(resolve_edges(g, fx.at("edges"), "fixed.edges"),
                              fx.at("value").get<double>());
  if (j.contains("computed")) spec.computed = resolve_edges(g, j["computed"], "computed");
  if (j.contains("cap")) spec.lambda_cap = j["cap"].get<double>();
  return spec;
}

int cmd_solve(const std::string& graph_path, const std::string& init_mode, double tol,
              int max_iter, uint64_t seed, bool as_json, const std::string& out) {
  GraphFile gf = parse_graph_file(slurp(graph_path));
  LengthFunction init;
  if (init_mode == "uniform") {
    init = uniform_lengths(gf.graph);
  } else if (init_mode == "file") {
    if (!gf.lengths) throw ParseError("--init file requires 'lengths' in the graph file");
    init = normalize_lengths(*gf.lengths);
  } else {
    throw ParseError("--init must be 'uniform' or 'file'");
  }
  SolveOptions opts;
  opts.seed = seed;
  if (tol > 0) opts.extremality_tol_factor = tol;
  if (max_iter > 0) opts.polish_max_iter = max_iter;
  OptResult r = maximize_lengths(gf.graph, init, opts);
  if (as_json)
    emit(result_json(gf.graph, r, false).dump(2), out);
  else
    print_result_text(gf.graph, r, false);
  return EXIT_PASS;
}

int cmd_ghw(const std::string& graph_path, double tol, int max_iter, uint64_t seed, bool as_json,
            const std::string& out) {
  (void)seed;
  GraphFile gf = parse_graph_file(slurp(graph_path));
  if (!gf.lengths) throw ParseError("ghw requires 'lengths' in the graph file");
  if (!gf.vertex_weights) throw ParseError("ghw requires 'vertex_weights' in the graph file");
  GhwOptions opts;
  if (tol > 0) opts.gap_tol = tol;
  if (max_iter > 0) opts.max_iter = max_iter;
  OptResult r = maximize_ghw(gf.graph, *gf.vertex_weights, *gf.lengths, opts);
  if (as_json)
    emit(result_json(gf.graph, r, true).dump(2), out);
  else
    print_result_text(gf.graph, r, true);
  return EXIT_PASS;
}

int cmd_certify(const std::string& graph_path, const std::string& mode_name, double tol,
                bool as_json, const std::string& out) {
  GraphFile gf = parse_graph_file(slurp(graph_path));
  if (!gf.lengths) throw ParseError("certify requires 'lengths' in the graph file");
  CertMode mode;
  if (mode_name == "problem1")
    mode = CertMode::problem1;
  else if (mode_name == "ghw")
    mode = CertMode::ghw;
  else
    throw ParseError("--mode must be 'problem1' or 'ghw'");

  LengthFunction l = *gf.lengths;
  WeightedLaplacian lap = laplacian_from_lengths(gf.graph, l);
  EigenspaceBasis basis = first_eigenpair(lap);
  EdgeQuadraticForms forms = edge_form_matrices(gf.graph, basis, lap.m0, l, mode);
  Vec targets = cone_targets(gf.graph, l, mode);
  ConeSolution sol = solve_cone_feasibility(forms, targets);

  if (sol.report.status != FeasibilityStatus::feasible || !sol.gram) {
    const char* s =
        sol.report.status == FeasibilityStatus::infeasible ? "infeasible" : "max_iter";
    if (as_json) {
      json j;
      j["cone_feasibility"] = s;
      j["iterations"] = sol.report.iterations;
      j["affine_residual"] = sol.report.affine_residual;
      if (sol.report.witness) {
        j["witness"] = *sol.report.witness;
        j["witness_valid"] = sol.report.witness_valid;
      }
      emit(j.dump(2), out);
    } else {
      std::printf("cone feasibility: %s after %d iterations (affine residual %.3g)\n", s,
                  sol.report.iterations, sol.report.affine_residual);
      if (sol.report.witness_valid)
        std::printf("separating witness found: the state is not extremal for this mode\n");
    }
    return EXIT_VERIFY_FAIL;
  }

  EmbeddingCertificate cert = build_embedding(gf.graph, *sol.gram, basis, l, mode, 1.0);
  CertificateReport report = verify_certificate(cert, lap, l, tol);
  if (as_json)
    emit(certificate_to_json(cert, report, basis.multiplicity), out);
  else {
    std::printf("lambda1: %.12g  multiplicity: %d\n", basis.lambda1, basis.multiplicity);
    std::printf("embedding dimension: %d, constant: %.6g\n", cert.dim, cert.constant);
    for (int u = 0; u < gf.graph.vertex_count(); ++u) {
      std::printf("phi(%d) = (", u + 1);
      for (int k = 0; k < cert.dim; ++k)
        std::printf("%s%.10g", k ? ", " : "", cert.map(k, u));
      std::printf(")\n");
    }
    std::printf("max edge residual: %.3g, max eigen residual: %.3g\n", report.max_edge_residual,
                report.max_eigen_residual);
    if (report.mass_term_constant)
      std::printf("isometric rescale available, residual %.3g\n", report.isometric_residual);
    std::printf("verification: %s\n", report.pass ? "PASS" : "FAIL");
  }
  return report.pass ? EXIT_PASS : EXIT_VERIFY_FAIL;
}

int cmd_scan(const std::string& graph_path, const std::string& spec_path, bool as_json,
             const std::string& out) {
  GraphFile gf = parse_graph_file(slurp(graph_path));
  GridSpec spec = parse_scan_spec(gf.graph, slurp(spec_path));
  GridTable table = landscape_scan(gf.graph, spec);
  if (as_json) {
    json j;
    j["points"] = table.points.size();
    int divergent = 0, valid = 0;
    for (const GridPoint& p : table.points) {
      divergent += p.divergent;
      valid += p.valid;
    }
    j["valid"] = valid;
    j["divergent"] = divergent;
    emit(j.dump(2), "");
  }
  emit(grid_to_csv(table), out);
  return EXIT_PASS;
}

int cmd_examples(const std::string& name, uint64_t seed, bool as_json) {
  std::vector<const Fixture*> todo;
  if (name.empty())
    for (const Fixture& f : fixture_registry()) todo.push_back(&f);
  else
    todo.push_back(&find_fixture(name));

  bool all_pass = true;
  json results = json::array();
  for (const Fixture* f : todo) {
    FixtureOutcome outcome = run_fixture(*f, seed);
    all_pass = all_pass && outcome.pass;
    if (as_json) {
      json j;
      j["name"] = outcome.name;
      j["pass"] = outcome.pass;
      j["lambda1"] = outcome.result.lambda1;
      j["multiplicity"] = outcome.result.multiplicity;
      j["termination"] = termination_name(outcome.result.termination);
      j["failures"] = outcome.failures;
      results.push_back(std::move(j));
    } else {
      std::printf("[%s] %-14s lambda1=%-14.10g mult=%d %s\n", outcome.pass ? "PASS" : "FAIL",
                  outcome.name.c_str(), outcome.result.lambda1, outcome.result.multiplicity,
                  termination_name(outcome.result.termination));
      for (const std::string& msg : outcome.failures) std::printf("       - %s\n", msg.c_str());
    }
  }
  if (as_json) std::cout << results.dump(2) << '\n';
  return all_pass ? EXIT_PASS : EXIT_VERIFY_FAIL;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"first nonzero Laplacian eigenvalue maximization over edge lengths "
               "and edge weights, with embedding certificates"};
  app.require_subcommand(1);

  std::string graph_path, init_mode = "uniform", out_path, spec_path, mode_name = "problem1";
  std::string fixture_name;
  double tol = 0.0;
  double certify_tol = 1e-8;
  int max_iter = 0;
  uint64_t seed = 1;
  bool as_json = false;
  bool all_fixtures = false;

  auto add_common = [&](CLI::App* cmd, bool needs_graph) {
    if (needs_graph) cmd->add_option("--graph", graph_path, "graph JSON file")->required();
    cmd->add_flag("--json", as_json, "machine-readable output");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--out", out_path, "write the main artifact to a file");
  };

  CLI::App* solve = app.add_subcommand("solve", "maximize lambda1 over normalized edge lengths");
  add_common(solve, true);
  solve->add_option("--init", init_mode, "'uniform' or 'file' (lengths from the graph file)");
  solve->add_option("--tol", tol, "extremality tolerance (relative to lambda1)");
  solve->add_option("--max-iter", max_iter, "first-order refinement iteration cap");

  CLI::App* ghw = app.add_subcommand("ghw", "maximize lambda1 over edge weights at fixed lengths");
  add_common(ghw, true);
  ghw->add_option("--tol", tol, "duality gap tolerance");
  ghw->add_option("--max-iter", max_iter, "ascent iteration cap");

  CLI::App* certify = app.add_subcommand("certify", "cone feasibility and eigen-map verification");
  add_common(certify, true);
  certify->add_option("--mode", mode_name, "'problem1' or 'ghw'");
  certify->add_option("--tol", certify_tol, "edge residual tolerance");

  CLI::App* scan = app.add_subcommand("scan", "lambda1 landscape over a simplex slice, to CSV");
  add_common(scan, true);
  scan->add_option("--spec", spec_path, "scan spec JSON file")->required();

  CLI::App* examples = app.add_subcommand("examples", "run the named reference cases");
  examples->add_option("--name", fixture_name, "run a single case");
  examples->add_flag("--all", all_fixtures, "run every case (default)");
  examples->add_flag("--json", as_json, "machine-readable output");
  examples->add_option("--seed", seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : EXIT_USAGE;
  }

  try {
    if (solve->parsed())
      return cmd_solve(graph_path, init_mode, tol, max_iter, seed, as_json, out_path);
    if (ghw->parsed()) return cmd_ghw(graph_path, tol, max_iter, seed, as_json, out_path);
    if (certify->parsed())
      return cmd_certify(graph_path, mode_name, certify_tol, as_json, out_path);
    if (scan->parsed()) return cmd_scan(graph_path, spec_path, as_json, out_path);
    if (examples->parsed()) return cmd_examples(fixture_name, seed, as_json);
  } catch (const ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return EXIT_USAGE;
  } catch (const InvalidGraph& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return EXIT_USAGE;
  } catch (const UnknownFixture& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return EXIT_USAGE;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return EXIT_USAGE;
  } catch (const Error& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return EXIT_NUMERICAL;
  }
  return EXIT_USAGE;
}
