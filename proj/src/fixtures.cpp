#include "lapmax/fixtures.hpp"

#include <cmath>
#include <cstdio>

#include "lapmax/errors.hpp"

namespace lapmax {

namespace {

std::vector<Fixture> build_registry() {
  std::vector<Fixture> reg;

  {
    Fixture f;
    f.name = "p3";
    f.note = "path on 3 vertices: global maximum 16 at equal lengths";
    f.vertices = 3;
    f.edges = {{1, 2}, {2, 3}};
    f.expected_lengths = {0.25, 0.25};
    f.lengths_tol = 1e-6;
    f.expected_lambda1 = 16.0;
    f.lambda1_tol = 1e-8;
    f.expected_multiplicity = 1;
    f.cert_residual_tol = 1e-9;
    reg.push_back(std::move(f));
  }
  {
    Fixture f;
    f.name = "p4";
    f.note = "path on 4 vertices: interior maximum with asymmetric middle edge";
    f.vertices = 4;
    f.edges = {{1, 2}, {2, 3}, {3, 4}};
    f.expected_lengths = {0.1905, 0.1190, 0.1905};
    f.lengths_tol = 1e-3;
    f.expected_lambda1 = 18.6694;
    f.lambda1_tol = 1e-3;
    f.expected_multiplicity = 1;
    f.cert_residual_tol = 1e-6;
    reg.push_back(std::move(f));
  }
  {
    Fixture f;
    f.name = "k13";
    f.note = "star on 4 vertices: maximum 36 at equal lengths, double eigenvalue";
    f.vertices = 4;
    f.edges = {{1, 2}, {1, 3}, {1, 4}};
    f.expected_lengths = {1.0 / 6, 1.0 / 6, 1.0 / 6};
    f.lengths_tol = 1e-6;
    f.expected_lambda1 = 36.0;
    f.lambda1_tol = 1e-6;
    f.expected_multiplicity = 2;
    f.cert_residual_tol = 1e-8;
    reg.push_back(std::move(f));
  }
  {
    Fixture f;
    f.name = "c3_max";
    f.note = "triangle: local maximum 54 at equal lengths, double eigenvalue";
    f.vertices = 3;
    f.edges = {{1, 2}, {2, 3}, {3, 1}};
    f.expected_lengths = {1.0 / 6, 1.0 / 6, 1.0 / 6};
    f.lengths_tol = 1e-6;
    f.expected_lambda1 = 54.0;
    f.lambda1_tol = 1e-6;
    f.expected_multiplicity = 2;
    f.cert_residual_tol = 1e-8;
    reg.push_back(std::move(f));
  }
  {
    Fixture f;
    f.name = "c3_saddle";
    f.note = "triangle saddle point: simple eigenvalue 24*sqrt(3), line embedding";
    f.mode = Fixture::Mode::verify_extremal;
    f.vertices = 3;
    f.edges = {{1, 2}, {2, 3}, {3, 1}};
    double a = (3.0 - std::sqrt(3.0)) / 12.0;
    double c = 1.0 / (2.0 * std::sqrt(3.0));
    f.init_lengths = {a, a, c};
    f.expected_lengths = {a, a, c};
    f.lengths_tol = 1e-9;
    f.expected_lambda1 = 41.5692;
    f.lambda1_tol = 1e-3;
    f.expected_multiplicity = 1;
    f.cert_residual_tol = 1e-9;
    reg.push_back(std::move(f));
  }
  {
    Fixture f;
    f.name = "c4";
    f.note = "4-cycle: local maximum 64 at equal lengths, square embedding";
    f.vertices = 4;
    f.edges = {{1, 2}, {2, 3}, {3, 4}, {4, 1}};
    f.expected_lengths = {0.125, 0.125, 0.125, 0.125};
    f.lengths_tol = 1e-6;
    f.expected_lambda1 = 64.0;
    f.lambda1_tol = 1e-6;
    f.expected_multiplicity = 2;
    f.cert_residual_tol = 1e-8;
    reg.push_back(std::move(f));
  }
  {
    Fixture f;
    f.name = "k13_plus_edge";
    f.note = "star plus an edge between two leaves: no maximizer, eigenvalue "
             "diverges toward the simplex boundary";
    f.mode = Fixture::Mode::diverge;
    f.vertices = 4;
    f.edges = {{1, 2}, {1, 3}, {1, 4}, {2, 3}};
    f.expected_lambda1 = 1000.0;  // lower bound at termination
    reg.push_back(std::move(f));
  }
  return reg;
}

}  // namespace

const std::vector<Fixture>& fixture_registry() {
  static const std::vector<Fixture> reg = build_registry();
  return reg;
}

const Fixture& find_fixture(const std::string& name) {
  for (const Fixture& f : fixture_registry())
    if (f.name == name) return f;
  throw UnknownFixture("unknown fixture '" + name + "'");
}

Graph fixture_graph(const Fixture& f) { return Graph(f.vertices, f.edges); }

LengthFunction uniform_lengths(const Graph& g) {
  return {Vec(g.edge_count(), 0.5 / g.edge_count()), true};
}

FixtureOutcome run_fixture(const Fixture& f, uint64_t seed) {
  Graph g = fixture_graph(f);
  LengthFunction init =
      f.init_lengths.empty() ? uniform_lengths(g) : LengthFunction{f.init_lengths, true};

  SolveOptions opts;
  opts.seed = seed;
  if (f.mode == Fixture::Mode::verify_extremal) opts.derivative_free_phase = false;

  FixtureOutcome out;
  out.name = f.name;
  out.result = maximize_lengths(g, init, opts);
  const OptResult& r = out.result;

  auto fail = [&](const std::string& msg) { out.failures.push_back(msg); };
  char buf[160];

  if (f.mode == Fixture::Mode::diverge) {
    if (r.termination != Termination::boundary_divergence)
      fail(std::string("expected boundary_divergence, got ") + termination_name(r.termination));
    if (!(r.lambda1 > f.expected_lambda1)) {
      std::snprintf(buf, sizeof buf, "lambda1 %.6g at termination not above %.6g", r.lambda1,
                    f.expected_lambda1);
      fail(buf);
    }
    out.pass = out.failures.empty();
    return out;
  }

  if (r.termination != Termination::converged)
    fail(std::string("expected convergence, got ") + termination_name(r.termination));
  if (std::abs(r.lambda1 - f.expected_lambda1) > f.lambda1_tol) {
    std::snprintf(buf, sizeof buf, "lambda1 %.10g differs from %.10g by more than %.1g", r.lambda1,
                  f.expected_lambda1, f.lambda1_tol);
    fail(buf);
  }
  if (r.multiplicity != f.expected_multiplicity) {
    std::snprintf(buf, sizeof buf, "multiplicity %d, expected %d", r.multiplicity,
                  f.expected_multiplicity);
    fail(buf);
  }
  if (!f.expected_lengths.empty()) {
    for (size_t e = 0; e < f.expected_lengths.size(); ++e) {
      if (std::abs(r.lengths.value[e] - f.expected_lengths[e]) > f.lengths_tol) {
        std::snprintf(buf, sizeof buf, "length[%zu] = %.10g, expected %.10g within %.1g", e,
                      r.lengths.value[e], f.expected_lengths[e], f.lengths_tol);
        fail(buf);
      }
    }
  }
  if (!r.extremality || !r.extremality->pass) fail("extremality check failed");
  if (!r.certificate || !r.certificate_report) {
    fail("no embedding certificate (cone feasibility failed)");
  } else if (r.certificate_report->max_edge_residual > f.cert_residual_tol) {
    std::snprintf(buf, sizeof buf, "certificate residual %.3g above %.1g",
                  r.certificate_report->max_edge_residual, f.cert_residual_tol);
    fail(buf);
  }
  out.pass = out.failures.empty();
  return out;
}

FixtureOutcome run_fixture(const std::string& name, uint64_t seed) {
  return run_fixture(find_fixture(name), seed);
}

}  // namespace lapmax
