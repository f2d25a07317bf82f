#include <doctest.h>

#include <cmath>

#include "lapmax/certificate.hpp"
#include "lapmax/errors.hpp"
#include "cone_oracle.hpp"
#include "test_helpers.hpp"

using namespace lapmax;
using namespace lapmax::testing;

namespace {

EdgeQuadraticForms scalar_forms(std::initializer_list<double> qs) {
  EdgeQuadraticForms forms;
  forms.mode = CertMode::problem1;
  for (double v : qs) {
    Mat q(1, 1);
    q(0, 0) = v;
    forms.q.push_back(q);
  }
  return forms;
}

}  // namespace

TEST_SUITE("certificate") {

TEST_CASE("edge forms of the equal-length path are the scalar q values") {
  Graph g = p3();
  LengthFunction l = lengths({0.25, 0.25});
  auto st = analyze_lengths(g, l);
  auto forms =
      edge_form_matrices(g, st.eigenpair, st.laplacian.m0, l, CertMode::problem1);
  REQUIRE(forms.q.size() == 2);
  CHECK(forms.q[0](0, 0) == doctest::Approx(64.0).epsilon(1e-12));
  CHECK(forms.q[1](0, 0) == doctest::Approx(64.0).epsilon(1e-12));
}

TEST_CASE("star forms have trace 288 and admit the I/288 Gram") {
  Graph g = k13();
  LengthFunction l = lengths({1.0 / 6, 1.0 / 6, 1.0 / 6});
  auto st = analyze_lengths(g, l);
  REQUIRE(st.eigenpair.multiplicity == 2);
  auto forms =
      edge_form_matrices(g, st.eigenpair, st.laplacian.m0, l, CertMode::problem1);
  Mat ansatz = Mat::identity(2) * (1.0 / 288.0);
  for (const Mat& q : forms.q) {
    CHECK(q(0, 0) + q(1, 1) == doctest::Approx(288.0).epsilon(1e-11));
    CHECK(frob_dot(q, ansatz) == doctest::Approx(1.0).epsilon(1e-12));
    // Each form is PSD.
    Spectrum s = eig_sym(q);
    CHECK(s.eigenvalues[0] > -1e-10 * max_abs(q));
  }
}

TEST_CASE("rotating the basis conjugates the forms") {
  Graph g = k13();
  LengthFunction l = lengths({1.0 / 6, 1.0 / 6, 1.0 / 6});
  auto st = analyze_lengths(g, l);
  auto forms =
      edge_form_matrices(g, st.eigenpair, st.laplacian.m0, l, CertMode::problem1);

  double theta = 0.7;
  double cth = std::cos(theta), sth = std::sin(theta);
  EigenspaceBasis rotated = st.eigenpair;
  for (int u = 0; u < g.vertex_count(); ++u) {
    rotated.basis[0][u] = cth * st.eigenpair.basis[0][u] + sth * st.eigenpair.basis[1][u];
    rotated.basis[1][u] = -sth * st.eigenpair.basis[0][u] + cth * st.eigenpair.basis[1][u];
  }
  auto rforms =
      edge_form_matrices(g, rotated, st.laplacian.m0, l, CertMode::problem1);
  // Q' = R Q Rᵀ with R = [[c, s], [-s, c]] acting on coefficients.
  for (size_t e = 0; e < forms.q.size(); ++e) {
    const Mat& q = forms.q[e];
    Mat expect(2, 2);
    expect(0, 0) = cth * (q(0, 0) * cth + q(0, 1) * sth) + sth * (q(1, 0) * cth + q(1, 1) * sth);
    expect(0, 1) = cth * (-q(0, 0) * sth + q(0, 1) * cth) + sth * (-q(1, 0) * sth + q(1, 1) * cth);
    expect(1, 0) = expect(0, 1);
    expect(1, 1) = -sth * (-q(0, 0) * sth + q(0, 1) * cth) + cth * (-q(1, 0) * sth + q(1, 1) * cth);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        CHECK(rforms.q[e](i, j) == doctest::Approx(expect(i, j)).epsilon(1e-10));
  }
}

TEST_CASE("scalar feasibility has the unique Gram 1/64") {
  auto sol = solve_cone_feasibility(scalar_forms({64.0, 64.0}), {1.0, 1.0});
  REQUIRE(sol.report.status == FeasibilityStatus::feasible);
  REQUIRE(sol.gram.has_value());
  CHECK((*sol.gram)(0, 0) == doctest::Approx(1.0 / 64).epsilon(1e-10));
}

TEST_CASE("inconsistent scalar constraints are infeasible with a separating witness") {
  auto sol = solve_cone_feasibility(scalar_forms({64.0, 32.0}), {1.0, 1.0});
  REQUIRE(sol.report.status == FeasibilityStatus::infeasible);
  REQUIRE(sol.report.witness.has_value());
  CHECK(sol.report.witness_valid);
  const Vec& nu = *sol.report.witness;
  // Direction (1, -2) up to sign and normalization.
  CHECK(nu[0] * (-2.0) == doctest::Approx(nu[1]).epsilon(1e-8));
  CHECK(sol.report.witness_target_dot > 0.0);
  CHECK(sol.report.witness_form_max_eig <= 1e-7);
}

TEST_CASE("star cone membership is feasible and yields a verifying embedding") {
  Graph g = k13();
  LengthFunction l = lengths({1.0 / 6, 1.0 / 6, 1.0 / 6});
  auto st = analyze_lengths(g, l);
  auto forms =
      edge_form_matrices(g, st.eigenpair, st.laplacian.m0, l, CertMode::problem1);
  auto sol = solve_cone_feasibility(forms, cone_targets(g, l, CertMode::problem1));
  REQUIRE(sol.report.status == FeasibilityStatus::feasible);

  EmbeddingCertificate cert =
      build_embedding(g, *sol.gram, st.eigenpair, l, CertMode::problem1, 1.0);
  CertificateReport report = verify_certificate(cert, st.laplacian, l, 1e-8);
  CHECK(report.pass);
  CHECK(cert.dim <= 2);

  // The symmetry ansatz I/288 also verifies.
  EmbeddingCertificate ansatz = build_embedding(g, Mat::identity(2) * (1.0 / 288.0), st.eigenpair,
                                                l, CertMode::problem1, 1.0);
  CertificateReport ansatz_report = verify_certificate(ansatz, st.laplacian, l, 1e-8);
  CHECK(ansatz_report.pass);
  CHECK(ansatz.dim == 2);
  // Mass term is constant on a symmetric star, so an isometric rescale exists.
  CHECK(ansatz_report.mass_term_constant);
  CHECK(ansatz_report.isometric_residual < 1e-9);
}

TEST_CASE("path embedding reproduces the line map") {
  Graph g = p3();
  LengthFunction l = lengths({0.25, 0.25});
  auto st = analyze_lengths(g, l);
  Mat x(1, 1);
  x(0, 0) = 1.0 / 64.0;
  EmbeddingCertificate cert = build_embedding(g, x, st.eigenpair, l, CertMode::problem1, 1.0);
  CHECK(cert.dim == 1);
  double expect = 1.0 / (4.0 * std::sqrt(2.0));
  double sign = cert.map(0, 2) > 0 ? 1.0 : -1.0;
  CHECK(sign * cert.map(0, 0) == doctest::Approx(-expect).epsilon(1e-10));
  CHECK(std::abs(cert.map(0, 1)) < 1e-12);
  CHECK(sign * cert.map(0, 2) == doctest::Approx(expect).epsilon(1e-10));
  CertificateReport report = verify_certificate(cert, st.laplacian, l, 1e-9);
  CHECK(report.pass);
  CHECK(report.max_edge_residual < 1e-12);
}

TEST_CASE("square and triangle identity-scaled Grams verify with isometric rescales") {
  // 4-cycle at the uniform point: I/512 realizes the square.
  {
    Graph g = c4();
    auto st = analyze_lengths(g, lengths({0.125, 0.125, 0.125, 0.125}));
    REQUIRE(st.eigenpair.multiplicity == 2);
    EmbeddingCertificate cert = build_embedding(g, Mat::identity(2) * (1.0 / 512.0), st.eigenpair,
                                                st.lengths, CertMode::problem1, 1.0);
    CertificateReport rep = verify_certificate(cert, st.laplacian, st.lengths, 1e-10);
    CHECK(rep.pass);
    CHECK(rep.mass_term_constant);
    CHECK(rep.isometric_residual < 1e-12);
  }
  // Triangle at the uniform point: I/432 realizes the regular triangle.
  {
    Graph g = c3();
    auto st = analyze_lengths(g, lengths({1.0 / 6, 1.0 / 6, 1.0 / 6}));
    REQUIRE(st.eigenpair.multiplicity == 2);
    EmbeddingCertificate cert = build_embedding(g, Mat::identity(2) * (1.0 / 432.0), st.eigenpair,
                                                st.lengths, CertMode::problem1, 1.0);
    CertificateReport rep = verify_certificate(cert, st.laplacian, st.lengths, 1e-10);
    CHECK(rep.pass);
    CHECK(rep.mass_term_constant);
    CHECK(rep.isometric_residual < 1e-12);
  }
}

TEST_CASE("a tiny iteration budget reports max_iter with both residuals") {
  Graph g = k13();
  LengthFunction l = lengths({0.17, 0.165, 0.165});  // off the optimum
  auto st = analyze_lengths(g, l);
  auto forms = edge_form_matrices(g, st.eigenpair, st.laplacian.m0, l, CertMode::problem1);
  ConeSolveOptions opts;
  opts.max_iter = 2;
  opts.tol = 1e-14;  // unreachable in two iterations
  auto sol = solve_cone_feasibility(forms, cone_targets(g, l, CertMode::problem1), opts);
  CHECK(sol.report.status == FeasibilityStatus::max_iter);
  CHECK(sol.report.iterations == 2);
  CHECK(sol.report.affine_residual > 0.0);
  CHECK(!sol.gram.has_value());
}

TEST_CASE("zero Gram degenerates gracefully") {
  Graph g = p3();
  LengthFunction l = lengths({0.25, 0.25});
  auto st = analyze_lengths(g, l);
  EmbeddingCertificate cert = build_embedding(g, Mat(1, 1), st.eigenpair, l, CertMode::problem1, 1.0);
  CHECK(cert.dim == 0);
  CHECK(cert.degenerate);
  CHECK(cert.residuals[0] == doctest::Approx(1.0));  // defect equals the target
  Mat negative(1, 1);
  negative(0, 0) = -1.0;
  CHECK_THROWS_AS(build_embedding(g, negative, st.eigenpair, l, CertMode::problem1, 1.0), NotPSD);
}

TEST_CASE("triangle saddle: line map verifies, no scalar multiple is isometric") {
  Graph g = c3();
  double a = (3.0 - std::sqrt(3.0)) / 12.0;
  LengthFunction l = lengths({a, a, 1.0 / (2.0 * std::sqrt(3.0))});
  auto st = analyze_lengths(g, l);
  auto forms =
      edge_form_matrices(g, st.eigenpair, st.laplacian.m0, l, CertMode::problem1);
  auto sol = solve_cone_feasibility(forms, cone_targets(g, l, CertMode::problem1));
  REQUIRE(sol.report.status == FeasibilityStatus::feasible);
  EmbeddingCertificate cert =
      build_embedding(g, *sol.gram, st.eigenpair, l, CertMode::problem1, 1.0);
  CertificateReport report = verify_certificate(cert, st.laplacian, l, 1e-9);
  CHECK(report.pass);
  double scale = std::abs(cert.map(0, 2));
  CHECK(scale == doctest::Approx(0.0873).epsilon(2e-3));
  // Lengths are not realizable by distances: the ghw equation fails for
  // every scalar multiple of this map, since a/c != |d phi(12)|/|d phi(31)|.
  CHECK(!report.mass_term_constant);
  EdgeQuadraticForms ghw_forms =
      edge_form_matrices(g, st.eigenpair, st.laplacian.m0, l, CertMode::ghw);
  auto ghw_sol = solve_cone_feasibility(ghw_forms, cone_targets(g, l, CertMode::ghw));
  CHECK(ghw_sol.report.status == FeasibilityStatus::infeasible);
}

TEST_CASE("round trip: any feasible Gram verifies at ten times the solve tolerance") {
  Rng rng(43);
  int done = 0;
  while (done < 20) {
    Graph g = random_connected_graph(rng, 6);
    auto maybe = try_analyze(g, random_lengths(rng, g.edge_count()));
    if (!maybe) continue;
    SpectralState& st = *maybe;
    auto forms = edge_form_matrices(g, st.eigenpair, st.laplacian.m0, st.lengths,
                                    CertMode::problem1);
    ConeSolveOptions opts;
    auto sol = solve_cone_feasibility(forms, cone_targets(g, st.lengths, CertMode::problem1), opts);
    ++done;
    if (sol.report.status != FeasibilityStatus::feasible) continue;
    EmbeddingCertificate cert =
        build_embedding(g, *sol.gram, st.eigenpair, st.lengths, CertMode::problem1, 1.0);
    CertificateReport report = verify_certificate(cert, st.laplacian, st.lengths, 10.0 * opts.tol);
    CHECK(report.pass);
  }
}

TEST_CASE("basis rotation leaves certificate residuals invariant") {
  Graph g = k13();
  LengthFunction l = lengths({1.0 / 6, 1.0 / 6, 1.0 / 6});
  auto st = analyze_lengths(g, l);
  double theta = 1.1;
  double cth = std::cos(theta), sth = std::sin(theta);
  EigenspaceBasis rotated = st.eigenpair;
  for (int u = 0; u < g.vertex_count(); ++u) {
    rotated.basis[0][u] = cth * st.eigenpair.basis[0][u] + sth * st.eigenpair.basis[1][u];
    rotated.basis[1][u] = -sth * st.eigenpair.basis[0][u] + cth * st.eigenpair.basis[1][u];
  }
  // Conjugate the Gram accordingly: X' = R X Rᵀ with the same map.
  Mat x = Mat::identity(2) * (1.0 / 288.0);  // rotation-invariant choice
  EmbeddingCertificate base = build_embedding(g, x, st.eigenpair, l, CertMode::problem1, 1.0);
  EmbeddingCertificate rot = build_embedding(g, x, rotated, l, CertMode::problem1, 1.0);
  for (int e = 0; e < g.edge_count(); ++e)
    CHECK(base.residuals[e] == doctest::Approx(rot.residuals[e]).epsilon(1e-9));
  for (int e = 0; e < g.edge_count(); ++e) {
    int u = g.edge(e).u, v = g.edge(e).v;
    auto dist2 = [&](const EmbeddingCertificate& c) {
      double s = 0.0;
      for (int k = 0; k < c.dim; ++k) s += (c.map(k, u) - c.map(k, v)) * (c.map(k, u) - c.map(k, v));
      return s;
    };
    CHECK(dist2(base) == doctest::Approx(dist2(rot)).epsilon(1e-10));
  }
}

TEST_CASE("scaling the constant rescales the map and keeps residuals small") {
  Graph g = p3();
  LengthFunction l = lengths({0.25, 0.25});
  auto st = analyze_lengths(g, l);
  Mat x(1, 1);
  x(0, 0) = 1.0 / 64.0;
  for (double cprime : {0.5, 2.0, 9.0}) {
    EmbeddingCertificate cert = build_embedding(g, x, st.eigenpair, l, CertMode::problem1, cprime);
    CHECK(cert.constant == cprime);
    CertificateReport report = verify_certificate(cert, st.laplacian, l, 1e-9);
    CHECK(report.max_edge_residual < 1e-9);
    // Map scaled by sqrt(cprime) relative to the unit-constant map.
    CHECK(std::abs(cert.map(0, 2)) ==
          doctest::Approx(std::sqrt(cprime) / (4.0 * std::sqrt(2.0))).epsilon(1e-10));
  }
}

TEST_CASE("dykstra verdict agrees with the PSD grid oracle") {
  Rng rng(47);
  int done = 0;
  while (done < 25) {
    int mu = rng.uniform_int(1, 2);
    int ne = rng.uniform_int(2, 4);
    EdgeQuadraticForms forms;
    forms.mode = CertMode::problem1;
    for (int e = 0; e < ne; ++e) {
      Mat a(mu, mu);
      for (int i = 0; i < mu; ++i)
        for (int j = 0; j < mu; ++j) a(i, j) = rng.uniform(-1.0, 1.0);
      Mat q(mu, mu);
      for (int i = 0; i < mu; ++i)
        for (int j = 0; j < mu; ++j) {
          double s = 0.0;
          for (int k = 0; k < mu; ++k) s += a(k, i) * a(k, j);
          q(i, j) = s + (i == j ? 0.2 : 0.0);
        }
      forms.q.push_back(std::move(q));
    }
    Vec targets(ne);
    if (rng.uniform() < 0.5) {
      // Feasible by construction: targets from a random PSD Gram.
      Mat b(mu, mu);
      for (int i = 0; i < mu; ++i)
        for (int j = 0; j < mu; ++j) b(i, j) = rng.uniform(-1.0, 1.0);
      Mat x(mu, mu);
      for (int i = 0; i < mu; ++i)
        for (int j = 0; j < mu; ++j) {
          double s = 0.0;
          for (int k = 0; k < mu; ++k) s += b(k, i) * b(k, j);
          x(i, j) = s;
        }
      // Keep the feasible point in the cone interior so the oracle's
      // boundary parametrization is not the only way to reach it.
      double shift = 0.0;
      for (int i = 0; i < mu; ++i) shift += x(i, i);
      for (int i = 0; i < mu; ++i) x(i, i) += 0.05 * shift;
      for (int e = 0; e < ne; ++e) targets[e] = frob_dot(forms.q[e], x);
      if (*std::min_element(targets.begin(), targets.end()) <= 1e-3) continue;
    } else {
      for (int e = 0; e < ne; ++e) targets[e] = rng.uniform(0.5, 4.0);
    }

    double radius = 0.0;
    for (int e = 0; e < ne; ++e) radius = std::max(radius, targets[e] / 0.2);
    ConeOracle oracle(forms, targets, 2.0 * radius);
    if (oracle.borderline()) continue;
    auto sol = solve_cone_feasibility(forms, targets);
    if (sol.report.status == FeasibilityStatus::max_iter) continue;
    bool dykstra_feasible = sol.report.status == FeasibilityStatus::feasible;
    CHECK(dykstra_feasible == oracle.feasible());
    ++done;
  }
}

}  // TEST_SUITE
