#include <doctest.h>

#include <cmath>

#include "lapmax/errors.hpp"
#include "lapmax/perturbation.hpp"
#include "test_helpers.hpp"

using namespace lapmax;
using namespace lapmax::testing;

TEST_SUITE("perturbation") {

TEST_CASE("length directions map to weight derivatives") {
  Graph g = p3();
  LengthFunction l = lengths({0.25, 0.25});

  PerturbationDirection zero = length_direction_to_weights(g, {0.0, 0.0}, l);
  CHECK(zero.m0_dot == Vec{0.0, 0.0, 0.0});
  CHECK(zero.m1_dot == Vec{0.0, 0.0});
  CHECK(zero.constraint_preserving);

  PerturbationDirection dir = length_direction_to_weights(g, {1.0, -1.0}, l);
  CHECK(dir.m0_dot == Vec{1.0, 0.0, -1.0});
  CHECK(dir.m1_dot == Vec{-16.0, 16.0});
  CHECK(dir.constraint_preserving);

  // rho = l reproduces the scaling identities m0_dot = m0, m1_dot = -m1.
  PerturbationDirection scale_dir = length_direction_to_weights(g, l.value, l);
  auto [m0, m1] = fujiwara_weights(g, l);
  for (int u = 0; u < 3; ++u) CHECK(scale_dir.m0_dot[u] == doctest::Approx(m0.value[u]));
  for (int e = 0; e < 2; ++e) CHECK(scale_dir.m1_dot[e] == doctest::Approx(-m1.value[e]));
  CHECK(!scale_dir.constraint_preserving);
}

TEST_CASE("q form on the equal-length path") {
  Graph g = p3();
  LengthFunction l = lengths({0.25, 0.25});

  Vec zeros = q_form(g, {0.0, 0.0, 0.0}, l, 16.0);
  CHECK(zeros == Vec{0.0, 0.0});

  double s = std::sqrt(2.0);
  Vec q = q_form(g, {-s, 0.0, s}, l, 16.0);
  CHECK(q[0] == doctest::Approx(64.0).epsilon(1e-13));
  CHECK(q[1] == doctest::Approx(64.0).epsilon(1e-13));

  double c = 1.0 / (4.0 * std::sqrt(2.0));
  Vec unit = q_form(g, {-c, 0.0, c}, l, 16.0);
  CHECK(unit[0] == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(unit[1] == doctest::Approx(1.0).epsilon(1e-13));

  CHECK_THROWS_AS(q_form(g, {1.0, 0.0, 0.0}, lengths({0.25, 0.0}), 16.0), NonPositiveLength);
}

TEST_CASE("q form is nonnegative, vanishes only on dead edges, scales quadratically") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    Graph g = random_connected_graph(rng, 7);
    auto st = analyze_lengths(g, random_lengths(rng, g.edge_count()));
    Vec phi = rng.normal_vec(g.vertex_count());
    Vec q = q_form(g, phi, st.lengths, st.eigenpair.lambda1);
    for (int e = 0; e < g.edge_count(); ++e) {
      CHECK(q[e] >= 0.0);
      bool both_zero = phi[g.edge(e).u] == 0.0 && phi[g.edge(e).v] == 0.0;
      CHECK((q[e] == 0.0) == both_zero);
    }
    for (double c : {-3.0, 0.5}) {
      Vec qc = q_form(g, scaled(phi, c), st.lengths, st.eigenpair.lambda1);
      for (int e = 0; e < g.edge_count(); ++e)
        CHECK(qc[e] == doctest::Approx(c * c * q[e]).epsilon(1e-14));
    }
  }
}

TEST_CASE("branch derivatives: zero direction, uniform scaling, balanced direction") {
  Graph g = p3();
  LengthFunction l = lengths({0.25, 0.25});
  auto st = analyze_lengths(g, l);
  const auto& lap = st.laplacian;

  PerturbationDirection zero = length_direction_to_weights(g, {0.0, 0.0}, l);
  Vec derivs = branch_derivatives(g, st.eigenpair, lap.m0, lap.m1, zero);
  CHECK(derivs == Vec{0.0});

  // Uniform rescaling differentiates the scaling law to -2*lambda1.
  PerturbationDirection scale_dir = length_direction_to_weights(g, l.value, l);
  derivs = branch_derivatives(g, st.eigenpair, lap.m0, lap.m1, scale_dir);
  CHECK(derivs[0] == doctest::Approx(-2.0 * 16.0).epsilon(1e-10));

  // q is constant at the optimum, so balanced directions are flat.
  PerturbationDirection flat = length_direction_to_weights(g, {1e-2, -1e-2}, l);
  derivs = branch_derivatives(g, st.eigenpair, lap.m0, lap.m1, flat);
  CHECK(std::abs(derivs[0]) < 1e-10);
}

TEST_CASE("uniform scaling gives -2*lambda1 on every branch, any multiplicity") {
  Graph g = k13();
  LengthFunction l = lengths({1.0 / 6, 1.0 / 6, 1.0 / 6});
  auto st = analyze_lengths(g, l);
  PerturbationDirection dir = length_direction_to_weights(g, l.value, l);
  Vec derivs = branch_derivatives(g, st.eigenpair, st.laplacian.m0, st.laplacian.m1, dir);
  REQUIRE(derivs.size() == 2);
  for (double d : derivs) CHECK(d == doctest::Approx(-72.0).epsilon(1e-10));
}

TEST_CASE("branch derivatives reject a broken basis") {
  Graph g = p3();
  LengthFunction l = lengths({0.25, 0.25});
  auto st = analyze_lengths(g, l);
  EigenspaceBasis bad = st.eigenpair;
  bad.basis[0] = scaled(bad.basis[0], 2.0);
  PerturbationDirection dir = length_direction_to_weights(g, {1.0, -1.0}, l);
  CHECK_THROWS_AS(branch_derivatives(g, bad, st.laplacian.m0, st.laplacian.m1, dir),
                  BasisMismatch);
}

TEST_CASE("coefficient quadratic form agrees with the scalar derivative formula") {
  Rng rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    Graph g = random_connected_graph(rng, 7);
    if (g.edge_count() < 2) continue;
    LengthFunction l = random_lengths(rng, g.edge_count());
    auto maybe = try_analyze(g, l, 1e-5);
    if (!maybe) continue;
    SpectralState& st = *maybe;
    const auto& lap = st.laplacian;
    const int mu = st.eigenpair.multiplicity;
    Vec rho = rng.zero_sum_direction(g.edge_count());
    PerturbationDirection dir = length_direction_to_weights(g, rho, l);
    Mat m = perturbation_matrix(g, st.eigenpair, lap.m0, lap.m1, dir);

    Vec c = rng.normal_vec(mu);
    double cn = norm(c);
    for (double& v : c) v /= cn;
    // phi_c = sum of c_i * basis_i
    Vec phi(g.vertex_count(), 0.0);
    for (int i = 0; i < mu; ++i) axpy(c[i], st.eigenpair.basis[i], phi);
    double scalar = 0.0;
    for (int e = 0; e < g.edge_count(); ++e) {
      double d = phi[g.edge(e).u] - phi[g.edge(e).v];
      scalar += dir.m1_dot[e] * d * d;
    }
    for (int u = 0; u < g.vertex_count(); ++u)
      scalar -= st.eigenpair.lambda1 * dir.m0_dot[u] * phi[u] * phi[u];
    double quad = 0.0;
    for (int i = 0; i < mu; ++i)
      for (int j = 0; j < mu; ++j) quad += c[i] * c[j] * m(i, j);
    CHECK(quad == doctest::Approx(scalar).epsilon(1e-11));

    // Trace equals the sum of branch derivatives.
    Vec derivs = branch_derivatives(g, st.eigenpair, lap.m0, lap.m1, dir);
    double trace = 0.0, dsum = 0.0;
    for (int i = 0; i < mu; ++i) trace += m(i, i);
    for (double d : derivs) dsum += d;
    CHECK(dsum == doctest::Approx(trace).epsilon(1e-10));
  }
}

TEST_CASE("branch derivatives match central finite differences at simple points") {
  Rng rng(41);
  int tested = 0;
  const double h = 1e-6;
  while (tested < 100) {
    Graph g = random_connected_graph(rng, 8);
    if (g.edge_count() < 2) continue;
    LengthFunction l = random_lengths(rng, g.edge_count());
    auto maybe = try_analyze(g, l);
    if (!maybe) continue;
    SpectralState& st = *maybe;
    if (st.eigenpair.multiplicity != 1) continue;
    // Finite differences cannot resolve branch crossings inside the step.
    Spectrum full = eig_sym(st.laplacian.matrix);
    if (full.eigenvalues[2] - full.eigenvalues[1] < 1e-4 * full.eigenvalues[1]) continue;

    Vec rho = rng.zero_sum_direction(g.edge_count());
    PerturbationDirection dir = length_direction_to_weights(g, rho, l);
    double deriv = branch_derivatives(g, st.eigenpair, st.laplacian.m0, st.laplacian.m1, dir)[0];
    auto [fwd, bwd] = fd_derivative_oracle(g, l, rho, h);
    double central = 0.5 * (fwd + bwd);
    CHECK(std::abs(deriv - central) < 1e-5 * std::max(1.0, std::abs(deriv)));
    ++tested;
  }
}

TEST_CASE("fd oracle edge cases") {
  Graph g = p3();
  LengthFunction l = lengths({0.25, 0.25});

  auto [f0, b0] = fd_derivative_oracle(g, l, {0.0, 0.0}, 1e-6);
  CHECK(f0 == 0.0);
  CHECK(b0 == 0.0);

  // First-order term vanishes at the optimum; what remains is the
  // curvature term h*|lambda''|/2 with lambda'' about -1.5e3 here.
  auto [f1, b1] = fd_derivative_oracle(g, l, {1.0, -1.0}, 1e-6);
  CHECK(std::abs(f1) < 1e-3);
  CHECK(std::abs(b1) < 1e-3);

  auto [f2, b2] = fd_derivative_oracle(g, l, l.value, 1e-6);
  CHECK(std::abs(f2 - (-32.0)) < 1e-3 * 16.0);
  CHECK(std::abs(b2 - (-32.0)) < 1e-3 * 16.0);

  CHECK_THROWS_AS(fd_derivative_oracle(g, l, {1.0, -1.0}, 0.5), StepTooLarge);
}

TEST_CASE("extremality holds at optima and saddles, fails elsewhere") {
  SUBCASE("equal-length path passes") {
    Graph g = p3();
    LengthFunction l = lengths({0.25, 0.25});
    auto st = analyze_lengths(g, l);
    auto dirs = sample_constraint_directions(2, 100, 7);
    auto report = extremality_check(g, l, st.eigenpair, st.laplacian.m0, st.laplacian.m1, dirs,
                                    1e-6 * st.eigenpair.lambda1);
    CHECK(report.pass);
    CHECK(report.directions.size() == 100);
  }
  SUBCASE("triangle saddle passes") {
    Graph g = c3();
    double a = (3.0 - std::sqrt(3.0)) / 12.0;
    LengthFunction l = lengths({a, a, 1.0 / (2.0 * std::sqrt(3.0))});
    auto st = analyze_lengths(g, l);
    CHECK(st.eigenpair.lambda1 == doctest::Approx(24.0 * std::sqrt(3.0)).epsilon(1e-12));
    auto dirs = sample_constraint_directions(3, 100, 7);
    auto report = extremality_check(g, l, st.eigenpair, st.laplacian.m0, st.laplacian.m1, dirs,
                                    1e-6 * st.eigenpair.lambda1);
    CHECK(report.pass);
  }
  SUBCASE("unbalanced path fails") {
    Graph g = p3();
    LengthFunction l = lengths({0.3, 0.2});
    auto st = analyze_lengths(g, l);
    auto dirs = sample_constraint_directions(2, 100, 7);
    auto report = extremality_check(g, l, st.eigenpair, st.laplacian.m0, st.laplacian.m1, dirs,
                                    1e-6 * st.eigenpair.lambda1);
    CHECK(!report.pass);
  }
  SUBCASE("non-preserving directions are rejected") {
    Graph g = p3();
    LengthFunction l = lengths({0.25, 0.25});
    auto st = analyze_lengths(g, l);
    Vec bad[] = {Vec{1.0, 0.0}};
    CHECK_THROWS_AS(extremality_check(g, l, st.eigenpair, st.laplacian.m0, st.laplacian.m1,
                                      std::span<const Vec>(bad, 1), 1e-6),
                    NotConstraintPreserving);
  }
}

}  // TEST_SUITE
