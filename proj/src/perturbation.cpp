#include "lapmax/perturbation.hpp"

#include <cmath>

#include "lapmax/errors.hpp"
#include "lapmax/rng.hpp"

namespace lapmax {

PerturbationDirection length_direction_to_weights(const Graph& g, const Vec& rho,
                                                  const LengthFunction& l) {
  PerturbationDirection dir;
  dir.m0_dot.assign(g.vertex_count(), 0.0);
  dir.m1_dot.assign(g.edge_count(), 0.0);
  double sum = 0.0, abssum = 0.0;
  for (int e = 0; e < g.edge_count(); ++e) {
    if (!(l.value[e] > 0.0)) throw NonPositiveLength("nonpositive length on " + g.edge_label(e));
    dir.m0_dot[g.edge(e).u] += rho[e];
    dir.m0_dot[g.edge(e).v] += rho[e];
    dir.m1_dot[e] = -rho[e] / (l.value[e] * l.value[e]);
    sum += rho[e];
    abssum += std::abs(rho[e]);
  }
  dir.rho = rho;
  dir.constraint_preserving = std::abs(sum) <= 1e-12 * std::max(1.0, abssum);
  return dir;
}

Vec q_form(const Graph& g, const Vec& phi, const LengthFunction& l, double lambda1) {
  Vec q(g.edge_count());
  for (int e = 0; e < g.edge_count(); ++e) {
    if (!(l.value[e] > 0.0)) throw NonPositiveLength("nonpositive length on " + g.edge_label(e));
    int u = g.edge(e).u, v = g.edge(e).v;
    double d = phi[u] - phi[v];
    q[e] = d * d / (l.value[e] * l.value[e]) + lambda1 * (phi[u] * phi[u] + phi[v] * phi[v]);
  }
  return q;
}

namespace {

void require_valid_basis(const Graph& g, const EigenspaceBasis& basis, const VertexWeight& m0,
                         const EdgeWeight& m1) {
  if (orthonormality_residual(basis.basis, m0) > 1e-8)
    throw BasisMismatch("eigenspace basis is not m0-orthonormal");
  WeightedLaplacian lap{g, m0, m1, Mat()};
  // Loose enough to admit a chain-clustered basis whose branch values
  // deviate by up to the widest multiplicity tolerance.
  double scale = std::max(1.0, basis.lambda1);
  for (const Vec& phi : basis.basis)
    if (eigen_residual(lap, phi, basis.lambda1) > 2e-2 * scale)
      throw BasisMismatch("basis function is not a first eigenfunction");
}

}  // namespace

Mat perturbation_matrix(const Graph& g, const EigenspaceBasis& basis, const VertexWeight& m0,
                        const EdgeWeight& m1, const PerturbationDirection& dir) {
  require_valid_basis(g, basis, m0, m1);
  const int mu = basis.multiplicity;
  Mat m(mu, mu);
  for (int i = 0; i < mu; ++i) {
    for (int j = i; j < mu; ++j) {
      double s = 0.0;
      for (int e = 0; e < g.edge_count(); ++e) {
        int u = g.edge(e).u, v = g.edge(e).v;
        s += dir.m1_dot[e] * (basis.basis[i][u] - basis.basis[i][v]) *
             (basis.basis[j][u] - basis.basis[j][v]);
      }
      for (int u = 0; u < g.vertex_count(); ++u)
        s -= basis.lambda1 * dir.m0_dot[u] * basis.basis[i][u] * basis.basis[j][u];
      m(i, j) = m(j, i) = s;
    }
  }
  return m;
}

Vec branch_derivatives(const Graph& g, const EigenspaceBasis& basis, const VertexWeight& m0,
                       const EdgeWeight& m1, const PerturbationDirection& dir) {
  Mat m = perturbation_matrix(g, basis, m0, m1, dir);
  if (m.rows() == 1) return {m(0, 0)};
  return eig_sym(m).eigenvalues;
}

ExtremalityReport extremality_check(const Graph& g, const LengthFunction& l,
                                    const EigenspaceBasis& basis, const VertexWeight& m0,
                                    const EdgeWeight& m1, std::span<const Vec> directions,
                                    double tol) {
  ExtremalityReport report;
  report.tol = tol;
  report.pass = true;
  for (const Vec& rho : directions) {
    PerturbationDirection dir = length_direction_to_weights(g, rho, l);
    if (!dir.constraint_preserving)
      throw NotConstraintPreserving("direction does not preserve the length normalization");
    Vec derivs = branch_derivatives(g, basis, m0, m1, dir);
    ExtremalityReport::DirectionResult r;
    r.rho = rho;
    r.min_branch = derivs.front();
    r.max_branch = derivs.back();
    r.ok = r.min_branch <= tol && r.max_branch >= -tol;
    report.pass = report.pass && r.ok;
    report.directions.push_back(std::move(r));
  }
  return report;
}

std::vector<Vec> sample_constraint_directions(int edge_count, int count, uint64_t seed) {
  if (edge_count < 2) return {};  // the zero-sum hyperplane is trivial
  Rng rng(seed);
  std::vector<Vec> dirs;
  dirs.reserve(count);
  for (int i = 0; i < count; ++i) dirs.push_back(rng.zero_sum_direction(edge_count));
  return dirs;
}

std::pair<double, double> fd_derivative_oracle(const Graph& g, const LengthFunction& l,
                                               const Vec& rho, double h) {
  LengthFunction plus = l, minus = l;
  for (int e = 0; e < g.edge_count(); ++e) {
    plus.value[e] += h * rho[e];
    minus.value[e] -= h * rho[e];
    if (!(plus.value[e] > 0.0) || !(minus.value[e] > 0.0))
      throw StepTooLarge("step leaves the positive length cone on " + g.edge_label(e));
  }
  auto lambda_of = [&](const LengthFunction& lf) {
    return lambda1_value(laplacian_from_lengths(g, lf));
  };
  double base = lambda_of(l);
  return {(lambda_of(plus) - base) / h, (base - lambda_of(minus)) / h};
}

}  // namespace lapmax
