#include "lapmax/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lapmax/errors.hpp"

namespace lapmax {

Spectrum eig_sym(const Mat& a, int max_sweeps) {
  const int n = a.rows();
  if (n != a.cols()) throw NotSymmetric("matrix is not square");
  const double scale = std::max(1.0, max_abs(a));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(a(i, j) - a(j, i)) > 1e-10 * scale)
        throw NotSymmetric("matrix is not symmetric");

  Mat w = a;
  // Symmetrize exactly so the rotations see one off-diagonal value.
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      double m = 0.5 * (w(i, j) + w(j, i));
      w(i, j) = w(j, i) = m;
    }
  Mat v = Mat::identity(n);

  auto off_sum = [&]() {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) s += std::abs(w(i, j));
    return s;
  };

  bool converged = (n == 1);
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    double sm = off_sum();
    if (sm == 0.0) {
      converged = true;
      break;
    }
    double tresh = sweep < 3 ? 0.2 * sm / (n * n) : 0.0;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double g = 100.0 * std::abs(w(p, q));
        // Past the first sweeps, zero out entries that are negligible
        // relative to both diagonal elements.
        if (sweep > 3 && std::abs(w(p, p)) + g == std::abs(w(p, p)) &&
            std::abs(w(q, q)) + g == std::abs(w(q, q))) {
          w(p, q) = w(q, p) = 0.0;
          continue;
        }
        if (std::abs(w(p, q)) <= tresh) continue;

        double h = w(q, q) - w(p, p);
        double t;
        if (std::abs(h) + g == std::abs(h)) {
          t = w(p, q) / h;
        } else {
          double theta = 0.5 * h / w(p, q);
          t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
          if (theta < 0.0) t = -t;
        }
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = t * c;
        double tau = s / (1.0 + c);
        double wpq = w(p, q);

        w(p, p) -= t * wpq;
        w(q, q) += t * wpq;
        w(p, q) = w(q, p) = 0.0;
        for (int j = 0; j < n; ++j) {
          if (j == p || j == q) continue;
          double wjp = w(j, p), wjq = w(j, q);
          w(j, p) = w(p, j) = wjp - s * (wjq + wjp * tau);
          w(j, q) = w(q, j) = wjq + s * (wjp - wjq * tau);
        }
        for (int j = 0; j < n; ++j) {
          double vjp = v(j, p), vjq = v(j, q);
          v(j, p) = vjp - s * (vjq + vjp * tau);
          v(j, q) = vjq + s * (vjp - vjq * tau);
        }
      }
    }
    if (off_sum() == 0.0) converged = true;
  }
  if (!converged && off_sum() > 1e-10 * scale)
    throw NoConvergence("Jacobi sweep limit exceeded");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return w(i, i) < w(j, j); });

  Spectrum out;
  out.eigenvalues.resize(n);
  out.eigenvectors = Mat(n, n);
  for (int k = 0; k < n; ++k) {
    out.eigenvalues[k] = w(order[k], order[k]);
    for (int i = 0; i < n; ++i) out.eigenvectors(i, k) = v(i, order[k]);
  }
  return out;
}

namespace {

EigenspaceBasis eigenpair_impl(const WeightedLaplacian& lap, double mult_tol, bool chain) {
  const int n = lap.graph.vertex_count();
  if (n < 2) throw ZeroNotSimple("graph has a single vertex");
  Spectrum s = eig_sym(lap.matrix);

  const double zero_tol = 1e-9 * std::max(1.0, max_abs(lap.matrix));
  if (s.eigenvalues[1] <= zero_tol)
    throw ZeroNotSimple("zero eigenvalue is not simple");

  const double lambda1 = s.eigenvalues[1];
  int mult = 1;
  if (chain) {
    while (1 + mult < n &&
           s.eigenvalues[1 + mult] - s.eigenvalues[mult] <= mult_tol * lambda1)
      ++mult;
  } else {
    while (1 + mult < n && std::abs(s.eigenvalues[1 + mult] - lambda1) <= mult_tol * lambda1)
      ++mult;
    if (1 + mult < n && s.eigenvalues[1 + mult] - s.eigenvalues[mult] <= mult_tol * lambda1)
      throw DegenerateGap("eigenvalue cluster straddles the multiplicity tolerance");
  }

  EigenspaceBasis out;
  out.lambda1 = lambda1;
  out.multiplicity = mult;
  out.basis.reserve(mult);
  for (int k = 1; k <= mult; ++k) {
    Vec phi(n);
    for (int u = 0; u < n; ++u) phi[u] = s.eigenvectors(u, k) / std::sqrt(lap.m0.value[u]);
    out.basis.push_back(std::move(phi));
  }
  return out;
}

}  // namespace

EigenspaceBasis first_eigenpair(const WeightedLaplacian& lap, double mult_tol) {
  return eigenpair_impl(lap, mult_tol, false);
}

double lambda1_value(const WeightedLaplacian& lap) {
  Spectrum s = eig_sym(lap.matrix);
  const double zero_tol = 1e-9 * std::max(1.0, max_abs(lap.matrix));
  if (static_cast<int>(s.eigenvalues.size()) < 2 || s.eigenvalues[1] <= zero_tol)
    throw ZeroNotSimple("zero eigenvalue is not simple");
  return s.eigenvalues[1];
}

EigenspaceBasis first_eigenpair_chain(const WeightedLaplacian& lap, double mult_tol) {
  return eigenpair_impl(lap, mult_tol, true);
}

double rayleigh_quotient(const Graph& g, const Vec& phi, const VertexWeight& m0,
                         const EdgeWeight& m1) {
  double total_m0 = 0.0, mean = 0.0;
  for (int u = 0; u < g.vertex_count(); ++u) {
    total_m0 += m0.value[u];
    mean += m0.value[u] * phi[u];
  }
  mean /= total_m0;

  double num = 0.0, den = 0.0;
  for (int e = 0; e < g.edge_count(); ++e) {
    double d = phi[g.edge(e).u] - phi[g.edge(e).v];
    num += m1.value[e] * d * d;
  }
  for (int u = 0; u < g.vertex_count(); ++u) {
    double d = phi[u] - mean;
    den += m0.value[u] * d * d;
  }
  if (den <= 1e-300) throw ConstantFunction("Rayleigh quotient of a constant function");
  return num / den;
}

double orthonormality_residual(const std::vector<Vec>& basis, const VertexWeight& m0) {
  double res = 0.0;
  for (size_t i = 0; i < basis.size(); ++i)
    for (size_t j = i; j < basis.size(); ++j) {
      double s = 0.0;
      for (size_t u = 0; u < m0.value.size(); ++u) s += m0.value[u] * basis[i][u] * basis[j][u];
      res = std::max(res, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  return res;
}

Vec apply_laplacian(const Graph& g, const VertexWeight& m0, const EdgeWeight& m1, const Vec& phi) {
  Vec out(g.vertex_count(), 0.0);
  for (int e = 0; e < g.edge_count(); ++e) {
    int u = g.edge(e).u, v = g.edge(e).v;
    double d = phi[u] - phi[v];
    out[u] += m1.value[e] * d / m0.value[u];
    out[v] -= m1.value[e] * d / m0.value[v];
  }
  return out;
}

double eigen_residual(const WeightedLaplacian& lap, const Vec& phi, double lambda) {
  Vec lphi = apply_laplacian(lap.graph, lap.m0, lap.m1, phi);
  double res = 0.0;
  for (size_t u = 0; u < phi.size(); ++u) res = std::max(res, std::abs(lphi[u] - lambda * phi[u]));
  return res;
}

SpectralState analyze_lengths(const Graph& g, const LengthFunction& l, double mult_tol) {
  SpectralState st{l, laplacian_from_lengths(g, l), {}};
  st.eigenpair = first_eigenpair(st.laplacian, mult_tol);
  return st;
}

}  // namespace lapmax
