#pragma once

#include "lapmax/graph.hpp"
#include "lapmax/linalg.hpp"

namespace lapmax {

/// Full eigendecomposition of a symmetric matrix, eigenvalues ascending,
/// eigenvector columns Euclidean-orthonormal and aligned with them.
struct Spectrum {
  Vec eigenvalues;
  Mat eigenvectors;
};

/// Cyclic Jacobi with threshold sweeps. Deterministic for fixed input.
/// Throws NotSymmetric if max |A - Aᵀ| exceeds 1e-10·max(1, |A|_max),
/// NoConvergence past `max_sweeps`.
Spectrum eig_sym(const Mat& a, int max_sweeps = 100);

/// First nonzero eigenvalue with its eigenspace, as functions on V.
/// The basis is m0-orthonormal and m0-mean-zero: basis[i](u) is the
/// matrix eigenvector entry divided by sqrt(m0(u)).
struct EigenspaceBasis {
  double lambda1 = 0.0;
  int multiplicity = 0;
  std::vector<Vec> basis;
};

inline constexpr double DEFAULT_MULT_TOL = 1e-7;

/// mult_tol is relative: eigenvalues within mult_tol·lambda1 of lambda1
/// count toward the multiplicity. Throws ZeroNotSimple if the zero
/// eigenvalue is not simple, DegenerateGap if the next eigenvalue past
/// the cluster sits within mult_tol·lambda1 of the cluster's edge.
EigenspaceBasis first_eigenpair(const WeightedLaplacian& lap, double mult_tol = DEFAULT_MULT_TOL);

/// The "enlarge" resolution of a DegenerateGap: absorb eigenvalues into
/// the cluster while consecutive gaps stay within mult_tol·lambda1.
/// Never throws DegenerateGap; used by the optimizer when the strict
/// cluster definition straddles.
EigenspaceBasis first_eigenpair_chain(const WeightedLaplacian& lap,
                                      double mult_tol = DEFAULT_MULT_TOL);

/// Second-smallest eigenvalue only, no multiplicity clustering.
/// Throws ZeroNotSimple when it sits at numerical zero.
double lambda1_value(const WeightedLaplacian& lap);

/// Σ m1 (dφ)² / Σ m0 (φ - φ̄)² with φ̄ the m0-weighted mean.
double rayleigh_quotient(const Graph& g, const Vec& phi, const VertexWeight& m0,
                         const EdgeWeight& m1);

/// Residual checks used as preconditions by downstream modules.
double orthonormality_residual(const std::vector<Vec>& basis, const VertexWeight& m0);
double eigen_residual(const WeightedLaplacian& lap, const Vec& phi, double lambda);

/// Apply the Laplacian to a vertex function (not the matrix form):
/// (Δφ)(u) = Σ_{v~u} m1(uv)/m0(u) (φ(u) - φ(v)).
Vec apply_laplacian(const Graph& g, const VertexWeight& m0, const EdgeWeight& m1, const Vec& phi);

/// Convenience bundle: weights, matrix and first eigenpair for a
/// length function. Used by the optimizer and the CLI pipelines.
struct SpectralState {
  LengthFunction lengths;
  WeightedLaplacian laplacian;
  EigenspaceBasis eigenpair;
};

SpectralState analyze_lengths(const Graph& g, const LengthFunction& l,
                              double mult_tol = DEFAULT_MULT_TOL);

}  // namespace lapmax
