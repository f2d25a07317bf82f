#pragma once

#include <optional>
#include <span>

#include "lapmax/graph.hpp"
#include "lapmax/spectral.hpp"

namespace lapmax {

/// First-order deformation of the weights, optionally generated from a
/// length-direction ρ: m0_dot(u) = Σ_{v~u} ρ(uv), m1_dot(uv) = -ρ(uv)/l(uv)².
struct PerturbationDirection {
  Vec m0_dot;
  Vec m1_dot;
  std::optional<Vec> rho;
  bool constraint_preserving = false;
};

PerturbationDirection length_direction_to_weights(const Graph& g, const Vec& rho,
                                                  const LengthFunction& l);

/// q_φ(uv) = (φ(u)-φ(v))²/l(uv)² + λ₁(φ(u)² + φ(v)²), one value per edge.
Vec q_form(const Graph& g, const Vec& phi, const LengthFunction& l, double lambda1);

/// The μ×μ first-order matrix whose eigenvalues are the one-sided
/// derivatives of the λ₁ branches:
///   M_ij = Σ_e m1_dot(e) dφ_i dφ_j - λ₁ Σ_u m0_dot(u) φ_i(u) φ_j(u).
Mat perturbation_matrix(const Graph& g, const EigenspaceBasis& basis, const VertexWeight& m0,
                        const EdgeWeight& m1, const PerturbationDirection& dir);

/// Eigenvalues of perturbation_matrix, ascending. For multiplicity one
/// this is the single derivative λ̇₁. Throws BasisMismatch when the
/// basis is not m0-orthonormal or fails the eigen-residual check.
Vec branch_derivatives(const Graph& g, const EigenspaceBasis& basis, const VertexWeight& m0,
                       const EdgeWeight& m1, const PerturbationDirection& dir);

/// Per-direction summary of first-order extremality. A point passes a
/// direction when its minimum branch derivative is ≤ tol and its
/// maximum is ≥ -tol (no strict first-order increase either way).
struct ExtremalityReport {
  struct DirectionResult {
    Vec rho;
    double min_branch = 0.0;
    double max_branch = 0.0;
    bool ok = false;
  };
  bool pass = false;
  double tol = 0.0;
  // The test is first-order and direction-sampled; it is necessary for
  // extremality but not known to be sufficient when multiplicity > 1.
  std::string label = "first-order extremal";
  std::vector<DirectionResult> directions;
};

ExtremalityReport extremality_check(const Graph& g, const LengthFunction& l,
                                    const EigenspaceBasis& basis, const VertexWeight& m0,
                                    const EdgeWeight& m1, std::span<const Vec> directions,
                                    double tol);

/// Seeded sample of unit directions in the hyperplane Σρ = 0.
std::vector<Vec> sample_constraint_directions(int edge_count, int count, uint64_t seed);

/// One-sided finite-difference estimates of the λ₁ directional
/// derivative: ((λ₁(l+hρ)-λ₁(l))/h, (λ₁(l)-λ₁(l-hρ))/h).
std::pair<double, double> fd_derivative_oracle(const Graph& g, const LengthFunction& l,
                                               const Vec& rho, double h);

}  // namespace lapmax
