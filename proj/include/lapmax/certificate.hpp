#pragma once

#include <optional>

#include "lapmax/graph.hpp"
#include "lapmax/spectral.hpp"

namespace lapmax {

/// Which embedding equation the certificate targets.
///  - problem1: (φ(u)-φ(v))²/l² + λ₁(|φ(u)|² + |φ(v)|²) = C per edge,
///    with per-edge target C = 1 for the unscaled cone problem.
///  - ghw: |φ(u)-φ(v)|² = l(uv)², target l² per edge; the forms drop
///    both the 1/l² factor and the λ₁ mass term.
enum class CertMode { problem1, ghw };

/// One symmetric PSD μ×μ matrix per edge encoding the per-edge
/// quadratic form over the first eigenspace: cᵀ Q_e c equals the form
/// evaluated at φ = Σ c_i φ⁽ⁱ⁾.
struct EdgeQuadraticForms {
  CertMode mode = CertMode::problem1;
  std::vector<Mat> q;
};

EdgeQuadraticForms edge_form_matrices(const Graph& g, const EigenspaceBasis& basis,
                                      const VertexWeight& m0, const LengthFunction& l,
                                      CertMode mode);

/// Per-edge targets for the cone membership decision.
Vec cone_targets(const Graph& g, const LengthFunction& l, CertMode mode);

enum class FeasibilityStatus { feasible, infeasible, max_iter };

struct FeasibilityReport {
  FeasibilityStatus status = FeasibilityStatus::max_iter;
  int iterations = 0;
  double affine_residual = 0.0;
  double psd_residual = 0.0;
  /// Separating normal for infeasible instances: Σν(e)·target(e) > 0
  /// while Σν(e)·Q_e is negative semidefinite.
  std::optional<Vec> witness;
  bool witness_valid = false;
  double witness_target_dot = 0.0;
  double witness_form_max_eig = 0.0;
};

struct ConeSolveOptions {
  double tol = 1e-9;
  int max_iter = 100000;
  int stall_window = 1000;      // consecutive non-improving iterations
  double stall_rel_improve = 1e-6;
};

struct ConeSolution {
  FeasibilityReport report;
  std::optional<Mat> gram;
};

/// Decide whether some X ⪰ 0 satisfies tr(Q_e X) = target(e) for all
/// edges, via Dykstra's alternating projections between the affine
/// subspace and the PSD cone.
ConeSolution solve_cone_feasibility(const EdgeQuadraticForms& forms, const Vec& targets,
                                    const ConeSolveOptions& opts = {});

/// Eigen-map certificate: Gram X = BᵀB, map coordinates are the rows of
/// factor·[φ⁽¹⁾;…;φ⁽μ⁾]. `map` is N×|V|, column u = φ(u) ∈ ℝᴺ.
struct EmbeddingCertificate {
  CertMode mode = CertMode::problem1;
  double lambda1 = 0.0;
  Mat gram;
  Mat factor;
  Mat map;
  int dim = 0;
  double constant = 1.0;
  Vec residuals;
  bool degenerate = false;  // zero Gram: empty map, residual = target
};

inline constexpr double DEFAULT_RANK_TOL = 1e-9;

/// Factor the Gram matrix and assemble the eigen-map. Scaling the map
/// by √constant turns the unit target into `constant` (problem1 mode).
/// Throws NotPSD when X has a negative eigenvalue beyond tolerance.
EmbeddingCertificate build_embedding(const Graph& g, const Mat& gram,
                                     const EigenspaceBasis& basis, const LengthFunction& l,
                                     CertMode mode, double constant = 1.0,
                                     double rank_tol = DEFAULT_RANK_TOL);

struct CertificateReport {
  Vec edge_residuals;
  double max_edge_residual = 0.0;
  double max_eigen_residual = 0.0;
  bool pass = false;
  /// Set when the per-edge mass term |φ(u)|²+|φ(v)|² is constant across
  /// edges (within tol): the map rescaled so edge lengths are realized
  /// exactly by Euclidean distances.
  bool mass_term_constant = false;
  std::optional<Mat> isometric_map;
  double isometric_residual = 0.0;
};

/// Recompute the per-edge defect of the mode equation and check every
/// map coordinate against the eigen-equation. Pure report, no throws.
CertificateReport verify_certificate(const EmbeddingCertificate& cert,
                                     const WeightedLaplacian& lap, const LengthFunction& l,
                                     double tol);

/// JSON export consumed by the CLI `certify` command.
std::string certificate_to_json(const EmbeddingCertificate& cert, const CertificateReport& report,
                                int multiplicity);

}  // namespace lapmax
