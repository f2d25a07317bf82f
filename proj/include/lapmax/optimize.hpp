#pragma once

#include <optional>
#include <string>

#include "lapmax/certificate.hpp"
#include "lapmax/graph.hpp"
#include "lapmax/perturbation.hpp"
#include "lapmax/spectral.hpp"

namespace lapmax {

enum class Termination { converged, max_iter, boundary_divergence };

const char* termination_name(Termination t);

struct SolveOptions {
  double mult_tol = DEFAULT_MULT_TOL;
  double extremality_tol_factor = 1e-6;  // pass threshold, relative to λ₁
  double direction_tol_factor = 1e-9;    // polish stop, relative to λ₁
  int extremality_directions = 100;
  uint64_t seed = 1;
  double boundary_eps = 1e-9;
  double lambda_cap = 1e6;
  bool derivative_free_phase = true;  // saddle fixtures polish in place
  int nm_max_iter = 4000;
  int polish_max_iter = 300;
  int spectral_samples = 64;  // sampled extreme points per unit μ-sphere
  double cert_tol = 1e-9;
  ConeSolveOptions cone;
};

struct GhwOptions {
  double gap_tol = 1e-8;
  int max_iter = 2000;
  double mult_tol = DEFAULT_MULT_TOL;
  double support_tol = 1e-12;  // weights below this are clamped to zero
  ConeSolveOptions cone;
};

struct OptResult {
  LengthFunction lengths;  // Problem 1 result
  EdgeWeight weights;      // GHW result (m1)
  double lambda1 = 0.0;
  int multiplicity = 0;
  Vec trace;  // λ₁ per accepted iterate
  Termination termination = Termination::max_iter;
  std::optional<ExtremalityReport> extremality;
  std::optional<FeasibilityReport> feasibility;
  std::optional<EmbeddingCertificate> certificate;
  std::optional<CertificateReport> certificate_report;
  bool ghw_degenerate = false;
  double ghw_duality_gap = 0.0;
};

/// Maximize λ₁ over normalized positive edge lengths: a derivative-free
/// phase (Nelder-Mead on the open simplex through a softmax chart)
/// followed by a first-order polish that steps along the
/// constraint-preserving direction maximizing the minimum branch
/// derivative. Divergence toward the simplex boundary terminates with
/// boundary_divergence instead of blowing up.
OptResult maximize_lengths(const Graph& g, const LengthFunction& init,
                           const SolveOptions& opts = {});

/// Maximize λ₁ over edge weights with Σ m1·l² = 1 at fixed m0 and l
/// (a concave program): projected supergradient ascent with
/// backtracking, duality-gap termination through the embedding
/// certificate. Weights may legitimately converge to zero.
OptResult maximize_ghw(const Graph& g, const VertexWeight& m0, const LengthFunction& l,
                       const GhwOptions& opts = {});

/// One grid axis: a set of edges sharing a common length value swept
/// over [lo, hi] with `count` points.
struct GridAxis {
  std::string label;
  std::vector<int> edge_ids;
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;
};

struct GridSpec {
  std::vector<GridAxis> axes;
  std::vector<std::pair<std::vector<int>, double>> fixed;
  /// Edges receiving an equal share of the normalization remainder.
  std::vector<int> computed;
  double lambda_cap = 1e6;
  double min_length = 1e-9;
  double mult_tol = DEFAULT_MULT_TOL;
};

struct GridPoint {
  std::vector<double> coords;
  double lambda1 = 0.0;
  int multiplicity = 0;
  bool divergent = false;
  bool valid = false;  // inside the positive simplex slice
};

struct GridTable {
  std::vector<GridAxis> axes;
  std::vector<GridPoint> points;
};

/// λ₁ and multiplicity over the grid; rows outside the positive slice
/// are kept (flagged invalid) so row counts match the grid shape.
GridTable landscape_scan(const Graph& g, const GridSpec& spec);

/// CSV export: header naming the axes, then one row per grid point.
std::string grid_to_csv(const GridTable& table);

struct VarianceDualReport {
  double variance = 0.0;
  double bound = 0.0;  // 1/λ₁
  double gap = 0.0;
  bool weak_duality_ok = false;
  double max_edge_violation = 0.0;  // max(|φ(u)-φ(v)| - l)₊
  double max_slackness = 0.0;       // max |m1(l² - |φ(u)-φ(v)|²)|
  bool pass = false;
};

/// Recentre the certificate map to m0-mean zero, compare its variance
/// against 1/λ₁, and check dual feasibility and complementary
/// slackness. Requires a ghw-mode certificate.
VarianceDualReport variance_dual_check(const EmbeddingCertificate& cert, const Graph& g,
                                       const VertexWeight& m0, const EdgeWeight& m1,
                                       const LengthFunction& l, double tol);

}  // namespace lapmax
