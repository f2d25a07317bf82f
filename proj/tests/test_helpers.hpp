#pragma once

#include <cmath>
#include <optional>

#include "lapmax/errors.hpp"
#include "lapmax/graph.hpp"
#include "lapmax/rng.hpp"
#include "lapmax/spectral.hpp"

namespace lapmax::testing {

/// analyze_lengths, with ambiguous-multiplicity states skipped.
inline std::optional<SpectralState> try_analyze(const Graph& g, const LengthFunction& l,
                                                double mult_tol = DEFAULT_MULT_TOL) {
  try {
    return analyze_lengths(g, l, mult_tol);
  } catch (const DegenerateGap&) {
    return std::nullopt;
  }
}

inline Graph p2() { return Graph(2, {{1, 2}}); }
inline Graph p3() { return Graph(3, {{1, 2}, {2, 3}}); }
inline Graph p4() { return Graph(4, {{1, 2}, {2, 3}, {3, 4}}); }
inline Graph k13() { return Graph(4, {{1, 2}, {1, 3}, {1, 4}}); }
inline Graph c3() { return Graph(3, {{1, 2}, {2, 3}, {3, 1}}); }
inline Graph c4() { return Graph(4, {{1, 2}, {2, 3}, {3, 4}, {4, 1}}); }
inline Graph k13_plus_edge() { return Graph(4, {{1, 2}, {1, 3}, {1, 4}, {2, 3}}); }

inline LengthFunction lengths(std::initializer_list<double> v, bool normalized = true) {
  return {Vec(v), normalized};
}

/// Random connected graph on up to max_vertices vertices: a random
/// spanning tree plus a few extra edges.
inline Graph random_connected_graph(Rng& rng, int max_vertices) {
  int n = rng.uniform_int(2, max_vertices);
  std::vector<std::pair<int, int>> edges;
  for (int v = 2; v <= n; ++v) edges.emplace_back(rng.uniform_int(1, v - 1), v);
  int extra = rng.uniform_int(0, n);
  for (int k = 0; k < extra; ++k) {
    int u = rng.uniform_int(1, n), v = rng.uniform_int(1, n);
    if (u == v) continue;
    bool dup = false;
    for (auto& [a, b] : edges)
      if ((a == std::min(u, v) && b == std::max(u, v)) ||
          (a == std::max(u, v) && b == std::min(u, v)))
        dup = true;
    if (!dup) edges.emplace_back(u, v);
  }
  return Graph(n, edges);
}

/// Moderate random lengths, normalized: keeps the spectral problems
/// well-conditioned for finite-difference comparisons.
inline LengthFunction random_lengths(Rng& rng, int edge_count) {
  Vec v(edge_count);
  for (double& x : v) x = rng.uniform(0.5, 1.5);
  return normalize_lengths({v, false});
}

}  // namespace lapmax::testing
