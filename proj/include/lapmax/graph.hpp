#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lapmax/errors.hpp"
#include "lapmax/linalg.hpp"

namespace lapmax {

/// Undirected edge, endpoints stored 0-based with u < v.
struct Edge {
  int u;
  int v;
};

/// Finite simple connected graph. Vertex ids are 1-based in files and
/// reports (matching the usual convention for small named graphs);
/// internally everything is 0-based.
class Graph {
 public:
  /// `edges` uses 1-based endpoints. Throws InvalidGraph on loops,
  /// duplicate edges, out-of-range endpoints, or a disconnected graph.
  Graph(int vertex_count, const std::vector<std::pair<int, int>>& edges);

  int vertex_count() const { return vertex_count_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int e) const { return edges_[e]; }

  /// Edge ids incident to vertex u (0-based).
  const std::vector<int>& incident_edges(int u) const { return incident_[u]; }

  /// 1-based label "uv" for small graphs, "u-v" otherwise.
  std::string edge_label(int e) const;

 private:
  int vertex_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> incident_;
};

/// Per-edge positive lengths. `normalized` flags that 2·Σl = 1 holds
/// within NORMALIZATION_TOL (relative).
struct LengthFunction {
  Vec value;
  bool normalized = false;
};

inline constexpr double NORMALIZATION_TOL = 1e-12;

struct VertexWeight {
  Vec value;
};

struct EdgeWeight {
  Vec value;
};

/// Symmetric representation matrix of the weighted Laplacian together
/// with the weights that produced it. Immutable after assembly.
struct WeightedLaplacian {
  Graph graph;
  VertexWeight m0;
  EdgeWeight m1;
  Mat matrix;
};

/// m0(u) = sum of incident edge lengths, m1(uv) = 1/l(uv).
std::pair<VertexWeight, EdgeWeight> fujiwara_weights(const Graph& g, const LengthFunction& l);

/// Rescale so that 2·Σl = 1. Idempotent up to NORMALIZATION_TOL.
LengthFunction normalize_lengths(const LengthFunction& l);

bool is_normalized(const LengthFunction& l);

/// L(i,i) = Σ_{j~i} m1(ij)/m0(i), L(i,j) = -m1(ij)/sqrt(m0(i)m0(j)).
/// Requires m0 > 0 and a connected positive-weight edge support.
WeightedLaplacian assemble_laplacian(const Graph& g, const VertexWeight& m0, const EdgeWeight& m1);

/// Fujiwara weights + assembly in one step.
WeightedLaplacian laplacian_from_lengths(const Graph& g, const LengthFunction& l);

/// True iff the subgraph on edges with support[e] == true is connected
/// and touches every vertex.
bool support_connected(const Graph& g, const std::vector<bool>& support);

/// Parse a graph from the JSON schema documented in the README
/// (`vertices`, `edges`, optional `lengths` / `vertex_weights`).
/// Unknown fields are rejected.
struct GraphFile {
  Graph graph;
  std::optional<LengthFunction> lengths;
  std::optional<VertexWeight> vertex_weights;
};

GraphFile parse_graph_file(const std::string& text);

/// Graph-only convenience wrapper over parse_graph_file.
Graph parse_graph(const std::string& text);

}  // namespace lapmax
