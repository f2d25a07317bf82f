#include "lapmax/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

namespace lapmax {

Graph::Graph(int vertex_count, const std::vector<std::pair<int, int>>& edges)
    : vertex_count_(vertex_count) {
  if (vertex_count < 1) throw InvalidGraph("vertex count must be positive");
  std::set<std::pair<int, int>> seen;
  edges_.reserve(edges.size());
  incident_.assign(vertex_count, {});
  for (const auto& [a, b] : edges) {
    if (a < 1 || a > vertex_count || b < 1 || b > vertex_count)
      throw InvalidGraph("edge endpoint out of range: " + std::to_string(a) + "," + std::to_string(b));
    if (a == b) throw InvalidGraph("loop at vertex " + std::to_string(a));
    int u = std::min(a, b) - 1, v = std::max(a, b) - 1;
    if (!seen.insert({u, v}).second)
      throw InvalidGraph("duplicate edge " + std::to_string(u + 1) + std::to_string(v + 1));
    int id = static_cast<int>(edges_.size());
    edges_.push_back({u, v});
    incident_[u].push_back(id);
    incident_[v].push_back(id);
  }
  std::vector<bool> all(edges_.size(), true);
  if (!support_connected(*this, all)) throw InvalidGraph("graph is disconnected");
}

std::string Graph::edge_label(int e) const {
  int u = edges_[e].u + 1, v = edges_[e].v + 1;
  if (vertex_count_ <= 9) return std::to_string(u) + std::to_string(v);
  return std::to_string(u) + "-" + std::to_string(v);
}

bool support_connected(const Graph& g, const std::vector<bool>& support) {
  int n = g.vertex_count();
  if (n == 1) return true;
  std::vector<bool> visited(n, false);
  std::vector<int> stack = {0};
  visited[0] = true;
  int count = 1;
  while (!stack.empty()) {
    int u = stack.back();
    stack.pop_back();
    for (int e : g.incident_edges(u)) {
      if (!support[e]) continue;
      int w = g.edge(e).u == u ? g.edge(e).v : g.edge(e).u;
      if (!visited[w]) {
        visited[w] = true;
        ++count;
        stack.push_back(w);
      }
    }
  }
  return count == n;
}

std::pair<VertexWeight, EdgeWeight> fujiwara_weights(const Graph& g, const LengthFunction& l) {
  if (static_cast<int>(l.value.size()) != g.edge_count())
    throw NonPositiveLength("length function has wrong size");
  for (int e = 0; e < g.edge_count(); ++e)
    if (!(l.value[e] > 0.0))
      throw NonPositiveLength("nonpositive length on edge " + g.edge_label(e));
  VertexWeight m0{Vec(g.vertex_count(), 0.0)};
  EdgeWeight m1{Vec(g.edge_count(), 0.0)};
  for (int e = 0; e < g.edge_count(); ++e) {
    m0.value[g.edge(e).u] += l.value[e];
    m0.value[g.edge(e).v] += l.value[e];
    m1.value[e] = 1.0 / l.value[e];
  }
  return {std::move(m0), std::move(m1)};
}

LengthFunction normalize_lengths(const LengthFunction& l) {
  double total = 0.0;
  for (double v : l.value) {
    if (!(v > 0.0)) throw NonPositiveLength("nonpositive length");
    total += v;
  }
  LengthFunction out;
  out.value = scaled(l.value, 1.0 / (2.0 * total));
  out.normalized = true;
  return out;
}

bool is_normalized(const LengthFunction& l) {
  double total = 0.0;
  for (double v : l.value) total += v;
  return std::abs(2.0 * total - 1.0) <= NORMALIZATION_TOL;
}

WeightedLaplacian assemble_laplacian(const Graph& g, const VertexWeight& m0, const EdgeWeight& m1) {
  int n = g.vertex_count();
  for (int u = 0; u < n; ++u)
    if (!(m0.value[u] > 0.0))
      throw NonPositiveVertexWeight("nonpositive vertex weight at " + std::to_string(u + 1));
  std::vector<bool> support(g.edge_count());
  for (int e = 0; e < g.edge_count(); ++e) {
    if (m1.value[e] < 0.0) throw DisconnectedSupport("negative edge weight on " + g.edge_label(e));
    support[e] = m1.value[e] > 0.0;
  }
  if (!support_connected(g, support))
    throw DisconnectedSupport("positive-weight edge support is disconnected");

  Mat L(n, n);
  for (int e = 0; e < g.edge_count(); ++e) {
    int u = g.edge(e).u, v = g.edge(e).v;
    double w = m1.value[e];
    L(u, u) += w / m0.value[u];
    L(v, v) += w / m0.value[v];
    double off = -w / std::sqrt(m0.value[u] * m0.value[v]);
    L(u, v) += off;
    L(v, u) += off;
  }
  return {g, m0, m1, std::move(L)};
}

WeightedLaplacian laplacian_from_lengths(const Graph& g, const LengthFunction& l) {
  auto [m0, m1] = fujiwara_weights(g, l);
  return assemble_laplacian(g, m0, m1);
}

namespace {

using nlohmann::json;

json parse_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError("malformed graph file: not valid JSON");
  return j;
}

}  // namespace

GraphFile parse_graph_file(const std::string& text) {
  json j = parse_json(text);
  if (!j.is_object()) throw ParseError("graph file must be a JSON object");
  static const std::set<std::string> known = {"vertices", "edges", "lengths", "vertex_weights"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key())) throw ParseError("unknown field '" + it.key() + "'");
  if (!j.contains("vertices") || !j["vertices"].is_number_integer())
    throw ParseError("missing integer field 'vertices'");
  if (!j.contains("edges") || !j["edges"].is_array())
    throw ParseError("missing array field 'edges'");

  std::vector<std::pair<int, int>> edges;
  for (const auto& e : j["edges"]) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      throw ParseError("each edge must be a pair [u, v] of integers");
    edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  GraphFile out{Graph(j["vertices"].get<int>(), edges), std::nullopt, std::nullopt};

  if (j.contains("lengths")) {
    if (!j["lengths"].is_array() || j["lengths"].size() != edges.size())
      throw ParseError("'lengths' must be an array aligned with 'edges'");
    LengthFunction l;
    for (const auto& v : j["lengths"]) {
      if (!v.is_number()) throw ParseError("'lengths' entries must be numbers");
      l.value.push_back(v.get<double>());
    }
    l.normalized = is_normalized(l);
    out.lengths = std::move(l);
  }
  if (j.contains("vertex_weights")) {
    if (!j["vertex_weights"].is_array() ||
        static_cast<int>(j["vertex_weights"].size()) != out.graph.vertex_count())
      throw ParseError("'vertex_weights' must be an array aligned with vertices");
    VertexWeight w;
    for (const auto& v : j["vertex_weights"]) {
      if (!v.is_number()) throw ParseError("'vertex_weights' entries must be numbers");
      w.value.push_back(v.get<double>());
    }
    out.vertex_weights = std::move(w);
  }
  return out;
}

Graph parse_graph(const std::string& text) { return parse_graph_file(text).graph; }

}  // namespace lapmax
