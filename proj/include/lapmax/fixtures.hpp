#pragma once

#include <string>
#include <vector>

#include "lapmax/optimize.hpp"

namespace lapmax {

/// Canonical small-graph cases with independently known optima. Each
/// fixture runs the full pipeline (optimize, eigenpair, certify,
/// verify) and compares against its expected values.
struct Fixture {
  enum class Mode { maximize, verify_extremal, diverge };

  std::string name;
  std::string note;  // what the expected numbers are
  Mode mode = Mode::maximize;
  int vertices = 0;
  std::vector<std::pair<int, int>> edges;
  Vec init_lengths;          // empty = uniform
  Vec expected_lengths;      // empty = skip
  double lengths_tol = 0.0;
  double expected_lambda1 = 0.0;
  double lambda1_tol = 0.0;
  int expected_multiplicity = 0;
  double cert_residual_tol = 0.0;
};

const std::vector<Fixture>& fixture_registry();
const Fixture& find_fixture(const std::string& name);

struct FixtureOutcome {
  std::string name;
  bool pass = false;
  std::vector<std::string> failures;
  OptResult result;
};

/// Build the fixture's graph.
Graph fixture_graph(const Fixture& f);

/// Uniform normalized lengths for a graph.
LengthFunction uniform_lengths(const Graph& g);

FixtureOutcome run_fixture(const Fixture& f, uint64_t seed);
FixtureOutcome run_fixture(const std::string& name, uint64_t seed);

}  // namespace lapmax
