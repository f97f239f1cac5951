#pragma once

#include <string>

#include "qgraph/boundary.hpp"
#include "qgraph/graph.hpp"

namespace fixtures {

inline std::string path(const std::string& name) { return std::string(QGRAPH_FIXTURES) + "/" + name; }

inline qgraph::MetricGraph graph(const std::string& name) {
  return qgraph::MetricGraph::build(qgraph::read_graph_file(path(name)));
}

inline qgraph::BoundaryCondition bc(const qgraph::MetricGraph& g, const std::string& name) {
  return qgraph::read_bc_file(g, path(name));
}

inline qgraph::MetricGraph from_json(const std::string& text) {
  return qgraph::MetricGraph::build(qgraph::parse_graph_json(text));
}

}  // namespace fixtures
