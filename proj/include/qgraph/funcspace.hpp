#pragma once

#include <functional>
#include <string>
#include <vector>

#include "qgraph/graph.hpp"
#include "qgraph/types.hpp"

namespace qgraph {

/// Uniform per-edge grids: edge e carries intervals(e) >= 2 intervals of width
/// length(e) / intervals(e). Interval counts are kept even so that composite
/// Simpson quadrature applies on every edge.
class Mesh {
 public:
  Mesh() = default;
  Mesh(std::vector<double> lengths, std::vector<std::size_t> intervals);

  /// intervals(e) = smallest even count >= max(2, ceil(l(e) / h_max)).
  static Mesh uniform(const MetricGraph& g, double h_max);

  /// Same lengths, every interval count doubled.
  Mesh refined() const;

  std::size_t num_edges() const { return lengths_.size(); }
  double length(std::size_t e) const { return lengths_.at(e); }
  std::size_t intervals(std::size_t e) const { return intervals_.at(e); }
  std::size_t nodes(std::size_t e) const { return intervals_.at(e) + 1; }
  double step(std::size_t e) const { return lengths_.at(e) / static_cast<double>(intervals_.at(e)); }
  double node(std::size_t e, std::size_t k) const { return step(e) * static_cast<double>(k); }
  double h_max() const;
  std::size_t total_nodes() const;

  bool operator==(const Mesh&) const = default;

 private:
  std::vector<double> lengths_;
  std::vector<std::size_t> intervals_;
};

using EdgeEvaluator = std::function<Complex(std::size_t edge, double t)>;

/// A function on X sampled at the nodes of a Mesh.
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(Mesh mesh);
  GridFunction(Mesh mesh, std::vector<CVector> values);

  static GridFunction sample(const Mesh& mesh, const EdgeEvaluator& f);

  const Mesh& mesh() const { return mesh_; }
  const CVector& on_edge(std::size_t e) const { return values_.at(e); }
  CVector& on_edge(std::size_t e) { return values_.at(e); }
  const std::vector<CVector>& values() const { return values_; }

  GridFunction& operator+=(const GridFunction& other);
  GridFunction& operator-=(const GridFunction& other);
  GridFunction& operator*=(Complex s);
  /// Pointwise product.
  GridFunction times(const GridFunction& other) const;

 private:
  void check_compatible(const GridFunction& other) const;

  Mesh mesh_;
  std::vector<CVector> values_;
};

GridFunction operator+(GridFunction a, const GridFunction& b);
GridFunction operator-(GridFunction a, const GridFunction& b);
GridFunction operator*(Complex s, GridFunction a);

/// Per-vertex boundary values f(v) and signed inward derivatives f'(v), in
/// VertexStar order. At an init end f'(v) = f_e'(0+); at a term end
/// f'(w) = -f_e'(l(e)-).
struct TraceVector {
  std::vector<CVector> value;
  std::vector<CVector> derivative;
};

/// Derivatives from second-order one-sided differences. Throws InputError if
/// an edge has fewer than three nodes.
TraceVector traces(const MetricGraph& g, const GridFunction& f);

struct Norms {
  double l2 = 0.0;          // ||f||_2, composite trapezoid
  double derivative = 0.0;  // ||f'||_2 from centred differences
  double w12 = 0.0;         // sqrt(||f||^2 + ||f'||^2)
  double linf = 0.0;        // max node modulus
};

Norms norms(const GridFunction& f);

enum class Quadrature { Trapezoid, Simpson };

/// Quadrature weights on a uniform grid with n intervals of width h.
RVector quadrature_weights(std::size_t intervals, double h, Quadrature rule);

/// <f, g> = sum_e int f_e conj(g_e).
Complex inner(const GridFunction& f, const GridFunction& g, Quadrature rule = Quadrature::Simpson);
double norm(const GridFunction& f, Quadrature rule = Quadrature::Simpson);

/// Samples of one edge restricted function h on [0, length].
struct EdgeSamples {
  double length = 0.0;
  CVector values;
};

struct SobolevResult {
  double lhs = 0.0;  // |h(0)|^2
  double rhs = 0.0;  // (2/a) ||h||^2_{L^2(0,a)} + a ||h'||^2_{L^2(0,a)}
  bool holds = false;
};

/// Evaluates both sides of the trace inequality on (0, a) for the piecewise
/// linear interpolant of the samples, with exact integrals, so the result is
/// exact up to rounding. Throws InputError if a exceeds the edge length.
SobolevResult sobolev_check(const EdgeSamples& h, double a, double slack = 1e-12);

/// Cutoff function psi_n around x with its first two derivatives at every node.
struct Cutoff {
  GridFunction value;
  GridFunction d1;
  GridFunction d2;
  double bound = 0.0;  // (1 + 4/u)^2
  double sup_value = 0.0, sup_d1 = 0.0, sup_d2 = 0.0;
  bool within_bound() const { return sup_value <= bound && sup_d1 <= bound && sup_d2 <= bound; }
};

/// psi_n == 1 on edges with both ends in B(x, n), == 0 on edges with both ends
/// outside, and a C^2 quintic transition of width min(l(e), u) on straddling
/// edges. The edge containing x is treated as two half-edges meeting at x.
Cutoff cutoff(const MetricGraph& g, const Mesh& mesh, const Point& x, double n);

/// Quintic smoothstep 6s^5 - 15s^4 + 10s^3 on [0,1], clamped outside.
double smoothstep(double s);
double smoothstep_d1(double s);
double smoothstep_d2(double s);

/// CSV rows "edge_id,t,re,im" with a header line.
std::string to_csv(const MetricGraph& g, const GridFunction& f);
/// Reads the CSV format back; rows of each edge must form a uniform grid
/// covering [0, l(e)].
GridFunction grid_function_from_csv(const MetricGraph& g, const std::string& text);

}  // namespace qgraph
