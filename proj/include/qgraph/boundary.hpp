#pragma once

#include <string>
#include <vector>

#include "qgraph/graph.hpp"
#include "qgraph/types.hpp"

namespace qgraph {

/// Vertex condition (L_v, P_v) acting on C^{d_v}, indexed in VertexStar order.
/// Encodes P_v f(v) = 0 and L_v f(v) + (1 - P_v) f'(v) = 0.
struct VertexCondition {
  CMatrix L;
  CMatrix P;
};

/// One VertexCondition per vertex, indexed by vertex index.
struct BoundaryCondition {
  std::vector<VertexCondition> at;
};

struct BcReport {
  std::vector<Violation> violations;
  /// Vertices where P_v L_v (1 - P_v) != 0: the verbatim operator condition is
  /// stricter there than the one generated by the form.
  std::vector<std::string> notes;
  std::vector<double> positive_part;  // ||L_v^+|| per vertex
  double S = 0.0;                     // max_v ||L_v^+||
  bool ok() const { return violations.empty(); }
};

/// Checks self-adjointness of every L_v and that every P_v is an orthogonal
/// projection, up to a relative Frobenius tolerance. Throws InputError when a
/// matrix is not d_v x d_v.
BcReport validate_bc(const MetricGraph& g, const BoundaryCondition& bc, double tol = 1e-10);

/// ||L^+||: the largest nonnegative eigenvalue of a Hermitian matrix, 0 if L <= 0.
double positive_part_norm(const CMatrix& L);

struct Preset {
  enum class Kind { Dirichlet, Neumann, Kirchhoff, Delta };
  Kind kind = Kind::Kirchhoff;
  double alpha = 0.0;

  static Preset dirichlet() { return {Kind::Dirichlet, 0.0}; }
  static Preset neumann() { return {Kind::Neumann, 0.0}; }
  static Preset kirchhoff() { return {Kind::Kirchhoff, 0.0}; }
  /// Continuity plus sum of inward derivatives = alpha * f(v).
  static Preset delta(double alpha) { return {Kind::Delta, alpha}; }
};

VertexCondition make_preset(const Preset& preset, std::size_t degree);

/// The same preset at every vertex.
BoundaryCondition uniform_bc(const MetricGraph& g, const Preset& preset);

/// Orthonormal basis of ker P (eigenvalues of P below 1/2), ordered by
/// eigenvalue then index, each column phase-fixed.
CMatrix kernel_basis(const CMatrix& P);
/// Orthonormal basis of ran P (eigenvalues of P at least 1/2).
CMatrix range_basis(const CMatrix& P);

/// Shift C with s0(f,f) + C ||f||^2 >= 1/2 ||f||^2_{W^{1,2}} on the form domain.
struct HeinsConstant {
  double S = 0.0;
  double u = 1.0;
  double eps0 = 1.0;
  double C = 0.5;
};

/// eps0 = min(u, 1/(4S)) and C = 4S/eps0 + 1/2 (S > 0); eps0 = u, C = 1/2 when S = 0.
HeinsConstant heins_constant(double S, double u);

// boundary_io.cpp

/// Parses a boundary-condition document: vertex id -> "dirichlet" | "neumann" |
/// "kirchhoff" | {"delta": alpha} | {"L": rows, "P": rows}. The key "*" sets a
/// default for vertices not listed.
BoundaryCondition parse_bc_json(const MetricGraph& g, const std::string& text);
BoundaryCondition read_bc_file(const MetricGraph& g, const std::string& path);

}  // namespace qgraph
