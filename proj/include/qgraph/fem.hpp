#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

#include "qgraph/boundary.hpp"
#include "qgraph/funcspace.hpp"
#include "qgraph/graph.hpp"

namespace qgraph {

using SparseMatrix = Eigen::SparseMatrix<Complex>;

/// P1 discretization of the form s0 on a compact graph with the vertex
/// constraints P_v f(v) = 0 eliminated.
///
/// Unknowns are ordered vertex by vertex (coefficients in an orthonormal basis
/// Q_v of ker P_v), then edge by edge (interior nodes). The edge-end value at
/// slot i of vertex v is (Q_v c_v)_i.
struct FormAssembly {
  MetricGraph graph;
  BoundaryCondition bc;
  Mesh mesh;
  HeinsConstant heins;

  std::vector<CMatrix> vertex_basis;       // Q_v, d_v x k_v
  std::vector<std::size_t> vertex_offset;  // first unknown of vertex v
  std::vector<std::size_t> edge_offset;    // first unknown of edge e (node 1)
  std::vector<std::size_t> node_offset;    // first row of edge e in the nodal vector
  std::size_t dim = 0;

  SparseMatrix T;  // nodal values = T * coefficients
  SparseMatrix A;  // sum_e int f' conj(g')
  SparseMatrix R;  // sum_v <L_v f(v), g(v)>
  SparseMatrix B;  // sum_e int f conj(g)
  SparseMatrix V;  // int V f conj(g); zero for the unperturbed operator
  double v_min = 0.0;

  /// A - R + V.
  SparseMatrix op() const;
  /// s0(f, f) (+ <Vf, f> when perturbed) for a coefficient vector.
  double form(const CVector& x) const;
  double mass(const CVector& x) const;
  double dirichlet(const CVector& x) const;
  double boundary(const CVector& x) const;

  GridFunction to_grid(const CVector& x) const;
  /// Coefficients of a grid function on the same mesh. Vertex coefficients are
  /// Q_v^* f(v), so this is exact for functions that satisfy P_v f(v) = 0.
  CVector from_grid(const GridFunction& f) const;
};

/// Throws UnsupportedError on infinite edges and InputError on an invalid bc.
FormAssembly assemble(const MetricGraph& g, const BoundaryCondition& bc, const Mesh& mesh);
FormAssembly assemble(const MetricGraph& g, const BoundaryCondition& bc, double h_max);

/// Adds the P1 potential matrix of nodal samples V (one vector per edge, on
/// fa.mesh). Integrals are exact for the piecewise linear interpolant.
FormAssembly with_potential(const FormAssembly& fa, const std::vector<RVector>& nodal);

struct DiscreteEigensystem {
  RVector values;         // ascending
  CMatrix vectors;        // B-orthonormal columns
  double h_max = 0.0;
  double max_residual = 0.0;  // max_k ||H x_k - lambda_k B x_k|| / ||H||_1
  bool iterative = false;
};

struct EigenOptions {
  std::size_t dense_limit = 1500;
  double tol = 1e-11;
  std::size_t max_iterations = 2000;
};

/// Lowest k eigenpairs of (A - R + V, B). Throws InputError if k exceeds the
/// number of unknowns.
DiscreteEigensystem eigensystem(const FormAssembly& fa, std::size_t k, const EigenOptions& opt = {});

/// All eigenpairs with eigenvalue <= lambda_max.
DiscreteEigensystem eigensystem_below(const FormAssembly& fa, double lambda_max, const EigenOptions& opt = {});

// sparse_eigen.cpp

/// Lowest k eigenpairs of the Hermitian pencil (H, B), B positive definite,
/// by shift-invert subspace iteration with a shift sigma below the spectrum.
DiscreteEigensystem sparse_lowest(const SparseMatrix& H, const SparseMatrix& B, std::size_t k, double sigma,
                                  const EigenOptions& opt);

/// Makes the first entry of largest modulus in every column real positive.
void fix_column_phases(CMatrix& x);

/// Random unknown vectors normalized to ||f||_2 = 1: white noise, cumulative
/// sums of noise, and vertex-localized exponential profiles, in rotation.
std::vector<CVector> form_samples(const FormAssembly& fa, std::size_t count, std::uint64_t seed);

struct MarginReport {
  double worst = 0.0;
  std::size_t worst_sample = 0;
  std::size_t samples = 0;
};

/// s0(f,f) + C||f||^2 - 1/2 ||f||^2_{W^{1,2}}.
double heins_margin(const FormAssembly& fa, const HeinsConstant& hc, const CVector& x);
MarginReport check_heins(const FormAssembly& fa, const HeinsConstant& hc, const std::vector<CVector>& samples);

/// (4S/eps)||f||^2 + 2 S eps ||f'||^2 - sum_v <L_v f(v), f(v)>, S from fa.heins.
double randterm_margin(const FormAssembly& fa, double eps, const CVector& x);
/// Throws InputError unless 0 < eps <= u.
MarginReport check_randterm(const FormAssembly& fa, double eps, const std::vector<CVector>& samples);

/// "index,eigenvalue" rows with a header.
std::string spectrum_csv(const RVector& values);
/// Coordinate format: "row col re im" per stored entry, 0-based.
std::string matrix_dump(const SparseMatrix& m);

}  // namespace qgraph
