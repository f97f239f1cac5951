#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qgraph/boundary.hpp"
#include "qgraph/funcspace.hpp"
#include "qgraph/graph.hpp"

namespace qgraph {

/// c(t), s(t) and their t-derivatives for -f'' = lambda f with c(0)=1, c'(0)=0,
/// s(0)=0, s'(0)=1. Power series are used when |lambda| t^2 is small.
struct FundamentalValues {
  double c = 1.0, s = 0.0, dc = 0.0, ds = 1.0;
  double wronskian() const { return c * ds - dc * s; }
};

FundamentalValues fundamental(double lambda, double t);

/// Square matrix of order 2|E| acting on (alpha_0, beta_0, alpha_1, ...), rows
/// grouped by vertex: first Q_P^* f(v) = 0 (rank P_v rows), then
/// Q_K^* (L_v f(v) + f'(v)) = 0 (dim ker P_v rows).
struct SecularMatrix {
  double lambda = 0.0;
  CMatrix M;
  std::vector<std::size_t> vertex_row;  // first row of each vertex
  /// Vertices where P_v L_v (1 - P_v) != 0. The rows above encode the form
  /// condition; the extra requirement P_v L_v f(v) = 0 is only checked in
  /// residuals.
  std::vector<std::string> anomalies;
};

/// Throws UnsupportedError on infinite edges, InputError on an invalid bc.
SecularMatrix secular_matrix(const MetricGraph& g, const BoundaryCondition& bc, double lambda);

/// A solution of -f'' = lambda f on every edge. Stored both as (alpha, beta)
/// in the fundamental basis and as end values (f(0), f(l)); the latter is used
/// for evaluation when lambda < 0, where c and s grow exponentially.
struct SecularSolution {
  double lambda = 0.0;
  std::size_t index = 0;  // position within its eigenspace
  std::vector<double> lengths;
  std::vector<Complex> alpha, beta;
  std::vector<Complex> start, end;

  Complex value(std::size_t e, double t) const;
  Complex derivative(std::size_t e, double t) const;
  GridFunction sample(const Mesh& mesh) const;
};

/// Exact vertex traces of a solution.
TraceVector traces(const MetricGraph& g, const SecularSolution& f);

/// Per-vertex ||P_v f(v)|| + ||L_v f(v) + (1 - P_v) f'(v)||, the condition
/// taken literally.
std::vector<double> condition_residuals(const MetricGraph& g, const BoundaryCondition& bc, const TraceVector& tv);
double max_condition_residual(const MetricGraph& g, const BoundaryCondition& bc, const TraceVector& tv);

struct ScanOptions {
  std::optional<double> lambda_min;  // default -(C + 1), C the Heins constant
  double lambda_max = 100.0;
  /// Grid step in sign(lambda) sqrt(|lambda|); 0 picks min(0.01, pi / (20 L)).
  double step = 0.0;
  double tol = 1e-8;
};

struct SecularRoot {
  double lambda = 0.0;
  std::size_t multiplicity = 0;
  double sigma_min = 0.0;  // relative to ||M||
};

/// sigma_min / sigma_max of the scaled secular matrix at lambda.
double relative_sigma_min(const MetricGraph& g, const BoundaryCondition& bc, double lambda);

/// Roots separated by more than two grid steps are found. Sorted by lambda.
std::vector<SecularRoot> eigenvalues_scan(const MetricGraph& g, const BoundaryCondition& bc, const ScanOptions& opt);

/// L^2-orthonormal basis of the eigenspace at lambda. Throws InputError
/// ("not an eigenvalue") if no relative singular value is below tol.
std::vector<SecularSolution> eigenfunctions(const MetricGraph& g, const BoundaryCondition& bc, double lambda,
                                            double tol = 1e-8);

/// Solutions at lambda with the conditions dropped at the listed edge ends.
/// Free ends must make up whole vertex stars (InputError otherwise). Returns
/// an L^2-orthonormal basis, possibly empty.
std::vector<SecularSolution> solve_at_energy(const MetricGraph& g, const BoundaryCondition& bc, double lambda,
                                             const std::vector<EdgeEnd>& free_ends, double tol = 1e-8);

/// Sum over edges of the integral of f conj(g), by Gauss-Legendre panels.
Complex inner(const SecularSolution& f, const SecularSolution& g);

/// "lambda,multiplicity,sigma_min" rows with a header.
std::string roots_csv(const std::vector<SecularRoot>& roots);

}  // namespace qgraph
