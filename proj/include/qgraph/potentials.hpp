#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "qgraph/expansion.hpp"
#include "qgraph/fem.hpp"
#include "qgraph/funcspace.hpp"
#include "qgraph/graph.hpp"

namespace qgraph {

/// Real potential given by nodal samples on a mesh, read as its piecewise
/// linear interpolant.
struct Potential {
  Mesh mesh;
  std::vector<RVector> values;

  double value(std::size_t e, double t) const;
  RealEvaluator evaluator() const;
  double min() const;

  static Potential sample(const Mesh& mesh, const RealEvaluator& f);
  static Potential constant(const Mesh& mesh, double c);
  /// -depth on [t0, t1] of one edge, 0 elsewhere.
  static Potential well(const MetricGraph& g, const Mesh& mesh, const std::string& edge, double t0, double t1, double depth);
};

/// "const:c", "well:edge,t0,t1,depth" or the path of a CSV file with rows
/// edge_id,t,value. CSV nodes must coincide with the mesh (InputError otherwise).
Potential parse_potential(const MetricGraph& g, const Mesh& mesh, const std::string& spec);
Potential potential_from_csv(const MetricGraph& g, const Mesh& mesh, const std::string& text);

struct UniformL2Norm {
  double M = 0.0;
  std::size_t edge = 0;
  double t0 = 0.0, t1 = 0.0;  // achieving window
};

/// ||V||_{L^2(I)} for I = [t0, t1] on one edge, exact for the interpolant.
double window_norm(const Potential& V, std::size_t e, double t0, double t1);

/// sup of ||V||_{L^2(I)} over windows of length min(2u, l(e)) slid at `step`.
/// Throws InputError unless 0 < step <= u/10.
UniformL2Norm m_v(const MetricGraph& g, const Potential& V, double step);

/// fa with the potential matrix of V added.
FormAssembly assemble_perturbed(const FormAssembly& fa, const Potential& V);

/// ||V f||^2 for a coefficient vector of fa, exact for the interpolants.
double potential_norm_sq(const FormAssembly& fa, const Potential& V, const CVector& x);

struct RelativeBoundReport {
  double a = 0.0;
  double M = 0.0;    // largest window norm used (sliding windows and partition windows)
  double Ca = 0.0;   // M^2 (C + 4/a)
  double worst = 0.0;             // min of M^2 a s0 + C(a)||f||^2 - ||Vf||^2
  double worst_window = 0.0;      // min of (a/2)||f'||_I^2 + (4/a)||f||_I^2 - sup_I |f|^2
  std::size_t samples = 0;
};

/// Throws InputError unless 0 < a <= u. Samples must be unknown vectors of fa
/// (the unperturbed assembly).
RelativeBoundReport check_relative_bound(const FormAssembly& fa, const Potential& V, double a,
                                         const std::vector<CVector>& samples, double step);

/// Eigenfunction of H0 + V with V read as its piecewise linear interpolant,
/// integrated cell by cell with the Taylor recurrence of y'' = (V - lambda) y.
/// Exact up to rounding, so weak residuals only measure quadrature error.
struct ShootingSolution {
  double lambda = 0.0;
  Potential V;
  // (y, y') at every node of V.mesh, per edge.
  std::vector<std::vector<std::array<Complex, 2>>> nodes;

  Complex value(std::size_t e, double t) const;
  GridFunction sample() const;
  TraceVector traces(const MetricGraph& g) const;
};

/// (y(s), y'(s)) for y'' = (q0 + q1 tau) y, y(0) = y0, y'(0) = dy0.
std::array<Complex, 2> propagate(double q0, double q1, Complex y0, Complex dy0, double s);

/// sigma_min / sigma_max of the shooting matrix at lambda.
double shooting_sigma(const MetricGraph& g, const BoundaryCondition& bc, const Potential& V, double lambda);

/// Eigenfunctions for a cluster of `count` eigenvalues near `guess`, found
/// by minimizing shooting_sigma on [lo, hi]; L2-orthonormal. sigma receives
/// the relative singular value at the minimizer.
std::vector<ShootingSolution> shooting_eigenfunctions(const MetricGraph& g, const BoundaryCondition& bc,
                                                     const Potential& V, double lo, double hi, std::size_t count,
                                                     double* sigma = nullptr);

struct PerturbedMode {
  double discrete_lambda = 0.0;  // FEM eigenvalue
  double lambda = 0.0;           // after shooting refinement
  double sigma = 0.0;            // relative singular value at lambda
  double interior = 0.0;
  double vertex = 0.0;
  double condition = 0.0;        // verbatim vertex-condition residual
  double weighted_norm = 0.0;    // ||w^{-1} phi||
};

struct PerturbedReport {
  std::vector<PerturbedMode> modes;
  double worst = 0.0;  // worst weak residual over modes and tests
  double worst_condition = 0.0;
  double worst_shift = 0.0;  // max |discrete_lambda - lambda|
};

/// Refines every FEM eigenpair of H0 + V by shooting, then reports weak
/// residuals against the standard battery, vertex-condition residuals and
/// ||w^{-1} phi||.
PerturbedReport perturbed_genef_check(const MetricGraph& g, const BoundaryCondition& bc, const Potential& V,
                                      const FormAssembly& perturbed, const DiscreteEigensystem& es,
                                      const WeightFunction& w);

struct ConvergenceStudy {
  std::vector<double> h;
  std::vector<double> worst;  // max |lambda_h - lambda| over the tracked modes, per mesh
  double order = 0.0;         // log2 of the last ratio
};

/// FEM eigenvalues of H0 + V on meshes h0, h0/2, ..., against the shooting
/// eigenvalues for the same V (sampled once on the finest mesh).
ConvergenceStudy perturbed_convergence(const MetricGraph& g, const BoundaryCondition& bc, const RealEvaluator& V,
                                       double h0, std::size_t levels, std::size_t modes);

}  // namespace qgraph
