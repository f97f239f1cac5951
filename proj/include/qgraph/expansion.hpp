#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qgraph/boundary.hpp"
#include "qgraph/fem.hpp"
#include "qgraph/funcspace.hpp"
#include "qgraph/graph.hpp"
#include "qgraph/secular.hpp"

namespace qgraph {

using RealEvaluator = std::function<double(std::size_t edge, double t)>;

/// w(x) = max(1, m(B_{d(x,x0)+1}(x0))^{1+eps}), or a positive constant.
class WeightFunction {
 public:
  static WeightFunction constant(double value = 1.0);
  /// Throws InputError on a disconnected graph or eps <= 0.
  static WeightFunction ball(const MetricGraph& g, const Point& x0, double eps);

  bool is_constant() const { return !field_; }
  double operator()(std::size_t e, double t) const;
  double at(const Point& p) const;
  /// sup of 1/w, attained at x0 for the ball weight.
  double sup_inverse() const;
  /// int_X w^{-2}, adaptive Gauss-Kronrod between the kinks of w. Needs a
  /// graph for the constant weight (total length).
  double integral_inverse_sq(const MetricGraph& g, double tol = 1e-13) const;
  GridFunction sample(const Mesh& mesh) const;

 private:
  double constant_ = 1.0;
  double eps_ = 0.0;
  std::shared_ptr<const MetricGraph> graph_;
  std::shared_ptr<const DistanceField> field_;
};

/// Discrete spectrum: distinct eigenvalues, multiplicities and orthonormal
/// eigenfunctions sampled on a common mesh (plus the exact solutions when
/// they come from the secular equation). Spectral measure: counting measure.
struct DiscreteSpectralRep {
  Mesh mesh;
  std::vector<double> eigenvalues;  // distinct, ascending
  std::vector<std::vector<GridFunction>> functions;
  std::vector<std::vector<SecularSolution>> exact;  // empty unless built from secular roots

  std::size_t multiplicity(std::size_t i) const { return functions.at(i).size(); }
  std::size_t num_modes() const;
  /// N = largest multiplicity.
  std::size_t layers() const;
  /// Indices of eigenvalues in M_j = {lambda : m(lambda) >= j}, j >= 1.
  std::vector<std::size_t> level_set(std::size_t j) const;
};

DiscreteSpectralRep spectral_rep(const MetricGraph& g, const BoundaryCondition& bc,
                                 const std::vector<SecularRoot>& roots, const Mesh& mesh, double tol = 1e-8);
/// Groups FEM eigenvalues closer than group_tol * max(1, |lambda|).
DiscreteSpectralRep spectral_rep(const FormAssembly& fa, const DiscreteEigensystem& es, double group_tol = 1e-8);

struct HsReport {
  double partial = 0.0;        // sum over computed modes
  double tail_bound = 0.0;     // rigorous bound on the omitted modes
  double tail_estimate = 0.0;  // Weyl-law estimate of the omitted modes
  double value = 0.0;          // partial + tail_estimate
  double C = 0.0;
  std::size_t modes = 0;
  std::vector<double> weighted_norm_sq;  // ||w^{-1} phi||^2 per mode, in mode order
};

/// ||w^{-1} gamma(H0)||_HS^2 with gamma(t) = (C + t)^{-1/2}, summed over the
/// modes of rep, which must contain every eigenvalue up to its largest one.
/// Throws InputError unless C + lambda_min > 0.
HsReport hs_norm(const MetricGraph& g, const DiscreteSpectralRep& rep, const WeightFunction& w, double C);

/// Double quadrature of |k(x,y)|^2 for the truncated kernel
/// k(x,y) = w(x)^{-1} sum (C+lambda)^{-1/2} phi(x) conj(phi(y)).
double kernel_hs_quadrature(const DiscreteSpectralRep& rep, const WeightFunction& w, double C);

/// (U_j f)(lambda) = <f, phi_{j,lambda}>, same shape as rep.functions.
using Coefficients = std::vector<std::vector<Complex>>;
Coefficients fourier(const DiscreteSpectralRep& rep, const GridFunction& f);
GridFunction reconstruct(const DiscreteSpectralRep& rep, const Coefficients& c);

struct ParsevalReport {
  double norm_sq = 0.0;
  double coeff_sq = 0.0;
  double gap = 0.0;           // |norm_sq - coeff_sq|
  double relative_gap = 0.0;  // gap / norm_sq
  double tail_estimate = 0.0; // power-law extrapolation of the omitted coefficients
};

ParsevalReport parseval(const MetricGraph& g, const DiscreteSpectralRep& rep, const GridFunction& f);

/// A compactly supported test function given piecewise by (f, f', f'').
struct TestPiece {
  std::size_t edge = 0;
  double t0 = 0.0, t1 = 0.0;  // support on the edge
  std::function<std::array<Complex, 3>(double t)> eval;
};

struct TestFunction {
  std::string label;
  bool straddles_vertex = false;
  std::vector<TestPiece> pieces;

  std::array<Complex, 3> at(std::size_t e, double t) const;
};

/// Three bumps (1 - s^2)^4 inside every edge (centred at l/2, l/4, 3l/4),
/// plus d_v star functions per vertex
/// (a + b tau)(1 - S(tau/rho)) with (a, b) running over bases of ker P_v and
/// ran P_v, so that every test satisfies the vertex conditions.
std::vector<TestFunction> standard_tests(const MetricGraph& g, const BoundaryCondition& bc);

/// Vertex-condition residual of a test function; genef_residual rejects tests
/// above 1e-9.
double test_condition_residual(const MetricGraph& g, const BoundaryCondition& bc, const TestFunction& f);

struct GenefReport {
  double worst = 0.0;
  double worst_interior = 0.0;
  double worst_vertex = 0.0;
  std::string worst_label;
  std::vector<double> residuals;  // per test
};

/// |<-f'' + V f, phi> - lambda <f, phi>| / ||f|| over the tests, with exact
/// per-piece Gauss quadrature.
GenefReport genef_residual(const MetricGraph& g, const BoundaryCondition& bc, const SecularSolution& phi, double lambda,
                           const std::vector<TestFunction>& tests, const RealEvaluator& V = nullptr);

/// The same for phi sampled on a mesh (composite Simpson). V, if given, is
/// sampled at the mesh nodes.
GenefReport genef_residual(const MetricGraph& g, const BoundaryCondition& bc, const GridFunction& phi, double lambda,
                           const std::vector<TestFunction>& tests, const RealEvaluator& V = nullptr);

/// The same for phi given pointwise, with 8-point Gauss on every cell of
/// `cells`. phi and V must be smooth inside each cell.
GenefReport genef_residual(const MetricGraph& g, const BoundaryCondition& bc, const EdgeEvaluator& phi, double lambda,
                           const std::vector<TestFunction>& tests, const Mesh& cells, const RealEvaluator& V = nullptr);

/// Least-squares lambda from the interior (single-edge) tests:
/// argmin sum |<-f'' + V f, phi> - lambda <f, phi>|^2.
double fit_lambda(const MetricGraph& g, const GridFunction& phi, const std::vector<TestFunction>& tests,
                  const RealEvaluator& V = nullptr);

}  // namespace qgraph
