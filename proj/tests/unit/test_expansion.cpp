#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fixtures.hpp"
#include "qgraph/expansion.hpp"

using namespace qgraph;
using std::numbers::pi;

namespace {

std::vector<SecularRoot> roots_upto(const MetricGraph& g, const BoundaryCondition& bc, double lambda_max) {
  ScanOptions o;
  o.lambda_max = lambda_max;
  return eigenvalues_scan(g, bc, o);
}

}  // namespace

TEST_CASE("ball weight on the long path") {
  const MetricGraph g = fixtures::graph("path100.json");
  const WeightFunction w = WeightFunction::ball(g, Point::vertex(0), 0.5);
  // int_0^99 (r+1)^{-3} dr + int_99^100 100^{-3} dr.
  CHECK(w.integral_inverse_sq(g) == doctest::Approx(0.5 * (1 - 1e-4) + 1e-6).epsilon(1e-12));
  CHECK(w.sup_inverse() == 1.0);
  CHECK(w.at(Point::vertex(3)) == doctest::Approx(std::pow(4.0, 1.5)));
  CHECK(w(99, 0.5) == doctest::Approx(1000.0));
  for (std::size_t e = 0; e < g.num_edges(); e += 7) {
    for (double t : {0.0, 0.3, 0.9}) {
      const double d = static_cast<double>(e) + t;
      CHECK(w(e, t) >= std::pow(d, 1.5));
    }
  }
}

TEST_CASE("weight errors") {
  const MetricGraph g = fixtures::graph("two_pieces.json");
  CHECK_THROWS_AS(WeightFunction::ball(g, Point::vertex(0), 0.5), InputError);
  CHECK_THROWS_AS(WeightFunction::ball(fixtures::graph("path20.json"), Point::vertex(0), 0.0), InputError);
  CHECK_THROWS_AS(WeightFunction::constant(-1.0), InputError);
  CHECK(WeightFunction::constant(2.0).integral_inverse_sq(fixtures::graph("path20.json")) == doctest::Approx(5.0));
}

TEST_CASE("Hilbert-Schmidt norm on the Dirichlet interval") {
  const MetricGraph g = fixtures::graph("interval_pi.json");
  const BoundaryCondition bc = fixtures::bc(g, "bc_dirichlet.json");
  const Mesh mesh = Mesh::uniform(g, 0.01);
  const DiscreteSpectralRep rep = spectral_rep(g, bc, roots_upto(g, bc, 401.0), mesh);
  REQUIRE(rep.num_modes() == 20);
  const HsReport hs = hs_norm(g, rep, WeightFunction::constant(1.0), 1.0);
  double partial = 0.0;
  for (int n = 1; n <= 20; ++n) partial += 1.0 / (1.0 + n * n);
  CHECK(hs.partial == doctest::Approx(partial).epsilon(1e-10));
  const double exact = (pi / std::tanh(pi) - 1) / 2;
  CHECK(std::abs(hs.value - exact) < 1e-3);
  CHECK(hs.partial + hs.tail_bound >= exact);
  CHECK(kernel_hs_quadrature(rep, WeightFunction::constant(1.0), 1.0) == doctest::Approx(partial).epsilon(1e-8));
  CHECK_THROWS_AS(hs_norm(g, rep, WeightFunction::constant(1.0), -2.0), InputError);
}

TEST_CASE("Parseval for t(pi - t) with twenty sine modes") {
  const MetricGraph g = fixtures::graph("interval_pi.json");
  const BoundaryCondition bc = fixtures::bc(g, "bc_dirichlet.json");
  const Mesh mesh = Mesh::uniform(g, 0.005);
  const DiscreteSpectralRep rep = spectral_rep(g, bc, roots_upto(g, bc, 401.0), mesh);
  const GridFunction f = GridFunction::sample(mesh, [](std::size_t, double t) { return Complex(t * (pi - t), 0.0); });
  const ParsevalReport p = parseval(g, rep, f);
  CHECK(p.norm_sq == doctest::Approx(std::pow(pi, 5) / 30).epsilon(1e-10));
  // Coefficients 4 sqrt(2/pi) / n^3 for odd n.
  double coeff = 0.0;
  for (int n = 1; n <= 20; n += 2) coeff += 32.0 / (pi * std::pow(n, 6));
  CHECK(p.coeff_sq == doctest::Approx(coeff).epsilon(1e-9));
  CHECK(p.gap < 1e-4);
}

TEST_CASE("expansion round trip inside the span") {
  const MetricGraph g = fixtures::graph("star3.json");
  const BoundaryCondition bc = fixtures::bc(g, "bc_star.json");
  const Mesh mesh = Mesh::uniform(g, 0.01);
  const DiscreteSpectralRep rep = spectral_rep(g, bc, roots_upto(g, bc, 10.0), mesh);
  CHECK(rep.layers() == 2);
  CHECK(rep.level_set(2).size() == 2);
  GridFunction f = rep.functions[1][0] + Complex(0, 2) * rep.functions[1][1] - rep.functions[3][0];
  const Coefficients c = fourier(rep, f);
  CHECK(std::abs(c[1][1] - Complex(0, 2)) < 1e-10);
  CHECK(norm(reconstruct(rep, c) - f) < 1e-10);
  CHECK(parseval(g, rep, f).gap < 1e-10);
}

TEST_CASE("FEM spectral representation groups degenerate eigenvalues") {
  const MetricGraph g = fixtures::graph("star3.json");
  const BoundaryCondition bc = fixtures::bc(g, "bc_star.json");
  const FormAssembly fa = assemble(g, bc, 0.02);
  const DiscreteSpectralRep rep = spectral_rep(fa, eigensystem(fa, 6));
  CHECK(rep.multiplicity(1) == 2);
  CHECK(rep.exact.empty());
}

TEST_CASE("standard battery respects the vertex conditions") {
  for (auto [graph, bcname] : {std::pair{"star3.json", "bc_star.json"}, std::pair{"loop_multi.json", "bc_kirchhoff.json"},
                               std::pair{"interval_pi.json", "bc_robin.json"},
                               std::pair{"star3_unit.json", "bc_delta_s10_star.json"}}) {
    const MetricGraph g = fixtures::graph(graph);
    const BoundaryCondition bc = fixtures::bc(g, bcname);
    const auto tests = standard_tests(g, bc);
    std::size_t vertex_tests = 0;
    for (const auto& t : tests) {
      CHECK(test_condition_residual(g, bc, t) <= 1e-9);
      vertex_tests += t.straddles_vertex;
    }
    std::size_t slots = 0;
    for (std::size_t v = 0; v < g.num_vertices(); ++v) slots += g.degree(v);
    CHECK(vertex_tests == slots);
    CHECK(tests.size() == slots + 3 * g.num_edges());
  }
}

TEST_CASE("exact eigenfunctions are generalized eigenfunctions") {
  const MetricGraph g = fixtures::graph("loop_multi.json");
  const BoundaryCondition bc = fixtures::bc(g, "bc_kirchhoff.json");
  const auto tests = standard_tests(g, bc);
  for (const auto& r : roots_upto(g, bc, 30.0)) {
    for (const auto& phi : eigenfunctions(g, bc, r.lambda)) {
      CHECK(genef_residual(g, bc, phi, r.lambda, tests).worst <= 1e-6);
      // Wrong energy is caught.
      CHECK(genef_residual(g, bc, phi, r.lambda + 0.1, tests).worst > 1e-3);
    }
  }
}

TEST_CASE("a kinked function is rejected") {
  const MetricGraph g = fixtures::graph("interval_pi.json");
  const BoundaryCondition bc = fixtures::bc(g, "bc_dirichlet.json");
  const Mesh mesh = Mesh::uniform(g, 0.005);
  const GridFunction kink =
      GridFunction::sample(mesh, [](std::size_t, double t) { return Complex(std::abs(std::sin(2 * t)), 0.0); });
  const GridFunction smooth =
      GridFunction::sample(mesh, [](std::size_t, double t) { return Complex(std::sin(2 * t), 0.0); });
  const auto tests = standard_tests(g, bc);
  const double n = norm(kink);
  CHECK(genef_residual(g, bc, (1.0 / n) * kink, 4.0, tests).worst > 1e-2);
  CHECK(genef_residual(g, bc, (1.0 / norm(smooth)) * smooth, 4.0, tests).worst < 1e-6);
  CHECK(fit_lambda(g, smooth, tests) == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("pointwise residual integrates cell by cell") {
  const MetricGraph g = fixtures::graph("interval_pi.json");
  const BoundaryCondition bc = fixtures::bc(g, "bc_dirichlet.json");
  const Mesh cells = Mesh::uniform(g, 0.1);
  const auto tests = standard_tests(g, bc);
  auto phi = [](std::size_t, double t) { return Complex(std::sin(3 * t) * std::sqrt(2 / pi), 0.0); };
  CHECK(genef_residual(g, bc, phi, 9.0, tests, cells).worst < 1e-10);
  // V = 1 shifts the energy.
  auto one = [](std::size_t, double) { return 1.0; };
  CHECK(genef_residual(g, bc, phi, 10.0, tests, cells, one).worst < 1e-10);
}
