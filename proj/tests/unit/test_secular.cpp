#include <cmath>
#include <numbers>

#include "doctest.h"
#include "fixtures.hpp"
#include "qgraph/fem.hpp"
#include "qgraph/secular.hpp"

using namespace qgraph;
using std::numbers::pi;

namespace {

std::vector<double> expand(const std::vector<SecularRoot>& roots) {
  std::vector<double> out;
  for (const auto& r : roots) out.insert(out.end(), r.multiplicity, r.lambda);
  return out;
}

ScanOptions upto(double lambda_max) {
  ScanOptions o;
  o.lambda_max = lambda_max;
  return o;
}

}  // namespace

TEST_CASE("fundamental system") {
  const auto p = fundamental(4.0, 1.0);
  CHECK(p.c == doctest::Approx(std::cos(2.0)));
  CHECK(p.s == doctest::Approx(std::sin(2.0) / 2.0));
  CHECK(p.dc == doctest::Approx(-2.0 * std::sin(2.0)));
  CHECK(p.ds == doctest::Approx(std::cos(2.0)));
  const auto n = fundamental(-9.0, 0.5);
  CHECK(n.c == doctest::Approx(std::cosh(1.5)));
  CHECK(n.s == doctest::Approx(std::sinh(1.5) / 3.0));
  const auto z = fundamental(0.0, 2.0);
  CHECK(z.c == 1.0);
  CHECK(z.s == 2.0);
  for (double lam : {-50.0, -1e-7, 0.0, 1e-7, 3.0, 400.0}) {
    for (double t : {0.01, 0.7, 3.0}) {
      if (std::abs(lam) * t * t > 100.0) continue;  // cosh^2 - sinh^2 cancels
      CHECK(fundamental(lam, t).wronskian() == doctest::Approx(1.0).epsilon(1e-10));
    }
  }
  // Series branch and closed form meet continuously.
  for (double lam : {0.99e-4, -0.99e-4}) {
    const double k = std::sqrt(std::abs(lam));
    const double s = lam > 0 ? std::sin(k) / k : std::sinh(k) / k;
    CHECK(fundamental(lam, 1.0).s == doctest::Approx(s).epsilon(1e-14));
  }
}

TEST_CASE("Dirichlet interval: lambda = n^2") {
  const MetricGraph g = fixtures::graph("interval_pi.json");
  const auto roots = eigenvalues_scan(g, fixtures::bc(g, "bc_dirichlet.json"), upto(40.0));
  REQUIRE(roots.size() == 6);
  for (int n = 1; n <= 6; ++n) {
    CHECK(std::abs(roots[n - 1].lambda - n * n) <= 1e-8);
    CHECK(roots[n - 1].multiplicity == 1);
  }
}

TEST_CASE("Neumann interval includes zero") {
  const MetricGraph g = fixtures::graph("interval_pi.json");
  const auto roots = eigenvalues_scan(g, fixtures::bc(g, "bc_neumann.json"), upto(10.0));
  REQUIRE(roots.size() == 4);
  CHECK(std::abs(roots[0].lambda) <= 1e-8);
  for (int n = 1; n <= 3; ++n) CHECK(std::abs(roots[n].lambda - n * n) <= 1e-8);
}

TEST_CASE("Robin interval satisfies tan(k pi) = 2k / (k^2 - 1)") {
  const MetricGraph g = fixtures::graph("interval_pi.json");
  const auto roots = eigenvalues_scan(g, fixtures::bc(g, "bc_robin.json"), upto(30.0));
  REQUIRE(roots.size() == 6);
  for (const auto& r : roots) {
    const double k = std::sqrt(r.lambda);
    // Same equation, free of poles: (k^2 - 1) sin(k pi) - 2k cos(k pi) = 0.
    CHECK(std::abs((k * k - 1) * std::sin(k * pi) - 2 * k * std::cos(k * pi)) < 1e-7 * (1 + k * k));
  }
}

TEST_CASE("three-star: cos(2k) = 0 twice, sin(2k) = 0 once") {
  const MetricGraph g = fixtures::graph("star3.json");
  const auto roots = eigenvalues_scan(g, fixtures::bc(g, "bc_star.json"), upto(16.0));
  std::vector<std::pair<double, std::size_t>> want;
  for (int n = 0; n < 6; ++n) {
    const double k = n * pi / 4;
    if (k * k > 16.0) break;
    want.emplace_back(k * k, n % 2 == 1 ? 2 : 1);
  }
  REQUIRE(roots.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(std::abs(roots[i].lambda - want[i].first) <= 1e-8);
    CHECK(roots[i].multiplicity == want[i].second);
  }
}

TEST_CASE("bound state of a strong attractive delta") {
  const MetricGraph g = fixtures::graph("interval_unit.json");
  const BoundaryCondition bc = fixtures::bc(g, "bc_delta_s10_end.json");
  const auto roots = eigenvalues_scan(g, bc, upto(5.0));
  REQUIRE_FALSE(roots.empty());
  // f = sinh(k (1 - t)) with k coth k = 10.
  const double k = std::sqrt(-roots[0].lambda);
  CHECK(k / std::tanh(k) == doctest::Approx(10.0).epsilon(1e-9));
  const auto phi = eigenfunctions(g, bc, roots[0].lambda);
  REQUIRE(phi.size() == 1);
  CHECK(max_condition_residual(g, bc, traces(g, phi[0])) <= 1e-8);
}

TEST_CASE("secular and FEM spectra agree on the multigraph") {
  const MetricGraph g = fixtures::graph("loop_multi.json");
  const BoundaryCondition bc = fixtures::bc(g, "bc_kirchhoff.json");
  const DiscreteEigensystem es = eigensystem(assemble(g, bc, 0.01), 10);
  const auto exact = expand(eigenvalues_scan(g, bc, upto(es.values(9) + 1.0)));
  REQUIRE(exact.size() >= 10);
  for (int k = 0; k < 10; ++k) {
    CHECK(std::abs(es.values(k) - exact[k]) <= 10 * es.h_max * es.h_max * std::max(1.0, exact[k]));
  }
}

TEST_CASE("eigenfunctions are orthonormal and satisfy the vertex conditions") {
  for (auto [graph, bcname] : {std::pair{"star3.json", "bc_star.json"}, std::pair{"loop_multi.json", "bc_kirchhoff.json"},
                               std::pair{"interval_pi.json", "bc_robin.json"}}) {
    const MetricGraph g = fixtures::graph(graph);
    const BoundaryCondition bc = fixtures::bc(g, bcname);
    for (const auto& r : eigenvalues_scan(g, bc, upto(25.0))) {
      const auto phi = eigenfunctions(g, bc, r.lambda);
      REQUIRE(phi.size() == r.multiplicity);
      for (std::size_t i = 0; i < phi.size(); ++i) {
        CHECK(max_condition_residual(g, bc, traces(g, phi[i])) <= 1e-8);
        for (std::size_t j = 0; j < phi.size(); ++j) {
          CHECK(std::abs(inner(phi[i], phi[j]) - (i == j ? 1.0 : 0.0)) < 1e-10);
        }
      }
    }
  }
}

TEST_CASE("eigenfunctions match closed forms") {
  const MetricGraph g = fixtures::graph("interval_pi.json");
  const auto phi = eigenfunctions(g, fixtures::bc(g, "bc_dirichlet.json"), 9.0);
  REQUIRE(phi.size() == 1);
  const double scale = std::sqrt(2 / pi);
  for (double t : {0.3, 1.0, 2.2}) {
    CHECK(std::abs(std::abs(phi[0].value(0, t)) - scale * std::abs(std::sin(3 * t))) < 1e-12);
    CHECK(std::abs(std::abs(phi[0].derivative(0, t)) - 3 * scale * std::abs(std::cos(3 * t))) < 1e-11);
  }
  CHECK_THROWS_AS(eigenfunctions(g, fixtures::bc(g, "bc_dirichlet.json"), 8.5), InputError);
}

TEST_CASE("secular matrix is singular exactly at eigenvalues") {
  const MetricGraph g = fixtures::graph("star3.json");
  const BoundaryCondition bc = fixtures::bc(g, "bc_star.json");
  CHECK(relative_sigma_min(g, bc, pi * pi / 16) < 1e-12);
  CHECK(relative_sigma_min(g, bc, 1.0) > 1e-3);
  const SecularMatrix m = secular_matrix(g, bc, 1.0);
  CHECK(m.M.rows() == 6);
  CHECK(m.M.cols() == 6);
}

TEST_CASE("scan rejects non-compact graphs") {
  const MetricGraph g = fixtures::graph("half_line.json");
  CHECK_THROWS_AS(eigenvalues_scan(g, fixtures::bc(g, "bc_dirichlet.json"), upto(10.0)), UnsupportedError);
}

TEST_CASE("roots CSV") {
  std::vector<SecularRoot> roots{{1.0, 1, 0.0}, {2.5, 2, 0.0}};
  const std::string csv = roots_csv(roots);
  CHECK(csv.rfind("lambda,multiplicity", 0) == 0);
  CHECK(csv.find("2.5,2") != std::string::npos);
}
