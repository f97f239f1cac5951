#include "qgraph/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace qgraph {

namespace {

using Gauss = boost::math::quadrature::gauss<double, 20>;

// Integral of a complex function over [a, b] with `panels` Gauss panels.
Complex integrate(const std::function<Complex(double)>& f, double a, double b, std::size_t panels) {
  Complex total = 0.0;
  const double w = (b - a) / static_cast<double>(panels);
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + w * static_cast<double>(p), hi = lo + w;
    const double re = Gauss::integrate([&](double t) { return f(t).real(); }, lo, hi);
    const double im = Gauss::integrate([&](double t) { return f(t).imag(); }, lo, hi);
    total += Complex(re, im);
  }
  return total;
}

std::size_t panels_for(double lambda, double length) {
  return static_cast<std::size_t>(std::ceil(std::sqrt(std::abs(lambda)) * length / 2.0)) + 2;
}

}  // namespace

WeightFunction WeightFunction::constant(double value) {
  if (!(value > 0.0) || !std::isfinite(value)) throw InputError("constant weight must be positive");
  WeightFunction w;
  w.constant_ = value;
  return w;
}

WeightFunction WeightFunction::ball(const MetricGraph& g, const Point& x0, double eps) {
  if (!g.connected()) throw InputError("the ball weight needs a connected graph");
  if (!(eps > 0.0)) throw InputError("weight exponent eps must be positive");
  g.check_point(x0);
  WeightFunction w;
  w.eps_ = eps;
  w.graph_ = std::make_shared<const MetricGraph>(g);
  w.field_ = std::make_shared<const DistanceField>(*w.graph_, x0);
  return w;
}

double WeightFunction::operator()(std::size_t e, double t) const {
  if (!field_) return constant_;
  const double d = field_->to_edge_point(e, t);
  return std::max(1.0, std::pow(field_->ball_volume(d + 1.0), 1.0 + eps_));
}

double WeightFunction::at(const Point& p) const {
  if (!field_) return constant_;
  return std::max(1.0, std::pow(field_->ball_volume(field_->to(p) + 1.0), 1.0 + eps_));
}

double WeightFunction::sup_inverse() const {
  if (!field_) return 1.0 / constant_;
  return 1.0 / at(field_->origin());
}

double WeightFunction::integral_inverse_sq(const MetricGraph& g, double tol) const {
  if (!field_) return g.total_length() / (constant_ * constant_);
  const MetricGraph& G = *graph_;
  const Point& x0 = field_->origin();

  // Radii at which r -> m(B_r) may kink.
  std::vector<double> radii;
  for (std::size_t v = 0; v < G.num_vertices(); ++v) radii.push_back(field_->to_vertex(v));
  for (std::size_t e = 0; e < G.num_edges(); ++e) {
    const Edge& edge = G.edge(e);
    const double l = G.numeric_length(e);
    const double a = field_->to_vertex(edge.init);
    const double b = edge.term ? field_->to_vertex(*edge.term) : kInfinity;
    if (edge.term) radii.push_back((a + b + l) / 2.0);
    if (!x0.is_vertex() && x0.index == e) {
      const double s = x0.t;
      radii.insert(radii.end(), {s, l - s, (s + a) / 2.0});
      if (edge.term) radii.push_back((l - s + b) / 2.0);
    }
  }

  double total = 0.0;
  for (std::size_t e = 0; e < G.num_edges(); ++e) {
    const Edge& edge = G.edge(e);
    if (!edge.term && !edge.truncation) throw UnsupportedError("integral over an untruncated infinite edge");
    const double l = G.numeric_length(e);
    const double a = field_->to_vertex(edge.init);
    const double b = edge.term ? field_->to_vertex(*edge.term) : kInfinity;
    std::vector<double> cuts{0.0, l};
    auto add = [&](double t) {
      if (t > 0.0 && t < l && std::isfinite(t)) cuts.push_back(t);
    };
    add((b + l - a) / 2.0);
    const bool origin_edge = !x0.is_vertex() && x0.index == e;
    if (origin_edge) add(x0.t);
    for (double R : radii) {
      const double r = R - 1.0;
      add(r - a);
      add(l - (r - b));
      if (origin_edge) {
        add(x0.t - r);
        add(x0.t + r);
      }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    auto integrand = [&](double t) {
      const double w = (*this)(e, t);
      return 1.0 / (w * w);
    };
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      if (cuts[i + 1] - cuts[i] <= 0.0) continue;
      total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, cuts[i], cuts[i + 1], 20, tol);
    }
  }
  return total;
}

GridFunction WeightFunction::sample(const Mesh& mesh) const {
  return GridFunction::sample(mesh, [this](std::size_t e, double t) { return Complex((*this)(e, t), 0.0); });
}

std::size_t DiscreteSpectralRep::num_modes() const {
  std::size_t n = 0;
  for (const auto& f : functions) n += f.size();
  return n;
}

std::size_t DiscreteSpectralRep::layers() const {
  std::size_t n = 0;
  for (const auto& f : functions) n = std::max(n, f.size());
  return n;
}

std::vector<std::size_t> DiscreteSpectralRep::level_set(std::size_t j) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < functions.size(); ++i) {
    if (functions[i].size() >= j) out.push_back(i);
  }
  return out;
}

DiscreteSpectralRep spectral_rep(const MetricGraph& g, const BoundaryCondition& bc,
                                 const std::vector<SecularRoot>& roots, const Mesh& mesh, double tol) {
  DiscreteSpectralRep rep;
  rep.mesh = mesh;
  for (const auto& root : roots) {
    auto sols = eigenfunctions(g, bc, root.lambda, tol);
    std::vector<GridFunction> sampled;
    for (const auto& s : sols) sampled.push_back(s.sample(mesh));
    rep.eigenvalues.push_back(root.lambda);
    rep.functions.push_back(std::move(sampled));
    rep.exact.push_back(std::move(sols));
  }
  return rep;
}

DiscreteSpectralRep spectral_rep(const FormAssembly& fa, const DiscreteEigensystem& es, double group_tol) {
  DiscreteSpectralRep rep;
  rep.mesh = fa.mesh;
  for (Eigen::Index k = 0; k < es.values.size(); ++k) {
    const double lam = es.values(k);
    GridFunction f = fa.to_grid(es.vectors.col(k));
    if (!rep.eigenvalues.empty() &&
        std::abs(lam - rep.eigenvalues.back()) <= group_tol * std::max(1.0, std::abs(lam))) {
      rep.functions.back().push_back(std::move(f));
    } else {
      rep.eigenvalues.push_back(lam);
      rep.functions.push_back({std::move(f)});
    }
  }
  return rep;
}

HsReport hs_norm(const MetricGraph& g, const DiscreteSpectralRep& rep, const WeightFunction& w, double C) {
  HsReport r;
  r.C = C;
  if (rep.eigenvalues.empty()) throw InputError("no modes to sum");
  if (!(C + rep.eigenvalues.front() > 0.0)) throw InputError("C + lambda_min must be positive");
  const GridFunction winv_sq = [&] {
    GridFunction ws = w.sample(rep.mesh);
    for (std::size_t e = 0; e < rep.mesh.num_edges(); ++e) {
      ws.on_edge(e) = ws.on_edge(e).cwiseInverse().cwiseAbs2().cast<Complex>();
    }
    return ws;
  }();
  for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i) {
    const double lam = rep.eigenvalues[i];
    for (std::size_t j = 0; j < rep.functions[i].size(); ++j) {
      double n2 = 0.0;
      if (w.is_constant() && !rep.exact.empty()) {
        const double s = w.sup_inverse();
        n2 = s * s * inner(rep.exact[i][j], rep.exact[i][j]).real();
      } else {
        const GridFunction& phi = rep.functions[i][j];
        n2 = inner(phi.times(winv_sq), phi).real();
      }
      r.weighted_norm_sq.push_back(n2);
      r.partial += n2 / (C + lam);
      ++r.modes;
    }
  }

  const double Lambda = rep.eigenvalues.back();
  const double L = g.total_length();
  const double E = static_cast<double>(g.num_edges());
  const double N = static_cast<double>(r.modes);
  if (C > 0.0 && Lambda > 0.0 && std::isfinite(L)) {
    const double sup2 = w.sup_inverse() * w.sup_inverse();
    const double gL = 1.0 / (C + Lambda);
    const double sqrtC = std::sqrt(C);
    const double integral = L / (std::numbers::pi * sqrtC) * (std::numbers::pi / 2.0 - std::atan(std::sqrt(Lambda / C)));
    r.tail_bound = sup2 * (gL * (2.0 * E + L * std::sqrt(Lambda) / std::numbers::pi - N) + integral);

    const std::size_t half = r.weighted_norm_sq.size() / 2;
    double avg = 0.0;
    for (std::size_t k = half; k < r.weighted_norm_sq.size(); ++k) avg += r.weighted_norm_sq[k];
    avg /= static_cast<double>(r.weighted_norm_sq.size() - half);
    const double n_star = L * std::sqrt(Lambda) / std::numbers::pi;
    r.tail_estimate = avg * L / (std::numbers::pi * sqrtC) *
                      (std::numbers::pi / 2.0 - std::atan(std::numbers::pi * (n_star + 0.5) / (L * sqrtC)));
  } else {
    r.tail_bound = kInfinity;
    r.tail_estimate = kInfinity;
  }
  r.value = r.partial + r.tail_estimate;
  return r;
}

double kernel_hs_quadrature(const DiscreteSpectralRep& rep, const WeightFunction& w, double C) {
  const Mesh& mesh = rep.mesh;
  const auto nodes = static_cast<Eigen::Index>(mesh.total_nodes());
  const auto modes = static_cast<Eigen::Index>(rep.num_modes());
  RVector q(nodes), winv(nodes);
  CMatrix Phi(nodes, modes);
  Eigen::Index row = 0;
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    const RVector qe = quadrature_weights(mesh.intervals(e), mesh.step(e), Quadrature::Simpson);
    for (std::size_t k = 0; k < mesh.nodes(e); ++k, ++row) {
      q(row) = qe(static_cast<Eigen::Index>(k));
      winv(row) = 1.0 / w(e, mesh.node(e, k));
    }
  }
  Eigen::Index col = 0;
  for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i) {
    // Phi * Phi^* carries gamma once.
    const double root_gamma = std::pow(C + rep.eigenvalues[i], -0.25);
    for (const auto& phi : rep.functions[i]) {
      row = 0;
      for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        Phi.block(row, col, phi.on_edge(e).size(), 1) = root_gamma * phi.on_edge(e);
        row += phi.on_edge(e).size();
      }
      ++col;
    }
  }
  const CMatrix K = winv.asDiagonal() * Phi * Phi.adjoint();
  double total = 0.0;
  for (Eigen::Index b = 0; b < nodes; ++b) {
    for (Eigen::Index a = 0; a < nodes; ++a) total += q(a) * q(b) * std::norm(K(a, b));
  }
  return total;
}

Coefficients fourier(const DiscreteSpectralRep& rep, const GridFunction& f) {
  if (!(f.mesh() == rep.mesh)) throw InputError("function and eigenfunctions are sampled on different meshes");
  Coefficients c;
  for (const auto& level : rep.functions) {
    std::vector<Complex> row;
    for (const auto& phi : level) row.push_back(inner(f, phi));
    c.push_back(std::move(row));
  }
  return c;
}

GridFunction reconstruct(const DiscreteSpectralRep& rep, const Coefficients& c) {
  if (c.size() != rep.functions.size()) throw InputError("coefficient array does not match the spectrum");
  GridFunction out(rep.mesh);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i].size() != rep.functions[i].size()) throw InputError("coefficient array does not match the spectrum");
    for (std::size_t j = 0; j < c[i].size(); ++j) out += c[i][j] * rep.functions[i][j];
  }
  return out;
}

ParsevalReport parseval(const MetricGraph& g, const DiscreteSpectralRep& rep, const GridFunction& f) {
  ParsevalReport r;
  const double nf = norm(f);
  r.norm_sq = nf * nf;
  const Coefficients c = fourier(rep, f);
  std::vector<std::pair<double, double>> decay;
  for (std::size_t i = 0; i < c.size(); ++i) {
    double level = 0.0;
    for (const Complex& z : c[i]) level += std::norm(z);
    r.coeff_sq += level;
    if (rep.eigenvalues[i] > 0.0 && level > 1e-30 * std::max(r.norm_sq, 1e-300)) {
      decay.emplace_back(std::log(rep.eigenvalues[i]), std::log(level));
    }
  }
  r.gap = std::abs(r.norm_sq - r.coeff_sq);
  r.relative_gap = r.norm_sq > 0.0 ? r.gap / r.norm_sq : 0.0;

  // Least-squares fit |c|^2 ~ A lambda^b over the upper half of the modes,
  // continued with the Weyl density L / (2 pi sqrt(lambda)).
  const std::size_t start = decay.size() / 2;
  if (decay.size() - start >= 2 && std::isfinite(g.total_length())) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(decay.size() - start);
    for (std::size_t k = start; k < decay.size(); ++k) {
      sx += decay[k].first;
      sy += decay[k].second;
      sxx += decay[k].first * decay[k].first;
      sxy += decay[k].first * decay[k].second;
    }
    const double denom = n * sxx - sx * sx;
    if (denom > 0.0) {
      const double b = (n * sxy - sx * sy) / denom;
      const double logA = (sy - b * sx) / n;
      if (b < -0.5) {
        const double Lambda = rep.eigenvalues.back();
        r.tail_estimate = std::exp(logA) * g.total_length() / (2.0 * std::numbers::pi) * std::pow(Lambda, b + 0.5) / (-b - 0.5);
      }
    }
  }
  return r;
}

std::array<Complex, 3> TestFunction::at(std::size_t e, double t) const {
  std::array<Complex, 3> out{};
  for (const auto& p : pieces) {
    if (p.edge != e || t < p.t0 || t > p.t1) continue;
    const auto v = p.eval(t);
    for (int i = 0; i < 3; ++i) out[static_cast<std::size_t>(i)] += v[static_cast<std::size_t>(i)];
  }
  return out;
}

namespace {

TestFunction bump_test(const MetricGraph& g, std::size_t e, double centre, double radius, const std::string& label) {
  const double l = g.edge(e).length;
  const double m = centre * l, r = radius * l;
  TestFunction f;
  f.label = label;
  f.pieces.push_back({e, m - r, m + r, [m, r](double t) -> std::array<Complex, 3> {
                        const double s = (t - m) / r;
                        if (std::abs(s) >= 1.0) return {0.0, 0.0, 0.0};
                        const double q = 1.0 - s * s;
                        return {q * q * q * q, -8.0 * s * q * q * q / r,
                                (-8.0 * q * q * q + 48.0 * s * s * q * q) / (r * r)};
                      }});
  return f;
}

TestFunction star_test(const MetricGraph& g, std::size_t v, const CVector& a, const CVector& b, const std::string& label) {
  TestFunction f;
  f.label = label;
  f.straddles_vertex = true;
  const auto& star = g.star(v);
  for (std::size_t i = 0; i < star.degree(); ++i) {
    const EdgeEnd end = star.ends[i];
    const double l = g.edge(end.edge).length;
    const double rho = 0.45 * std::min(g.u(), l);
    const Complex ai = a(static_cast<Eigen::Index>(i)), bi = b(static_cast<Eigen::Index>(i));
    const bool init = end.end == End::Init;
    const double t0 = init ? 0.0 : l - rho, t1 = init ? rho : l;
    f.pieces.push_back({end.edge, t0, t1, [=](double t) -> std::array<Complex, 3> {
                          const double tau = init ? t : l - t;
                          if (tau >= rho) return {0.0, 0.0, 0.0};
                          const double s = tau / rho;
                          const double chi = 1.0 - smoothstep(s);
                          const double d1 = -smoothstep_d1(s) / rho;
                          const double d2 = -smoothstep_d2(s) / (rho * rho);
                          const Complex p = ai + bi * tau;
                          const Complex f0 = p * chi;
                          const Complex f1 = bi * chi + p * d1;
                          const Complex f2 = 2.0 * bi * d1 + p * d2;
                          return {f0, init ? f1 : -f1, f2};
                        }});
  }
  return f;
}

double norm_sq(const TestFunction& f) {
  double total = 0.0;
  for (const auto& p : f.pieces) {
    total += integrate([&](double t) { return Complex(std::norm(p.eval(t)[0]), 0.0); }, p.t0, p.t1, 2).real();
  }
  return total;
}

void admit(const MetricGraph& g, const BoundaryCondition& bc, const std::vector<TestFunction>& tests) {
  for (const auto& f : tests) {
    const double r = test_condition_residual(g, bc, f);
    if (r > 1e-9) {
      throw InputError("test function '" + f.label + "' violates the vertex conditions (residual " + std::to_string(r) + ")");
    }
  }
}

}  // namespace

std::vector<TestFunction> standard_tests(const MetricGraph& g, const BoundaryCondition& bc) {
  if (!g.compact()) throw UnsupportedError("test battery needs a compact graph");
  std::vector<TestFunction> out;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const std::string id = "edge:" + g.edge(e).id;
    out.push_back(bump_test(g, e, 0.5, 0.45, id));
    out.push_back(bump_test(g, e, 0.25, 0.2, id + "@1/4"));
    out.push_back(bump_test(g, e, 0.75, 0.2, id + "@3/4"));
  }
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    const auto d = static_cast<Eigen::Index>(g.degree(v));
    const CMatrix K = kernel_basis(bc.at[v].P);
    const CMatrix Rg = range_basis(bc.at[v].P);
    std::size_t k = 0;
    for (Eigen::Index j = 0; j < K.cols(); ++j) {
      const CVector a = K.col(j);
      const CVector b = -bc.at[v].L * a;
      out.push_back(star_test(g, v, a, b, "vertex:" + g.vertex_id(v) + "#" + std::to_string(k++)));
    }
    for (Eigen::Index j = 0; j < Rg.cols(); ++j) {
      out.push_back(star_test(g, v, CVector::Zero(d), Rg.col(j), "vertex:" + g.vertex_id(v) + "#" + std::to_string(k++)));
    }
  }
  return out;
}

double test_condition_residual(const MetricGraph& g, const BoundaryCondition& bc, const TestFunction& f) {
  double worst = 0.0;
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    const auto d = static_cast<Eigen::Index>(g.degree(v));
    CVector val(d), der(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const EdgeEnd end = g.star(v).ends[static_cast<std::size_t>(i)];
      const double l = g.edge(end.edge).length;
      if (end.end == End::Init) {
        const auto x = f.at(end.edge, 0.0);
        val(i) = x[0];
        der(i) = x[1];
      } else {
        const auto x = f.at(end.edge, l);
        val(i) = x[0];
        der(i) = -x[1];
      }
    }
    const auto& c = bc.at[v];
    const CMatrix Q = CMatrix::Identity(d, d) - c.P;
    worst = std::max(worst, (c.P * val).norm() + (Q * (c.L * val + der)).norm());
  }
  return worst;
}

namespace {

void record(GenefReport& r, const TestFunction& f, double res) {
  r.residuals.push_back(res);
  if (f.straddles_vertex) {
    r.worst_vertex = std::max(r.worst_vertex, res);
  } else {
    r.worst_interior = std::max(r.worst_interior, res);
  }
  if (res > r.worst || r.worst_label.empty()) {
    r.worst = std::max(r.worst, res);
    r.worst_label = f.label;
  }
}

}  // namespace

GenefReport genef_residual(const MetricGraph& g, const BoundaryCondition& bc, const SecularSolution& phi, double lambda,
                           const std::vector<TestFunction>& tests, const RealEvaluator& V) {
  admit(g, bc, tests);
  GenefReport r;
  for (const auto& f : tests) {
    Complex total = 0.0;
    for (const auto& p : f.pieces) {
      auto integrand = [&](double t) {
        const auto x = p.eval(t);
        Complex hf = -x[2] - lambda * x[0];
        if (V) hf += V(p.edge, t) * x[0];
        return hf * std::conj(phi.value(p.edge, t));
      };
      total += integrate(integrand, p.t0, p.t1, panels_for(lambda, p.t1 - p.t0));
    }
    record(r, f, std::abs(total) / std::sqrt(norm_sq(f)));
  }
  return r;
}

GenefReport genef_residual(const MetricGraph& g, const BoundaryCondition& bc, const EdgeEvaluator& phi, double lambda,
                           const std::vector<TestFunction>& tests, const Mesh& cells, const RealEvaluator& V) {
  admit(g, bc, tests);
  if (cells.num_edges() != g.num_edges()) throw InputError("cell mesh does not match the graph");
  using Cell = boost::math::quadrature::gauss<double, 8>;
  GenefReport r;
  for (const auto& f : tests) {
    Complex total = 0.0;
    for (const auto& p : f.pieces) {
      const double h = cells.step(p.edge);
      const auto first = static_cast<std::size_t>(std::floor(p.t0 / h));
      for (std::size_t k = first; k < cells.intervals(p.edge); ++k) {
        const double lo = std::max(p.t0, cells.node(p.edge, k)), hi = std::min(p.t1, cells.node(p.edge, k + 1));
        if (lo >= p.t1) break;
        if (hi <= lo) continue;
        const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
        for (std::size_t i = 0; i < Cell::abscissa().size(); ++i) {
          for (double sign : {-1.0, 1.0}) {
            if (i == 0 && sign > 0.0 && Cell::abscissa()[0] == 0.0) continue;
            const double t = mid + sign * half * Cell::abscissa()[i];
            const auto x = p.eval(t);
            Complex hf = -x[2] - lambda * x[0];
            if (V) hf += V(p.edge, t) * x[0];
            total += half * Cell::weights()[i] * hf * std::conj(phi(p.edge, t));
          }
        }
      }
    }
    record(r, f, std::abs(total) / std::sqrt(norm_sq(f)));
  }
  return r;
}

namespace {

// (<-f'' + V f, phi>, <f, phi>) with phi the piecewise-linear interpolant of
// the samples, integrated cell by cell over the clipped test support.
std::pair<Complex, Complex> weak_terms(const GridFunction& phi, const TestFunction& f, const RealEvaluator& V) {
  using Cell = boost::math::quadrature::gauss<double, 8>;
  const Mesh& mesh = phi.mesh();
  Complex hf_phi = 0.0, f_phi = 0.0;
  for (const auto& p : f.pieces) {
    const CVector& y = phi.on_edge(p.edge);
    const double h = mesh.step(p.edge);
    const auto first = static_cast<std::size_t>(std::max(0.0, std::floor(p.t0 / h)));
    for (std::size_t k = first; k < mesh.intervals(p.edge); ++k) {
      const double a = mesh.node(p.edge, k), b = mesh.node(p.edge, k + 1);
      const double lo = std::max(p.t0, a), hi = std::min(p.t1, b);
      if (lo >= p.t1) break;
      if (hi <= lo) continue;
      const auto K = static_cast<Eigen::Index>(k);
      const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
      for (std::size_t i = 0; i < Cell::abscissa().size(); ++i) {
        for (double sign : {-1.0, 1.0}) {
          if (i == 0 && sign > 0.0 && Cell::abscissa()[0] == 0.0) continue;
          const double t = mid + sign * half * Cell::abscissa()[i];
          const double theta = (t - a) / (b - a);
          const Complex c = std::conj((1.0 - theta) * y(K) + theta * y(K + 1));
          const auto x = p.eval(t);
          Complex hf = -x[2];
          if (V) hf += V(p.edge, t) * x[0];
          const double w = half * Cell::weights()[i];
          hf_phi += w * hf * c;
          f_phi += w * x[0] * c;
        }
      }
    }
  }
  return {hf_phi, f_phi};
}

}  // namespace

GenefReport genef_residual(const MetricGraph& g, const BoundaryCondition& bc, const GridFunction& phi, double lambda,
                           const std::vector<TestFunction>& tests, const RealEvaluator& V) {
  admit(g, bc, tests);
  if (phi.mesh().num_edges() != g.num_edges()) throw InputError("function does not match the graph");
  GenefReport r;
  for (const auto& f : tests) {
    const auto [a, b] = weak_terms(phi, f, V);
    record(r, f, std::abs(a - lambda * b) / std::sqrt(norm_sq(f)));
  }
  return r;
}

double fit_lambda(const MetricGraph& g, const GridFunction& phi, const std::vector<TestFunction>& tests,
                  const RealEvaluator& V) {
  if (phi.mesh().num_edges() != g.num_edges()) throw InputError("function does not match the graph");
  double num = 0.0, den = 0.0;
  for (const auto& f : tests) {
    if (f.straddles_vertex) continue;
    const auto [a, b] = weak_terms(phi, f, V);
    num += (std::conj(b) * a).real();
    den += std::norm(b);
  }
  if (!(den > 0.0)) throw InputError("cannot infer lambda: the function is orthogonal to every interior test");
  return num / den;
}

}  // namespace qgraph
