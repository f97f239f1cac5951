#include "qgraph/secular.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <boost/math/quadrature/gauss.hpp>

namespace qgraph {

FundamentalValues fundamental(double lambda, double t) {
  FundamentalValues f;
  const double x = lambda * t * t;
  if (std::abs(x) < 1e-4) {
    f.c = 1.0 + x * (-1.0 / 2 + x * (1.0 / 24 + x * (-1.0 / 720 + x / 40320)));
    f.s = t * (1.0 + x * (-1.0 / 6 + x * (1.0 / 120 + x * (-1.0 / 5040 + x / 362880))));
  } else if (lambda > 0.0) {
    const double k = std::sqrt(lambda);
    f.c = std::cos(k * t);
    f.s = std::sin(k * t) / k;
  } else {
    const double k = std::sqrt(-lambda);
    f.c = std::cosh(k * t);
    f.s = std::sinh(k * t) / k;
  }
  f.dc = -lambda * f.s;
  f.ds = f.c;
  return f;
}

namespace {

// sinh(a) / sinh(b) and cosh(a) / sinh(b) for 0 <= a <= b, b > 0, without overflow.
double sinh_ratio(double a, double b) { return std::exp(a - b) * std::expm1(-2.0 * a) / std::expm1(-2.0 * b); }
double cosh_ratio(double a, double b) { return -std::exp(a - b) * (1.0 + std::exp(-2.0 * a)) / std::expm1(-2.0 * b); }

// Boundary data of one edge in a working basis (a1, a2). Rows: f(0), inward
// f' at 0, f(l), inward f' at l.
struct EdgeBlock {
  std::array<std::array<double, 2>, 4> rows{};
  std::array<std::array<double, 2>, 2> to_ab{};  // (alpha, beta) = to_ab * a
  std::array<std::array<double, 2>, 2> to_se{};  // (f(0), f(l)) = to_se * a
};

EdgeBlock canonical_block(double lambda, double l) {
  const FundamentalValues f = fundamental(lambda, l);
  EdgeBlock b;
  b.rows = {{{1.0, 0.0}, {0.0, 1.0}, {f.c, f.s}, {-f.dc, -f.ds}}};
  b.to_ab = {{{1.0, 0.0}, {0.0, 1.0}}};
  b.to_se = {{{1.0, 0.0}, {f.c, f.s}}};
  return b;
}

// Scaled bases that keep every entry O(1) or O(sqrt|lambda|): (c, g s) for
// lambda >= 0 and the end-value basis sinh(k(l-t))/sinh(kl), sinh(kt)/sinh(kl)
// for lambda < 0.
EdgeBlock working_block(double lambda, double l) {
  EdgeBlock b;
  if (lambda >= 0.0) {
    const double g = std::max(1.0, std::sqrt(lambda));
    const FundamentalValues f = fundamental(lambda, l);
    b.rows = {{{1.0, 0.0}, {0.0, g}, {f.c, g * f.s}, {-f.dc, -g * f.ds}}};
    b.to_ab = {{{1.0, 0.0}, {0.0, g}}};
    b.to_se = {{{1.0, 0.0}, {f.c, g * f.s}}};
  } else {
    const double k = std::sqrt(-lambda);
    const double q = k * cosh_ratio(k * l, k * l);  // k coth(kl)
    const double r = -2.0 * k * std::exp(-k * l) / std::expm1(-2.0 * k * l);  // k / sinh(kl)
    b.rows = {{{1.0, 0.0}, {-q, r}, {0.0, 1.0}, {r, -q}}};
    b.to_ab = {{{1.0, 0.0}, {-q, r}}};
    b.to_se = {{{1.0, 0.0}, {0.0, 1.0}}};
  }
  return b;
}

double row_scale(double lambda) { return std::max(1.0, std::sqrt(std::abs(lambda))); }

void require_compact(const MetricGraph& g) {
  if (!g.compact()) throw UnsupportedError("secular equations need a compact graph (all edges finite)");
}

BcReport require_valid(const MetricGraph& g, const BoundaryCondition& bc) {
  BcReport report = validate_bc(g, bc);
  if (!report.ok()) {
    std::string msg = "invalid boundary condition:";
    for (const auto& v : report.violations) msg += " " + v.subject + " (" + v.condition + ")";
    throw InputError(msg);
  }
  return report;
}

// Stacked condition rows for the given vertices.
CMatrix condition_rows(const MetricGraph& g, const BoundaryCondition& bc, const std::vector<EdgeBlock>& blocks,
                       double scale, const std::vector<bool>& include, std::vector<std::size_t>* vertex_row) {
  const auto cols = static_cast<Eigen::Index>(2 * g.num_edges());
  std::size_t total = 0;
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    if (include[v]) total += g.degree(v);
  }
  CMatrix M = CMatrix::Zero(static_cast<Eigen::Index>(total), cols);
  Eigen::Index row = 0;
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    if (vertex_row) vertex_row->push_back(static_cast<std::size_t>(row));
    if (!include[v]) continue;
    const auto d = static_cast<Eigen::Index>(g.degree(v));
    CMatrix F = CMatrix::Zero(d, cols), D = CMatrix::Zero(d, cols);
    for (Eigen::Index i = 0; i < d; ++i) {
      const EdgeEnd end = g.star(v).ends[static_cast<std::size_t>(i)];
      const auto& blk = blocks[end.edge];
      const std::size_t r = end.end == End::Init ? 0 : 2;
      for (Eigen::Index j = 0; j < 2; ++j) {
        F(i, static_cast<Eigen::Index>(2 * end.edge) + j) = blk.rows[r][static_cast<std::size_t>(j)];
        D(i, static_cast<Eigen::Index>(2 * end.edge) + j) = blk.rows[r + 1][static_cast<std::size_t>(j)];
      }
    }
    const CMatrix QP = range_basis(bc.at[v].P);
    const CMatrix QK = kernel_basis(bc.at[v].P);
    M.block(row, 0, QP.cols(), cols) = QP.adjoint() * F;
    row += QP.cols();
    M.block(row, 0, QK.cols(), cols) = QK.adjoint() * (bc.at[v].L * F + D) / scale;
    row += QK.cols();
  }
  return M;
}

std::vector<EdgeBlock> working_blocks(const MetricGraph& g, double lambda) {
  std::vector<EdgeBlock> blocks;
  for (const auto& e : g.edges()) blocks.push_back(working_block(lambda, e.length));
  return blocks;
}

CMatrix working_matrix(const MetricGraph& g, const BoundaryCondition& bc, double lambda, const std::vector<bool>& include) {
  return condition_rows(g, bc, working_blocks(g, lambda), row_scale(lambda), include, nullptr);
}

SecularSolution from_working(const MetricGraph& g, double lambda, const std::vector<EdgeBlock>& blocks,
                             const CVector& a) {
  SecularSolution s;
  s.lambda = lambda;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const Complex a1 = a(static_cast<Eigen::Index>(2 * e)), a2 = a(static_cast<Eigen::Index>(2 * e + 1));
    const auto& b = blocks[e];
    s.lengths.push_back(g.edge(e).length);
    s.alpha.push_back(b.to_ab[0][0] * a1 + b.to_ab[0][1] * a2);
    s.beta.push_back(b.to_ab[1][0] * a1 + b.to_ab[1][1] * a2);
    s.start.push_back(b.to_se[0][0] * a1 + b.to_se[0][1] * a2);
    s.end.push_back(b.to_se[1][0] * a1 + b.to_se[1][1] * a2);
  }
  return s;
}

void combine(std::vector<Complex>& out, const std::vector<SecularSolution>& in,
             std::vector<Complex> SecularSolution::*field, const CMatrix& X, Eigen::Index j) {
  for (std::size_t e = 0; e < out.size(); ++e) {
    Complex sum = 0.0;
    for (std::size_t i = 0; i < in.size(); ++i) sum += (in[i].*field)[e] * X(static_cast<Eigen::Index>(i), j);
    out[e] = sum;
  }
}

// L^2-orthonormalizes and fixes the phase of every function.
std::vector<SecularSolution> orthonormalize(const std::vector<SecularSolution>& in) {
  const auto m = static_cast<Eigen::Index>(in.size());
  if (m == 0) return {};
  CMatrix G(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) G(i, j) = inner(in[static_cast<std::size_t>(j)], in[static_cast<std::size_t>(i)]);
  }
  G = 0.5 * (G + G.adjoint()).eval();
  Eigen::LLT<CMatrix> llt(G);
  if (llt.info() != Eigen::Success) throw NumericalError("null-space functions are linearly dependent");
  const CMatrix Linv = llt.matrixL().solve(CMatrix::Identity(m, m));
  const CMatrix X = Linv.adjoint();
  std::vector<SecularSolution> out;
  for (Eigen::Index j = 0; j < m; ++j) {
    SecularSolution s = in.front();
    s.index = static_cast<std::size_t>(j);
    combine(s.alpha, in, &SecularSolution::alpha, X, j);
    combine(s.beta, in, &SecularSolution::beta, X, j);
    combine(s.start, in, &SecularSolution::start, X, j);
    combine(s.end, in, &SecularSolution::end, X, j);
    double top = 0.0;
    for (std::size_t e = 0; e < s.alpha.size(); ++e) top = std::max({top, std::abs(s.start[e]), std::abs(s.end[e]), std::abs(s.beta[e])});
    Complex phase = 1.0;
    for (std::size_t e = 0; e < s.alpha.size() && top > 0.0; ++e) {
      const Complex cand[3] = {s.start[e], s.beta[e], s.end[e]};
      bool found = false;
      for (const Complex& z : cand) {
        if (std::abs(z) >= top * (1.0 - 1e-9)) {
          phase = std::conj(z) / std::abs(z);
          found = true;
          break;
        }
      }
      if (found) break;
    }
    for (auto* field : {&s.alpha, &s.beta, &s.start, &s.end}) {
      for (auto& z : *field) z *= phase;
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SecularSolution> null_space(const MetricGraph& g, double lambda, const CMatrix& W, double tol) {
  const auto cols = W.cols();
  const std::vector<EdgeBlock> blocks = working_blocks(g, lambda);
  std::vector<SecularSolution> raw;
  if (W.rows() == 0) {
    for (Eigen::Index j = 0; j < cols; ++j) raw.push_back(from_working(g, lambda, blocks, CVector::Unit(cols, j)));
    return orthonormalize(raw);
  }
  Eigen::JacobiSVD<CMatrix> svd(W, Eigen::ComputeFullV);
  const RVector& sv = svd.singularValues();
  const double top = sv.size() > 0 ? sv(0) : 0.0;
  Eigen::Index rank = 0;
  while (rank < sv.size() && sv(rank) >= tol * top && top > 0.0) ++rank;
  for (Eigen::Index j = rank; j < cols; ++j) raw.push_back(from_working(g, lambda, blocks, svd.matrixV().col(j)));
  return orthonormalize(raw);
}

}  // namespace

SecularMatrix secular_matrix(const MetricGraph& g, const BoundaryCondition& bc, double lambda) {
  require_compact(g);
  const BcReport report = require_valid(g, bc);
  SecularMatrix sm;
  sm.lambda = lambda;
  std::vector<EdgeBlock> blocks;
  for (const auto& e : g.edges()) blocks.push_back(canonical_block(lambda, e.length));
  sm.M = condition_rows(g, bc, blocks, 1.0, std::vector<bool>(g.num_vertices(), true), &sm.vertex_row);
  sm.anomalies = report.notes;
  return sm;
}

Complex SecularSolution::value(std::size_t e, double t) const {
  if (lambda >= 0.0) {
    const FundamentalValues f = fundamental(lambda, t);
    return alpha.at(e) * f.c + beta.at(e) * f.s;
  }
  const double k = std::sqrt(-lambda), l = lengths.at(e);
  const double t_in = std::clamp(t, 0.0, l);
  return start.at(e) * sinh_ratio(k * (l - t_in), k * l) + end.at(e) * sinh_ratio(k * t_in, k * l);
}

Complex SecularSolution::derivative(std::size_t e, double t) const {
  if (lambda >= 0.0) {
    const FundamentalValues f = fundamental(lambda, t);
    return alpha.at(e) * f.dc + beta.at(e) * f.ds;
  }
  const double k = std::sqrt(-lambda), l = lengths.at(e);
  const double t_in = std::clamp(t, 0.0, l);
  return k * (-start.at(e) * cosh_ratio(k * (l - t_in), k * l) + end.at(e) * cosh_ratio(k * t_in, k * l));
}

GridFunction SecularSolution::sample(const Mesh& mesh) const {
  if (mesh.num_edges() != lengths.size()) throw InputError("mesh does not match the solution's graph");
  return GridFunction::sample(mesh, [this](std::size_t e, double t) { return value(e, t); });
}

TraceVector traces(const MetricGraph& g, const SecularSolution& f) {
  TraceVector tv;
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    const auto d = static_cast<Eigen::Index>(g.degree(v));
    tv.value.push_back(CVector::Zero(d));
    tv.derivative.push_back(CVector::Zero(d));
    for (Eigen::Index i = 0; i < d; ++i) {
      const EdgeEnd end = g.star(v).ends[static_cast<std::size_t>(i)];
      const double l = g.edge(end.edge).length;
      if (end.end == End::Init) {
        tv.value[v](i) = f.value(end.edge, 0.0);
        tv.derivative[v](i) = f.derivative(end.edge, 0.0);
      } else {
        tv.value[v](i) = f.value(end.edge, l);
        tv.derivative[v](i) = -f.derivative(end.edge, l);
      }
    }
  }
  return tv;
}

std::vector<double> condition_residuals(const MetricGraph& g, const BoundaryCondition& bc, const TraceVector& tv) {
  std::vector<double> out;
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    const auto& c = bc.at.at(v);
    const auto d = c.P.rows();
    const CVector& f = tv.value.at(v);
    const CVector& df = tv.derivative.at(v);
    const double r1 = (c.P * f).norm();
    const double r2 = (c.L * f + (CMatrix::Identity(d, d) - c.P) * df).norm();
    out.push_back(r1 + r2);
  }
  return out;
}

double max_condition_residual(const MetricGraph& g, const BoundaryCondition& bc, const TraceVector& tv) {
  double worst = 0.0;
  for (double r : condition_residuals(g, bc, tv)) worst = std::max(worst, r);
  return worst;
}

double relative_sigma_min(const MetricGraph& g, const BoundaryCondition& bc, double lambda) {
  const CMatrix W = working_matrix(g, bc, lambda, std::vector<bool>(g.num_vertices(), true));
  if (W.size() == 0) return 1.0;
  Eigen::BDCSVD<CMatrix> svd(W);
  const RVector& sv = svd.singularValues();
  if (sv(0) == 0.0) return 0.0;
  return sv(sv.size() - 1) / sv(0);
}

namespace {

std::size_t count_small(const MetricGraph& g, const BoundaryCondition& bc, double lambda, double tol) {
  const CMatrix W = working_matrix(g, bc, lambda, std::vector<bool>(g.num_vertices(), true));
  Eigen::BDCSVD<CMatrix> svd(W);
  const RVector& sv = svd.singularValues();
  std::size_t n = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) < tol * sv(0)) ++n;
  }
  return n;
}

double golden_min(const std::function<double(double)>& f, double a, double b) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? c : d;
}

}  // namespace

std::vector<SecularRoot> eigenvalues_scan(const MetricGraph& g, const BoundaryCondition& bc, const ScanOptions& opt) {
  require_compact(g);
  const BcReport report = require_valid(g, bc);
  const HeinsConstant hc = heins_constant(report.S, g.u());
  const double lo = opt.lambda_min.value_or(-(hc.C + 1.0));
  const double hi = opt.lambda_max;
  if (!(lo < hi)) throw InputError("scan range is empty");
  if (!(opt.tol > 0.0)) throw InputError("scan tolerance must be positive");
  const double step = opt.step > 0.0 ? opt.step : std::min(0.01, std::numbers::pi / (20.0 * g.total_length()));

  auto to_s = [](double lam) { return lam >= 0.0 ? std::sqrt(lam) : -std::sqrt(-lam); };
  auto to_lambda = [](double s) { return s >= 0.0 ? s * s : -s * s; };
  const double s_lo = to_s(lo), s_hi = to_s(hi);
  std::vector<double> grid;
  const auto count = static_cast<std::size_t>(std::ceil((s_hi - s_lo) / step));
  for (std::size_t i = 0; i <= count; ++i) grid.push_back(to_lambda(std::min(s_hi, s_lo + step * static_cast<double>(i))));
  if (lo < 0.0 && hi > 0.0) grid.push_back(0.0);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  auto sigma = [&](double lam) { return relative_sigma_min(g, bc, lam); };
  std::vector<double> sv(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) sv[i] = sigma(grid[i]);

  std::vector<SecularRoot> roots;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const bool left_ok = i == 0 || sv[i] <= sv[i - 1];
    const bool right_ok = i + 1 == grid.size() || sv[i] <= sv[i + 1];
    if (!left_ok || !right_ok) continue;
    double lam = grid[i];
    if (grid[i] != 0.0) {
      double a = i == 0 ? grid[i] : grid[i - 1];
      double b = i + 1 == grid.size() ? grid[i] : grid[i + 1];
      if (grid[i] > 0.0) a = std::max(a, 0.0);
      if (grid[i] < 0.0) b = std::min(b, 0.0);
      if (b > a) lam = golden_min(sigma, a, b);
      if (sv[i] < sigma(lam)) lam = grid[i];
    }
    const double s = sigma(lam);
    if (s < opt.tol) roots.push_back({lam, count_small(g, bc, lam, opt.tol), s});
  }
  std::sort(roots.begin(), roots.end(), [](const auto& x, const auto& y) { return x.lambda < y.lambda; });
  std::vector<SecularRoot> unique;
  for (const auto& r : roots) {
    if (!unique.empty() && std::abs(r.lambda - unique.back().lambda) <= 1e-9 * std::max(1.0, std::abs(r.lambda))) {
      if (r.sigma_min < unique.back().sigma_min) unique.back() = r;
      continue;
    }
    unique.push_back(r);
  }
  return unique;
}

std::vector<SecularSolution> eigenfunctions(const MetricGraph& g, const BoundaryCondition& bc, double lambda, double tol) {
  require_compact(g);
  require_valid(g, bc);
  const CMatrix W = working_matrix(g, bc, lambda, std::vector<bool>(g.num_vertices(), true));
  auto sols = null_space(g, lambda, W, tol);
  if (sols.empty()) {
    std::ostringstream msg;
    msg << std::setprecision(12) << "not an eigenvalue: " << lambda;
    throw InputError(msg.str());
  }
  return sols;
}

std::vector<SecularSolution> solve_at_energy(const MetricGraph& g, const BoundaryCondition& bc, double lambda,
                                             const std::vector<EdgeEnd>& free_ends, double tol) {
  require_compact(g);
  require_valid(g, bc);
  const std::set<EdgeEnd> free(free_ends.begin(), free_ends.end());
  std::vector<bool> include(g.num_vertices(), true);
  for (const EdgeEnd& end : free) {
    if (end.edge >= g.num_edges()) throw InputError("free end refers to an unknown edge");
    const std::size_t v = g.vertex_of(end);
    for (const EdgeEnd& other : g.star(v).ends) {
      if (!free.contains(other)) {
        throw InputError("free ends must cover every end at vertex '" + g.vertex_id(v) + "'");
      }
    }
    include[v] = false;
  }
  const CMatrix W = working_matrix(g, bc, lambda, include);
  return null_space(g, lambda, W, tol);
}

Complex inner(const SecularSolution& f, const SecularSolution& g) {
  if (f.lengths.size() != g.lengths.size()) throw InputError("solutions live on different graphs");
  using Gauss = boost::math::quadrature::gauss<double, 20>;
  const double k = std::sqrt(std::max(std::abs(f.lambda), std::abs(g.lambda)));
  Complex total = 0.0;
  for (std::size_t e = 0; e < f.lengths.size(); ++e) {
    const double l = f.lengths[e];
    const auto panels = static_cast<std::size_t>(std::ceil(k * l / 2.0)) + 1;
    const double w = l / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
      const double a = w * static_cast<double>(p), b = a + w;
      auto prod = [&](double t) { return f.value(e, t) * std::conj(g.value(e, t)); };
      const double re = Gauss::integrate([&](double t) { return prod(t).real(); }, a, b);
      const double im = Gauss::integrate([&](double t) { return prod(t).imag(); }, a, b);
      total += Complex(re, im);
    }
  }
  return total;
}

std::string roots_csv(const std::vector<SecularRoot>& roots) {
  std::ostringstream out;
  out << std::setprecision(17) << "lambda,multiplicity,sigma_min\n";
  for (const auto& r : roots) out << r.lambda << ',' << r.multiplicity << ',' << r.sigma_min << '\n';
  return out.str();
}

}  // namespace qgraph
