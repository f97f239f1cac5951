#include "qgraph/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>

namespace qgraph {

double Potential::value(std::size_t e, double t) const {
  const RVector& y = values.at(e);
  const double h = mesh.step(e);
  const auto n = static_cast<Eigen::Index>(mesh.intervals(e));
  const auto k = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(t / h)), 0, n - 1);
  const double s = std::clamp(t / h - static_cast<double>(k), 0.0, 1.0);
  return (1.0 - s) * y(k) + s * y(k + 1);
}

RealEvaluator Potential::evaluator() const {
  return [copy = *this](std::size_t e, double t) { return copy.value(e, t); };
}

double Potential::min() const {
  double m = kInfinity;
  for (const auto& v : values) m = std::min(m, v.minCoeff());
  return m;
}

Potential Potential::sample(const Mesh& mesh, const RealEvaluator& f) {
  Potential p;
  p.mesh = mesh;
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    RVector v(static_cast<Eigen::Index>(mesh.nodes(e)));
    for (std::size_t k = 0; k < mesh.nodes(e); ++k) v(static_cast<Eigen::Index>(k)) = f(e, mesh.node(e, k));
    if (!v.allFinite()) throw InputError("potential values must be finite");
    p.values.push_back(std::move(v));
  }
  return p;
}

Potential Potential::constant(const Mesh& mesh, double c) {
  return sample(mesh, [c](std::size_t, double) { return c; });
}

Potential Potential::well(const MetricGraph& g, const Mesh& mesh, const std::string& edge, double t0, double t1,
                          double depth) {
  const auto e = g.find_edge(edge);
  if (!e) throw InputError("potential well on unknown edge '" + edge + "'");
  const double l = mesh.length(*e);
  if (!(t0 >= 0.0 && t0 < t1 && t1 <= l)) throw InputError("potential well needs 0 <= t0 < t1 <= l(e)");
  return sample(mesh, [=](std::size_t k, double t) { return (k == *e && t >= t0 && t <= t1) ? -depth : 0.0; });
}

Potential potential_from_csv(const MetricGraph& g, const Mesh& mesh, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::map<std::size_t, std::vector<std::pair<double, double>>> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("edge_id", 0) == 0) continue;
    std::istringstream fields(line);
    std::string id, t, v;
    if (!std::getline(fields, id, ',') || !std::getline(fields, t, ',') || !std::getline(fields, v, ',')) {
      throw InputError("potential CSV line " + std::to_string(line_no) + ": expected edge_id,t,value");
    }
    const auto e = g.find_edge(id);
    if (!e) throw InputError("potential CSV line " + std::to_string(line_no) + ": unknown edge '" + id + "'");
    try {
      rows[*e].emplace_back(std::stod(t), std::stod(v));
    } catch (const std::exception&) {
      throw InputError("potential CSV line " + std::to_string(line_no) + ": malformed number");
    }
  }
  Potential p;
  p.mesh = mesh;
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    auto pts = rows[e];
    std::sort(pts.begin(), pts.end());
    if (pts.size() != mesh.nodes(e)) {
      throw InputError("potential grid on edge '" + g.edge(e).id + "' does not match the mesh (" +
                       std::to_string(pts.size()) + " samples, " + std::to_string(mesh.nodes(e)) + " nodes)");
    }
    RVector v(static_cast<Eigen::Index>(pts.size()));
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (std::abs(pts[k].first - mesh.node(e, k)) > 1e-9 * std::max(1.0, mesh.length(e))) {
        throw InputError("potential grid on edge '" + g.edge(e).id + "' does not match the mesh nodes");
      }
      v(static_cast<Eigen::Index>(k)) = pts[k].second;
    }
    if (!v.allFinite()) throw InputError("potential values must be finite");
    p.values.push_back(std::move(v));
  }
  return p;
}

Potential parse_potential(const MetricGraph& g, const Mesh& mesh, const std::string& spec) {
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double x = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return x;
    } catch (const std::exception&) {
      throw InputError("malformed number '" + s + "' in potential '" + spec + "'");
    }
  };
  if (spec.rfind("const:", 0) == 0) return Potential::constant(mesh, number(spec.substr(6)));
  if (spec.rfind("well:", 0) == 0) {
    std::vector<std::string> parts;
    std::istringstream in(spec.substr(5));
    std::string part;
    while (std::getline(in, part, ',')) parts.push_back(part);
    if (parts.size() != 4) throw InputError("expected well:edge,t0,t1,depth");
    return Potential::well(g, mesh, parts[0], number(parts[1]), number(parts[2]), number(parts[3]));
  }
  std::ifstream file(spec);
  if (!file) throw InputError("cannot read potential file '" + spec + "'");
  std::stringstream buf;
  buf << file.rdbuf();
  return potential_from_csv(g, mesh, buf.str());
}

double window_norm(const Potential& V, std::size_t e, double t0, double t1) {
  const double h = V.mesh.step(e);
  const std::size_t n = V.mesh.intervals(e);
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double a = std::max(t0, h * static_cast<double>(k));
    const double b = std::min(t1, h * static_cast<double>(k + 1));
    if (b <= a) continue;
    const double ya = V.value(e, a), yb = V.value(e, b);
    total += (b - a) / 3.0 * (ya * ya + ya * yb + yb * yb);
  }
  return std::sqrt(total);
}

UniformL2Norm m_v(const MetricGraph& g, const Potential& V, double step) {
  if (!(step > 0.0) || step > g.u() / 10.0 * (1.0 + 1e-12)) throw InputError("window step must lie in (0, u/10]");
  if (V.mesh.num_edges() != g.num_edges()) throw InputError("potential does not match the graph");
  UniformL2Norm best;
  bool first = true;
  for (const auto& seg : segments(g, 2.0 * g.u(), step)) {
    const double m = window_norm(V, seg.edge, seg.t0, seg.t1);
    if (first || m > best.M) {
      best = {m, seg.edge, seg.t0, seg.t1};
      first = false;
    }
  }
  return best;
}

FormAssembly assemble_perturbed(const FormAssembly& fa, const Potential& V) {
  if (!(V.mesh == fa.mesh)) throw InputError("potential grid does not match the assembly mesh");
  return with_potential(fa, V.values);
}

double potential_norm_sq(const FormAssembly& fa, const Potential& V, const CVector& x) {
  if (!(V.mesh == fa.mesh)) throw InputError("potential grid does not match the assembly mesh");
  const GridFunction f = fa.to_grid(x);
  static const double gx[3] = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
  static const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  double total = 0.0;
  for (std::size_t e = 0; e < fa.mesh.num_edges(); ++e) {
    const double h = fa.mesh.step(e);
    const CVector& y = f.on_edge(e);
    const RVector& v = V.values[e];
    for (Eigen::Index k = 0; k + 1 < y.size(); ++k) {
      for (int q = 0; q < 3; ++q) {
        const double s = 0.5 * (1.0 + gx[q]);
        const Complex fy = (1.0 - s) * y(k) + s * y(k + 1);
        const double vy = (1.0 - s) * v(k) + s * v(k + 1);
        total += 0.5 * h * gw[q] * vy * vy * std::norm(fy);
      }
    }
  }
  return total;
}

namespace {

struct Window {
  std::size_t edge;
  double t0, t1;
};

// Each edge cut into floor(l/u) equal pieces, of length in [u, 2u).
std::vector<Window> partition(const MetricGraph& g, const Mesh& mesh) {
  std::vector<Window> out;
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    const double l = mesh.length(e);
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(l / g.u() + 1e-12)));
    for (std::size_t i = 0; i < n; ++i) {
      out.push_back({e, l * static_cast<double>(i) / static_cast<double>(n), l * static_cast<double>(i + 1) / static_cast<double>(n)});
    }
  }
  return out;
}

// sup |f|^2, ||f'||^2 and ||f||^2 over [t0, t1] for the interpolant.
std::array<double, 3> window_data(const Mesh& mesh, const CVector& y, std::size_t e, double t0, double t1) {
  const double h = mesh.step(e);
  auto interp = [&](double t) {
    const auto n = static_cast<Eigen::Index>(mesh.intervals(e));
    const auto k = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(t / h)), 0, n - 1);
    const double s = std::clamp(t / h - static_cast<double>(k), 0.0, 1.0);
    return (1.0 - s) * y(k) + s * y(k + 1);
  };
  double sup = 0.0, d2 = 0.0, l2 = 0.0;
  for (Eigen::Index k = 0; k + 1 < y.size(); ++k) {
    const double a = std::max(t0, h * static_cast<double>(k));
    const double b = std::min(t1, h * static_cast<double>(k + 1));
    if (b <= a) continue;
    const Complex ya = interp(a), yb = interp(b);
    sup = std::max({sup, std::norm(ya), std::norm(yb)});
    d2 += (b - a) * std::norm((y(k + 1) - y(k)) / h);
    l2 += (b - a) / 3.0 * (std::norm(ya) + (ya * std::conj(yb)).real() + std::norm(yb));
  }
  return {sup, d2, l2};
}

}  // namespace

RelativeBoundReport check_relative_bound(const FormAssembly& fa, const Potential& V, double a,
                                         const std::vector<CVector>& samples, double step) {
  const MetricGraph& g = fa.graph;
  if (!(a > 0.0) || a > g.u() * (1.0 + 1e-12)) throw InputError("relative bound check needs 0 < a <= u");
  if (!(V.mesh == fa.mesh)) throw InputError("potential grid does not match the assembly mesh");
  RelativeBoundReport r;
  r.a = a;
  r.M = m_v(g, V, step).M;
  const auto windows = partition(g, fa.mesh);
  for (const auto& w : windows) r.M = std::max(r.M, window_norm(V, w.edge, w.t0, w.t1));
  const double M2 = r.M * r.M;
  r.Ca = M2 * (fa.heins.C + 4.0 / a);
  r.samples = samples.size();
  bool first = true;
  for (const auto& x : samples) {
    const double s0 = fa.dirichlet(x) - fa.boundary(x);
    const double margin = M2 * a * s0 + r.Ca * fa.mass(x) - potential_norm_sq(fa, V, x);
    const GridFunction f = fa.to_grid(x);
    double window_margin = kInfinity;
    for (const auto& w : windows) {
      const auto d = window_data(fa.mesh, f.on_edge(w.edge), w.edge, w.t0, w.t1);
      window_margin = std::min(window_margin, a / 2.0 * d[1] + 4.0 / a * d[2] - d[0]);
    }
    if (first) {
      r.worst = margin;
      r.worst_window = window_margin;
      first = false;
    } else {
      r.worst = std::min(r.worst, margin);
      r.worst_window = std::min(r.worst_window, window_margin);
    }
  }
  return r;
}

namespace {

template <class T>
std::array<T, 2> taylor_step(double a, double b, T y, T dy, double s) {
  // y = sum c_n tau^n with c_{n+2} (n+2)(n+1) = a c_n + b c_{n-1}.
  T cm1 = 0.0, c0 = y, c1 = dy;
  T value = c0 + c1 * s, deriv = c1;
  double pw = s;  // s^(n+1) for the coefficient c_{n+2}
  const double scale = std::abs(y) + std::abs(dy) * s + 1e-300;
  int quiet = 0;
  for (int n = 0; n < 80 && quiet < 3; ++n) {
    const T c2 = (a * c0 + b * cm1) / static_cast<double>((n + 2) * (n + 1));
    deriv += static_cast<double>(n + 2) * c2 * pw;
    pw *= s;
    const T term = c2 * pw;
    value += term;
    quiet = std::abs(term) < 1e-18 * scale ? quiet + 1 : 0;
    cm1 = c0;
    c0 = c1;
    c1 = c2;
  }
  return {value, deriv};
}

template <class T>
std::array<T, 2> propagate_t(double q0, double q1, T y, T dy, double s) {
  const double qmax = std::max(std::abs(q0), std::abs(q0 + q1 * s));
  const auto n = static_cast<std::size_t>(std::ceil(s * std::sqrt(qmax) / 0.5)) + 1;
  const double step = s / static_cast<double>(n);
  std::array<T, 2> state{y, dy};
  for (std::size_t k = 0; k < n; ++k) {
    const double a = q0 + q1 * step * static_cast<double>(k);
    state = taylor_step<T>(a, q1, state[0], state[1], step);
  }
  return state;
}

// Real fundamental pair on edge e: (y1, y1', y2, y2') at every node, with
// y1(0) = 1, y1'(0) = 0, y2(0) = 0, y2'(0) = 1.
std::vector<std::array<double, 4>> fundamentals(const Potential& V, std::size_t e, double lambda) {
  const Mesh& m = V.mesh;
  const double h = m.step(e);
  std::vector<std::array<double, 4>> out(m.nodes(e));
  out[0] = {1.0, 0.0, 0.0, 1.0};
  const RVector& v = V.values[e];
  for (std::size_t k = 0; k < m.intervals(e); ++k) {
    const auto K = static_cast<Eigen::Index>(k);
    const double q0 = v(K) - lambda, q1 = (v(K + 1) - v(K)) / h;
    const auto a = propagate_t<double>(q0, q1, out[k][0], out[k][1], h);
    const auto b = propagate_t<double>(q0, q1, out[k][2], out[k][3], h);
    out[k + 1] = {a[0], a[1], b[0], b[1]};
  }
  return out;
}

struct Shooting {
  CMatrix M;
  std::vector<std::vector<std::array<double, 4>>> fund;
  double g = 1.0;  // y2 column scale and derivative row scale
};

Shooting shooting_matrix(const MetricGraph& g, const BoundaryCondition& bc, const Potential& V, double lambda) {
  Shooting sh;
  sh.g = std::max(1.0, std::sqrt(std::abs(lambda)));
  const std::size_t E = g.num_edges();
  for (std::size_t e = 0; e < E; ++e) sh.fund.push_back(fundamentals(V, e, lambda));
  const auto cols = static_cast<Eigen::Index>(2 * E);
  sh.M = CMatrix::Zero(cols, cols);
  Eigen::Index row = 0;
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    const auto d = static_cast<Eigen::Index>(g.degree(v));
    CMatrix F = CMatrix::Zero(d, cols), D = CMatrix::Zero(d, cols);
    for (Eigen::Index i = 0; i < d; ++i) {
      const EdgeEnd end = g.star(v).ends[static_cast<std::size_t>(i)];
      const auto a = static_cast<Eigen::Index>(2 * end.edge), b = a + 1;
      if (end.end == End::Init) {
        F(i, a) = 1.0;
        D(i, b) = sh.g;
      } else {
        const auto& y = sh.fund[end.edge].back();
        F(i, a) = y[0];
        F(i, b) = sh.g * y[2];
        D(i, a) = -y[1];
        D(i, b) = -sh.g * y[3];
      }
    }
    const auto& c = bc.at[v];
    const CMatrix Qp = range_basis(c.P), Qk = kernel_basis(c.P);
    sh.M.block(row, 0, Qp.cols(), cols) = Qp.adjoint() * F;
    row += Qp.cols();
    sh.M.block(row, 0, Qk.cols(), cols) = Qk.adjoint() * (c.L * F + D) / sh.g;
    row += Qk.cols();
  }
  return sh;
}

double relative_sigma(const CMatrix& M) {
  const Eigen::JacobiSVD<CMatrix> svd(M);
  const RVector& s = svd.singularValues();
  return s(0) > 0.0 ? s(s.size() - 1) / s(0) : 0.0;
}

ShootingSolution build_solution(const Potential& V, const Shooting& sh, const CVector& coeff, double lambda) {
  ShootingSolution sol;
  sol.lambda = lambda;
  sol.V = V;
  for (std::size_t e = 0; e < sh.fund.size(); ++e) {
    const Complex a = coeff(static_cast<Eigen::Index>(2 * e)), b = sh.g * coeff(static_cast<Eigen::Index>(2 * e + 1));
    std::vector<std::array<Complex, 2>> nodes;
    nodes.reserve(sh.fund[e].size());
    for (const auto& y : sh.fund[e]) nodes.push_back({a * y[0] + b * y[2], a * y[1] + b * y[3]});
    sol.nodes.push_back(std::move(nodes));
  }
  return sol;
}

using CellGauss = boost::math::quadrature::gauss<double, 8>;

// Gauss points (edge, t, weight) on every cell of the mesh.
template <class F>
void for_each_gauss_point(const Mesh& mesh, F&& f) {
  const auto& x = CellGauss::abscissa();
  const auto& w = CellGauss::weights();
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    const double h = mesh.step(e);
    for (std::size_t k = 0; k < mesh.intervals(e); ++k) {
      const double mid = mesh.node(e, k) + 0.5 * h;
      for (std::size_t i = 0; i < x.size(); ++i) {
        f(e, mid - 0.5 * h * x[i], 0.5 * h * w[i]);
        f(e, mid + 0.5 * h * x[i], 0.5 * h * w[i]);
      }
    }
  }
}

}  // namespace

std::array<Complex, 2> propagate(double q0, double q1, Complex y0, Complex dy0, double s) {
  return propagate_t<Complex>(q0, q1, y0, dy0, s);
}

Complex ShootingSolution::value(std::size_t e, double t) const {
  const Mesh& m = V.mesh;
  const double h = m.step(e);
  const auto n = m.intervals(e);
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(std::max(0.0, std::floor(t / h))), n - 1);
  const double s = t - m.node(e, k);
  if (s == 0.0) return nodes[e][k][0];
  const RVector& v = V.values[e];
  const auto K = static_cast<Eigen::Index>(k);
  const double q0 = v(K) - lambda, q1 = (v(K + 1) - v(K)) / h;
  return propagate_t<Complex>(q0, q1, nodes[e][k][0], nodes[e][k][1], s)[0];
}

GridFunction ShootingSolution::sample() const {
  GridFunction f(V.mesh);
  for (std::size_t e = 0; e < nodes.size(); ++e) {
    for (std::size_t k = 0; k < nodes[e].size(); ++k) f.on_edge(e)(static_cast<Eigen::Index>(k)) = nodes[e][k][0];
  }
  return f;
}

TraceVector ShootingSolution::traces(const MetricGraph& g) const {
  TraceVector tv;
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    const auto d = static_cast<Eigen::Index>(g.degree(v));
    CVector val(d), der(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const EdgeEnd end = g.star(v).ends[static_cast<std::size_t>(i)];
      const auto& y = end.end == End::Init ? nodes[end.edge].front() : nodes[end.edge].back();
      val(i) = y[0];
      der(i) = end.end == End::Init ? y[1] : -y[1];
    }
    tv.value.push_back(val);
    tv.derivative.push_back(der);
  }
  return tv;
}

double shooting_sigma(const MetricGraph& g, const BoundaryCondition& bc, const Potential& V, double lambda) {
  if (!g.compact()) throw UnsupportedError("shooting needs a compact graph");
  return relative_sigma(shooting_matrix(g, bc, V, lambda).M);
}

std::vector<ShootingSolution> shooting_eigenfunctions(const MetricGraph& g, const BoundaryCondition& bc,
                                                     const Potential& V, double lo, double hi, std::size_t count,
                                                     double* sigma) {
  if (!g.compact()) throw UnsupportedError("shooting needs a compact graph");
  if (!(lo < hi) || count == 0) throw InputError("shooting needs lo < hi and a positive count");
  auto f = [&](double x) { return shooting_sigma(g, bc, V, x); };
  // Coarse scan, then golden section around the best sample.
  const int n = 40;
  const double dx = (hi - lo) / n;
  int best = 0;
  double best_val = kInfinity;
  for (int i = 0; i <= n; ++i) {
    const double val = f(lo + dx * i);
    if (val < best_val) {
      best_val = val;
      best = i;
    }
  }
  double a = lo + dx * std::max(best - 1, 0), b = lo + dx * std::min(best + 1, n);
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > 1e-14 * std::max(1.0, std::abs(a))) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  const double lambda = fc < fd ? c : d;
  const Shooting sh = shooting_matrix(g, bc, V, lambda);
  const Eigen::JacobiSVD<CMatrix> svd(sh.M, Eigen::ComputeFullV);
  const RVector& s = svd.singularValues();
  if (sigma) *sigma = s(0) > 0.0 ? s(s.size() - 1) / s(0) : 0.0;
  const auto cols = svd.matrixV().cols();
  const auto m = static_cast<Eigen::Index>(std::min<std::size_t>(count, static_cast<std::size_t>(cols)));
  std::vector<ShootingSolution> raw;
  for (Eigen::Index j = cols - m; j < cols; ++j) raw.push_back(build_solution(V, sh, svd.matrixV().col(j), lambda));

  // L2 Gram matrix, then Cholesky orthonormalization.
  CMatrix G = CMatrix::Zero(m, m);
  for_each_gauss_point(V.mesh, [&](std::size_t e, double t, double w) {
    CVector y(m);
    for (Eigen::Index i = 0; i < m; ++i) y(i) = raw[static_cast<std::size_t>(i)].value(e, t);
    G += w * y * y.adjoint();
  });
  const Eigen::LLT<CMatrix> llt(G);
  if (llt.info() != Eigen::Success) throw NumericalError("shooting eigenfunctions are linearly dependent");
  const CMatrix Linv = CMatrix(llt.matrixL()).inverse();
  std::vector<ShootingSolution> out;
  for (Eigen::Index i = 0; i < m; ++i) {
    ShootingSolution sol = raw[0];
    for (std::size_t e = 0; e < sol.nodes.size(); ++e) {
      for (std::size_t k = 0; k < sol.nodes[e].size(); ++k) {
        std::array<Complex, 2> acc{0.0, 0.0};
        for (Eigen::Index j = 0; j <= i; ++j) {
          acc[0] += Linv(i, j) * raw[static_cast<std::size_t>(j)].nodes[e][k][0];
          acc[1] += Linv(i, j) * raw[static_cast<std::size_t>(j)].nodes[e][k][1];
        }
        sol.nodes[e][k] = acc;
      }
    }
    out.push_back(std::move(sol));
  }
  return out;
}

PerturbedReport perturbed_genef_check(const MetricGraph& g, const BoundaryCondition& bc, const Potential& V,
                                      const FormAssembly& perturbed, const DiscreteEigensystem& es,
                                      const WeightFunction& w) {
  if (!(V.mesh == perturbed.mesh)) throw InputError("potential grid does not match the assembly mesh");
  const auto tests = standard_tests(g, bc);
  const RealEvaluator Vf = V.evaluator();
  const auto n = static_cast<std::size_t>(es.values.size());
  PerturbedReport r;
  std::size_t i = 0;
  while (i < n) {
    // Cluster of nearly equal FEM eigenvalues, refined together.
    const double lam = es.values(static_cast<Eigen::Index>(i));
    const double close = 1e-6 * std::max(1.0, std::abs(lam));
    std::size_t j = i + 1;
    while (j < n && es.values(static_cast<Eigen::Index>(j)) - es.values(static_cast<Eigen::Index>(j - 1)) < close) ++j;
    const double top = es.values(static_cast<Eigen::Index>(j - 1));
    double reach = 0.05 * std::max(1.0, std::abs(lam));
    if (i > 0) reach = std::min(reach, 0.5 * (lam - es.values(static_cast<Eigen::Index>(i - 1))));
    if (j < n) reach = std::min(reach, 0.5 * (es.values(static_cast<Eigen::Index>(j)) - top));
    double sigma = 0.0;
    const auto sols = shooting_eigenfunctions(g, bc, V, lam - reach, top + reach, j - i, &sigma);
    for (std::size_t k = 0; k < sols.size(); ++k) {
      const ShootingSolution& phi = sols[k];
      const GenefReport gr = genef_residual(
          g, bc, [&phi](std::size_t e, double t) { return phi.value(e, t); }, phi.lambda, tests, V.mesh, Vf);
      PerturbedMode m;
      m.discrete_lambda = es.values(static_cast<Eigen::Index>(i + k));
      m.lambda = phi.lambda;
      m.sigma = sigma;
      m.interior = gr.worst_interior;
      m.vertex = gr.worst_vertex;
      m.condition = max_condition_residual(g, bc, phi.traces(g));
      double wn = 0.0;
      for_each_gauss_point(V.mesh, [&](std::size_t e, double t, double q) {
        wn += q * std::norm(phi.value(e, t)) / (w(e, t) * w(e, t));
      });
      m.weighted_norm = std::sqrt(wn);
      r.worst = std::max(r.worst, gr.worst);
      r.worst_condition = std::max(r.worst_condition, m.condition);
      r.worst_shift = std::max(r.worst_shift, std::abs(m.discrete_lambda - m.lambda));
      r.modes.push_back(m);
    }
    i = j;
  }
  return r;
}

ConvergenceStudy perturbed_convergence(const MetricGraph& g, const BoundaryCondition& bc, const RealEvaluator& V,
                                       double h0, std::size_t levels, std::size_t modes) {
  ConvergenceStudy study;
  Mesh mesh = Mesh::uniform(g, h0);
  const Potential base = Potential::sample(mesh, V);
  std::vector<double> exact;
  for (std::size_t i = 0; i < levels; ++i) {
    const FormAssembly fa = assemble(g, bc, mesh);
    const Potential pot = Potential::sample(mesh, base.evaluator());
    const FormAssembly pf = assemble_perturbed(fa, pot);
    const DiscreteEigensystem es = eigensystem(pf, std::min(modes, pf.dim));
    if (exact.empty()) {
      const PerturbedReport rep = perturbed_genef_check(g, bc, pot, pf, es, WeightFunction::constant(1.0));
      for (const auto& m : rep.modes) exact.push_back(m.lambda);
    }
    double worst = 0.0;
    for (Eigen::Index k = 0; k < es.values.size() && static_cast<std::size_t>(k) < exact.size(); ++k) {
      worst = std::max(worst, std::abs(es.values(k) - exact[static_cast<std::size_t>(k)]));
    }
    study.h.push_back(mesh.h_max());
    study.worst.push_back(worst);
    mesh = mesh.refined();
  }
  const std::size_t n = study.worst.size();
  if (n >= 2 && study.worst[n - 1] > 0.0) study.order = std::log2(study.worst[n - 2] / study.worst[n - 1]);
  return study;
}

}  // namespace qgraph
