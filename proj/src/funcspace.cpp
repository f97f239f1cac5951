#include "qgraph/funcspace.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

namespace qgraph {

Mesh::Mesh(std::vector<double> lengths, std::vector<std::size_t> intervals)
    : lengths_(std::move(lengths)), intervals_(std::move(intervals)) {
  if (lengths_.size() != intervals_.size()) throw InputError("mesh: lengths and interval counts differ in size");
  for (std::size_t e = 0; e < lengths_.size(); ++e) {
    if (!(lengths_[e] > 0.0) || !std::isfinite(lengths_[e])) throw InputError("mesh: edge lengths must be finite");
    if (intervals_[e] < 2) throw InputError("mesh: every edge needs at least two intervals");
  }
}

Mesh Mesh::uniform(const MetricGraph& g, double h_max) {
  if (!(h_max > 0.0)) throw InputError("mesh width must be positive");
  std::vector<double> lengths;
  std::vector<std::size_t> counts;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const double len = g.numeric_length(e);
    auto n = static_cast<std::size_t>(std::ceil(len / h_max - 1e-9));
    n = std::max<std::size_t>(n, 2);
    if (n % 2 == 1) ++n;
    lengths.push_back(len);
    counts.push_back(n);
  }
  return Mesh(std::move(lengths), std::move(counts));
}

Mesh Mesh::refined() const {
  auto counts = intervals_;
  for (auto& n : counts) n *= 2;
  return Mesh(lengths_, std::move(counts));
}

double Mesh::h_max() const {
  double h = 0.0;
  for (std::size_t e = 0; e < lengths_.size(); ++e) h = std::max(h, step(e));
  return h;
}

std::size_t Mesh::total_nodes() const {
  std::size_t n = 0;
  for (auto k : intervals_) n += k + 1;
  return n;
}

GridFunction::GridFunction(Mesh mesh) : mesh_(std::move(mesh)) {
  for (std::size_t e = 0; e < mesh_.num_edges(); ++e) {
    values_.push_back(CVector::Zero(static_cast<Eigen::Index>(mesh_.nodes(e))));
  }
}

GridFunction::GridFunction(Mesh mesh, std::vector<CVector> values) : mesh_(std::move(mesh)), values_(std::move(values)) {
  if (values_.size() != mesh_.num_edges()) throw InputError("grid function: one value vector per edge expected");
  for (std::size_t e = 0; e < values_.size(); ++e) {
    if (static_cast<std::size_t>(values_[e].size()) != mesh_.nodes(e)) {
      throw InputError("grid function: node count does not match the mesh");
    }
    if (!values_[e].allFinite()) throw InputError("grid function: values must be finite");
  }
}

GridFunction GridFunction::sample(const Mesh& mesh, const EdgeEvaluator& f) {
  GridFunction out(mesh);
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    for (std::size_t k = 0; k < mesh.nodes(e); ++k) {
      out.values_[e](static_cast<Eigen::Index>(k)) = f(e, mesh.node(e, k));
    }
  }
  return out;
}

void GridFunction::check_compatible(const GridFunction& other) const {
  if (!(mesh_ == other.mesh_)) throw InputError("grid functions live on different meshes");
}

GridFunction& GridFunction::operator+=(const GridFunction& other) {
  check_compatible(other);
  for (std::size_t e = 0; e < values_.size(); ++e) values_[e] += other.values_[e];
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
  check_compatible(other);
  for (std::size_t e = 0; e < values_.size(); ++e) values_[e] -= other.values_[e];
  return *this;
}

GridFunction& GridFunction::operator*=(Complex s) {
  for (auto& v : values_) v *= s;
  return *this;
}

GridFunction GridFunction::times(const GridFunction& other) const {
  check_compatible(other);
  GridFunction out = *this;
  for (std::size_t e = 0; e < values_.size(); ++e) out.values_[e] = values_[e].cwiseProduct(other.values_[e]);
  return out;
}

GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
GridFunction operator*(Complex s, GridFunction a) { return a *= s; }

TraceVector traces(const MetricGraph& g, const GridFunction& f) {
  const Mesh& mesh = f.mesh();
  if (mesh.num_edges() != g.num_edges()) throw InputError("traces: function and graph disagree on edge count");
  TraceVector tv;
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    const auto d = static_cast<Eigen::Index>(g.degree(v));
    tv.value.push_back(CVector::Zero(d));
    tv.derivative.push_back(CVector::Zero(d));
  }
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    if (mesh.nodes(e) < 3) throw InputError("traces need at least three nodes per edge");
    const CVector& y = f.on_edge(e);
    const double h = mesh.step(e);
    const Eigen::Index n = y.size() - 1;
    const Edge& edge = g.edge(e);
    const auto si = static_cast<Eigen::Index>(g.slot_of({e, End::Init}));
    tv.value[edge.init](si) = y(0);
    tv.derivative[edge.init](si) = (-3.0 * y(0) + 4.0 * y(1) - y(2)) / (2.0 * h);
    if (edge.term) {
      const auto sj = static_cast<Eigen::Index>(g.slot_of({e, End::Term}));
      tv.value[*edge.term](sj) = y(n);
      tv.derivative[*edge.term](sj) = -(3.0 * y(n) - 4.0 * y(n - 1) + y(n - 2)) / (2.0 * h);
    }
  }
  return tv;
}

RVector quadrature_weights(std::size_t intervals, double h, Quadrature rule) {
  const auto n = static_cast<Eigen::Index>(intervals);
  RVector w = RVector::Zero(n + 1);
  if (rule == Quadrature::Trapezoid || intervals < 2) {
    w.setConstant(h);
    w(0) = w(n) = 0.5 * h;
    return w;
  }
  // Composite Simpson; an odd count closes with the 3/8 rule on the last three intervals.
  const Eigen::Index simpson_end = (intervals % 2 == 0) ? n : n - 3;
  for (Eigen::Index k = 0; k < simpson_end; k += 2) {
    w(k) += h / 3.0;
    w(k + 1) += 4.0 * h / 3.0;
    w(k + 2) += h / 3.0;
  }
  if (simpson_end != n) {
    const double c = 3.0 * h / 8.0;
    w(simpson_end) += c;
    w(simpson_end + 1) += 3.0 * c;
    w(simpson_end + 2) += 3.0 * c;
    w(simpson_end + 3) += c;
  }
  return w;
}

Norms norms(const GridFunction& f) {
  const Mesh& mesh = f.mesh();
  double l2 = 0.0, d2 = 0.0, linf = 0.0;
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    const CVector& y = f.on_edge(e);
    const double h = mesh.step(e);
    const Eigen::Index n = y.size() - 1;
    const RVector w = quadrature_weights(mesh.intervals(e), h, Quadrature::Trapezoid);
    CVector dy(n + 1);
    dy(0) = (-3.0 * y(0) + 4.0 * y(1) - y(2)) / (2.0 * h);
    dy(n) = (3.0 * y(n) - 4.0 * y(n - 1) + y(n - 2)) / (2.0 * h);
    for (Eigen::Index k = 1; k < n; ++k) dy(k) = (y(k + 1) - y(k - 1)) / (2.0 * h);
    for (Eigen::Index k = 0; k <= n; ++k) {
      l2 += w(k) * std::norm(y(k));
      d2 += w(k) * std::norm(dy(k));
      linf = std::max(linf, std::abs(y(k)));
    }
  }
  return {std::sqrt(l2), std::sqrt(d2), std::sqrt(l2 + d2), linf};
}

Complex inner(const GridFunction& f, const GridFunction& g, Quadrature rule) {
  if (!(f.mesh() == g.mesh())) throw InputError("inner product of functions on different meshes");
  Complex s = 0.0;
  for (std::size_t e = 0; e < f.mesh().num_edges(); ++e) {
    const RVector w = quadrature_weights(f.mesh().intervals(e), f.mesh().step(e), rule);
    s += (w.cast<Complex>().cwiseProduct(f.on_edge(e)).cwiseProduct(g.on_edge(e).conjugate())).sum();
  }
  return s;
}

double norm(const GridFunction& f, Quadrature rule) { return std::sqrt(std::max(0.0, inner(f, f, rule).real())); }

SobolevResult sobolev_check(const EdgeSamples& h, double a, double slack) {
  const auto n = h.values.size() - 1;
  if (h.values.size() < 2) throw InputError("sobolev_check needs at least two samples");
  if (!(a > 0.0)) throw InputError("sobolev_check needs a > 0");
  if (a > h.length * (1.0 + 1e-12)) throw InputError("sobolev_check: a exceeds the edge length");
  const double step = h.length / static_cast<double>(n);
  double l2 = 0.0, d2 = 0.0;
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(n); ++k) {
    const double t0 = step * static_cast<double>(k);
    if (t0 >= a) break;
    const Complex y0 = h.values(k), y1 = h.values(k + 1);
    const Complex slope = (y1 - y0) / step;
    const double width = std::min(step, a - t0);
    const Complex end = y0 + slope * width;
    // Exact integral of |linear|^2 over the (possibly partial) interval.
    l2 += width / 3.0 * (std::norm(y0) + (y0 * std::conj(end)).real() + std::norm(end));
    d2 += width * std::norm(slope);
  }
  SobolevResult r;
  r.lhs = std::norm(h.values(0));
  r.rhs = 2.0 / a * l2 + a * d2;
  r.holds = r.lhs <= r.rhs + slack * std::max(1.0, r.rhs);
  return r;
}

double smoothstep(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  return s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

double smoothstep_d1(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return 30.0 * s * s * (1.0 - s) * (1.0 - s);
}

double smoothstep_d2(double s) {
  if (s <= 0.0 || s >= 1.0) return 0.0;
  return 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
}

namespace {

// psi and its tau-derivatives on a stretch of length span, tau measured from
// the end at distance d_lo from x, the other end at distance d_hi.
std::array<double, 3> profile(double d_lo, double d_hi, double span, double tau, double n, double u) {
  const bool lo_in = d_lo < n, hi_in = d_hi < n;
  if (lo_in == hi_in) return {lo_in ? 1.0 : 0.0, 0.0, 0.0};
  if (hi_in) {
    auto v = profile(d_hi, d_lo, span, span - tau, n, u);
    return {v[0], -v[1], v[2]};
  }
  const double w = std::min(span, u);
  const double start = std::clamp(n - d_lo - 0.5 * w, 0.0, span - w);
  const double s = (tau - start) / w;
  return {1.0 - smoothstep(s), -smoothstep_d1(s) / w, -smoothstep_d2(s) / (w * w)};
}

}  // namespace

Cutoff cutoff(const MetricGraph& g, const Mesh& mesh, const Point& x, double n) {
  if (mesh.num_edges() != g.num_edges()) throw InputError("cutoff: mesh and graph disagree on edge count");
  g.check_point(x);
  const DistanceField dist(g, x);
  const double u = g.u();
  Cutoff out{GridFunction(mesh), GridFunction(mesh), GridFunction(mesh), (1.0 + 4.0 / u) * (1.0 + 4.0 / u)};

  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const Edge& edge = g.edge(e);
    const double len = mesh.length(e);
    const double a = dist.to_vertex(edge.init);
    const double b = edge.term ? dist.to_vertex(*edge.term) : kInfinity;
    const bool holds_origin = !x.is_vertex() && x.index == e;

    for (std::size_t k = 0; k < mesh.nodes(e); ++k) {
      const double t = mesh.node(e, k);
      std::array<double, 3> v{};
      if (holds_origin && t <= x.t) {
        v = profile(0.0, a, x.t, x.t - t, n, u);
        v[1] = -v[1];
      } else if (holds_origin) {
        v = profile(0.0, b, len - x.t, t - x.t, n, u);
      } else {
        v = profile(a, b, len, t, n, u);
      }
      const auto kk = static_cast<Eigen::Index>(k);
      out.value.on_edge(e)(kk) = v[0];
      out.d1.on_edge(e)(kk) = v[1];
      out.d2.on_edge(e)(kk) = v[2];
      out.sup_value = std::max(out.sup_value, std::abs(v[0]));
      out.sup_d1 = std::max(out.sup_d1, std::abs(v[1]));
      out.sup_d2 = std::max(out.sup_d2, std::abs(v[2]));
    }
  }
  return out;
}

std::string to_csv(const MetricGraph& g, const GridFunction& f) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "edge_id,t,re,im\n";
  for (std::size_t e = 0; e < f.mesh().num_edges(); ++e) {
    for (std::size_t k = 0; k < f.mesh().nodes(e); ++k) {
      const Complex z = f.on_edge(e)(static_cast<Eigen::Index>(k));
      out << g.edge(e).id << ',' << f.mesh().node(e, k) << ',' << z.real() << ',' << z.imag() << '\n';
    }
  }
  return out.str();
}

GridFunction grid_function_from_csv(const MetricGraph& g, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::map<std::size_t, std::vector<std::pair<double, Complex>>> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("edge_id", 0) == 0) continue;
    std::istringstream fields(line);
    std::string id, t, re, im;
    if (!std::getline(fields, id, ',') || !std::getline(fields, t, ',') || !std::getline(fields, re, ',') ||
        !std::getline(fields, im, ',')) {
      throw InputError("function CSV line " + std::to_string(line_no) + ": expected edge_id,t,re,im");
    }
    auto e = g.find_edge(id);
    if (!e) throw InputError("function CSV line " + std::to_string(line_no) + ": unknown edge '" + id + "'");
    try {
      rows[*e].push_back({std::stod(t), Complex(std::stod(re), std::stod(im))});
    } catch (const std::exception&) {
      throw InputError("function CSV line " + std::to_string(line_no) + ": malformed number");
    }
  }
  std::vector<double> lengths;
  std::vector<std::size_t> counts;
  std::vector<CVector> values;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    auto it = rows.find(e);
    if (it == rows.end()) throw InputError("function CSV has no rows for edge '" + g.edge(e).id + "'");
    auto pts = it->second;
    std::sort(pts.begin(), pts.end(), [](const auto& p, const auto& q) { return p.first < q.first; });
    const double len = g.numeric_length(e);
    const std::size_t n = pts.size() - 1;
    if (pts.size() < 3) throw InputError("function CSV: edge '" + g.edge(e).id + "' needs at least three nodes");
    const double h = len / static_cast<double>(n);
    for (std::size_t k = 0; k <= n; ++k) {
      if (std::abs(pts[k].first - h * static_cast<double>(k)) > 1e-9 * std::max(1.0, len)) {
        throw InputError("function CSV: nodes on edge '" + g.edge(e).id + "' are not a uniform grid on [0, l]");
      }
    }
    CVector v(static_cast<Eigen::Index>(n + 1));
    for (std::size_t k = 0; k <= n; ++k) v(static_cast<Eigen::Index>(k)) = pts[k].second;
    lengths.push_back(len);
    counts.push_back(n);
    values.push_back(std::move(v));
  }
  return GridFunction(Mesh(std::move(lengths), std::move(counts)), std::move(values));
}

}  // namespace qgraph
