#include "qgraph/fem.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>

#include <Eigen/Dense>

namespace qgraph {

namespace {

using Triplet = Eigen::Triplet<Complex>;

SparseMatrix hermitian_part(const SparseMatrix& m) {
  SparseMatrix adj = m.adjoint();
  SparseMatrix h = 0.5 * (m + adj);
  h.prune(Complex(0.0));
  return h;
}

SparseMatrix congruence(const SparseMatrix& T, const SparseMatrix& K) {
  SparseMatrix Tadj = T.adjoint();
  SparseMatrix tmp = K * T;
  SparseMatrix out = Tadj * tmp;
  return hermitian_part(out);
}

double one_norm(const SparseMatrix& m) {
  double best = 0.0;
  for (Eigen::Index c = 0; c < m.outerSize(); ++c) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

}  // namespace

SparseMatrix FormAssembly::op() const { return A - R + V; }

double FormAssembly::form(const CVector& x) const { return x.dot(op() * x).real(); }
double FormAssembly::mass(const CVector& x) const { return x.dot(B * x).real(); }
double FormAssembly::dirichlet(const CVector& x) const { return x.dot(A * x).real(); }
double FormAssembly::boundary(const CVector& x) const { return x.dot(R * x).real(); }

GridFunction FormAssembly::to_grid(const CVector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim) throw InputError("coefficient vector has the wrong length");
  const CVector nodal = T * x;
  std::vector<CVector> values;
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    values.push_back(nodal.segment(static_cast<Eigen::Index>(node_offset[e]), static_cast<Eigen::Index>(mesh.nodes(e))));
  }
  return GridFunction(mesh, std::move(values));
}

CVector FormAssembly::from_grid(const GridFunction& f) const {
  if (!(f.mesh() == mesh)) throw InputError("grid function is not on the assembly mesh");
  CVector x = CVector::Zero(static_cast<Eigen::Index>(dim));
  for (std::size_t v = 0; v < graph.num_vertices(); ++v) {
    CVector ends(static_cast<Eigen::Index>(graph.degree(v)));
    for (std::size_t s = 0; s < graph.degree(v); ++s) {
      const EdgeEnd end = graph.star(v).ends[s];
      const CVector& y = f.on_edge(end.edge);
      ends(static_cast<Eigen::Index>(s)) = end.end == End::Init ? y(0) : y(y.size() - 1);
    }
    x.segment(static_cast<Eigen::Index>(vertex_offset[v]), vertex_basis[v].cols()) = vertex_basis[v].adjoint() * ends;
  }
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    const auto n = static_cast<Eigen::Index>(mesh.intervals(e));
    x.segment(static_cast<Eigen::Index>(edge_offset[e]), n - 1) = f.on_edge(e).segment(1, n - 1);
  }
  return x;
}

FormAssembly assemble(const MetricGraph& g, const BoundaryCondition& bc, const Mesh& mesh) {
  if (!g.compact()) throw UnsupportedError("finite-element assembly needs a compact graph (all edges finite)");
  const BcReport report = validate_bc(g, bc);
  if (!report.ok()) {
    std::string msg = "invalid boundary condition:";
    for (const auto& v : report.violations) msg += " " + v.subject + " (" + v.condition + ")";
    throw InputError(msg);
  }
  if (mesh.num_edges() != g.num_edges()) throw InputError("mesh does not match the graph");
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    if (std::abs(mesh.length(e) - g.edge(e).length) > 1e-12 * g.edge(e).length) {
      throw InputError("mesh length of edge '" + g.edge(e).id + "' does not match the graph");
    }
  }

  FormAssembly fa;
  fa.graph = g;
  fa.bc = bc;
  fa.mesh = mesh;
  fa.heins = heins_constant(report.S, g.u());

  std::size_t next = 0;
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    fa.vertex_basis.push_back(kernel_basis(bc.at[v].P));
    fa.vertex_offset.push_back(next);
    next += static_cast<std::size_t>(fa.vertex_basis.back().cols());
  }
  std::size_t rows = 0;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    fa.edge_offset.push_back(next);
    fa.node_offset.push_back(rows);
    next += mesh.intervals(e) - 1;
    rows += mesh.nodes(e);
  }
  fa.dim = next;
  const auto dim = static_cast<Eigen::Index>(fa.dim);
  const auto nrows = static_cast<Eigen::Index>(rows);

  std::vector<Triplet> t_entries, k_entries, m_entries;
  auto end_node = [&](std::size_t row, std::size_t e, End end) {
    const std::size_t v = g.vertex_of({e, end});
    const auto slot = static_cast<Eigen::Index>(g.slot_of({e, end}));
    const CMatrix& Q = fa.vertex_basis[v];
    for (Eigen::Index j = 0; j < Q.cols(); ++j) {
      if (Q(slot, j) != Complex(0.0)) {
        t_entries.emplace_back(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(fa.vertex_offset[v]) + j, Q(slot, j));
      }
    }
  };
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const std::size_t n = mesh.intervals(e);
    const std::size_t base = fa.node_offset[e];
    end_node(base, e, End::Init);
    for (std::size_t k = 1; k < n; ++k) {
      t_entries.emplace_back(static_cast<Eigen::Index>(base + k), static_cast<Eigen::Index>(fa.edge_offset[e] + k - 1), 1.0);
    }
    end_node(base + n, e, End::Term);

    const double h = mesh.step(e);
    for (std::size_t k = 0; k < n; ++k) {
      const auto i = static_cast<Eigen::Index>(base + k);
      k_entries.emplace_back(i, i, 1.0 / h);
      k_entries.emplace_back(i + 1, i + 1, 1.0 / h);
      k_entries.emplace_back(i, i + 1, -1.0 / h);
      k_entries.emplace_back(i + 1, i, -1.0 / h);
      m_entries.emplace_back(i, i, h / 3.0);
      m_entries.emplace_back(i + 1, i + 1, h / 3.0);
      m_entries.emplace_back(i, i + 1, h / 6.0);
      m_entries.emplace_back(i + 1, i, h / 6.0);
    }
  }
  fa.T.resize(nrows, dim);
  fa.T.setFromTriplets(t_entries.begin(), t_entries.end());
  SparseMatrix K(nrows, nrows), M(nrows, nrows);
  K.setFromTriplets(k_entries.begin(), k_entries.end());
  M.setFromTriplets(m_entries.begin(), m_entries.end());
  fa.A = congruence(fa.T, K);
  fa.B = congruence(fa.T, M);

  std::vector<Triplet> r_entries;
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    const CMatrix& Q = fa.vertex_basis[v];
    const CMatrix block = Q.adjoint() * bc.at[v].L * Q;
    const auto off = static_cast<Eigen::Index>(fa.vertex_offset[v]);
    for (Eigen::Index i = 0; i < block.rows(); ++i) {
      for (Eigen::Index j = 0; j < block.cols(); ++j) {
        if (block(i, j) != Complex(0.0)) r_entries.emplace_back(off + i, off + j, block(i, j));
      }
    }
  }
  fa.R.resize(dim, dim);
  fa.R.setFromTriplets(r_entries.begin(), r_entries.end());
  fa.R = hermitian_part(fa.R);
  fa.V.resize(dim, dim);
  return fa;
}

FormAssembly assemble(const MetricGraph& g, const BoundaryCondition& bc, double h_max) {
  if (!g.compact()) throw UnsupportedError("finite-element assembly needs a compact graph (all edges finite)");
  return assemble(g, bc, Mesh::uniform(g, h_max));
}

FormAssembly with_potential(const FormAssembly& fa, const std::vector<RVector>& nodal) {
  if (nodal.size() != fa.mesh.num_edges()) throw InputError("potential must have one sample vector per edge");
  const auto nrows = fa.T.rows();
  std::vector<Triplet> entries;
  double vmin = 0.0;
  bool first = true;
  for (std::size_t e = 0; e < nodal.size(); ++e) {
    const RVector& w = nodal[e];
    if (static_cast<std::size_t>(w.size()) != fa.mesh.nodes(e)) {
      throw InputError("potential samples on edge '" + fa.graph.edge(e).id + "' do not match the mesh");
    }
    if (!w.allFinite()) throw InputError("potential values must be finite");
    const double h = fa.mesh.step(e);
    const auto base = static_cast<Eigen::Index>(fa.node_offset[e]);
    for (Eigen::Index k = 0; k + 1 < w.size(); ++k) {
      const double v0 = w(k), v1 = w(k + 1);
      entries.emplace_back(base + k, base + k, h / 12.0 * (3.0 * v0 + v1));
      entries.emplace_back(base + k + 1, base + k + 1, h / 12.0 * (v0 + 3.0 * v1));
      entries.emplace_back(base + k, base + k + 1, h / 12.0 * (v0 + v1));
      entries.emplace_back(base + k + 1, base + k, h / 12.0 * (v0 + v1));
    }
    const double m = w.minCoeff();
    vmin = first ? m : std::min(vmin, m);
    first = false;
  }
  SparseMatrix MV(nrows, nrows);
  MV.setFromTriplets(entries.begin(), entries.end());
  FormAssembly out = fa;
  out.V = congruence(fa.T, MV);
  out.v_min = vmin;
  return out;
}

void fix_column_phases(CMatrix& x) {
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const double top = x.col(c).cwiseAbs().maxCoeff();
    if (top == 0.0) continue;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      if (std::abs(x(r, c)) >= top * (1.0 - 1e-9)) {
        x.col(c) *= std::conj(x(r, c)) / std::abs(x(r, c));
        break;
      }
    }
  }
}

namespace {

void finish(DiscreteEigensystem& es, const SparseMatrix& H, const SparseMatrix& B) {
  fix_column_phases(es.vectors);
  const double hn = std::max(one_norm(H), 1e-300);
  es.max_residual = 0.0;
  for (Eigen::Index k = 0; k < es.vectors.cols(); ++k) {
    const CVector r = H * es.vectors.col(k) - es.values(k) * (B * es.vectors.col(k));
    es.max_residual = std::max(es.max_residual, r.norm() / hn);
  }
}

}  // namespace

DiscreteEigensystem eigensystem(const FormAssembly& fa, std::size_t k, const EigenOptions& opt) {
  if (k > fa.dim) {
    throw InputError("requested " + std::to_string(k) + " eigenpairs but the discrete space has dimension " +
                     std::to_string(fa.dim));
  }
  const SparseMatrix H = fa.op();
  DiscreteEigensystem es;
  es.h_max = fa.mesh.h_max();
  if (k == 0) return es;
  if (fa.dim <= opt.dense_limit) {
    const CMatrix Hd(H), Bd(fa.B);
    Eigen::GeneralizedSelfAdjointEigenSolver<CMatrix> solver(Hd, Bd);
    if (solver.info() != Eigen::Success) throw NumericalError("dense generalized eigensolver failed");
    es.values = solver.eigenvalues().head(static_cast<Eigen::Index>(k));
    es.vectors = solver.eigenvectors().leftCols(static_cast<Eigen::Index>(k));
  } else {
    const double sigma = -fa.heins.C - 1.0 - std::max(0.0, -fa.v_min);
    DiscreteEigensystem it = sparse_lowest(H, fa.B, k, sigma, opt);
    es.values = it.values;
    es.vectors = it.vectors;
    es.iterative = true;
  }
  finish(es, H, fa.B);
  return es;
}

DiscreteEigensystem eigensystem_below(const FormAssembly& fa, double lambda_max, const EigenOptions& opt) {
  std::size_t k = std::min<std::size_t>(fa.dim, 16);
  DiscreteEigensystem es = eigensystem(fa, k, opt);
  while (k < fa.dim && es.values.size() > 0 && es.values(es.values.size() - 1) <= lambda_max) {
    k = std::min(fa.dim, 2 * k);
    es = eigensystem(fa, k, opt);
  }
  Eigen::Index keep = 0;
  while (keep < es.values.size() && es.values(keep) <= lambda_max) ++keep;
  es.values.conservativeResize(keep);
  es.vectors.conservativeResize(Eigen::NoChange, keep);
  return es;
}

std::vector<CVector> form_samples(const FormAssembly& fa, std::size_t count, std::uint64_t seed) {
  std::vector<CVector> out;
  if (fa.dim == 0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto cnormal = [&] {
    const double re = normal(rng);
    return Complex(re, normal(rng));
  };
  const auto dim = static_cast<Eigen::Index>(fa.dim);
  std::vector<std::size_t> free_vertices;
  for (std::size_t v = 0; v < fa.graph.num_vertices(); ++v) {
    if (fa.vertex_basis[v].cols() > 0) free_vertices.push_back(v);
  }

  while (out.size() < count) {
    const std::size_t family = out.size() % 3;
    CVector x = CVector::Zero(dim);
    if (family == 0 || (family == 2 && free_vertices.empty())) {
      for (Eigen::Index i = 0; i < dim; ++i) x(i) = cnormal();
    } else if (family == 1) {
      for (std::size_t v = 0; v < fa.graph.num_vertices(); ++v) {
        for (Eigen::Index j = 0; j < fa.vertex_basis[v].cols(); ++j) {
          x(static_cast<Eigen::Index>(fa.vertex_offset[v]) + j) = cnormal();
        }
      }
      for (std::size_t e = 0; e < fa.mesh.num_edges(); ++e) {
        const double scale = std::sqrt(fa.mesh.step(e));
        Complex walk = cnormal();
        for (std::size_t k = 1; k < fa.mesh.intervals(e); ++k) {
          walk += scale * cnormal();
          x(static_cast<Eigen::Index>(fa.edge_offset[e] + k - 1)) = walk;
        }
      }
    } else {
      const std::size_t v = free_vertices[static_cast<std::size_t>(unit(rng) * static_cast<double>(free_vertices.size())) %
                                          free_vertices.size()];
      const CMatrix& Q = fa.vertex_basis[v];
      CVector c(Q.cols());
      for (Eigen::Index j = 0; j < c.size(); ++j) c(j) = cnormal();
      x.segment(static_cast<Eigen::Index>(fa.vertex_offset[v]), c.size()) = c;
      const CVector ends = Q * c;
      const double h = fa.mesh.h_max();
      const double rho = h * std::pow(fa.graph.u() / h, unit(rng));
      const auto& star = fa.graph.star(v);
      for (std::size_t s = 0; s < star.degree(); ++s) {
        const EdgeEnd end = star.ends[s];
        const std::size_t n = fa.mesh.intervals(end.edge);
        for (std::size_t k = 1; k < n; ++k) {
          const double t = fa.mesh.node(end.edge, k);
          const double tau = end.end == End::Init ? t : fa.mesh.length(end.edge) - t;
          x(static_cast<Eigen::Index>(fa.edge_offset[end.edge] + k - 1)) += ends(static_cast<Eigen::Index>(s)) * std::exp(-tau / rho);
        }
      }
    }
    const double m = fa.mass(x);
    if (m > 0.0) out.push_back(x / std::sqrt(m));
  }
  return out;
}

double heins_margin(const FormAssembly& fa, const HeinsConstant& hc, const CVector& x) {
  const double l2 = fa.mass(x);
  const double d2 = fa.dirichlet(x);
  const double s0 = d2 - fa.boundary(x);
  return s0 + hc.C * l2 - 0.5 * (l2 + d2);
}

MarginReport check_heins(const FormAssembly& fa, const HeinsConstant& hc, const std::vector<CVector>& samples) {
  MarginReport r;
  r.samples = samples.size();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double m = heins_margin(fa, hc, samples[i]);
    if (i == 0 || m < r.worst) {
      r.worst = m;
      r.worst_sample = i;
    }
  }
  return r;
}

double randterm_margin(const FormAssembly& fa, double eps, const CVector& x) {
  const double S = fa.heins.S;
  return 4.0 * S / eps * fa.mass(x) + 2.0 * S * eps * fa.dirichlet(x) - fa.boundary(x);
}

MarginReport check_randterm(const FormAssembly& fa, double eps, const std::vector<CVector>& samples) {
  if (!(eps > 0.0) || eps > fa.graph.u() * (1.0 + 1e-12)) throw InputError("randterm check needs 0 < eps <= u");
  MarginReport r;
  r.samples = samples.size();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double m = randterm_margin(fa, eps, samples[i]);
    if (i == 0 || m < r.worst) {
      r.worst = m;
      r.worst_sample = i;
    }
  }
  return r;
}

std::string spectrum_csv(const RVector& values) {
  std::ostringstream out;
  out << std::setprecision(17) << "index,eigenvalue\n";
  for (Eigen::Index k = 0; k < values.size(); ++k) out << k + 1 << ',' << values(k) << '\n';
  return out.str();
}

std::string matrix_dump(const SparseMatrix& m) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "% " << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  for (Eigen::Index c = 0; c < m.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(m, c); it; ++it) {
      out << it.row() << ' ' << it.col() << ' ' << it.value().real() << ' ' << it.value().imag() << '\n';
    }
  }
  return out.str();
}

}  // namespace qgraph
