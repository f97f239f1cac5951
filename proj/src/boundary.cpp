#include "qgraph/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace qgraph {

namespace {

double relative_deviation(const CMatrix& deviation, const CMatrix& reference) {
  return deviation.norm() / std::max(1.0, reference.norm());
}

// Makes the first entry of largest modulus real and positive.
void fix_phase(CMatrix& basis) {
  for (Eigen::Index c = 0; c < basis.cols(); ++c) {
    Eigen::Index best = 0;
    double best_abs = -1.0;
    for (Eigen::Index r = 0; r < basis.rows(); ++r) {
      if (std::abs(basis(r, c)) > best_abs + 1e-12) {
        best_abs = std::abs(basis(r, c));
        best = r;
      }
    }
    if (best_abs > 0.0) basis.col(c) *= std::conj(basis(best, c)) / best_abs;
  }
}

CMatrix spectral_subspace(const CMatrix& P, bool kernel) {
  const Eigen::Index d = P.rows();
  if (d == 0) return CMatrix(0, 0);
  const CMatrix herm = 0.5 * (P + P.adjoint());
  if (herm.norm() < 1e-14) return kernel ? CMatrix(CMatrix::Identity(d, d)) : CMatrix(d, 0);
  if ((herm - CMatrix::Identity(d, d)).norm() < 1e-14) {
    return kernel ? CMatrix(d, 0) : CMatrix(CMatrix::Identity(d, d));
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(herm);
  std::vector<Eigen::Index> cols;
  for (Eigen::Index i = 0; i < d; ++i) {
    const bool in_kernel = es.eigenvalues()(i) < 0.5;
    if (in_kernel == kernel) cols.push_back(i);
  }
  CMatrix basis(d, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) basis.col(static_cast<Eigen::Index>(k)) = es.eigenvectors().col(cols[k]);
  fix_phase(basis);
  return basis;
}

}  // namespace

double positive_part_norm(const CMatrix& L) {
  if (L.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (L + L.adjoint()), Eigen::EigenvaluesOnly);
  return std::max(0.0, es.eigenvalues().maxCoeff());
}

BcReport validate_bc(const MetricGraph& g, const BoundaryCondition& bc, double tol) {
  if (bc.at.size() != g.num_vertices()) {
    throw InputError("boundary condition covers " + std::to_string(bc.at.size()) + " vertices, graph has " +
                     std::to_string(g.num_vertices()));
  }
  BcReport report;
  report.positive_part.assign(g.num_vertices(), 0.0);
  for (std::size_t v = 0; v < g.num_vertices(); ++v) {
    const auto d = static_cast<Eigen::Index>(g.degree(v));
    const auto& vc = bc.at[v];
    const std::string subject = "vertex:" + g.vertex_id(v);
    if (vc.L.rows() != d || vc.L.cols() != d || vc.P.rows() != d || vc.P.cols() != d) {
      throw InputError("matrices at " + subject + " must be " + std::to_string(d) + "x" + std::to_string(d));
    }
    if (relative_deviation(vc.L - vc.L.adjoint(), vc.L) > tol) {
      report.violations.push_back({subject, "L-self-adjoint", "L_v is not self-adjoint"});
    }
    if (relative_deviation(vc.P - vc.P.adjoint(), vc.P) > tol) {
      report.violations.push_back({subject, "P-self-adjoint", "P_v is not self-adjoint"});
    }
    if (relative_deviation(vc.P * vc.P - vc.P, vc.P) > tol) {
      report.violations.push_back({subject, "P-idempotent", "P_v is not idempotent"});
    }
    report.positive_part[v] = positive_part_norm(vc.L);
    report.S = std::max(report.S, report.positive_part[v]);

    const CMatrix complement = CMatrix::Identity(d, d) - vc.P;
    if (d > 0 && relative_deviation(vc.P * vc.L * complement, vc.L) > tol) {
      report.notes.push_back(subject + ": P_v L_v (1 - P_v) != 0; the operator condition adds P_v L_v f(v) = 0");
    }
  }
  return report;
}

VertexCondition make_preset(const Preset& preset, std::size_t degree) {
  const auto d = static_cast<Eigen::Index>(degree);
  const CMatrix ones = CMatrix::Ones(d, d);
  const double dd = static_cast<double>(degree);
  switch (preset.kind) {
    case Preset::Kind::Dirichlet:
      return {CMatrix::Zero(d, d), CMatrix::Identity(d, d)};
    case Preset::Kind::Neumann:
      return {CMatrix::Zero(d, d), CMatrix::Zero(d, d)};
    case Preset::Kind::Kirchhoff:
      return {CMatrix::Zero(d, d), CMatrix::Identity(d, d) - ones / dd};
    case Preset::Kind::Delta:
      return {-(preset.alpha / (dd * dd)) * ones, CMatrix::Identity(d, d) - ones / dd};
  }
  throw InputError("unknown preset");
}

BoundaryCondition uniform_bc(const MetricGraph& g, const Preset& preset) {
  BoundaryCondition bc;
  for (std::size_t v = 0; v < g.num_vertices(); ++v) bc.at.push_back(make_preset(preset, g.degree(v)));
  return bc;
}

CMatrix kernel_basis(const CMatrix& P) { return spectral_subspace(P, true); }
CMatrix range_basis(const CMatrix& P) { return spectral_subspace(P, false); }

HeinsConstant heins_constant(double S, double u) {
  if (S < 0.0 || !(u > 0.0)) throw InputError("heins_constant needs S >= 0 and u > 0");
  HeinsConstant hc;
  hc.S = S;
  hc.u = u;
  if (S > 0.0) {
    hc.eps0 = std::min(u, 1.0 / (4.0 * S));
    hc.C = 4.0 * S / hc.eps0 + 0.5;
  } else {
    hc.eps0 = u;
    hc.C = 0.5;
  }
  return hc;
}

}  // namespace qgraph
