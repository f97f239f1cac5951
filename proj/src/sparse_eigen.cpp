#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "qgraph/fem.hpp"

namespace qgraph {

DiscreteEigensystem sparse_lowest(const SparseMatrix& H, const SparseMatrix& B, std::size_t k, double sigma,
                                  const EigenOptions& opt) {
  const Eigen::Index n = H.rows();
  const auto kk = static_cast<Eigen::Index>(k);
  if (kk > n) throw InputError("more eigenpairs requested than unknowns");
  const Eigen::Index p = std::min<Eigen::Index>(n, std::max<Eigen::Index>(2 * kk, kk + 8));

  SparseMatrix K = H - sigma * B;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(K);
  if (ldlt.info() != Eigen::Success) throw NumericalError("factorization of the shifted operator failed");

  double hnorm = 0.0;
  for (Eigen::Index c = 0; c < H.outerSize(); ++c) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(H, c); it; ++it) s += std::abs(it.value());
    hnorm = std::max(hnorm, s);
  }

  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> normal(0.0, 1.0);
  CMatrix X(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) X(i, j) = normal(rng);
  }

  DiscreteEigensystem es;
  for (std::size_t iter = 0; iter < opt.max_iterations; ++iter) {
    CMatrix Y = ldlt.solve(B * X);
    Eigen::HouseholderQR<CMatrix> qr(Y);
    const CMatrix Q = qr.householderQ() * CMatrix::Identity(n, p);
    CMatrix Hp = Q.adjoint() * (H * Q);
    CMatrix Bp = Q.adjoint() * (B * Q);
    Hp = 0.5 * (Hp + Hp.adjoint()).eval();
    Bp = 0.5 * (Bp + Bp.adjoint()).eval();
    Eigen::GeneralizedSelfAdjointEigenSolver<CMatrix> small(Hp, Bp);
    if (small.info() != Eigen::Success) throw NumericalError("Rayleigh-Ritz step failed");
    X = Q * small.eigenvectors();

    bool converged = true;
    for (Eigen::Index j = 0; j < kk && converged; ++j) {
      const CVector r = H * X.col(j) - small.eigenvalues()(j) * (B * X.col(j));
      converged = r.norm() <= opt.tol * hnorm;
    }
    if (converged) {
      es.values = small.eigenvalues().head(kk);
      es.vectors = X.leftCols(kk);
      es.iterative = true;
      return es;
    }
  }
  throw NumericalError("subspace iteration did not converge");
}

}  // namespace qgraph
