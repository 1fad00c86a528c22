#include "lyap/linalg.hpp"

#include <complex>

#include <Eigen/Eigenvalues>

#include "lyap/error.hpp"

namespace lyap {

Matrix solve_lyapunov(const Matrix& A, const Matrix& Q) {
  using Complex = std::complex<double>;
  using CMatrix = Eigen::MatrixXcd;
  const Eigen::Index n = A.rows();
  if (A.cols() != n || Q.rows() != n || Q.cols() != n) throw Error("Lyapunov solve: dimension mismatch");

  Eigen::ComplexSchur<Matrix> schur(A);
  if (schur.info() != Eigen::Success) throw NumericalError("Schur factorization failed");
  const CMatrix& U = schur.matrixU();
  const CMatrix& T = schur.matrixT();
  const CMatrix C = -(U.adjoint() * Q.cast<Complex>() * U);

  CMatrix Y = CMatrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Complex rhs = C(i, j);
      for (Eigen::Index k = 0; k < i; ++k) rhs -= std::conj(T(k, i)) * Y(k, j);
      for (Eigen::Index k = 0; k < j; ++k) rhs -= Y(i, k) * T(k, j);
      const Complex d = std::conj(T(i, i)) + T(j, j);
      if (std::abs(d) < 1e-14 * (1.0 + T.cwiseAbs().maxCoeff()))
        throw NumericalError("Lyapunov equation is singular (eigenvalues sum to zero)");
      Y(i, j) = rhs / d;
    }
  }
  const Matrix P = (U * Y * U.adjoint()).real();
  return symmetrize(P);
}

double spectral_abscissa(const Matrix& A) {
  Eigen::EigenSolver<Matrix> es(A, false);
  return es.eigenvalues().real().maxCoeff();
}

double spectral_norm(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  if (A.size() == 1) return std::abs(A(0, 0));
  Eigen::JacobiSVD<Matrix> svd(A);
  return svd.singularValues()(0);
}

double min_eigenvalue(const Matrix& S) {
  if (S.size() == 1) return S(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const Matrix& S) {
  if (S.size() == 1) return S(0, 0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(S), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

bool is_positive_definite(const Matrix& S, double sym_tol) {
  if (S.rows() != S.cols() || S.size() == 0) return false;
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > sym_tol * std::max(1.0, S.cwiseAbs().maxCoeff()))
    return false;
  Eigen::LLT<Matrix> llt(symmetrize(S));
  return llt.info() == Eigen::Success;
}

}  // namespace lyap
