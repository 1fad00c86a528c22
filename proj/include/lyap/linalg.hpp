#pragma once

#include "lyap/types.hpp"

namespace lyap {

/// Solve A^T P + P A = -Q by a complex Schur factorization A = U T U^H and
/// substitution on the triangular equation T^H Y + Y T = -U^H Q U.
/// Requires lambda_i + conj(lambda_j) != 0 for all eigenvalue pairs.
Matrix solve_lyapunov(const Matrix& A, const Matrix& Q);

/// A^T P + P A + Q.
inline Matrix lyapunov_residual(const Matrix& A, const Matrix& P, const Matrix& Q) {
  return A.transpose() * P + P * A + Q;
}

/// Largest real part of the eigenvalues.
double spectral_abscissa(const Matrix& A);
/// Operator 2-norm.
double spectral_norm(const Matrix& A);
/// Extreme eigenvalues of the symmetric part.
double min_eigenvalue(const Matrix& S);
double max_eigenvalue(const Matrix& S);

inline Matrix symmetrize(const Matrix& S) { return 0.5 * (S + S.transpose()); }

/// Symmetric within `sym_tol` and a Cholesky factorization succeeds.
bool is_positive_definite(const Matrix& S, double sym_tol = 1e-12);

}  // namespace lyap
