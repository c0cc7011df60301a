#pragma once

#include "rpl/matrix.hpp"

#include <cstddef>

namespace rpl::linalg {

inline constexpr double kDefaultRankTolerance = 1e-8;
inline constexpr double kSymmetryTolerance = 1e-10;

// Eigenpairs of a symmetric matrix, eigenvalues sorted descending and the
// columns of `eigenvectors` aligned with them.
struct SpectrumResult {
  Vector eigenvalues;
  Matrix eigenvectors;
};

double frobenius_norm(const Matrix& a);

// Largest singular value.
double spectral_norm(const Matrix& a);

// Full symmetric eigendecomposition. Throws PreconditionError for non-square
// input or when |A_ij - A_ji| exceeds kSymmetryTolerance * max|A|; the
// message names the offending entry.
SpectrumResult sym_eig(const Matrix& a);

// Eigenvalues only (descending); same preconditions as sym_eig.
Vector sym_eigenvalues(const Matrix& a);

// min(rows, cols) singular values, descending.
Vector singular_values(const Matrix& a);

// Number of singular values strictly greater than rel_tol * sigma_max.
std::size_t numeric_rank(const Matrix& a, double rel_tol = kDefaultRankTolerance);
std::size_t numeric_rank_from_singular_values(const Vector& sigma,
                                              double rel_tol = kDefaultRankTolerance);

// Modified Gram-Schmidt with one re-orthogonalization pass. Throws
// PreconditionError when a column is (numerically) dependent on the
// preceding ones.
Matrix orthonormalize_columns(const Matrix& a);

// Principal angles between range(u_basis) and range(v_basis), ascending, in
// [0, pi/2]. Small angles are recovered from sines and large ones from
// cosines, so both ends keep full relative accuracy.
struct PrincipalAngles {
  Vector angles;
  Vector cosines;  // aligned with angles
  Vector sines;    // aligned with angles
  double largest() const { return angles.size() ? angles[angles.size() - 1] : 0.0; }
  double sin_largest() const { return sines.size() ? sines[sines.size() - 1] : 0.0; }
};

PrincipalAngles principal_angles_full(const Matrix& u_basis, const Matrix& v_basis);

Vector principal_angles(const Matrix& u_basis, const Matrix& v_basis);

}  // namespace rpl::linalg
