#include "rpl/linalg.hpp"

#include "rpl/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rpl {

std::string shape_string(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

}  // namespace rpl

namespace rpl::linalg {
namespace {

void require_non_empty(const Matrix& a, const char* what) {
  if (a.size() == 0) {
    throw PreconditionError(std::string(what) + ": matrix is empty");
  }
}

void require_symmetric(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw PreconditionError(std::string(what) + ": matrix is not square (" + shape_string(a) + ")");
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double tol = kSymmetryTolerance * scale;
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = i + 1; j < a.cols(); ++j) {
      if (std::abs(a(i, j) - a(j, i)) > tol) {
        std::ostringstream os;
        os << what << ": matrix is not symmetric at entry (" << i << ", " << j << "): " << a(i, j)
           << " vs " << a(j, i);
        throw PreconditionError(os.str());
      }
    }
  }
}

Eigen::MatrixXd symmetrized(const Matrix& a) {
  Eigen::MatrixXd s = a;
  s = 0.5 * (s + s.transpose()).eval();
  return s;
}

}  // namespace

double frobenius_norm(const Matrix& a) {
  require_non_empty(a, "frobenius_norm");
  return a.norm();
}

double spectral_norm(const Matrix& a) {
  require_non_empty(a, "spectral_norm");
  return singular_values(a)[0];
}

SpectrumResult sym_eig(const Matrix& a) {
  require_non_empty(a, "sym_eig");
  require_symmetric(a, "sym_eig");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetrized(a), Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw Error("sym_eig: eigensolver did not converge");
  }
  SpectrumResult out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

Vector sym_eigenvalues(const Matrix& a) {
  require_non_empty(a, "sym_eigenvalues");
  require_symmetric(a, "sym_eigenvalues");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetrized(a), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw Error("sym_eigenvalues: eigensolver did not converge");
  }
  return solver.eigenvalues().reverse();
}

Vector singular_values(const Matrix& a) {
  require_non_empty(a, "singular_values");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
  return svd.singularValues();
}

std::size_t numeric_rank_from_singular_values(const Vector& sigma, double rel_tol) {
  if (!(rel_tol > 0.0)) {
    throw PreconditionError("numeric_rank: rel_tol must be positive");
  }
  if (sigma.size() == 0 || sigma[0] <= 0.0) {
    return 0;
  }
  const double cutoff = rel_tol * sigma[0];
  std::size_t rank = 0;
  for (Index i = 0; i < sigma.size(); ++i) {
    if (sigma[i] > cutoff) ++rank;
  }
  return rank;
}

std::size_t numeric_rank(const Matrix& a, double rel_tol) {
  return numeric_rank_from_singular_values(singular_values(a), rel_tol);
}

Matrix orthonormalize_columns(const Matrix& a) {
  require_non_empty(a, "orthonormalize_columns");
  Eigen::MatrixXd q = a;
  const Index cols = q.cols();
  for (Index j = 0; j < cols; ++j) {
    const double original = q.col(j).norm();
    if (!(original > 0.0)) {
      throw PreconditionError("orthonormalize_columns: column " + std::to_string(j) + " is zero");
    }
    for (int pass = 0; pass < 2; ++pass) {
      for (Index i = 0; i < j; ++i) {
        q.col(j) -= q.col(i).dot(q.col(j)) * q.col(i);
      }
    }
    const double remaining = q.col(j).norm();
    if (remaining <= 1e-10 * original) {
      throw PreconditionError("orthonormalize_columns: column " + std::to_string(j) +
                              " is linearly dependent on the preceding columns");
    }
    q.col(j) /= remaining;
  }
  return q;
}

PrincipalAngles principal_angles_full(const Matrix& u_basis, const Matrix& v_basis) {
  if (u_basis.rows() != v_basis.rows()) {
    throw PreconditionError("principal_angles: row counts differ (" + shape_string(u_basis) +
                            " vs " + shape_string(v_basis) + ")");
  }
  Eigen::MatrixXd u = orthonormalize_columns(u_basis);
  Eigen::MatrixXd v = orthonormalize_columns(v_basis);
  if (u.cols() < v.cols()) std::swap(u, v);
  const Index q = v.cols();

  const Eigen::MatrixXd overlap = u.transpose() * v;
  Eigen::JacobiSVD<Eigen::MatrixXd> cos_svd(overlap);
  const Eigen::MatrixXd residual = v - u * overlap;
  Eigen::JacobiSVD<Eigen::MatrixXd> sin_svd(residual);

  PrincipalAngles out;
  out.angles.resize(q);
  out.cosines.resize(q);
  out.sines.resize(q);
  for (Index i = 0; i < q; ++i) {
    const double c = std::clamp(cos_svd.singularValues()[i], 0.0, 1.0);
    const double s = std::clamp(sin_svd.singularValues()[q - 1 - i], 0.0, 1.0);
    const double theta = (c * c >= 0.5) ? std::asin(s) : std::acos(c);
    out.angles[i] = theta;
    out.cosines[i] = std::cos(theta);
    out.sines[i] = std::sin(theta);
  }
  return out;
}

Vector principal_angles(const Matrix& u_basis, const Matrix& v_basis) {
  return principal_angles_full(u_basis, v_basis).angles;
}

}  // namespace rpl::linalg
