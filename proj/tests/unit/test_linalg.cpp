#include "oracles.hpp"
#include "rpl/error.hpp"
#include "rpl/linalg.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace rpl;

namespace {

Matrix fixed_x() {
  Matrix x(4, 3);
  x << 1, 2, 0, 0, 1, -1, 2, 0, 1, -1, 1, 1;
  return x;
}

}  // namespace

TEST(SymEig, FrozenGramSpectrum) {
  const Matrix x = fixed_x();
  const Vector lambda = linalg::sym_eigenvalues(x * x.transpose());
  // numpy.linalg.eigvalsh
  EXPECT_NEAR(lambda[0], 7.1284190638445768, 1e-12);
  EXPECT_NEAR(lambda[1], 5.2016396757234054, 1e-12);
  EXPECT_NEAR(lambda[2], 2.6699412604320183, 1e-12);
  EXPECT_NEAR(lambda[3], 0.0, 1e-12);
}

TEST(SymEig, MatchesJacobiOnRandomSymmetric) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Matrix g = oracle::gaussian_matrix(12, 12, seed);
    const Matrix a = g + g.transpose();
    const Vector lambda = linalg::sym_eigenvalues(a);
    const auto ref = oracle::jacobi_eigenvalues(a);
    for (Index i = 0; i < lambda.size(); ++i) EXPECT_NEAR(lambda[i], ref[static_cast<std::size_t>(i)], 1e-10);
  }
}

TEST(SymEig, ReconstructsInput) {
  const Matrix g = oracle::gaussian_matrix(30, 30, 5);
  const Matrix a = g * g.transpose();
  const auto s = linalg::sym_eig(a);
  const Matrix back = s.eigenvectors * s.eigenvalues.asDiagonal() * s.eigenvectors.transpose();
  EXPECT_LT((back - a).norm() / a.norm(), 1e-12);
  for (Index i = 1; i < s.eigenvalues.size(); ++i) EXPECT_GE(s.eigenvalues[i - 1], s.eigenvalues[i]);
}

TEST(SymEig, ThreeByThreeFrozen) {
  Matrix s(3, 3);
  s << 4, 1, 0.5, 1, 3, 0.25, 0.5, 0.25, 2;
  const Vector lambda = linalg::sym_eigenvalues(s);
  EXPECT_NEAR(lambda[0], 4.731559415452212, 1e-13);
  EXPECT_NEAR(lambda[1], 2.3867603743778876, 1e-13);
  EXPECT_NEAR(lambda[2], 1.881680210169898, 1e-13);
}

TEST(SymEig, RejectsAsymmetricNamingEntry) {
  Matrix a = Matrix::Identity(3, 3);
  a(0, 2) = 1.0;
  try {
    linalg::sym_eig(a);
    FAIL() << "expected PreconditionError";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("(0, 2)"), std::string::npos) << e.what();
  }
  EXPECT_THROW(linalg::sym_eig(Matrix::Zero(2, 3)), PreconditionError);
}

TEST(SingularValues, FrozenAndPowerIteration) {
  const Vector s = linalg::singular_values(fixed_x());
  EXPECT_NEAR(s[0], 2.669909935530519, 1e-13);
  EXPECT_NEAR(s[1], 2.2807103445469368, 1e-13);
  EXPECT_NEAR(s[2], 1.633995489722055, 1e-13);
  const Matrix g = oracle::gaussian_matrix(20, 7, 9);
  EXPECT_NEAR(linalg::spectral_norm(g), oracle::power_iteration_norm(g), 1e-8);
}

TEST(Norms, Frobenius) {
  Matrix a(2, 2);
  a << 3, 0, 0, 4;
  EXPECT_DOUBLE_EQ(linalg::frobenius_norm(a), 5.0);
}

TEST(NumericRank, DetectsDeficiency) {
  const Matrix a = oracle::gaussian_matrix(10, 2, 3) * oracle::gaussian_matrix(2, 6, 4);
  EXPECT_EQ(linalg::numeric_rank(a), 2u);
  EXPECT_EQ(linalg::numeric_rank(Matrix::Zero(3, 3)), 0u);
  EXPECT_EQ(linalg::numeric_rank(Matrix::Identity(4, 4)), 4u);
  EXPECT_THROW(linalg::numeric_rank(a, 0.0), PreconditionError);
}

TEST(Orthonormalize, ProducesOrthonormalColumns) {
  const Matrix a = oracle::gaussian_matrix(15, 6, 11);
  const Matrix q = linalg::orthonormalize_columns(a);
  EXPECT_LT((q.transpose() * q - Matrix::Identity(6, 6)).norm(), 1e-13);
  // same span: projecting a onto range(q) is lossless
  EXPECT_LT((q * (q.transpose() * a) - a).norm(), 1e-12);
}

TEST(Orthonormalize, RejectsDependentColumns) {
  Matrix a(3, 2);
  a << 1, 2, 1, 2, 0, 0;
  EXPECT_THROW(linalg::orthonormalize_columns(a), PreconditionError);
}

TEST(PrincipalAngles, FrozenScipyValues) {
  Matrix a(4, 2);
  a << 1, 0, 0, 1, 0, 0, 0, 0;
  Matrix b(4, 2);
  b << 1, 1, 0, 1, 1, 0, 0, 2;
  const Vector theta = linalg::principal_angles(a, b);
  // scipy.linalg.subspace_angles, sorted ascending
  EXPECT_NEAR(theta[0], 0.7182815164799343, 1e-13);
  EXPECT_NEAR(theta[1], 1.1587921794846319, 1e-13);
}

TEST(PrincipalAngles, SmallAngleAccuracy) {
  for (double angle : {1e-9, 1e-5, 0.3, 1.2, 1.5707963267948966}) {
    Matrix a(3, 1);
    a << 1, 0, 0;
    Matrix b(3, 1);
    b << std::cos(angle), std::sin(angle), 0;
    const auto pa = linalg::principal_angles_full(a, b);
    EXPECT_NEAR(pa.largest(), angle, 1e-15 + 1e-12 * angle);
    EXPECT_NEAR(pa.sin_largest(), std::sin(angle), 1e-15);
  }
}

TEST(PrincipalAngles, InvariantToBasisChoice) {
  const Matrix u = oracle::gaussian_matrix(10, 3, 21);
  const Matrix v = oracle::gaussian_matrix(10, 3, 22);
  const Matrix mix = oracle::gaussian_matrix(3, 3, 23);
  const Vector t1 = linalg::principal_angles(u, v);
  const Vector t2 = linalg::principal_angles(u * mix, v);
  EXPECT_LT((t1 - t2).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT(linalg::principal_angles(u, u * mix).cwiseAbs().maxCoeff(), 1e-12);
}
