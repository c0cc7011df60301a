#include "oracles.hpp"
#include "rpl/error.hpp"
#include "rpl/guarantees.hpp"

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace rpl;
using audit::Verdict;

namespace {

Matrix perturbed(const Matrix& x, double scale, std::uint64_t seed) {
  return x + scale * oracle::gaussian_matrix(x.rows(), x.cols(), seed);
}

}  // namespace

TEST(Epsilon, SquaredFrobenius) {
  Matrix a = Matrix::Zero(2, 2);
  Matrix b(2, 2);
  b << 1, 2, 2, 0;
  EXPECT_DOUBLE_EQ(audit::compute_epsilon(a, b), 9.0);
  EXPECT_THROW(audit::compute_epsilon(a, Matrix::Zero(3, 3)), PreconditionError);
}

TEST(Serfling, FrozenBound) {
  EXPECT_NEAR(audit::serfling_bound(3.5, 32, 256, 0.7, 0.05), 99.18012706725165, 1e-10);
  EXPECT_THROW(audit::serfling_bound(1.0, 4, 0, 1.0, 0.05), PreconditionError);
  EXPECT_THROW(audit::serfling_bound(1.0, 4, 17, 1.0, 0.05), PreconditionError);
  EXPECT_THROW(audit::serfling_bound(1.0, 4, 4, 1.0, 1.0), PreconditionError);
}

TEST(Serfling, SampleIsUniformWithoutReplacement) {
  const Matrix delta = oracle::gaussian_matrix(6, 6, 1);
  const auto full = audit::sample_epsilon_hat(delta, 36, 3);
  EXPECT_NEAR(full.epsilon_hat, delta.squaredNorm(), 1e-12);
  const auto s = audit::sample_epsilon_hat(delta, 10, 4);
  ASSERT_EQ(s.pairs.size(), 10u);
  for (std::size_t i = 1; i < s.pairs.size(); ++i) EXPECT_LT(s.pairs[i - 1], s.pairs[i]);
  // every entry appears with probability m / n^2
  std::vector<int> hits(36, 0);
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    for (const auto& [i, j] : audit::sample_epsilon_hat(delta, 9, static_cast<std::uint64_t>(t)).pairs) {
      ++hits[i * 6 + j];
    }
  }
  for (int h : hits) EXPECT_NEAR(h / static_cast<double>(trials), 0.25, 0.02);
}

TEST(Serfling, ScaledEstimateIsUnbiased) {
  const Matrix x = oracle::gaussian_matrix(20, 5, 31);
  const Matrix delta = x * x.transpose() - perturbed(x, 0.2, 32) * perturbed(x, 0.2, 32).transpose();
  const double eps = delta.squaredNorm();
  const std::size_t m = 100;
  double sum = 0.0;
  int violations = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) {
    const double e_hat = audit::sample_epsilon_hat(delta, m, 5000 + static_cast<std::uint64_t>(t)).epsilon_hat;
    sum += 400.0 / m * e_hat;
    if (eps > audit::serfling_bound(e_hat, 20, m, delta.cwiseAbs().maxCoeff(), 0.05)) ++violations;
  }
  EXPECT_NEAR(sum / trials / eps, 1.0, 0.01);
  EXPECT_LE(violations / static_cast<double>(trials), 0.07);
}

TEST(Serfling, BoundDecreasesInM) {
  // fixed scaled estimate (n^2/m) eps_hat = 50
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t m = 8; m <= 1024; m += 8) {
    const double e_hat = 50.0 * static_cast<double>(m) / 1024.0;
    const double rhs = audit::serfling_bound(e_hat, 32, m, 2.0, 0.05);
    EXPECT_LT(rhs, previous) << "m = " << m;
    previous = rhs;
  }
}

TEST(Entrywise, OrthogonalRowsStayNearlyOrthogonal) {
  Matrix x = Matrix::Zero(4, 4);
  x.diagonal() << 1, 2, 3, 4;
  const Matrix y = perturbed(x, 0.01, 2);
  const Matrix gx = x * x.transpose();
  const Matrix gy = y * y.transpose();
  const double eps = audit::compute_epsilon(gx, gy);
  const auto checks = audit::orthogonality_audit(x, y, eps, 1e-10);
  EXPECT_EQ(checks.size(), 6u);
  for (const auto& c : checks) EXPECT_TRUE(c.pass);
  const auto tight = audit::entrywise_audit(gx, gy, 0.0, 1e-10);
  bool any_fail = false;
  for (const auto& c : tight) any_fail = any_fail || !c.pass;
  EXPECT_TRUE(any_fail);
}

TEST(Weyl, DisplacementWithinPerturbationNorm) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Matrix x = oracle::gaussian_matrix(15, 4, seed);
    const Matrix y = perturbed(x, 0.1, seed + 100);
    const Matrix gx = x * x.transpose();
    const Matrix gy = y * y.transpose();
    const double eps = audit::compute_epsilon(gx, gy);
    const auto w = audit::weyl_audit(linalg::sym_eigenvalues(gx), linalg::sym_eigenvalues(gy), eps);
    EXPECT_EQ(w.verdict, Verdict::Pass);
    // the spectral norm is the sharper bound and must also hold
    EXPECT_LE(w.max_displacement, oracle::power_iteration_norm(gx - gy) * (1 + 1e-9));
  }
}

TEST(Rank, PreservedUnderSmallPerturbation) {
  const Matrix x = oracle::gaussian_matrix(20, 2, 3) * oracle::gaussian_matrix(2, 6, 4);
  // x V with V the leading right singular vectors keeps X X^T exactly
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeFullV);
  const Matrix v = svd.matrixV().leftCols(3);
  const Matrix y = perturbed(x * v, 1e-3, 6);
  const double eps = audit::compute_epsilon(x * x.transpose(), y * y.transpose());
  const auto r = audit::rank_audit(x, y, eps);
  EXPECT_EQ(r.r, 2u);
  ASSERT_TRUE(r.condition_met);
  EXPECT_EQ(r.verdict, Verdict::Pass);
  EXPECT_GE(r.lambda_tail, r.lambda_bound);
  EXPECT_EQ(r.effective_rank_low, 2u);
  EXPECT_TRUE(r.rank_equality_guaranteed);
}

TEST(Rank, HypothesisNotMetWhenEpsilonLarge) {
  const Matrix x = oracle::gaussian_matrix(10, 3, 7);
  const Matrix y = oracle::gaussian_matrix(10, 3, 8) * 5.0;
  const double eps = audit::compute_epsilon(x * x.transpose(), y * y.transpose());
  const auto r = audit::rank_audit(x, y, eps);
  EXPECT_FALSE(r.condition_met);
  EXPECT_EQ(r.verdict, Verdict::HypothesisNotMet);
}

TEST(Rank, HypothesisNotMetWhenKBelowR) {
  const Matrix x = oracle::gaussian_matrix(10, 3, 9);
  const Matrix y = x.leftCols(2);
  const auto r = audit::rank_audit(x, y, 1e-30);
  EXPECT_FALSE(r.condition_met);
  EXPECT_EQ(r.verdict, Verdict::HypothesisNotMet);
}

TEST(Subspace, DavisKahanHoldsOnRandomPerturbations) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Matrix x = oracle::gaussian_matrix(12, 3, seed);
    const Matrix y = perturbed(x, 0.02, seed + 50);
    const Matrix gx = x * x.transpose();
    const Matrix gy = y * y.transpose();
    const double eps = audit::compute_epsilon(gx, gy);
    const auto r = audit::rank_audit(x, y, eps);
    ASSERT_TRUE(r.condition_met);
    const auto s = audit::subspace_audit(gx, gy, r.r, r.sigma_r_sq, eps);
    EXPECT_EQ(s.verdict, Verdict::Pass);
    EXPECT_TRUE(s.stated_bound_holds);
    EXPECT_LE(s.sin_theta, s.bound_rigorous);
  }
}

// G_X = diag(1, 0), G_Y = diag(0.5 - eta, 0.5 + eta): epsilon < sigma_r^4 holds
// but the leading eigenvectors are orthogonal, so sin(theta) = 1 while
// sqrt(epsilon) / sigma_r^2 is about 0.707. The gap-corrected bound
// sqrt(epsilon) / (sigma_r^2 - lambda_2(G_Y)) is above 1 and still holds.
TEST(Subspace, StatedBoundCounterexample) {
  const double eta = 1e-3;
  Matrix gx = Matrix::Zero(2, 2);
  gx(0, 0) = 1.0;
  Matrix gy = Matrix::Zero(2, 2);
  gy(0, 0) = 0.5 - eta;
  gy(1, 1) = 0.5 + eta;
  const double eps = audit::compute_epsilon(gx, gy);
  ASSERT_LT(eps, 1.0);
  const auto s = audit::subspace_audit(gx, gy, 1, 1.0, eps);
  EXPECT_NEAR(s.sin_theta, 1.0, 1e-15);
  EXPECT_NEAR(s.bound_stated, std::sqrt(eps), 1e-15);
  EXPECT_FALSE(s.stated_bound_holds);
  EXPECT_EQ(s.verdict, Verdict::Pass);
}

TEST(Subspace, DegenerateGapIsUnauditable) {
  const Matrix g = Matrix::Identity(3, 3);
  const auto s = audit::subspace_audit(g, g, 1, 1.0, 0.0);
  EXPECT_EQ(s.verdict, Verdict::Unauditable);
}

TEST(Sensitivity, DotAndCosineNeverExceedConstant) {
  const Matrix y = oracle::gaussian_matrix(50, 3, 10);
  for (auto kind : {kernels::RelationshipKind::DotProduct, kernels::RelationshipKind::Cosine,
                    kernels::RelationshipKind::Covariance}) {
    kernels::RelationshipConfig cfg;
    cfg.kind = kind;
    const auto probe = audit::kernel_sensitivity_probe(y, cfg, 500, 0.05, 1);
    EXPECT_EQ(probe.probes, 500u);
    EXPECT_EQ(probe.violations, 0u) << kernels::to_string(kind);
    EXPECT_EQ(probe.verdict, Verdict::Pass);
    EXPECT_LE(probe.max_ratio, 1.0);
  }
}

TEST(Sensitivity, RbfIsInformational) {
  kernels::RelationshipConfig cfg;
  cfg.kind = kernels::RelationshipKind::RbfKernel;
  cfg.gamma = 2.0;
  const auto probe = audit::kernel_sensitivity_probe(oracle::gaussian_matrix(30, 2, 11), cfg, 200, 0.01, 2);
  EXPECT_TRUE(probe.informational);
  EXPECT_EQ(probe.verdict, Verdict::Pass);
}

TEST(KernelAudit, RbfOfPerturbedPoints) {
  kernels::RelationshipConfig cfg;
  cfg.kind = kernels::RelationshipKind::RbfKernel;
  cfg.gamma = 0.5;
  const Matrix x = oracle::gaussian_matrix(25, 3, 12);
  const Matrix y = perturbed(x, 1e-3, 13);
  const Matrix rh = kernels::relationship_matrix(x, cfg);
  const Matrix rl = kernels::relationship_matrix(y, cfg);
  const auto k = audit::kernel_audit(rh, rl, cfg);
  EXPECT_TRUE(k.psd_high);
  EXPECT_NE(k.rank.verdict, Verdict::Fail);
  EXPECT_NE(k.subspace.verdict, Verdict::Fail);
}

TEST(FullAudit, IdentityPassesWithZeroEpsilon) {
  const Matrix x = oracle::gaussian_matrix(30, 5, 14);
  for (auto kind : {kernels::RelationshipKind::DotProduct, kernels::RelationshipKind::Cosine,
                    kernels::RelationshipKind::Covariance, kernels::RelationshipKind::RbfKernel}) {
    kernels::RelationshipConfig cfg;
    cfg.kind = kind;
    if (kind == kernels::RelationshipKind::RbfKernel) cfg.gamma = 0.2;
    audit::AuditConfig ac;
    ac.sensitivity_probes = 100;
    const auto report = audit::full_audit(x, x, cfg, ac);
    EXPECT_EQ(report.epsilon, 0.0);
    EXPECT_TRUE(report.theorem_assertions_pass) << kernels::to_string(kind);
    EXPECT_EQ(report.weyl.verdict, Verdict::Pass);
    EXPECT_EQ(report.serfling.m, 225u);
  }
}

TEST(FullAudit, GramAndKernelRegimesAgreeOnSpectra) {
  const Matrix x = oracle::gaussian_matrix(20, 4, 15);
  const Matrix y = perturbed(x, 0.01, 16);
  audit::AuditConfig ac;
  ac.m = 100;
  ac.sensitivity_probes = 50;
  const auto report = audit::full_audit(x, y, {}, ac);
  EXPECT_EQ(report.regime, "gram");
  EXPECT_EQ(report.serfling.m, 100u);
  EXPECT_EQ(report.rank.r, 4u);
  EXPECT_EQ(report.rank.verdict, Verdict::Pass);
  EXPECT_EQ(report.subspace.verdict, Verdict::Pass);
  const auto spectra = audit::kernel_audit(x * x.transpose(), y * y.transpose(), {});
  EXPECT_NEAR(spectra.rank.sigma_r_sq, report.rank.sigma_r_sq, 1e-9 * report.rank.sigma_r_sq);
}

TEST(Verdict, Names) {
  for (auto v : {Verdict::Pass, Verdict::Fail, Verdict::HypothesisNotMet, Verdict::Unauditable}) {
    EXPECT_EQ(audit::verdict_from_string(audit::to_string(v)), v);
  }
}
