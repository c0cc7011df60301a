#pragma once

#include "rpl/kernels.hpp"
#include "rpl/linalg.hpp"
#include "rpl/matrix.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rpl::audit {

enum class Verdict { Pass, Fail, HypothesisNotMet, Unauditable };

std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view name);

struct AuditTolerances {
  double ortho_tol = 1e-10;     // |X_i . X_j| <= ortho_tol counts as orthogonal
  double rank_tol = 1e-8;       // numeric rank, relative to the largest singular value
  double eigengap_tol = 1e-10;  // lambda_r - lambda_{r+1} below this is degenerate
  double numeric_slack = 1e-9;  // relative floating-point allowance on assertions
  double psd_tol = 1e-10;       // lambda_min >= -psd_tol * lambda_max
};

struct AuditConfig {
  std::optional<std::size_t> m;         // sampled pairs; default floor(n^2 / 4)
  double delta = 0.05;                  // Serfling confidence parameter
  std::uint64_t seed = 0;               // sampling of S and sensitivity probes
  std::optional<double> entry_bound;    // a-priori M; default max |Delta_ij|
  std::size_t sensitivity_probes = 1000;
  double sensitivity_step = 0.01;
  AuditTolerances tol;
};

// ||R_high - R_low||_F^2.
double compute_epsilon(const Matrix& r_high, const Matrix& r_low);

// (n^2 / m) eps_hat + M^2 n^2 sqrt(2 log(2 / delta) / m): with probability at
// least 1 - delta over a uniform without-replacement draw of m of the n^2
// entries, epsilon does not exceed this value.
double serfling_bound(double epsilon_hat, std::size_t n, std::size_t m, double entry_bound,
                      double delta);

struct EpsilonSample {
  double epsilon_hat = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // row-major order
};

// Draws m ordered pairs uniformly without replacement from [n] x [n] and sums
// Delta_ij^2 over them.
EpsilonSample sample_epsilon_hat(const Matrix& delta, std::size_t m, std::uint64_t seed);

struct EntrywiseCheck {
  std::size_t i = 0;
  std::size_t j = 0;
  double abs_low = 0.0;  // |R_low_ij|, i.e. |Y_i . Y_j| for the dot product
  bool pass = true;
};

// For every pair i <= j with |R_high_ij| <= tol asserts
// |R_low_ij| <= sqrt(epsilon) + tol.
std::vector<EntrywiseCheck> entrywise_audit(const Matrix& r_high, const Matrix& r_low,
                                            double epsilon, double tol);

// Dot-product specialisation of entrywise_audit on the rows of X and Y.
std::vector<EntrywiseCheck> orthogonality_audit(const Matrix& x, const Matrix& y, double epsilon,
                                                double ortho_tol);

// Eigenvalues of a relationship matrix (all n, descending) and its leading
// eigenvectors.
struct RelationshipSpectrum {
  Vector eigenvalues;
  Matrix leading_vectors;  // n x q, q >= the rank being audited
};

// From a full symmetric eigendecomposition of r.
RelationshipSpectrum spectrum_of(const Matrix& r);

// Spectrum of F F^T from a thin SVD of the factor F (n x p): cheaper than an
// n x n eigensolve when p << n.
RelationshipSpectrum gram_spectrum(const Matrix& factor);

struct WeylAudit {
  double max_displacement = 0.0;  // max_i |lambda_i(R_high) - lambda_i(R_low)|
  double bound = 0.0;             // sqrt(epsilon) >= ||Delta||_2
  Verdict verdict = Verdict::Pass;
};

WeylAudit weyl_audit(const Vector& lambda_high, const Vector& lambda_low, double epsilon,
                     double numeric_slack = 1e-9);

struct RankAudit {
  std::size_t r = 0;               // numeric rank of R_high (of X for the dot product)
  double sigma_r_sq = 0.0;         // lambda_r(R_high), i.e. sigma_r(X)^2
  double sigma_r = 0.0;
  bool condition_met = false;      // epsilon < sigma_r^4 (and k >= r for the dot product)
  std::string note;
  double lambda_tail = 0.0;        // lambda_r(R_low)
  double lambda_bound = 0.0;       // sigma_r^2 - sqrt(epsilon)
  double lambda_next_high = 0.0;   // lambda_{r+1}(R_high)
  double lambda_next_low = 0.0;    // lambda_{r+1}(R_low)
  double rank_floor = 0.0;         // eigenvalues of R_low above this count towards its rank
  std::size_t effective_rank_low = 0;
  std::size_t numeric_rank_low = 0;  // plain rank_tol count, informational
  bool rank_equality_guaranteed = false;
  Verdict verdict = Verdict::HypothesisNotMet;
};

// Rank preservation for the dot product. When epsilon < sigma_r^4 and
// k >= r asserts lambda_r(G_Y) >= sigma_r^2 - sqrt(epsilon), and that G_Y has
// at most r eigenvalues above the perturbation floor
// sqrt(epsilon) + lambda_{r+1}(G_X) (exactly r whenever
// sigma_r^2 - sqrt(epsilon) clears that floor).
RankAudit rank_audit(const Matrix& x, const Matrix& y, double epsilon, double rank_tol = 1e-8);

// Same assertions from precomputed spectra. `eigen_rel_tol` sets both the
// rank of R_high and the relative floor on R_low; `embedding_dim` is k when
// the k >= r hypothesis applies.
RankAudit rank_audit_from_spectra(const Vector& lambda_high, const Vector& lambda_low,
                                  double epsilon, double eigen_rel_tol,
                                  std::optional<std::size_t> embedding_dim,
                                  double numeric_slack = 1e-9);

struct SubspaceAudit {
  double sin_theta = 0.0;        // sine of the largest principal angle
  double bound_stated = 0.0;     // sqrt(epsilon) / sigma_r^2
  double bound_rigorous = 1.0;   // sqrt(epsilon) / (sigma_r^2 - lambda_{r+1}(R_low))
  bool stated_bound_holds = true;
  double eigengap = 0.0;         // lambda_r(R_high) - lambda_{r+1}(R_high)
  std::string note;
  Verdict verdict = Verdict::HypothesisNotMet;
};

// Leading rank-r eigenspaces of both matrices and their largest principal
// angle. The asserted bound is the Davis-Kahan sin-theta form with gap
// sigma_r^2 - lambda_{r+1}(R_low), which is at least sigma_r^2 - sqrt(eps)
// under the rank hypothesis. sqrt(eps) / sigma_r^2 is reported alongside;
// it can be exceeded when R_low has a near-degenerate spectrum.
SubspaceAudit subspace_audit(const Matrix& r_high, const Matrix& r_low, std::size_t r,
                             double sigma_r_sq, double epsilon,
                             const AuditTolerances& tol = {});

SubspaceAudit subspace_audit_from_spectra(const RelationshipSpectrum& high,
                                          const RelationshipSpectrum& low, std::size_t r,
                                          double sigma_r_sq, double epsilon,
                                          const AuditTolerances& tol = {});

struct SensitivityProbe {
  double lipschitz_constant = 0.0;
  std::size_t probes = 0;
  std::size_t violations = 0;
  double max_ratio = 0.0;     // max |phi(u+h, v) - phi(u, v)| / (L ||h||)
  bool informational = false; // RBF constants are heuristic: violations do not fail the audit
  Verdict verdict = Verdict::Pass;
};

// Random perturbations u -> u + h, ||h|| <= step, of rows of `points`, kept
// inside the configured norm bounds (resolved from the points when absent).
SensitivityProbe kernel_sensitivity_probe(const Matrix& points,
                                          const kernels::RelationshipConfig& cfg,
                                          std::size_t probes, double step, std::uint64_t seed);

struct KernelAudit {
  bool psd_high = false;
  bool psd_low = false;
  RankAudit rank;
  SubspaceAudit subspace;
};

// Rank and subspace audits with G replaced by R and sigma_r^2 by the
// smallest non-zero eigenvalue lambda_r(R_high). Reported as hypothesis not
// met when R_high is not PSD.
KernelAudit kernel_audit(const Matrix& r_high, const Matrix& r_low,
                         const kernels::RelationshipConfig& rel_cfg, double rank_tol = 1e-8,
                         const AuditTolerances& tol = {});

struct SerflingAudit {
  std::size_t n = 0;
  std::size_t m = 0;
  double epsilon_hat = 0.0;
  double entry_bound = 0.0;   // M
  bool entry_bound_observed = true;
  double delta = 0.05;
  double rhs = 0.0;
  bool holds = true;          // epsilon <= rhs (probabilistic, informational)
};

struct EntrywiseSummary {
  std::size_t pairs_checked = 0;
  std::size_t violations = 0;
  double max_abs_low = 0.0;
  Verdict verdict = Verdict::Pass;
};

struct BoundReport {
  kernels::RelationshipKind relationship = kernels::RelationshipKind::DotProduct;
  std::string regime;  // "gram" (dot product) or "kernel"
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t k = 0;
  double epsilon = 0.0;
  double epsilon_relative = 0.0;  // epsilon / ||R_high||_F^2
  SerflingAudit serfling;
  WeylAudit weyl;
  EntrywiseSummary entrywise;
  bool psd_high = true;
  bool psd_low = true;
  RankAudit rank;
  SubspaceAudit subspace;
  SensitivityProbe sensitivity;
  bool theorem_assertions_pass = true;
  std::vector<std::string> warnings;
  AuditConfig config;
};

// Every audit above, composed for one (X, Y) pair.
BoundReport full_audit(const Matrix& x, const Matrix& y, const kernels::RelationshipConfig& rel_cfg,
                       const AuditConfig& audit_cfg);

}  // namespace rpl::audit
