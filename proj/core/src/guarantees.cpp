#include "rpl/guarantees.hpp"

#include "rpl/error.hpp"
#include "rpl/rng.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rpl::audit {
namespace {

using kernels::RelationshipKind;

void require_same_square(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != a.cols() || a.rows() != b.rows() || a.cols() != b.cols()) {
    throw PreconditionError(std::string(what) + ": expected two n x n matrices, got " +
                            shape_string(a) + " and " + shape_string(b));
  }
}

Vector padded(const Vector& values, Index n) {
  Vector out = Vector::Zero(n);
  const Index count = std::min<Index>(n, values.size());
  out.head(count) = values.head(count);
  return out;
}

double spectral_scale(const Vector& a, const Vector& b) {
  double scale = 0.0;
  if (a.size()) scale = std::max(scale, a.cwiseAbs().maxCoeff());
  if (b.size()) scale = std::max(scale, b.cwiseAbs().maxCoeff());
  return scale;
}

std::size_t count_above(const Vector& values, double threshold) {
  std::size_t count = 0;
  for (Index i = 0; i < values.size(); ++i) {
    if (values[i] > threshold) ++count;
  }
  return count;
}

// Factor F with R = F F^T, when phi admits one.
std::optional<Matrix> relationship_factor(const Matrix& x, const kernels::RelationshipConfig& cfg) {
  switch (cfg.kind) {
    case RelationshipKind::DotProduct: return x;
    case RelationshipKind::Cosine: {
      Matrix f = x;
      for (Index i = 0; i < f.rows(); ++i) f.row(i) /= f.row(i).norm();
      return f;
    }
    case RelationshipKind::Covariance: return Matrix(x.rowwise() - x.colwise().mean());
    case RelationshipKind::RbfKernel: return std::nullopt;
  }
  return std::nullopt;
}

SerflingAudit serfling_audit(const Matrix& delta, double epsilon, const AuditConfig& cfg) {
  SerflingAudit out;
  out.n = static_cast<std::size_t>(delta.rows());
  const std::size_t total = out.n * out.n;
  out.m = cfg.m.value_or(std::max<std::size_t>(1, total / 4));
  if (out.m < 1 || out.m > total) {
    throw PreconditionError("audit: m = " + std::to_string(out.m) + " must lie in [1, n^2 = " +
                            std::to_string(total) + "]");
  }
  out.delta = cfg.delta;
  out.epsilon_hat = sample_epsilon_hat(delta, out.m, derive_seed(cfg.seed, seed_stream::kAudit)).epsilon_hat;
  if (cfg.entry_bound) {
    out.entry_bound = *cfg.entry_bound;
    out.entry_bound_observed = false;
  } else {
    out.entry_bound = delta.cwiseAbs().maxCoeff();
    out.entry_bound_observed = true;
  }
  const double m_for_bound = out.entry_bound > 0.0 ? out.entry_bound : std::numeric_limits<double>::min();
  out.rhs = serfling_bound(out.epsilon_hat, out.n, out.m, m_for_bound, out.delta);
  out.holds = epsilon <= out.rhs;
  return out;
}

EntrywiseSummary summarize(const std::vector<EntrywiseCheck>& checks) {
  EntrywiseSummary s;
  s.pairs_checked = checks.size();
  for (const auto& c : checks) {
    s.max_abs_low = std::max(s.max_abs_low, c.abs_low);
    if (!c.pass) ++s.violations;
  }
  s.verdict = s.violations ? Verdict::Fail : Verdict::Pass;
  return s;
}

}  // namespace

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::HypothesisNotMet: return "hypothesis-not-met";
    case Verdict::Unauditable: return "unauditable";
  }
  return "unknown";
}

Verdict verdict_from_string(std::string_view name) {
  if (name == "pass") return Verdict::Pass;
  if (name == "fail") return Verdict::Fail;
  if (name == "hypothesis-not-met") return Verdict::HypothesisNotMet;
  if (name == "unauditable") return Verdict::Unauditable;
  throw FormatError("unknown verdict '" + std::string(name) + "'");
}

double compute_epsilon(const Matrix& r_high, const Matrix& r_low) {
  if (r_high.rows() != r_low.rows() || r_high.cols() != r_low.cols()) {
    throw PreconditionError("compute_epsilon: shape mismatch (" + shape_string(r_high) + " vs " +
                            shape_string(r_low) + ")");
  }
  return (r_high - r_low).squaredNorm();
}

double serfling_bound(double epsilon_hat, std::size_t n, std::size_t m, double entry_bound,
                      double delta) {
  const double n_sq = static_cast<double>(n) * static_cast<double>(n);
  if (m < 1 || static_cast<double>(m) > n_sq) {
    throw PreconditionError("serfling_bound: need 1 <= m <= n^2");
  }
  if (!(entry_bound > 0.0)) throw PreconditionError("serfling_bound: M must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw PreconditionError("serfling_bound: delta must lie in (0, 1)");
  const double md = static_cast<double>(m);
  return n_sq / md * epsilon_hat +
         entry_bound * entry_bound * n_sq * std::sqrt(2.0 * std::log(2.0 / delta) / md);
}

EpsilonSample sample_epsilon_hat(const Matrix& delta, std::size_t m, std::uint64_t seed) {
  if (delta.rows() != delta.cols()) {
    throw PreconditionError("sample_epsilon_hat: Delta must be square, got " + shape_string(delta));
  }
  const auto n = static_cast<std::size_t>(delta.rows());
  const std::size_t total = n * n;
  if (m > total) {
    throw PreconditionError("sample_epsilon_hat: m = " + std::to_string(m) + " exceeds n^2 = " +
                            std::to_string(total));
  }
  // Selection sampling (Knuth, Algorithm S): each m-subset equally likely.
  Rng rng(seed);
  EpsilonSample out;
  out.pairs.reserve(m);
  std::size_t chosen = 0;
  for (std::size_t t = 0; t < total && chosen < m; ++t) {
    const double remaining = static_cast<double>(total - t);
    if (remaining * rng.uniform() < static_cast<double>(m - chosen)) {
      const std::size_t i = t / n;
      const std::size_t j = t % n;
      const double v = delta(static_cast<Index>(i), static_cast<Index>(j));
      out.epsilon_hat += v * v;
      out.pairs.emplace_back(i, j);
      ++chosen;
    }
  }
  return out;
}

std::vector<EntrywiseCheck> entrywise_audit(const Matrix& r_high, const Matrix& r_low,
                                            double epsilon, double tol) {
  require_same_square(r_high, r_low, "entrywise_audit");
  const double limit = std::sqrt(std::max(epsilon, 0.0)) * (1.0 + 1e-12) + tol;
  std::vector<EntrywiseCheck> out;
  for (Index i = 0; i < r_high.rows(); ++i) {
    for (Index j = i; j < r_high.cols(); ++j) {
      if (std::abs(r_high(i, j)) > tol) continue;
      const double low = std::abs(r_low(i, j));
      out.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), low, low <= limit});
    }
  }
  return out;
}

std::vector<EntrywiseCheck> orthogonality_audit(const Matrix& x, const Matrix& y, double epsilon,
                                                double ortho_tol) {
  if (x.rows() != y.rows()) {
    throw PreconditionError("orthogonality_audit: row counts differ (" + shape_string(x) + " vs " +
                            shape_string(y) + ")");
  }
  kernels::RelationshipConfig dot;
  return entrywise_audit(kernels::relationship_matrix(x, dot), kernels::relationship_matrix(y, dot),
                         epsilon, ortho_tol);
}

RelationshipSpectrum spectrum_of(const Matrix& r) {
  linalg::SpectrumResult s = linalg::sym_eig(r);
  return {std::move(s.eigenvalues), std::move(s.eigenvectors)};
}

RelationshipSpectrum gram_spectrum(const Matrix& factor) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(factor, Eigen::ComputeThinU);
  RelationshipSpectrum out;
  out.eigenvalues = padded(svd.singularValues().array().square().matrix(), factor.rows());
  out.leading_vectors = svd.matrixU();
  return out;
}

WeylAudit weyl_audit(const Vector& lambda_high, const Vector& lambda_low, double epsilon,
                     double numeric_slack) {
  if (lambda_high.size() != lambda_low.size()) {
    throw PreconditionError("weyl_audit: spectra have different lengths");
  }
  WeylAudit out;
  out.bound = std::sqrt(std::max(epsilon, 0.0));
  out.max_displacement = lambda_high.size() ? (lambda_high - lambda_low).cwiseAbs().maxCoeff() : 0.0;
  const double slack = numeric_slack * spectral_scale(lambda_high, lambda_low);
  out.verdict = out.max_displacement <= out.bound + slack ? Verdict::Pass : Verdict::Fail;
  return out;
}

RankAudit rank_audit_from_spectra(const Vector& lambda_high, const Vector& lambda_low,
                                  double epsilon, double eigen_rel_tol,
                                  std::optional<std::size_t> embedding_dim, double numeric_slack) {
  if (lambda_high.size() != lambda_low.size() || lambda_high.size() == 0) {
    throw PreconditionError("rank_audit: spectra must be non-empty and of equal length");
  }
  const Index n = lambda_high.size();
  const double sqrt_eps = std::sqrt(std::max(epsilon, 0.0));
  const double slack = numeric_slack * spectral_scale(lambda_high, lambda_low);

  RankAudit out;
  out.r = lambda_high[0] > 0.0 ? count_above(lambda_high, eigen_rel_tol * lambda_high[0]) : 0;
  const double low_top = std::max(lambda_low[0], 0.0);
  out.numeric_rank_low = low_top > 0.0 ? count_above(lambda_low, eigen_rel_tol * low_top) : 0;
  if (out.r == 0) {
    out.note = "R(X) has rank 0";
    return out;
  }
  const auto r = static_cast<Index>(out.r);
  out.sigma_r_sq = lambda_high[r - 1];
  out.sigma_r = std::sqrt(out.sigma_r_sq);
  out.lambda_tail = lambda_low[r - 1];
  out.lambda_bound = out.sigma_r_sq - sqrt_eps;
  out.lambda_next_high = r < n ? std::max(lambda_high[r], 0.0) : 0.0;
  out.lambda_next_low = r < n ? lambda_low[r] : 0.0;
  out.rank_floor = std::max(sqrt_eps + out.lambda_next_high, eigen_rel_tol * low_top);
  out.effective_rank_low = count_above(lambda_low, out.rank_floor + slack);

  const bool eps_ok = epsilon < out.sigma_r_sq * out.sigma_r_sq;
  const bool dim_ok = !embedding_dim || *embedding_dim >= out.r;
  out.condition_met = eps_ok && dim_ok;
  if (!dim_ok) {
    out.note = "k = " + std::to_string(*embedding_dim) + " < r = " + std::to_string(out.r);
    return out;
  }
  if (!eps_ok) {
    out.note = "epsilon >= sigma_r^4";
    return out;
  }
  out.rank_equality_guaranteed = out.lambda_bound - slack > out.rank_floor + slack;
  const bool lambda_ok = out.lambda_tail >= out.lambda_bound - slack;
  const bool rank_ok = out.effective_rank_low <= out.r &&
                       (!out.rank_equality_guaranteed || out.effective_rank_low == out.r);
  out.verdict = lambda_ok && rank_ok ? Verdict::Pass : Verdict::Fail;
  if (!out.rank_equality_guaranteed) {
    out.note = "sigma_r^2 - sqrt(epsilon) does not clear the perturbation floor; rank checked as <= r";
  }
  return out;
}

RankAudit rank_audit(const Matrix& x, const Matrix& y, double epsilon, double rank_tol) {
  if (x.rows() != y.rows()) {
    throw PreconditionError("rank_audit: row counts differ (" + shape_string(x) + " vs " +
                            shape_string(y) + ")");
  }
  const Index n = x.rows();
  const Vector sx = linalg::singular_values(x);
  const Vector sy = linalg::singular_values(y);
  const Vector lambda_high = padded(sx.array().square().matrix(), n);
  const Vector lambda_low = padded(sy.array().square().matrix(), n);
  RankAudit out = rank_audit_from_spectra(lambda_high, lambda_low, epsilon, rank_tol * rank_tol,
                                          static_cast<std::size_t>(y.cols()));
  out.numeric_rank_low = linalg::numeric_rank_from_singular_values(sy, rank_tol);
  return out;
}

SubspaceAudit subspace_audit_from_spectra(const RelationshipSpectrum& high,
                                          const RelationshipSpectrum& low, std::size_t r,
                                          double sigma_r_sq, double epsilon,
                                          const AuditTolerances& tol) {
  SubspaceAudit out;
  const Index n = high.eigenvalues.size();
  if (low.eigenvalues.size() != n || high.leading_vectors.rows() != n ||
      low.leading_vectors.rows() != n) {
    throw PreconditionError("subspace_audit: spectra have inconsistent sizes");
  }
  const double sqrt_eps = std::sqrt(std::max(epsilon, 0.0));
  if (r == 0 || static_cast<Index>(r) > n) {
    out.note = "rank r out of range";
    return out;
  }
  const auto ri = static_cast<Index>(r);
  if (!(sigma_r_sq > 0.0) || !(epsilon < sigma_r_sq * sigma_r_sq)) {
    out.note = "epsilon >= sigma_r^4";
    return out;
  }
  out.bound_stated = sqrt_eps / sigma_r_sq;
  const double lambda_next_high = ri < n ? high.eigenvalues[ri] : 0.0;
  out.eigengap = high.eigenvalues[ri - 1] - lambda_next_high;
  const double scale = std::max(1.0, std::abs(high.eigenvalues[0]));
  if (out.eigengap <= tol.eigengap_tol * scale) {
    out.verdict = Verdict::Unauditable;
    out.note = "lambda_r(R_high) and lambda_{r+1}(R_high) are degenerate";
    return out;
  }
  if (high.leading_vectors.cols() < ri || low.leading_vectors.cols() < ri) {
    throw PreconditionError("subspace_audit: fewer than r leading eigenvectors available");
  }
  const linalg::PrincipalAngles angles =
      linalg::principal_angles_full(high.leading_vectors.leftCols(ri), low.leading_vectors.leftCols(ri));
  out.sin_theta = angles.sin_largest();

  const double lambda_next_low = ri < n ? low.eigenvalues[ri] : 0.0;
  const double gap = sigma_r_sq - lambda_next_low;
  out.bound_rigorous = gap > 0.0 ? std::min(1.0, sqrt_eps / gap) : 1.0;
  // Eigenvector accuracy degrades like unit roundoff * ||R|| / gap.
  const double sin_slack = tol.numeric_slack + 1e-13 * scale / out.eigengap;
  out.stated_bound_holds = out.sin_theta <= out.bound_stated + sin_slack;
  out.verdict = out.sin_theta <= out.bound_rigorous + sin_slack ? Verdict::Pass : Verdict::Fail;
  if (!out.stated_bound_holds) {
    out.note = "sin(theta) exceeds sqrt(epsilon)/sigma_r^2; within the gap-corrected bound";
  }
  return out;
}

SubspaceAudit subspace_audit(const Matrix& r_high, const Matrix& r_low, std::size_t r,
                             double sigma_r_sq, double epsilon, const AuditTolerances& tol) {
  require_same_square(r_high, r_low, "subspace_audit");
  return subspace_audit_from_spectra(spectrum_of(r_high), spectrum_of(r_low), r, sigma_r_sq,
                                     epsilon, tol);
}

SensitivityProbe kernel_sensitivity_probe(const Matrix& points,
                                          const kernels::RelationshipConfig& cfg,
                                          std::size_t probes, double step, std::uint64_t seed) {
  SensitivityProbe out;
  out.informational = cfg.kind == RelationshipKind::RbfKernel;
  if (points.rows() < 2 || probes == 0) return out;
  const Matrix base = cfg.kind == RelationshipKind::Covariance
                          ? Matrix(points.rowwise() - points.colwise().mean())
                          : points;
  kernels::RelationshipConfig bounded = cfg;
  const Vector norms = base.rowwise().norm();
  if (!bounded.norm_upper) bounded.norm_upper = norms.maxCoeff() + step;
  if (!bounded.norm_lower && norms.minCoeff() - step > 0.0) bounded.norm_lower = norms.minCoeff() - step;
  if (cfg.kind == RelationshipKind::Cosine && !bounded.norm_lower) return out;
  out.lipschitz_constant = kernels::lipschitz_constant(bounded);

  Rng rng(seed);
  const Index dim = base.cols();
  const std::size_t max_attempts = probes * 20;
  for (std::size_t attempt = 0; attempt < max_attempts && out.probes < probes; ++attempt) {
    const auto i = static_cast<Index>(rng.below(static_cast<std::uint64_t>(base.rows())));
    const auto j = static_cast<Index>(rng.below(static_cast<std::uint64_t>(base.rows())));
    RowVector h(dim);
    for (Index c = 0; c < dim; ++c) h[c] = rng.normal();
    const double hn = h.norm();
    if (!(hn > 0.0)) continue;
    h *= step * (1.0 - rng.uniform()) / hn;
    const RowVector u = base.row(i);
    const RowVector moved = u + h;
    const RowVector v = base.row(j);
    const auto inside = [&](const RowVector& p) {
      const double pn = p.norm();
      return pn <= *bounded.norm_upper && (!bounded.norm_lower || pn >= *bounded.norm_lower);
    };
    if (!inside(u) || !inside(moved) || !inside(v)) continue;
    const double change = std::abs(kernels::kernel_value(moved, v, cfg) - kernels::kernel_value(u, v, cfg));
    const double ratio = change / (out.lipschitz_constant * h.norm());
    out.max_ratio = std::max(out.max_ratio, ratio);
    if (ratio > 1.0 + 1e-9) ++out.violations;
    ++out.probes;
  }
  out.verdict = (out.violations && !out.informational) ? Verdict::Fail : Verdict::Pass;
  return out;
}

namespace {

KernelAudit kernel_audit_from_spectra(const RelationshipSpectrum& high, const RelationshipSpectrum& low,
                                      double epsilon, double rank_tol, const AuditTolerances& tol) {
  KernelAudit out;
  const auto is_psd = [&](const Vector& lambda) {
    const double top = lambda[0];
    const double bottom = lambda[lambda.size() - 1];
    return top >= 0.0 && bottom >= -tol.psd_tol * top;
  };
  out.psd_high = is_psd(high.eigenvalues);
  out.psd_low = is_psd(low.eigenvalues);
  if (!out.psd_high) {
    out.rank.note = "R(X) is not positive semidefinite";
    out.subspace.note = out.rank.note;
    return out;
  }
  out.rank = rank_audit_from_spectra(high.eigenvalues, low.eigenvalues, epsilon, rank_tol,
                                     std::nullopt, tol.numeric_slack);
  if (out.rank.condition_met) {
    out.subspace = subspace_audit_from_spectra(high, low, out.rank.r, out.rank.sigma_r_sq, epsilon, tol);
  } else {
    out.subspace.note = out.rank.note;
  }
  return out;
}

}  // namespace

KernelAudit kernel_audit(const Matrix& r_high, const Matrix& r_low,
                         const kernels::RelationshipConfig& rel_cfg, double rank_tol,
                         const AuditTolerances& tol) {
  require_same_square(r_high, r_low, "kernel_audit");
  rel_cfg.validate();
  return kernel_audit_from_spectra(spectrum_of(r_high), spectrum_of(r_low),
                                   compute_epsilon(r_high, r_low), rank_tol, tol);
}

BoundReport full_audit(const Matrix& x, const Matrix& y, const kernels::RelationshipConfig& rel_cfg,
                       const AuditConfig& audit_cfg) {
  if (x.rows() != y.rows()) {
    throw PreconditionError("full_audit: X has " + std::to_string(x.rows()) + " rows but Y has " +
                            std::to_string(y.rows()));
  }
  rel_cfg.validate();
  const AuditTolerances& tol = audit_cfg.tol;

  BoundReport report;
  report.config = audit_cfg;
  report.relationship = rel_cfg.kind;
  report.n = static_cast<std::size_t>(x.rows());
  report.d = static_cast<std::size_t>(x.cols());
  report.k = static_cast<std::size_t>(y.cols());

  const Matrix r_high = kernels::relationship_matrix(x, rel_cfg);
  const Matrix r_low = kernels::relationship_matrix(y, rel_cfg);
  const Matrix delta = r_high - r_low;
  report.epsilon = delta.squaredNorm();
  const double high_sq = r_high.squaredNorm();
  report.epsilon_relative = high_sq > 0.0 ? report.epsilon / high_sq : 0.0;
  report.serfling = serfling_audit(delta, report.epsilon, audit_cfg);

  const auto high_factor = relationship_factor(x, rel_cfg);
  const auto low_factor = relationship_factor(y, rel_cfg);
  const RelationshipSpectrum high = high_factor ? gram_spectrum(*high_factor) : spectrum_of(r_high);
  const RelationshipSpectrum low = low_factor ? gram_spectrum(*low_factor) : spectrum_of(r_low);

  report.weyl = weyl_audit(high.eigenvalues, low.eigenvalues, report.epsilon, tol.numeric_slack);
  report.entrywise = summarize(entrywise_audit(r_high, r_low, report.epsilon, tol.ortho_tol));

  if (rel_cfg.kind == RelationshipKind::DotProduct) {
    report.regime = "gram";
    report.rank = rank_audit_from_spectra(high.eigenvalues, low.eigenvalues, report.epsilon,
                                          tol.rank_tol * tol.rank_tol, report.k, tol.numeric_slack);
    report.rank.numeric_rank_low = linalg::numeric_rank(y, tol.rank_tol);
    if (report.rank.condition_met) {
      report.subspace = subspace_audit_from_spectra(high, low, report.rank.r, report.rank.sigma_r_sq,
                                                    report.epsilon, tol);
    } else {
      report.subspace.note = report.rank.note;
    }
  } else {
    report.regime = "kernel";
    const KernelAudit k = kernel_audit_from_spectra(high, low, report.epsilon, tol.rank_tol, tol);
    report.psd_high = k.psd_high;
    report.psd_low = k.psd_low;
    report.rank = k.rank;
    report.subspace = k.subspace;
  }

  report.sensitivity = kernel_sensitivity_probe(
      y, rel_cfg, audit_cfg.sensitivity_probes, audit_cfg.sensitivity_step,
      derive_seed(derive_seed(audit_cfg.seed, seed_stream::kAudit), 1));

  const auto failed = [](Verdict v) { return v == Verdict::Fail; };
  report.theorem_assertions_pass = !failed(report.weyl.verdict) && !failed(report.entrywise.verdict) &&
                                   !failed(report.rank.verdict) && !failed(report.subspace.verdict) &&
                                   !failed(report.sensitivity.verdict);

  if (!report.psd_high) report.warnings.push_back("R(X) is not PSD: rank and subspace guarantees do not apply");
  if (report.rank.verdict == Verdict::HypothesisNotMet) {
    report.warnings.push_back("rank hypothesis not met: " + report.rank.note);
  }
  if (report.subspace.verdict == Verdict::Unauditable) {
    report.warnings.push_back("subspace audit skipped: " + report.subspace.note);
  }
  if (report.subspace.verdict == Verdict::Pass && !report.subspace.stated_bound_holds) {
    report.warnings.push_back(report.subspace.note);
  }
  if (!report.serfling.holds) {
    report.warnings.push_back("epsilon exceeds the Serfling bound for this draw of S");
  }
  if (report.sensitivity.informational && report.sensitivity.violations) {
    report.warnings.push_back("rbf Lipschitz constant exceeded on " +
                              std::to_string(report.sensitivity.violations) + " probes (heuristic constant)");
  }
  return report;
}

}  // namespace rpl::audit
