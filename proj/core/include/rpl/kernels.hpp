#pragma once

#include "rpl/matrix.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace rpl::kernels {

enum class RelationshipKind { DotProduct, Cosine, Covariance, RbfKernel };

std::string_view to_string(RelationshipKind kind);
RelationshipKind relationship_kind_from_string(std::string_view name);

// Rows closer to the origin than this are rejected by the cosine kernel.
inline constexpr double kCosineNormGuard = 1e-12;

struct RelationshipConfig {
  RelationshipKind kind = RelationshipKind::DotProduct;
  std::optional<double> gamma;       // RBF bandwidth, required iff kind == RbfKernel
  std::optional<double> norm_upper;  // R: ||u||, ||v|| <= R
  std::optional<double> norm_lower;  // R_min: ||u||, ||v|| >= R_min > 0

  // Throws ConfigError when the invariants above do not hold.
  void validate() const;
};

// R(X)_ij = phi(X_i, X_j) for every pair of rows. The result is exactly
// symmetric. Covariance centres X on its own column mean first, so during
// training the centring population is the mini-batch.
Matrix relationship_matrix(const Matrix& x, const RelationshipConfig& cfg);

// phi(a_i, b_j) between two row sets with equal column count (retrieval
// similarity). Covariance centres each side on its own mean.
Matrix cross_relationship(const Matrix& a, const Matrix& b, const RelationshipConfig& cfg);

// phi(u, v) for a single pair. Covariance is evaluated as a dot product; the
// caller supplies already-centred vectors.
double kernel_value(const RowVector& u, const RowVector& v, const RelationshipConfig& cfg);

// Vector-Jacobian product through R = relationship_matrix(y): given
// dL/dR (n x n, not necessarily symmetric) returns dL/dY. `r` must be the
// relationship matrix computed from `y` with the same config.
Matrix relationship_backward(const Matrix& y, const Matrix& r, const Matrix& grad_r,
                             const RelationshipConfig& cfg);

// Conservative Lipschitz constants relating kernel change to the change of
// one argument:
//   DotProduct, Covariance -> R
//   Cosine                 -> 2 / R_min
//   RbfKernel              -> sqrt(2 gamma / e)  (maximal slope; heuristic)
// Throws ConfigError when the needed norm bound is absent.
double lipschitz_constant(const RelationshipConfig& cfg);

// Fills absent norm bounds from the observed max/min row norms of x (row
// norms after centring for Covariance).
RelationshipConfig resolve_norm_bounds(const RelationshipConfig& cfg, const Matrix& x);

// True iff lambda_min(R) >= -tol * lambda_max(R).
bool entrywise_psd_check(const Matrix& r, double tol = 1e-10);

}  // namespace rpl::kernels
