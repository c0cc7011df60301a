#pragma once

#include "rpl/kernels.hpp"
#include "rpl/matrix.hpp"

#include <cstddef>
#include <optional>
#include <string_view>

namespace rpl::loss {

enum class Discrepancy { MeanSquaredError, AbsoluteError, KlDivergence };
enum class Masking { None, TopK, SigmoidWeighted, Linear, Gaussian };

std::string_view to_string(Discrepancy d);
std::string_view to_string(Masking m);
Discrepancy discrepancy_from_string(std::string_view name);
Masking masking_from_string(std::string_view name);

// Offset added after the global-minimum shift when normalising matrices for
// the KL discrepancy.
inline constexpr double kKlShift = 1e-8;

struct LossConfig {
  Discrepancy discrepancy = Discrepancy::MeanSquaredError;
  Masking masking = Masking::None;
  std::size_t top_k = 0;  // TopK only
  double alpha = 1.0;     // SigmoidWeighted only
  // Unset means "pick by relationship kind", see include_diagonal_for().
  std::optional<bool> include_diagonal;

  void validate() const;
};

// Diagonal default: kept for dot product and covariance (norms carry signal),
// dropped for cosine (constant 1) and RBF (constant 1).
bool include_diagonal_for(const LossConfig& cfg, kernels::RelationshipKind kind);

// Same config with include_diagonal resolved for `kind`.
LossConfig resolved_for(const LossConfig& cfg, kernels::RelationshipKind kind);

struct MaskMatrix {
  Matrix weights;  // n x n, symmetric, entries in [0, 1]

  double total_weight() const { return weights.sum(); }
};

// Weights derived from the high-dimensional relationship matrix:
//   None            all ones
//   TopK            1 on the top_k entries of largest |R|, mirrored, else 0
//   SigmoidWeighted 1 / (1 + exp(-alpha R_ij))
//   Linear          |R_ij| / max|R|
//   Gaussian        exp(-(R_ij - mu)^2 / (2 s^2)), mu and s over off-diagonal entries
// Linear and Gaussian are reconstructions: only their names are known. When
// include_diagonal is false the diagonal weight is zero (and TopK does not
// select diagonal entries).
MaskMatrix build_mask(const Matrix& r_high, const LossConfig& cfg);

// D(R_high, R_low) weighted by mask, reported as a sum.
//   MSE      sum w (R - R^)^2
//   Absolute sum w |R - R^|
//   KL       sum w P log(P / Q), P and Q each shifted by their global minimum
//            plus kKlShift and divided by their total.
double rpl_loss(const Matrix& r_high, const Matrix& r_low, const MaskMatrix& mask,
                const LossConfig& cfg);

// dL/dR_low. Absolute uses subgradient 0 at zero residual.
Matrix rpl_loss_grad_r(const Matrix& r_high, const Matrix& r_low, const MaskMatrix& mask,
                       const LossConfig& cfg);

struct LossAndGradient {
  double loss = 0.0;
  Matrix r_low;
  Matrix grad_y;
};

// Loss and dL/dY_B for a batch whose high-dimensional relationship matrix is
// already known.
LossAndGradient rpl_loss_and_grad(const Matrix& r_high, const Matrix& y_b, const MaskMatrix& mask,
                                  const kernels::RelationshipConfig& rel_cfg,
                                  const LossConfig& loss_cfg);

// dL/dY_B, chaining the discrepancy gradient through R^(Y)_ij = phi(Y_i, Y_j).
Matrix rpl_loss_grad_y(const Matrix& x_b, const Matrix& y_b, const MaskMatrix& mask,
                       const kernels::RelationshipConfig& rel_cfg, const LossConfig& loss_cfg);

}  // namespace rpl::loss
