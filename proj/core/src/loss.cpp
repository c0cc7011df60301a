#include "rpl/loss.hpp"

#include "rpl/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace rpl::loss {
namespace {

void require_same_square(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != a.cols() || a.rows() != b.rows() || a.cols() != b.cols()) {
    throw PreconditionError(std::string(what) + ": expected two n x n matrices, got " +
                            shape_string(a) + " and " + shape_string(b));
  }
}

struct Normalized {
  Matrix p;
  double total = 0.0;
  double minimum = 0.0;
};

Normalized normalize_for_kl(const Matrix& r) {
  Normalized out;
  out.minimum = r.minCoeff();
  const Matrix shifted = r.array() - out.minimum + kKlShift;
  out.total = shifted.sum();
  if (!std::isfinite(out.total) || !(out.total > 0.0)) {
    throw PreconditionError("KL discrepancy: matrix cannot be normalised to a distribution");
  }
  out.p = shifted / out.total;
  return out;
}

void zero_diagonal(Matrix& w) { w.diagonal().setZero(); }

}  // namespace

std::string_view to_string(Discrepancy d) {
  switch (d) {
    case Discrepancy::MeanSquaredError: return "mse";
    case Discrepancy::AbsoluteError: return "abs";
    case Discrepancy::KlDivergence: return "kl";
  }
  return "unknown";
}

std::string_view to_string(Masking m) {
  switch (m) {
    case Masking::None: return "none";
    case Masking::TopK: return "topk";
    case Masking::SigmoidWeighted: return "sigmoid";
    case Masking::Linear: return "linear";
    case Masking::Gaussian: return "gaussian";
  }
  return "unknown";
}

Discrepancy discrepancy_from_string(std::string_view name) {
  if (name == "mse") return Discrepancy::MeanSquaredError;
  if (name == "abs") return Discrepancy::AbsoluteError;
  if (name == "kl") return Discrepancy::KlDivergence;
  throw ConfigError("unknown discrepancy '" + std::string(name) + "' (expected mse, abs or kl)");
}

Masking masking_from_string(std::string_view name) {
  if (name == "none") return Masking::None;
  if (name == "topk") return Masking::TopK;
  if (name == "sigmoid") return Masking::SigmoidWeighted;
  if (name == "linear") return Masking::Linear;
  if (name == "gaussian") return Masking::Gaussian;
  throw ConfigError("unknown masking '" + std::string(name) +
                    "' (expected none, topk, sigmoid, linear or gaussian)");
}

void LossConfig::validate() const {
  if (masking == Masking::TopK && top_k < 1) {
    throw ConfigError("topk masking requires top_k >= 1");
  }
  if (masking == Masking::SigmoidWeighted && !std::isfinite(alpha)) {
    throw ConfigError("sigmoid masking requires a finite alpha");
  }
}

bool include_diagonal_for(const LossConfig& cfg, kernels::RelationshipKind kind) {
  if (cfg.include_diagonal) return *cfg.include_diagonal;
  return kind == kernels::RelationshipKind::DotProduct ||
         kind == kernels::RelationshipKind::Covariance;
}

LossConfig resolved_for(const LossConfig& cfg, kernels::RelationshipKind kind) {
  LossConfig out = cfg;
  out.include_diagonal = include_diagonal_for(cfg, kind);
  return out;
}

MaskMatrix build_mask(const Matrix& r_high, const LossConfig& cfg) {
  cfg.validate();
  if (r_high.rows() != r_high.cols() || r_high.size() == 0) {
    throw PreconditionError("build_mask: relationship matrix must be square and non-empty, got " +
                            shape_string(r_high));
  }
  const Index n = r_high.rows();
  const bool diagonal = cfg.include_diagonal.value_or(true);
  MaskMatrix mask;
  switch (cfg.masking) {
    case Masking::None: mask.weights = Matrix::Ones(n, n); break;

    case Masking::TopK: {
      const std::size_t available =
          static_cast<std::size_t>(n) * static_cast<std::size_t>(diagonal ? n : n - 1);
      if (cfg.top_k > available) {
        throw PreconditionError("build_mask: top_k = " + std::to_string(cfg.top_k) +
                                " exceeds the " + std::to_string(available) +
                                " selectable entries");
      }
      std::vector<Index> candidates;
      candidates.reserve(available);
      for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
          if (diagonal || i != j) candidates.push_back(i * n + j);
        }
      }
      // Largest |R| first; ties fall back to row-major order.
      const Matrix magnitude = r_high.cwiseAbs();
      const double* mag = magnitude.data();
      const auto by_magnitude = [mag](Index a, Index b) {
        return mag[a] != mag[b] ? mag[a] > mag[b] : a < b;
      };
      const auto k = static_cast<std::ptrdiff_t>(cfg.top_k);
      if (k > 0 && static_cast<std::size_t>(k) < candidates.size()) {
        std::nth_element(candidates.begin(), candidates.begin() + k - 1, candidates.end(),
                         by_magnitude);
      }
      mask.weights = Matrix::Zero(n, n);
      for (std::ptrdiff_t s = 0; s < k; ++s) {
        const Index i = candidates[s] / n;
        const Index j = candidates[s] % n;
        mask.weights(i, j) = 1.0;
        mask.weights(j, i) = 1.0;
      }
      break;
    }

    case Masking::SigmoidWeighted:
      mask.weights = (1.0 / (1.0 + (-cfg.alpha * r_high.array()).exp())).matrix();
      break;

    case Masking::Linear: {
      const double peak = r_high.cwiseAbs().maxCoeff();
      mask.weights = peak > 0.0 ? Matrix(r_high.cwiseAbs() / peak) : Matrix::Ones(n, n);
      break;
    }

    case Masking::Gaussian: {
      double sum = 0.0;
      double count = 0.0;
      for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
          if (i == j) continue;
          sum += r_high(i, j);
          count += 1.0;
        }
      }
      if (count == 0.0) {
        mask.weights = Matrix::Ones(n, n);
        break;
      }
      const double mean = sum / count;
      double var = 0.0;
      for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
          if (i != j) var += (r_high(i, j) - mean) * (r_high(i, j) - mean);
        }
      }
      var /= count;
      if (!(var > 0.0)) {
        mask.weights = Matrix::Ones(n, n);
        break;
      }
      mask.weights = (-(r_high.array() - mean).square() / (2.0 * var)).exp().matrix();
      break;
    }
  }
  if (!diagonal) zero_diagonal(mask.weights);
  return mask;
}

double rpl_loss(const Matrix& r_high, const Matrix& r_low, const MaskMatrix& mask,
                const LossConfig& cfg) {
  require_same_square(r_high, r_low, "rpl_loss");
  require_same_square(r_high, mask.weights, "rpl_loss");
  switch (cfg.discrepancy) {
    case Discrepancy::MeanSquaredError:
      return (mask.weights.array() * (r_high - r_low).array().square()).sum();
    case Discrepancy::AbsoluteError:
      return (mask.weights.array() * (r_high - r_low).array().abs()).sum();
    case Discrepancy::KlDivergence: {
      const Normalized p = normalize_for_kl(r_high);
      const Normalized q = normalize_for_kl(r_low);
      return (mask.weights.array() * p.p.array() * (p.p.array() / q.p.array()).log()).sum();
    }
  }
  throw ConfigError("rpl_loss: unknown discrepancy");
}

Matrix rpl_loss_grad_r(const Matrix& r_high, const Matrix& r_low, const MaskMatrix& mask,
                       const LossConfig& cfg) {
  require_same_square(r_high, r_low, "rpl_loss_grad_r");
  require_same_square(r_high, mask.weights, "rpl_loss_grad_r");
  switch (cfg.discrepancy) {
    case Discrepancy::MeanSquaredError:
      return 2.0 * mask.weights.cwiseProduct(r_low - r_high);
    case Discrepancy::AbsoluteError: {
      const Matrix residual = r_low - r_high;
      Matrix sign = residual.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
      return mask.weights.cwiseProduct(sign);
    }
    case Discrepancy::KlDivergence: {
      const Normalized p = normalize_for_kl(r_high);
      const Normalized q = normalize_for_kl(r_low);
      // L = sum w P log P - sum w P log Q, Q = a / S, a = R^ - min R^ + c.
      const Matrix dq = -(mask.weights.array() * p.p.array() / q.p.array()).matrix();
      const double coupling = dq.cwiseProduct(q.p).sum();
      Matrix da = (dq.array() - coupling).matrix() / q.total;
      // Every a_ij moves with -min(R^); the minimum's derivative is split
      // evenly across the entries attaining it.
      const double d_min = -da.sum();
      std::vector<Index> argmin;
      for (Index i = 0; i < r_low.size(); ++i) {
        if (r_low.data()[i] == q.minimum) argmin.push_back(i);
      }
      for (Index idx : argmin) {
        da.data()[idx] += d_min / static_cast<double>(argmin.size());
      }
      return da;
    }
  }
  throw ConfigError("rpl_loss_grad_r: unknown discrepancy");
}

LossAndGradient rpl_loss_and_grad(const Matrix& r_high, const Matrix& y_b, const MaskMatrix& mask,
                                  const kernels::RelationshipConfig& rel_cfg,
                                  const LossConfig& loss_cfg) {
  if (r_high.rows() != y_b.rows()) {
    throw PreconditionError("rpl_loss_and_grad: batch sizes differ (R " + shape_string(r_high) +
                            ", Y " + shape_string(y_b) + ")");
  }
  LossAndGradient out;
  out.r_low = kernels::relationship_matrix(y_b, rel_cfg);
  out.loss = rpl_loss(r_high, out.r_low, mask, loss_cfg);
  const Matrix grad_r = rpl_loss_grad_r(r_high, out.r_low, mask, loss_cfg);
  out.grad_y = kernels::relationship_backward(y_b, out.r_low, grad_r, rel_cfg);
  return out;
}

Matrix rpl_loss_grad_y(const Matrix& x_b, const Matrix& y_b, const MaskMatrix& mask,
                       const kernels::RelationshipConfig& rel_cfg, const LossConfig& loss_cfg) {
  if (x_b.rows() != y_b.rows()) {
    throw PreconditionError("rpl_loss_grad_y: batch sizes differ (X " + shape_string(x_b) +
                            ", Y " + shape_string(y_b) + ")");
  }
  const Matrix r_high = kernels::relationship_matrix(x_b, rel_cfg);
  return rpl_loss_and_grad(r_high, y_b, mask, rel_cfg, loss_cfg).grad_y;
}

}  // namespace rpl::loss
