#include "rpl/kernels.hpp"

#include "rpl/error.hpp"
#include "rpl/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace rpl::kernels {
namespace {

Matrix centred(const Matrix& x) {
  const RowVector mean = x.colwise().mean();
  return x.rowwise() - mean;
}

Matrix normalized_rows(const Matrix& x) {
  Matrix out = x;
  for (Index i = 0; i < x.rows(); ++i) {
    const double norm = x.row(i).norm();
    if (!(norm >= kCosineNormGuard)) {
      throw PreconditionError("cosine relationship: row " + std::to_string(i) +
                              " has norm below " + std::to_string(kCosineNormGuard));
    }
    out.row(i) /= norm;
  }
  return out;
}

// Exactly symmetric F F^T: only the lower triangle is accumulated.
Matrix symmetric_gram(const Matrix& f) {
  const Index n = f.rows();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
  g.selfadjointView<Eigen::Lower>().rankUpdate(Eigen::MatrixXd(f));
  Matrix out(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j <= i; ++j) {
      out(i, j) = g(i, j);
      out(j, i) = g(i, j);
    }
  }
  return out;
}

Matrix rbf_matrix(const Matrix& a, const Matrix& b, double gamma) {
  Matrix out(a.rows(), b.rows());
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < b.rows(); ++j) {
      out(i, j) = std::exp(-gamma * (a.row(i) - b.row(j)).squaredNorm());
    }
  }
  return out;
}

void require_rows(const Matrix& x, Index minimum, const char* what) {
  if (x.rows() < minimum || x.cols() < 1) {
    throw PreconditionError(std::string(what) + ": need at least " + std::to_string(minimum) +
                            " rows and one column, got " + shape_string(x));
  }
}

}  // namespace

std::string_view to_string(RelationshipKind kind) {
  switch (kind) {
    case RelationshipKind::DotProduct: return "dot";
    case RelationshipKind::Cosine: return "cosine";
    case RelationshipKind::Covariance: return "covariance";
    case RelationshipKind::RbfKernel: return "rbf";
  }
  return "unknown";
}

RelationshipKind relationship_kind_from_string(std::string_view name) {
  if (name == "dot") return RelationshipKind::DotProduct;
  if (name == "cosine") return RelationshipKind::Cosine;
  if (name == "covariance") return RelationshipKind::Covariance;
  if (name == "rbf") return RelationshipKind::RbfKernel;
  throw ConfigError("unknown relationship function '" + std::string(name) +
                    "' (expected dot, cosine, covariance or rbf)");
}

void RelationshipConfig::validate() const {
  if (kind == RelationshipKind::RbfKernel) {
    if (!gamma || !(*gamma > 0.0) || !std::isfinite(*gamma)) {
      throw ConfigError("rbf relationship requires a finite gamma > 0");
    }
  } else if (gamma) {
    throw ConfigError("gamma is only meaningful for the rbf relationship");
  }
  if (norm_lower && !(*norm_lower > 0.0)) {
    throw ConfigError("norm lower bound R_min must be > 0");
  }
  if (norm_upper && !(*norm_upper > 0.0)) {
    throw ConfigError("norm upper bound R must be > 0");
  }
}

Matrix relationship_matrix(const Matrix& x, const RelationshipConfig& cfg) {
  cfg.validate();
  require_rows(x, 2, "relationship_matrix");
  switch (cfg.kind) {
    case RelationshipKind::DotProduct: return symmetric_gram(x);
    case RelationshipKind::Cosine: return symmetric_gram(normalized_rows(x));
    case RelationshipKind::Covariance: return symmetric_gram(centred(x));
    case RelationshipKind::RbfKernel: {
      Matrix r = rbf_matrix(x, x, *cfg.gamma);
      for (Index i = 0; i < r.rows(); ++i) {
        for (Index j = 0; j < i; ++j) r(j, i) = r(i, j);
      }
      return r;
    }
  }
  throw ConfigError("relationship_matrix: unknown kind");
}

Matrix cross_relationship(const Matrix& a, const Matrix& b, const RelationshipConfig& cfg) {
  cfg.validate();
  require_rows(a, 1, "cross_relationship");
  require_rows(b, 1, "cross_relationship");
  if (a.cols() != b.cols()) {
    throw PreconditionError("cross_relationship: column counts differ (" + shape_string(a) +
                            " vs " + shape_string(b) + ")");
  }
  switch (cfg.kind) {
    case RelationshipKind::DotProduct: return a * b.transpose();
    case RelationshipKind::Cosine: return normalized_rows(a) * normalized_rows(b).transpose();
    case RelationshipKind::Covariance: return centred(a) * centred(b).transpose();
    case RelationshipKind::RbfKernel: return rbf_matrix(a, b, *cfg.gamma);
  }
  throw ConfigError("cross_relationship: unknown kind");
}

double kernel_value(const RowVector& u, const RowVector& v, const RelationshipConfig& cfg) {
  switch (cfg.kind) {
    case RelationshipKind::DotProduct:
    case RelationshipKind::Covariance: return u.dot(v);
    case RelationshipKind::Cosine: return u.dot(v) / (u.norm() * v.norm());
    case RelationshipKind::RbfKernel: return std::exp(-*cfg.gamma * (u - v).squaredNorm());
  }
  return 0.0;
}

Matrix relationship_backward(const Matrix& y, const Matrix& r, const Matrix& grad_r,
                             const RelationshipConfig& cfg) {
  const Index n = y.rows();
  if (r.rows() != n || r.cols() != n || grad_r.rows() != n || grad_r.cols() != n) {
    throw PreconditionError("relationship_backward: shape mismatch (y " + shape_string(y) +
                            ", r " + shape_string(r) + ", grad " + shape_string(grad_r) + ")");
  }
  const Matrix sym = grad_r + grad_r.transpose();
  switch (cfg.kind) {
    case RelationshipKind::DotProduct: return sym * y;
    case RelationshipKind::Covariance: {
      // The centring map is symmetric and idempotent, so it is its own adjoint.
      const Matrix d_centred = sym * centred(y);
      return centred(d_centred);
    }
    case RelationshipKind::Cosine: {
      const Matrix unit = normalized_rows(y);
      const Matrix d_unit = sym * unit;
      Matrix out(n, y.cols());
      for (Index i = 0; i < n; ++i) {
        const double norm = y.row(i).norm();
        const double radial = unit.row(i).dot(d_unit.row(i));
        out.row(i) = (d_unit.row(i) - radial * unit.row(i)) / norm;
      }
      return out;
    }
    case RelationshipKind::RbfKernel: {
      // dR_ij/dy_i = -2 gamma R_ij (y_i - y_j)
      const Matrix h = (-2.0 * *cfg.gamma) * sym.cwiseProduct(r);
      const Vector row_sums = h.rowwise().sum();
      return row_sums.asDiagonal() * y - h * y;
    }
  }
  throw ConfigError("relationship_backward: unknown kind");
}

double lipschitz_constant(const RelationshipConfig& cfg) {
  cfg.validate();
  switch (cfg.kind) {
    case RelationshipKind::DotProduct:
    case RelationshipKind::Covariance:
      if (!cfg.norm_upper) throw ConfigError("lipschitz_constant: norm upper bound R is required");
      return *cfg.norm_upper;
    case RelationshipKind::Cosine:
      if (!cfg.norm_lower) {
        throw ConfigError("lipschitz_constant: norm lower bound R_min is required");
      }
      return 2.0 / *cfg.norm_lower;
    case RelationshipKind::RbfKernel: return std::sqrt(2.0 * *cfg.gamma / std::numbers::e);
  }
  throw ConfigError("lipschitz_constant: unknown kind");
}

RelationshipConfig resolve_norm_bounds(const RelationshipConfig& cfg, const Matrix& x) {
  RelationshipConfig out = cfg;
  if (x.rows() == 0) return out;
  const Matrix basis = cfg.kind == RelationshipKind::Covariance ? centred(x) : x;
  const Vector norms = basis.rowwise().norm();
  if (!out.norm_upper && norms.maxCoeff() > 0.0) out.norm_upper = norms.maxCoeff();
  if (!out.norm_lower && norms.minCoeff() > 0.0) out.norm_lower = norms.minCoeff();
  return out;
}

bool entrywise_psd_check(const Matrix& r, double tol) {
  const Vector lambda = linalg::sym_eigenvalues(r);
  const double top = lambda[0];
  const double bottom = lambda[lambda.size() - 1];
  if (top < 0.0) return false;
  return bottom >= -tol * top;
}

}  // namespace rpl::kernels
