#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <string>

namespace rpl {

// Dense row-major double matrix. Carries data X, embeddings Y and
// relationship matrices R alike.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

using Index = Eigen::Index;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

std::string shape_string(const Matrix& m);

}  // namespace rpl
