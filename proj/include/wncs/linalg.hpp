#pragma once

#include <Eigen/Dense>
#include <string>

#include "wncs/errors.hpp"

namespace wncs {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) {
    throw DimensionError(std::string(what) + ": expected a square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

inline void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                          const char* what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(std::string(what) + ": expected " + std::to_string(rows) + "x" +
                         std::to_string(cols) + ", got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  }
}

inline void require_size(const Vector& v, Eigen::Index n, const char* what) {
  if (v.size() != n) {
    throw DimensionError(std::string(what) + ": expected length " + std::to_string(n) +
                         ", got " + std::to_string(v.size()));
  }
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace wncs
