#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace lowrank {

// All numeric work is double precision. Matrices are dense; storage order in
// memory is Eigen's default, the on-disk format (lrm_io) is row-major.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline void require_arg(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void require_finite(const Matrix& a, const char* name) {
  if (!a.allFinite())
    throw std::invalid_argument(std::string(name) + ": non-finite entries");
}

inline void require_nonempty(const Matrix& a, const char* name) {
  if (a.rows() == 0 || a.cols() == 0)
    throw std::invalid_argument(std::string(name) + ": empty matrix");
}

}  // namespace lowrank
