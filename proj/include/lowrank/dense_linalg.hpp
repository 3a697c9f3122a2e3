#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>

#include "lowrank/errors.hpp"
#include "lowrank/matrix.hpp"

namespace lowrank {

// Relative singular-value threshold below which directions count as null.
inline constexpr double kRankRelTol = 1e-10;

// Compact SVD a = u * diag(s) * v^T with k = min(rows, cols) columns.
// Sign convention: the largest-magnitude entry of each left singular vector
// is nonnegative (ties broken by lowest row index), so repeated
// factorizations of the same matrix are identical.
struct SvdFactors {
  Matrix u;
  Vector s;
  Matrix v;

  Matrix reconstruct() const { return u * s.asDiagonal() * v.transpose(); }
};

inline SvdFactors svd(const Matrix& a) {
  require_nonempty(a, "svd");
  require_finite(a, "svd");
  Eigen::BDCSVD<Matrix> dec(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() != Eigen::Success)
    throw NumericError("svd: decomposition did not converge");
  SvdFactors f{dec.matrixU(), dec.singularValues(), dec.matrixV()};
  for (Index j = 0; j < f.u.cols(); ++j) {
    Index which = 0;
    double best = -1.0;
    for (Index i = 0; i < f.u.rows(); ++i) {
      const double mag = std::abs(f.u(i, j));
      if (mag > best) {
        best = mag;
        which = i;
      }
    }
    if (f.u(which, j) < 0.0) {
      f.u.col(j) = -f.u.col(j);
      f.v.col(j) = -f.v.col(j);
    }
  }
  return f;
}

inline int numerical_rank(const Vector& s, double rel_tol = kRankRelTol) {
  if (s.size() == 0) return 0;
  const double cut = rel_tol * s(0);
  int r = 0;
  for (Index i = 0; i < s.size(); ++i)
    if (s(i) > cut) ++r;
  return r;
}

inline int numerical_rank(const Matrix& a, double rel_tol = kRankRelTol) {
  return numerical_rank(svd(a).s, rel_tol);
}

// Best Frobenius-norm rank-r approximation (keep the top r singular triplets).
inline Matrix truncate_rank(const Matrix& a, int r) {
  require_nonempty(a, "truncate_rank");
  require_arg(r >= 1 && r <= std::min(a.rows(), a.cols()),
              "truncate_rank: r out of range");
  const SvdFactors f = svd(a);
  return f.u.leftCols(r) * f.s.head(r).asDiagonal() *
         f.v.leftCols(r).transpose();
}

// Moore-Penrose pseudoinverse. Singular values below the cutoff are treated
// as zero; the default cutoff is 1e-12 times the largest singular value.
inline Matrix pinv(const Matrix& a, std::optional<double> rcond = std::nullopt) {
  require_nonempty(a, "pinv");
  require_finite(a, "pinv");
  if (rcond) require_arg(*rcond >= 0.0, "pinv: rcond must be >= 0");
  const SvdFactors f = svd(a);
  const double cut = rcond ? *rcond : 1e-12 * f.s(0);
  Vector inv = Vector::Zero(f.s.size());
  for (Index i = 0; i < f.s.size(); ++i)
    if (f.s(i) >= cut && f.s(i) > 0.0) inv(i) = 1.0 / f.s(i);
  return f.v * inv.asDiagonal() * f.u.transpose();
}

// Symmetric square root S of x^T x together with S^{-1}, built from the SVD
// of x itself: forming the Gram matrix explicitly would square the condition
// number and hide rank deficiency below sqrt(eps). Requires x to have full
// column rank (smallest singular value above kRankRelTol relative).
inline std::pair<Matrix, Matrix> gram_sqrt_pair(const Matrix& x) {
  require_nonempty(x, "gram_sqrt_pair");
  require_finite(x, "gram_sqrt_pair");
  const SvdFactors f = svd(x);
  const double s_max = f.s(0);
  const double s_min = f.s(f.s.size() - 1);
  if (x.rows() < x.cols() || s_max == 0.0 || s_min <= kRankRelTol * s_max)
    throw RankDeficientError("gram_sqrt_pair: input is rank deficient");
  const Vector inv = f.s.cwiseInverse();
  return {f.v * f.s.asDiagonal() * f.v.transpose(),
          f.v * inv.asDiagonal() * f.v.transpose()};
}

struct MatrixNorms {
  double frobenius = 0.0;
  double op = 0.0;       // largest singular value
  double nuclear = 0.0;  // sum of singular values
  double max_abs = 0.0;  // entrywise sup norm
};

inline MatrixNorms norms(const Matrix& a) {
  require_nonempty(a, "norms");
  const SvdFactors f = svd(a);
  return {a.norm(), f.s(0), f.s.sum(), a.cwiseAbs().maxCoeff()};
}

// Whether y is approximately rank r in the nuclear-vs-sup-norm sense:
// nuclear(y) <= max_abs(y) * sqrt(r * rows * cols), with 1e-9 relative slack.
// The zero matrix qualifies (0 <= 0).
inline bool is_approx_rank(const Matrix& y, int r) {
  require_nonempty(y, "is_approx_rank");
  require_arg(r >= 1, "is_approx_rank: r must be positive");
  const MatrixNorms n = norms(y);
  if (n.max_abs == 0.0) return true;
  const double budget =
      n.max_abs *
      std::sqrt(static_cast<double>(r) * static_cast<double>(y.rows()) *
                static_cast<double>(y.cols()));
  return n.nuclear <= budget * (1.0 + 1e-9);
}

}  // namespace lowrank
