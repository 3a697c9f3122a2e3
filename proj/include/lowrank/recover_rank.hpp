#pragma once

#include <algorithm>

#include "lowrank/dense_linalg.hpp"

namespace lowrank {

struct RankRecoveryResult {
  Matrix m_hat;             // d x d2, rank <= r
  double objective = 0.0;   // ||y_tilde - x_check * m_hat||_F
  int residual_rank = 0;    // numerical rank of m_hat
};

// Closed-form rank-constrained least squares:
//   m_hat = argmin_{rank(Z) <= r} ||y_tilde - x_check * Z||_F
// With S the symmetric square root of x_check^T x_check,
//   m_hat = S^{-1} * [ S * pinv(x_check) * y_tilde ]_r,
// where [.]_r keeps the top r singular triplets. The change of variable
// makes the weighted problem an unweighted one, so the truncation is
// globally optimal. Truncation ties at the cut are resolved by the fixed
// SVD ordering and sign convention; any tie-broken choice attains the same
// objective.
inline RankRecoveryResult solve_rank_constrained(const Matrix& x_check,
                                                 const Matrix& y_tilde,
                                                 int r) {
  require_nonempty(x_check, "solve_rank_constrained: x_check");
  require_nonempty(y_tilde, "solve_rank_constrained: y_tilde");
  require_arg(x_check.rows() >= x_check.cols(),
              "solve_rank_constrained: x_check must be tall (rows >= cols)");
  require_arg(y_tilde.rows() == x_check.rows(),
              "solve_rank_constrained: row count mismatch");
  require_arg(r >= 1 && r <= std::min(x_check.cols(), y_tilde.cols()),
              "solve_rank_constrained: r out of range");
  require_finite(y_tilde, "solve_rank_constrained: y_tilde");

  const auto [s, s_inv] = gram_sqrt_pair(x_check);  // RankDeficientError if not full rank
  const Matrix core = s * (pinv(x_check) * y_tilde);
  const Matrix truncated = truncate_rank(core, r);

  RankRecoveryResult res;
  res.m_hat = s_inv * truncated;
  res.objective = (y_tilde - x_check * res.m_hat).norm();
  res.residual_rank = numerical_rank(res.m_hat);
  return res;
}

// Rank-constrained least squares for designs that may be rank deficient or
// wide (dead calibration units produce exactly-zero design columns). The fit
// only sees the numerical column space of x_check, so the minimizer is
// underdetermined; the minimal-Frobenius-norm one is returned, consistent
// with the pseudoinverse pullback used by the constrained solvers. On a
// full-column-rank design this attains the same objective as
// solve_rank_constrained.
inline RankRecoveryResult solve_rank_spanned(const Matrix& x_check,
                                             const Matrix& y_tilde, int r) {
  require_nonempty(x_check, "solve_rank_spanned: x_check");
  require_nonempty(y_tilde, "solve_rank_spanned: y_tilde");
  require_arg(y_tilde.rows() == x_check.rows(),
              "solve_rank_spanned: row count mismatch");
  require_arg(r >= 1 && r <= std::min(x_check.cols(), y_tilde.cols()),
              "solve_rank_spanned: r out of range");
  require_finite(x_check, "solve_rank_spanned: x_check");
  require_finite(y_tilde, "solve_rank_spanned: y_tilde");

  const SvdFactors f = svd(x_check);
  const double cut = kRankRelTol * f.s(0);
  Index k = 0;
  while (k < f.s.size() && f.s(k) > cut) ++k;

  RankRecoveryResult res;
  if (k == 0) {  // zero design: every candidate fits equally, return zero
    res.m_hat = Matrix::Zero(x_check.cols(), y_tilde.cols());
    res.objective = y_tilde.norm();
    res.residual_rank = 0;
    return res;
  }
  const Matrix core = f.u.leftCols(k).transpose() * y_tilde;
  const int rr = static_cast<int>(std::min<Index>(r, k));
  const Vector inv_s = f.s.head(k).cwiseInverse();
  res.m_hat =
      f.v.leftCols(k) * (inv_s.asDiagonal() * truncate_rank(core, rr));
  res.objective = (y_tilde - x_check * res.m_hat).norm();
  res.residual_rank = numerical_rank(res.m_hat);
  return res;
}

}  // namespace lowrank
