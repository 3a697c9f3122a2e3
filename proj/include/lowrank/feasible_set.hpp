#pragma once

#include <cmath>
#include <utility>

#include "lowrank/dense_linalg.hpp"

namespace lowrank {

// Parameters of the image-space feasible set: matrices whose columns lie in
// the column span of x_check, whose entries are bounded by alpha in
// magnitude, and whose nuclear norm is at most alpha*sqrt(r*rows*cols) for
// the shape being projected. The nuclear radius depends on the target shape
// and is always recomputed at call time.
struct PsiParams {
  Matrix x_check;
  double alpha = 1.0;
  int r = 1;
};

inline double nuclear_radius(const PsiParams& p, Index rows, Index cols) {
  require_arg(p.alpha > 0.0, "PsiParams: alpha must be positive");
  require_arg(p.r >= 1, "PsiParams: r must be positive");
  return p.alpha * std::sqrt(static_cast<double>(p.r) *
                             static_cast<double>(rows) *
                             static_cast<double>(cols));
}

struct ProjectionDiagnostics {
  int iterations = 0;
  double final_violation = 0.0;
  bool converged = false;
};

// Entrywise clamp to [-alpha, alpha]: the Euclidean projection onto the
// sup-norm ball.
inline Matrix project_linf(const Matrix& y, double alpha) {
  require_arg(alpha > 0.0, "project_linf: alpha must be positive");
  require_finite(y, "project_linf");
  return y.cwiseMax(-alpha).cwiseMin(alpha);
}

namespace detail {

// Euclidean projection of a nonincreasing nonnegative vector onto the l1
// ball of radius tau: subtract the water-filling threshold, clip at zero.
inline Vector l1_ball_shrink(const Vector& s, double tau) {
  double cum = 0.0;
  double theta = 0.0;
  for (Index i = 0; i < s.size(); ++i) {
    cum += s(i);
    const double t = (cum - tau) / static_cast<double>(i + 1);
    if (s(i) - t > 0.0)
      theta = t;
    else
      break;
  }
  theta = std::max(theta, 0.0);
  return (s.array() - theta).max(0.0).matrix();
}

}  // namespace detail

// Euclidean projection onto the nuclear-norm ball of radius tau: soft
// threshold the singular values, keep the singular vectors.
inline Matrix project_nuclear(const Matrix& y, double tau) {
  require_arg(tau > 0.0, "project_nuclear: tau must be positive");
  require_finite(y, "project_nuclear");
  const SvdFactors f = svd(y);
  if (f.s.sum() <= tau) return y;
  const Vector shrunk = detail::l1_ball_shrink(f.s, tau);
  return f.u * shrunk.asDiagonal() * f.v.transpose();
}

// Orthogonal projector onto the column span of a fixed matrix, held as an
// orthonormal basis. Reduces to the identity when the span is all of R^d1.
class SpanProjector {
 public:
  explicit SpanProjector(const Matrix& x_check) {
    require_nonempty(x_check, "SpanProjector");
    require_finite(x_check, "SpanProjector");
    const SvdFactors f = svd(x_check);
    const int rank = numerical_rank(f.s);
    rows_ = x_check.rows();
    full_ = (rank == rows_);
    if (!full_) basis_ = f.u.leftCols(rank);
  }

  Index rows() const { return rows_; }
  int rank() const { return full_ ? static_cast<int>(rows_) : static_cast<int>(basis_.cols()); }
  bool is_identity() const { return full_; }

  Matrix apply(const Matrix& y) const {
    if (full_) return y;
    return basis_ * (basis_.transpose() * y);
  }

  // ||(I - P) y||_F
  double residual_norm(const Matrix& y) const {
    if (full_) return 0.0;
    return (y - apply(y)).norm();
  }

 private:
  Matrix basis_;
  Index rows_ = 0;
  bool full_ = false;
};

inline Matrix project_span(const Matrix& y, const Matrix& x_check) {
  require_arg(y.rows() == x_check.rows(), "project_span: row mismatch");
  require_finite(y, "project_span");
  return SpanProjector(x_check).apply(y);
}

namespace detail {

// Worst relative constraint violation of z against the three sets.
inline double psi_violation(const Matrix& z, const PsiParams& p,
                            const SpanProjector& span, double tau) {
  const double fro = z.norm();
  const double box = (z.cwiseAbs().maxCoeff() - p.alpha) / p.alpha;
  const double nuc = (svd(z).s.sum() - tau) / tau;
  const double spn = fro > 0.0 ? span.residual_norm(z) / fro : 0.0;
  return std::max({box, nuc, spn, 0.0});
}

}  // namespace detail

// Euclidean projection onto the intersection of the three sets via
// Dykstra's alternating projections with correction terms, sweep order
// span -> nuclear ball -> sup-norm box. Unlike plain cyclic projections,
// the corrections make the iterates converge to the exact Euclidean
// projection onto the intersection. Convergence requires both a small
// per-sweep change and a small worst constraint violation.
inline std::pair<Matrix, ProjectionDiagnostics> project_psi(
    const Matrix& y, const PsiParams& p, const SpanProjector& span,
    double tol = 1e-7, int max_iter = 2000) {
  require_arg(tol > 0.0, "project_psi: tol must be positive");
  require_arg(max_iter >= 1, "project_psi: max_iter must be >= 1");
  require_arg(y.rows() == span.rows(), "project_psi: row mismatch");
  require_finite(y, "project_psi");
  const double tau = nuclear_radius(p, y.rows(), y.cols());

  Matrix x = y;
  Matrix q_nuc = Matrix::Zero(y.rows(), y.cols());
  Matrix q_box = Matrix::Zero(y.rows(), y.cols());

  ProjectionDiagnostics diag;
  for (int it = 1; it <= max_iter; ++it) {
    const Matrix x_prev = x;
    // Span constraint is affine: its Dykstra correction is always zero and
    // can be dropped; the plain projection suffices.
    x = span.apply(x);
    Matrix u = x + q_nuc;
    x = project_nuclear(u, tau);
    q_nuc = u - x;
    u = x + q_box;
    x = project_linf(u, p.alpha);
    q_box = u - x;

    diag.iterations = it;
    const double change = (x - x_prev).norm();
    if (change <= tol * std::max(1.0, x.norm())) {
      diag.final_violation = detail::psi_violation(x, p, span, tau);
      if (diag.final_violation <= tol) {
        diag.converged = true;
        return {x, diag};
      }
    }
  }
  diag.final_violation = detail::psi_violation(x, p, span, tau);
  diag.converged = diag.final_violation <= tol;
  return {x, diag};
}

inline std::pair<Matrix, ProjectionDiagnostics> project_psi(
    const Matrix& y, const PsiParams& p, double tol = 1e-7,
    int max_iter = 2000) {
  return project_psi(y, p, SpanProjector(p.x_check), tol, max_iter);
}

// Membership within relative slack tol.
inline bool contains(const Matrix& y, const PsiParams& p, double tol = 1e-9) {
  require_arg(tol >= 0.0, "contains: tol must be >= 0");
  require_finite(y, "contains");
  const double tau = nuclear_radius(p, y.rows(), y.cols());
  const MatrixNorms n = norms(y);
  if (n.max_abs > p.alpha * (1.0 + tol)) return false;
  if (n.nuclear > tau * (1.0 + tol)) return false;
  const SpanProjector span(p.x_check);
  return span.residual_norm(y) <= tol * n.frobenius;
}

}  // namespace lowrank
