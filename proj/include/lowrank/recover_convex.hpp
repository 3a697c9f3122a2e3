#pragma once

#include "lowrank/feasible_set.hpp"

namespace lowrank {

struct ConvexRecoveryResult {
  Matrix m_hat;  // d x d2
  Matrix y_hat;  // d1 x d2, equals x_check * m_hat exactly
  ProjectionDiagnostics diagnostics;
};

// Constrained reconstruction: Euclidean projection of the target onto the
// feasible image set, pulled back to weight space through the
// pseudoinverse. When the image map is many-to-one the pullback is the
// minimal-Frobenius-norm preimage. y_hat is recomputed as x_check * m_hat,
// which equals the span component of the projection, so the returned pair
// is exactly consistent while staying within the projection tolerance of
// the feasible set.
inline ConvexRecoveryResult solve_constrained(const Matrix& t,
                                              const PsiParams& p,
                                              double tol = 1e-7,
                                              int max_iter = 2000) {
  require_nonempty(t, "solve_constrained: target");
  auto [z, diag] = project_psi(t, p, tol, max_iter);
  ConvexRecoveryResult res;
  res.m_hat = pinv(p.x_check) * z;
  res.y_hat = p.x_check * res.m_hat;
  res.diagnostics = diag;
  return res;
}

}  // namespace lowrank
