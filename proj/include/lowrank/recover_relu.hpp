#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "lowrank/feasible_set.hpp"
#include "lowrank/rng.hpp"

namespace lowrank {

namespace detail {

inline constexpr double kLogSqrt2Pi = 0.9189385332046727417803297364056176;

// log of the standard normal density.
inline double log_norm_pdf_unit(double u) { return -0.5 * u * u - kLogSqrt2Pi; }

// log Phi(u) for the standard normal, stable over the whole real line.
// For u >= -37 the complementary error function does not underflow; below
// that the Mills-ratio asymptotic series gives better than 1e-12 relative
// accuracy (the first dropped term is 945/u^10 < 2e-13 at u = -37).
inline double log_norm_cdf_unit(double u) {
  if (u >= -37.0) {
    return std::log(0.5 * std::erfc(-u * std::numbers::sqrt2 / 2.0));
  }
  const double u2 = u * u;
  double term = 1.0 / u2;
  double series = -term;
  term *= 3.0 / u2;
  series += term;
  term *= 5.0 / u2;
  series -= term;
  term *= 7.0 / u2;
  series += term;
  return -0.5 * u2 - std::log(-u) - kLogSqrt2Pi + std::log1p(series);
}

// phi(u) / Phi(u), evaluated through logs so the ratio survives u << 0.
inline double norm_hazard(double u) {
  return std::exp(log_norm_pdf_unit(u) - log_norm_cdf_unit(u));
}

}  // namespace detail

// log Phi(t / sigma): log-probability that a N(0, sigma^2) draw is <= t.
// Finite for every finite t.
inline double log_norm_cdf(double t, double sigma) {
  require_arg(sigma > 0.0, "log_norm_cdf: sigma must be positive");
  require_arg(std::isfinite(t), "log_norm_cdf: t must be finite");
  return detail::log_norm_cdf_unit(t / sigma);
}

// Observations censored from below at zero: z = max(signal + noise, 0),
// noise i.i.d. N(0, sigma^2). Zero entries only reveal signal + noise <= 0.
struct CensoredObservation {
  Matrix z;
  double sigma = 1.0;
};

inline void validate(const CensoredObservation& obs) {
  require_nonempty(obs.z, "CensoredObservation: z");
  require_finite(obs.z, "CensoredObservation: z");
  require_arg(obs.sigma > 0.0, "CensoredObservation: sigma must be positive");
  require_arg((obs.z.array() >= 0.0).all(),
              "CensoredObservation: entries must be >= 0");
}

// Log-likelihood of pre-activation means m_prime under the censored model:
// Gaussian density terms on positive entries, log Phi(-m/sigma) mass terms
// on censored entries. Summation order is fixed, so the value is
// deterministic.
inline double censored_loglik(const Matrix& m_prime,
                              const CensoredObservation& obs) {
  validate(obs);
  require_arg(m_prime.rows() == obs.z.rows() && m_prime.cols() == obs.z.cols(),
              "censored_loglik: shape mismatch");
  require_finite(m_prime, "censored_loglik: m_prime");
  const double sigma = obs.sigma;
  const double log_gauss_const = -std::log(sigma) - detail::kLogSqrt2Pi;
  double acc = 0.0;
  for (Index j = 0; j < obs.z.cols(); ++j) {
    for (Index i = 0; i < obs.z.rows(); ++i) {
      const double z = obs.z(i, j);
      const double m = m_prime(i, j);
      if (z > 0.0) {
        const double res = (z - m) / sigma;
        acc += log_gauss_const - 0.5 * res * res;
      } else {
        acc += detail::log_norm_cdf_unit(-m / sigma);
      }
    }
  }
  return acc;
}

// Analytic gradient of censored_loglik in m_prime:
//   (z - m) / sigma^2 on positive entries,
//   -hazard(-m/sigma) / sigma on censored entries,
// with the hazard evaluated through log space so large positive m does not
// collapse to 0/0.
inline Matrix censored_loglik_grad(const Matrix& m_prime,
                                   const CensoredObservation& obs) {
  validate(obs);
  require_arg(m_prime.rows() == obs.z.rows() && m_prime.cols() == obs.z.cols(),
              "censored_loglik_grad: shape mismatch");
  require_finite(m_prime, "censored_loglik_grad: m_prime");
  const double sigma = obs.sigma;
  const double inv_var = 1.0 / (sigma * sigma);
  Matrix g(obs.z.rows(), obs.z.cols());
  for (Index j = 0; j < obs.z.cols(); ++j) {
    for (Index i = 0; i < obs.z.rows(); ++i) {
      const double z = obs.z(i, j);
      const double m = m_prime(i, j);
      if (z > 0.0)
        g(i, j) = (z - m) * inv_var;
      else
        g(i, j) = -detail::norm_hazard(-m / sigma) / sigma;
    }
  }
  return g;
}

struct MleResult {
  Matrix m_hat;  // d x d2
  Matrix y_hat;  // d1 x d2, equals x_check * m_hat exactly
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // accepted iterates, nondecreasing
};

struct MleOptions {
  double tol = 1e-6;       // relative objective change at which to stop
  int max_iter = 500;
  double proj_tol = 1e-7;  // feasible-set projection accuracy
  int proj_max_iter = 2000;
  int max_halvings = 30;   // backtracking budget per step
};

// Projected gradient ascent for the censored-Gaussian likelihood over the
// feasible image set. Both likelihood branches have curvature magnitude at
// most 1/sigma^2 (the Gaussian log-density exactly, the censored branch by
// log-concavity of the normal CDF), so sigma^2 is an inverse-Lipschitz step
// and the projected step cannot decrease the objective; backtracking with
// sufficient-increase parameter 1e-4 guards the residual interplay between
// step and inexact projection. Initialized at the projection of z itself.
inline MleResult solve_mle(const CensoredObservation& obs, const PsiParams& p,
                           const MleOptions& opt) {
  validate(obs);
  require_arg(opt.tol > 0.0, "solve_mle: tol must be positive");
  require_arg(opt.max_iter >= 1, "solve_mle: max_iter must be >= 1");
  require_arg(obs.z.rows() == p.x_check.rows(),
              "solve_mle: observation rows must match x_check rows");
  require_arg(p.x_check.rows() >= p.x_check.cols(),
              "solve_mle: x_check must be tall (rows >= cols)");

  const SpanProjector span(p.x_check);
  if (span.rank() < p.x_check.cols())
    throw RankDeficientError("solve_mle: x_check is rank deficient");

  const double step0 = obs.sigma * obs.sigma;

  bool proj_ok = true;
  auto project = [&](const Matrix& v) {
    auto [z, diag] = project_psi(v, p, span, opt.proj_tol, opt.proj_max_iter);
    proj_ok = proj_ok && diag.converged;
    return z;
  };

  Matrix y = project(obs.z);
  double f = censored_loglik(y, obs);

  MleResult res;
  res.objective_trace.push_back(f);

  bool stopped = false;
  int it = 0;
  while (it < opt.max_iter && !stopped) {
    ++it;
    const Matrix g = censored_loglik_grad(y, obs);
    double step = step0;
    bool accepted = false;
    Matrix cand;
    double f_cand = f;
    for (int h = 0; h <= opt.max_halvings; ++h) {
      cand = project(y + step * g);
      f_cand = censored_loglik(cand, obs);
      const double gain = (g.array() * (cand - y).array()).sum();
      if (f_cand - f >= 1e-4 * std::max(gain, 0.0) - 1e-12) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No step improves the objective: numerically stationary.
      stopped = true;
      res.converged = true;
      break;
    }
    const double rel_change = (f_cand - f) / (1.0 + std::abs(f_cand));
    y = cand;
    f = f_cand;
    res.objective_trace.push_back(f);
    if (rel_change <= opt.tol) {
      stopped = true;
      res.converged = true;
    }
  }
  res.iterations = it;
  res.converged = res.converged && proj_ok;

  res.m_hat = pinv(p.x_check) * y;
  res.y_hat = p.x_check * res.m_hat;
  res.loglik = censored_loglik(res.y_hat, obs);
  return res;
}

inline MleResult solve_mle(const CensoredObservation& obs, const PsiParams& p,
                           double tol = 1e-6, int max_iter = 500) {
  MleOptions opt;
  opt.tol = tol;
  opt.max_iter = max_iter;
  return solve_mle(obs, p, opt);
}

// Numeric audit of the scalar inequalities the censored analysis rests on.
// f is the CDF of N(0, sigma^2). All margins are "amount by which the
// inequality holds": nonnegative (up to roundoff) means the inequality is
// verified. Curvature and Taylor margins are normalized by sigma^2; the
// two supremum bounds are reported with margins relative to the bound.
struct LemmaReport {
  // 0 >= (log f)'' >= -1/sigma^2 on [-alpha, alpha]
  double curvature_upper_margin = 0.0;  // min of -sigma^2 (log f)''
  double curvature_lower_margin = 0.0;  // min of sigma^2 (log f)'' + 1
  // log f(b) - log f(a) >= (f'(a)/f(a))(b-a) - (b-a)^2 / (2 sigma^2)
  double taylor_margin = 0.0;
  // sup |f'| / (f (1-f)) <= 8 (alpha + sigma) / sigma^2
  double lipschitz_sup = 0.0;
  double lipschitz_bound = 0.0;
  double lipschitz_margin = 0.0;  // (bound - sup) / bound
  // sup f (1-f) / f'^2 <= pi sigma^2 exp(alpha^2 / (2 sigma^2))
  double beta_sup = 0.0;
  double beta_bound = 0.0;
  double beta_margin = 0.0;  // (bound - sup) / bound
  // squared Hellinger <= KL for Bernoulli pairs (p, q)
  double hellinger_margin = 0.0;
  // -sigma^2 log(1 - f(x)) / (x^2 / 2) >= 1 on [sigma, 20 sigma]
  double tightness_margin = 0.0;
  double tightness_ratio_at_10sigma = 0.0;
  int grid_n = 0;
  int pair_n = 0;

  bool all_ok(double tol = 1e-7) const {
    return curvature_upper_margin >= -tol && curvature_lower_margin >= -tol &&
           taylor_margin >= -tol && lipschitz_margin >= -tol &&
           beta_margin >= -tol && hellinger_margin >= -tol &&
           tightness_margin >= -tol && tightness_ratio_at_10sigma >= 1.0 - tol;
  }
};

inline LemmaReport verify_scalar_lemmas(double alpha, double sigma,
                                        int grid_n) {
  require_arg(alpha > 0.0, "verify_scalar_lemmas: alpha must be positive");
  require_arg(sigma > 0.0, "verify_scalar_lemmas: sigma must be positive");
  require_arg(grid_n >= 1000, "verify_scalar_lemmas: grid_n must be >= 1000");

  using detail::log_norm_cdf_unit;
  using detail::log_norm_pdf_unit;
  using detail::norm_hazard;

  LemmaReport rep;
  rep.grid_n = grid_n;
  const double var = sigma * sigma;

  // Grid pass over [-alpha, alpha]: curvature bounds and the two suprema.
  double cur_up = std::numeric_limits<double>::infinity();
  double cur_lo = std::numeric_limits<double>::infinity();
  double log_lip_sup = -std::numeric_limits<double>::infinity();
  double log_beta_sup = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid_n; ++k) {
    const double x = -alpha + 2.0 * alpha * k / (grid_n - 1);
    const double u = x / sigma;
    const double h = norm_hazard(u);
    // sigma^2 (log f)''(x) = -h(u) (u + h(u))
    const double curv = -h * (u + h);
    cur_up = std::min(cur_up, -curv);
    cur_lo = std::min(cur_lo, curv + 1.0);
    // log |f'| = lpdf(u) - log sigma; log f = lcdf(u); log(1-f) = lcdf(-u)
    const double lpdf = log_norm_pdf_unit(u);
    const double lcdf = log_norm_cdf_unit(u);
    const double lccdf = log_norm_cdf_unit(-u);
    log_lip_sup = std::max(log_lip_sup, lpdf - std::log(sigma) - lcdf - lccdf);
    log_beta_sup = std::max(
        log_beta_sup, lcdf + lccdf - 2.0 * (lpdf - std::log(sigma)));
  }
  rep.curvature_upper_margin = cur_up;
  rep.curvature_lower_margin = cur_lo;
  rep.lipschitz_sup = std::exp(log_lip_sup);
  rep.lipschitz_bound = 8.0 * (alpha + sigma) / var;
  rep.lipschitz_margin =
      (rep.lipschitz_bound - rep.lipschitz_sup) / rep.lipschitz_bound;
  rep.beta_sup = std::exp(log_beta_sup);
  rep.beta_bound = std::numbers::pi * var * std::exp(alpha * alpha / (2.0 * var));
  rep.beta_margin = (rep.beta_bound - rep.beta_sup) / rep.beta_bound;

  // First-order lower bound of log f on a pair grid over [-alpha, alpha]^2,
  // normalized by sigma^2.
  const int m = std::max(static_cast<int>(std::sqrt(double(grid_n))), 16);
  double taylor = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m; ++i) {
    const double a = -alpha + 2.0 * alpha * i / (m - 1);
    const double ua = a / sigma;
    const double lcdf_a = log_norm_cdf_unit(ua);
    const double slope = norm_hazard(ua) / sigma;  // f'(a)/f(a)
    for (int j = 0; j < m; ++j) {
      const double b = -alpha + 2.0 * alpha * j / (m - 1);
      const double lhs = log_norm_cdf_unit(b / sigma) - lcdf_a;
      const double rhs = slope * (b - a) - (b - a) * (b - a) / (2.0 * var);
      taylor = std::min(taylor, lhs - rhs);
    }
  }
  rep.taylor_margin = taylor;

  // Squared Hellinger vs KL on random Bernoulli parameter pairs.
  const int pairs = std::max(grid_n / 10, 1000);
  rep.pair_n = pairs;
  SeededRng rng(0x48454C4CU, 0);
  double hell = std::numeric_limits<double>::infinity();
  for (int k = 0; k < pairs; ++k) {
    const double pp = rng.uniform_open();
    const double qq = rng.uniform_open();
    const double dh2 = (std::sqrt(pp) - std::sqrt(qq)) * (std::sqrt(pp) - std::sqrt(qq)) +
                       (std::sqrt(1 - pp) - std::sqrt(1 - qq)) * (std::sqrt(1 - pp) - std::sqrt(1 - qq));
    const double kl = pp * std::log(pp / qq) + (1 - pp) * std::log((1 - pp) / (1 - qq));
    hell = std::min(hell, kl - dh2);
  }
  rep.hellinger_margin = hell;

  // Quadratic-growth ratio of the censored mass term on [sigma, 20 sigma].
  double tight = std::numeric_limits<double>::infinity();
  for (int k = 0; k < grid_n; ++k) {
    const double x = sigma + (20.0 * sigma - sigma) * k / (grid_n - 1);
    const double ratio = -var * log_norm_cdf_unit(-x / sigma) / (0.5 * x * x);
    tight = std::min(tight, ratio - 1.0);
  }
  rep.tightness_margin = tight;
  rep.tightness_ratio_at_10sigma =
      -var * log_norm_cdf_unit(-10.0) / (0.5 * (10.0 * sigma) * (10.0 * sigma));
  return rep;
}

}  // namespace lowrank
