#pragma once

#include <cassert>
#include <cmath>

#include "hsbm/error.hpp"

namespace hsbm {

struct prior_t {
  double a0 = 1.0;
  double b0 = 1.0;
};

// Aggregated pair statistic against one tree node: e = edge mass, w = exposure.
struct suff_stat_t {
  double e = 0.0;
  double w = 0.0;

  suff_stat_t& operator+=(const suff_stat_t& o) {
    e += o.e;
    w += o.w;
    return *this;
  }
  friend suff_stat_t operator+(suff_stat_t a, const suff_stat_t& b) { return a += b; }
};

struct nat_param_t {
  double np1 = 0.0;  // coefficient of the edge statistic
  double np2 = 0.0;  // coefficient of the exposure statistic
};

struct posterior_t {
  double alpha = 1.0;
  double beta = 1.0;
};

// psi(x) for x > 0: upward recurrence to x >= 10, then the asymptotic series
// with Bernoulli terms through 1/x^12; absolute error below 1e-13.
inline double digamma(double x) {
  assert(x > 0.0);
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv2 *
      (1.0 / 12.0 -
       inv2 * (1.0 / 120.0 -
               inv2 * (1.0 / 252.0 -
                       inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * 691.0 / 32760.0)))));
  return acc + std::log(x) - 0.5 * inv - series;
}

inline double ln_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

namespace detail {
// Statistics reaching a node may undershoot exact bounds by accumulated
// rounding; violations beyond this slack are treated as data errors.
inline constexpr double stat_slack = 1e-9;
}  // namespace detail

// Poisson likelihood on edge counts with Gamma(a0, b0) rate prior.
// Closed under (E, W): posterior Gamma(a0 + E, b0 + W).
struct poisson_kernel_t {
  static posterior_t posterior_update(prior_t p, double E, double W) {
    assert(p.a0 > 0.0 && p.b0 > 0.0);
    if (E < -detail::stat_slack || W < -detail::stat_slack)
      throw data_error("negative Poisson statistic");
    return {p.a0 + std::max(E, 0.0), p.b0 + std::max(W, 0.0)};
  }

  // (E[ln lambda], -E[lambda]) under Gamma(alpha, beta).
  static nat_param_t expected_nat_param(double alpha, double beta) {
    assert(alpha > 0.0 && beta > 0.0);
    return {digamma(alpha) - std::log(beta), -alpha / beta};
  }

  static double mf_log_score(nat_param_t np, suff_stat_t s) {
    return np.np1 * s.e + np.np2 * s.w;
  }

  // ln of the Gamma-Poisson predictive mass for (e, w) against Gamma(alpha, beta),
  // dropping the mu-only base measure term.
  static double collapsed_log_score(double alpha, double beta, suff_stat_t s) {
    assert(alpha > 0.0 && beta > 0.0);
    if (s.e < -detail::stat_slack || s.w < -detail::stat_slack)
      throw data_error("negative Poisson statistic");
    const double e = std::max(s.e, 0.0);
    const double w = std::max(s.w, 0.0);
    return std::lgamma(alpha + e) - std::lgamma(alpha) + alpha * std::log(beta) -
           (alpha + e) * std::log(beta + w);
  }

  static double log_marginal(prior_t p, double E, double W) {
    return collapsed_log_score(p.a0, p.b0, {E, W});
  }
};

// Bernoulli likelihood on binary pair indicators with Beta(a0, b0) prior.
// W counts pairs, E counts edges among them, so W - E counts non-edges.
struct bernoulli_kernel_t {
  static posterior_t posterior_update(prior_t p, double E, double W) {
    assert(p.a0 > 0.0 && p.b0 > 0.0);
    if (E < -detail::stat_slack || W - E < -detail::stat_slack)
      throw data_error("Bernoulli statistics need 0 <= E <= W");
    const double e = std::max(E, 0.0);
    return {p.a0 + e, p.b0 + std::max(W - E, 0.0)};
  }

  // (E[ln theta - ln(1-theta)], E[ln(1-theta)]) under Beta(alpha, beta), so
  // the score pairs np1 with edges and np2 with total pair exposure.
  static nat_param_t expected_nat_param(double alpha, double beta) {
    assert(alpha > 0.0 && beta > 0.0);
    return {digamma(alpha) - digamma(beta), digamma(beta) - digamma(alpha + beta)};
  }

  static double mf_log_score(nat_param_t np, suff_stat_t s) {
    return np.np1 * s.e + np.np2 * s.w;
  }

  static double collapsed_log_score(double alpha, double beta, suff_stat_t s) {
    assert(alpha > 0.0 && beta > 0.0);
    if (s.e < -detail::stat_slack || s.w - s.e < -detail::stat_slack)
      throw data_error("Bernoulli statistics need 0 <= e <= w");
    const double e = std::max(s.e, 0.0);
    const double f = std::max(s.w - s.e, 0.0);
    return ln_beta(alpha + e, beta + f) - ln_beta(alpha, beta);
  }

  static double log_marginal(prior_t p, double E, double W) {
    return collapsed_log_score(p.a0, p.b0, {E, W});
  }
};

}  // namespace hsbm
