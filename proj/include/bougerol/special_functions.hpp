#pragma once

// Closed-form targets: the arcsinh kernel, log-gamma, real Gauss 2F1 on the
// negative axis, the moment and Laplace-Mellin formulas for the exponential
// functional and the subordinated Bessel clock, and the Kolmogorov law.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "bougerol/errors.hpp"

namespace bougerol {

struct ArgSinh {
  double value;       // log(x + sqrt(1 + x^2))
  double derivative;  // 1 / sqrt(1 + x^2)
};

/// arcsinh and its derivative. Evaluated on |x| and reflected, so negative
/// arguments never suffer cancellation.
inline ArgSinh arg_sinh(double x) {
  const double ax = std::fabs(x);
  double value = 0.0;
  if (ax > 1e150) {
    value = std::log(ax) + std::numbers::ln2;
  } else {
    const double root = std::sqrt(1.0 + ax * ax);
    value = std::log1p(ax + ax * ax / (1.0 + root));
  }
  const double derivative = ax > 1e150 ? 1.0 / ax : 1.0 / std::hypot(1.0, ax);
  return {std::signbit(x) ? -value : value, derivative};
}

/// log Gamma(x) for x > 0: Stirling series above 10, upward recurrence below.
inline double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("log_gamma: argument must be positive and finite, got " +
                      std::to_string(x));
  }
  double shift = 0.0;
  double y = x;
  if (y < 10.0) {
    double product = 1.0;
    while (y < 10.0) {
      product *= y;
      y += 1.0;
    }
    shift = std::log(product);
  }
  const double inv = 1.0 / y;
  const double inv2 = inv * inv;
  // Bernoulli terms B_{2k} / (2k (2k-1) y^{2k-1}), k = 1..7.
  const double series =
      inv * (1.0 / 12.0 +
             inv2 * (-1.0 / 360.0 +
                     inv2 * (1.0 / 1260.0 +
                             inv2 * (-1.0 / 1680.0 +
                                     inv2 * (1.0 / 1188.0 +
                                             inv2 * (-691.0 / 360360.0 + inv2 * (1.0 / 156.0)))))));
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  return (y - 0.5) * std::log(y) - y + kHalfLog2Pi + series - shift;
}

namespace detail {

inline bool is_nonpositive_integer(double v) { return v <= 0.0 && v == std::floor(v); }

// Plain Gauss series for |w| < 1, with a compensated sum.
inline double hyp2f1_series(double a, double b, double c, double w, long max_terms) {
  double sum = 1.0;
  double compensation = 0.0;
  double term = 1.0;
  const double tail_factor = 1.0 / (1.0 - std::fabs(w));
  const double warmup = std::fabs(a) + std::fabs(b) + std::fabs(c) + 2.0;
  for (long k = 0; k < max_terms; ++k) {
    const double kd = static_cast<double>(k);
    term *= (a + kd) * (b + kd) / ((c + kd) * (kd + 1.0)) * w;
    const double y = term - compensation;
    const double t = sum + y;
    compensation = (t - sum) - y;
    sum = t;
    if (term == 0.0) {
      return sum;
    }
    if (kd > warmup && std::fabs(term) * tail_factor <= 1e-17 * std::fabs(sum)) {
      return sum;
    }
  }
  throw NumericalError("hyp2f1: series did not converge within " + std::to_string(max_terms) +
                       " terms (w=" + std::to_string(w) + ")");
}

inline double recip_gamma(double x) { return is_nonpositive_integer(x) ? 0.0 : 1.0 / std::tgamma(x); }

// Connection formula at infinity for z < -1; requires a - b not an integer.
inline double hyp2f1_reflected(double a, double b, double c, double z, long max_terms) {
  const double u = 1.0 / z;
  const double log_mz = std::log(-z);
  const double first = std::tgamma(c) * std::tgamma(b - a) * recip_gamma(b) * recip_gamma(c - a) *
                       std::exp(-a * log_mz) * hyp2f1_series(a, a - c + 1.0, a - b + 1.0, u, max_terms);
  const double second = std::tgamma(c) * std::tgamma(a - b) * recip_gamma(a) * recip_gamma(c - b) *
                        std::exp(-b * log_mz) * hyp2f1_series(b, b - c + 1.0, b - a + 1.0, u, max_terms);
  return first + second;
}

}  // namespace detail

/// Gauss hypergeometric 2F1(a, b; c; z) for real z <= 0. Arguments in
/// [-1/2, 0] use the series directly, arguments below -2 the expansion at
/// infinity, and the rest a Pfaff transformation into (1/3, 1).
inline double hyp2f1(double a, double b, double c, double z, long max_terms = 1'000'000) {
  if (detail::is_nonpositive_integer(c)) {
    throw DomainError("hyp2f1: c must not be a nonpositive integer");
  }
  if (!(z <= 0.0)) {
    throw DomainError("hyp2f1: only z <= 0 is supported");
  }
  if (z == 0.0 || a == 0.0 || b == 0.0) {
    return 1.0;
  }
  if (z >= -0.5) {
    return detail::hyp2f1_series(a, b, c, z, max_terms);
  }
  const double w = z / (z - 1.0);
  const double log1mz = std::log1p(-z);
  // Pfaff: F(a,b;c;z) = (1-z)^{-a} F(a, c-b; c; w) = (1-z)^{-b} F(b, c-a; c; w).
  // Prefer a terminating series, otherwise the faster decaying one.
  const bool first_terminates =
      detail::is_nonpositive_integer(a) || detail::is_nonpositive_integer(c - b);
  const bool second_terminates =
      detail::is_nonpositive_integer(b) || detail::is_nonpositive_integer(c - a);
  const double ab = a - b;
  if (z < -2.0 && !first_terminates && !second_terminates && std::fabs(ab - std::round(ab)) > 1e-4) {
    return detail::hyp2f1_reflected(a, b, c, z, max_terms);
  }
  const bool use_first = first_terminates || (!second_terminates && a <= b);
  if (use_first) {
    return std::exp(-a * log1mz) * detail::hyp2f1_series(a, c - b, c, w, max_terms);
  }
  return std::exp(-b * log1mz) * detail::hyp2f1_series(b, c - a, c, w, max_terms);
}

/// Right-hand side of the Gaussian-mixture characterisation of A_t:
/// (a'(x)/sqrt(t)) exp(-a(x)^2 / 2t).
inline double bougerol_kernel_rhs(double x, double t) {
  if (!(t > 0.0)) {
    throw DomainError("bougerol_kernel_rhs: t must be positive");
  }
  const auto [a, a_prime] = arg_sinh(x);
  return a_prime / std::sqrt(t) * std::exp(-a * a / (2.0 * t));
}

/// Parameters of the exponential functional of Brownian motion with drift nu,
/// stopped at an independent exponential time of rate p.
struct MellinParams {
  double r = 0.0;
  double nu = 0.0;
  double p = 1.0;
};

/// Beta-side index a(nu, p) = (nu + sqrt(2p + nu^2)) / 2.
inline double beta_index(double nu, double p) { return 0.5 * (nu + std::sqrt(2.0 * p + nu * nu)); }

/// Gamma-side index b(nu, p) = (-nu + sqrt(2p + nu^2)) / 2.
inline double gamma_index(double nu, double p) {
  // Rationalised form avoids cancellation for large positive nu.
  return p / (nu + std::sqrt(2.0 * p + nu * nu));
}

/// E[(A^{(nu)}_{S_p})^r] = 2^{-r} G(1+a)G(1+r)G(b-r) / (G(1+a+r)G(b)).
inline double mellin_exp_functional(const MellinParams& params) {
  const auto [r, nu, p] = params;
  if (!(p > 0.0)) {
    throw DomainError("mellin_exp_functional: rate p must be positive");
  }
  const double a = beta_index(nu, p);
  const double b = gamma_index(nu, p);
  if (!(r < b)) {
    throw DomainError("mellin_exp_functional: moment r=" + std::to_string(r) +
                      " diverges (needs r < " + std::to_string(b) + ")");
  }
  if (!(r > -1.0)) {
    throw DomainError("mellin_exp_functional: moment r must exceed -1");
  }
  if (r == 0.0) {
    return 1.0;
  }
  const double log_value = -r * std::numbers::ln2 + log_gamma(1.0 + a) + log_gamma(1.0 + r) +
                           log_gamma(b - r) - log_gamma(1.0 + a + r) - log_gamma(b);
  return std::exp(log_value);
}

/// Parameters of the joint Laplace-Mellin transform of the Bessel clock and
/// radius at an independent stable(1/2) level.
struct LaplaceMellinParams {
  double b = 0.0;       // radius exponent (radius enters as R^{-2b})
  double mu = 0.0;      // Bessel index, mu >= 0
  double lambda = 1.0;  // local-time level, lambda > 0
};

/// log C_{b,mu} = log[G(b + mu/2 + 1/2) G(1 + mu/2 - b) / (G(1/2) G(1 + mu))].
inline double log_laplace_mellin_constant(double b, double mu) {
  const double first = b + 0.5 * mu + 0.5;
  const double second = 1.0 + 0.5 * mu - b;
  if (!(first > 0.0) || !(second > 0.0) || !(mu >= 0.0)) {
    throw DomainError("laplace_mellin: gamma arguments must be positive (b=" + std::to_string(b) +
                      ", mu=" + std::to_string(mu) + ")");
  }
  constexpr double kLogSqrtPi = 0.57236494292470008707;
  return log_gamma(first) + log_gamma(second) - kLogSqrtPi - log_gamma(1.0 + mu);
}

/// E[R_{sigma_lambda}^{-2b} exp(-mu^2 H_{sigma_lambda} / 2)] in closed form:
/// C_{b,mu} F((mu+1)/2 - b, mu/2 + 1 - b; mu + 1; -1/lambda^2)
///   / ((1 + lambda^2)^{2b - 1/2} (lambda^2)^{(mu+1)/2 - b}).
inline double laplace_mellin_closed_form(const LaplaceMellinParams& params) {
  const auto [b, mu, lambda] = params;
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw DomainError("laplace_mellin: lambda must be positive and finite");
  }
  const double log_c = log_laplace_mellin_constant(b, mu);
  const double lam2 = lambda * lambda;
  const double f = hyp2f1(0.5 * (mu + 1.0) - b, 0.5 * mu + 1.0 - b, mu + 1.0, -1.0 / lam2);
  const double log_denominator =
      (2.0 * b - 0.5) * std::log1p(lam2) + (0.5 * (mu + 1.0) - b) * std::log(lam2);
  return std::exp(log_c - log_denominator) * f;
}

/// Joint density of (|B_t|, L_t): 2(x+l)/sqrt(2 pi t^3) exp(-(x+l)^2 / 2t).
inline double joint_density_abs_bm_local_time(double x, double l, double t) {
  if (!(t > 0.0)) {
    throw DomainError("joint_density_abs_bm_local_time: t must be positive");
  }
  if (x < 0.0 || l < 0.0) {
    return 0.0;
  }
  const double s = x + l;
  return 2.0 * s / std::sqrt(2.0 * std::numbers::pi * t * t * t) * std::exp(-s * s / (2.0 * t));
}

/// Kolmogorov distribution K(x) = 1 - 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 x^2).
/// Below x = 1 the equivalent theta-function series is summed instead; it
/// converges in a handful of terms where the alternating one is slow.
inline double kolmogorov_cdf(double x) {
  if (std::isnan(x)) {
    throw DomainError("kolmogorov_cdf: NaN argument");
  }
  if (x <= 0.0) {
    return 0.0;
  }
  if (x < 1.0) {
    constexpr double kPi2Over8 = std::numbers::pi * std::numbers::pi / 8.0;
    const double inv_x2 = 1.0 / (x * x);
    double sum = 0.0;
    for (int k = 1; k < 200; ++k) {
      const double odd = 2.0 * k - 1.0;
      const double term = std::exp(-odd * odd * kPi2Over8 * inv_x2);
      sum += term;
      if (term < 1e-17 * sum || term == 0.0) {
        break;
      }
    }
    const double value = std::sqrt(2.0 * std::numbers::pi) / x * sum;
    return std::fmin(1.0, std::fmax(0.0, value));
  }
  double sum = 0.0;
  for (int k = 1; k < 200; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-12) {
      break;
    }
  }
  return std::fmin(1.0, std::fmax(0.0, 1.0 - 2.0 * sum));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double cauchy_cdf(double x, double scale = 1.0) {
  return 0.5 + std::atan(x / scale) / std::numbers::pi;
}

inline double exponential_cdf(double x, double rate) {
  return x <= 0.0 ? 0.0 : -std::expm1(-rate * x);
}

}  // namespace bougerol
