#pragma once

// Exact (non-discretised) random generators.

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "bougerol/errors.hpp"
#include "bougerol/rng.hpp"
#include "bougerol/special_functions.hpp"

namespace bougerol {

inline double sample_uniform01(RngStream& rng) { return rng.uniform(); }

inline double sample_normal(RngStream& rng) { return rng.normal(); }

inline double sample_exponential(double rate, RngStream& rng) {
  if (!(rate > 0.0)) {
    throw DomainError("sample_exponential: rate must be positive");
  }
  return -std::log(rng.uniform()) / rate;
}

/// Standard Cauchy by inversion, one uniform per draw.
inline double sample_cauchy(RngStream& rng) {
  return std::tan(std::numbers::pi * (rng.uniform() - 0.5));
}

/// Gamma(shape, 1) by Marsaglia-Tsang; shapes below one are boosted by U^{1/shape}.
inline double sample_gamma(double shape, RngStream& rng) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw DomainError("sample_gamma: shape must be positive, got " + std::to_string(shape));
  }
  if (shape < 1.0) {
    const double boost = std::pow(rng.uniform(), 1.0 / shape);
    return sample_gamma(shape + 1.0, rng) * boost;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) {
      return d * v;
    }
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
      return d * v;
    }
  }
}

inline double sample_beta(double u, double v, RngStream& rng) {
  if (!(u > 0.0) || !(v > 0.0)) {
    throw DomainError("sample_beta: parameters must be positive");
  }
  const double x = sample_gamma(u, rng);
  const double y = sample_gamma(v, rng);
  return x / (x + y);
}

/// Chi with three degrees of freedom: the norm of a 3-D standard normal.
inline double sample_chi3(RngStream& rng) {
  const double x = rng.normal();
  const double y = rng.normal();
  const double z = rng.normal();
  return std::sqrt(x * x + y * y + z * z);
}

/// Tagged primitive distribution, for callers that select a law at runtime.
struct Primitive {
  enum class Kind { uniform01, normal, exponential, cauchy, beta, gamma, chi3 };
  Kind kind = Kind::uniform01;
  double first = 1.0;   // rate, beta u, or gamma shape
  double second = 1.0;  // beta v

  static Primitive uniform01() { return {Kind::uniform01}; }
  static Primitive normal() { return {Kind::normal}; }
  static Primitive exponential(double rate) { return {Kind::exponential, rate}; }
  static Primitive cauchy() { return {Kind::cauchy}; }
  static Primitive beta(double u, double v) { return {Kind::beta, u, v}; }
  static Primitive gamma(double shape) { return {Kind::gamma, shape}; }
  static Primitive chi3() { return {Kind::chi3}; }
};

inline double sample_primitive(const Primitive& dist, RngStream& rng) {
  switch (dist.kind) {
    case Primitive::Kind::uniform01:
      return rng.uniform();
    case Primitive::Kind::normal:
      return rng.normal();
    case Primitive::Kind::exponential:
      return sample_exponential(dist.first, rng);
    case Primitive::Kind::cauchy:
      return sample_cauchy(rng);
    case Primitive::Kind::beta:
      return sample_beta(dist.first, dist.second, rng);
    case Primitive::Kind::gamma:
      return sample_gamma(dist.first, rng);
    case Primitive::Kind::chi3:
      return sample_chi3(rng);
  }
  throw DomainError("sample_primitive: unknown distribution");
}

struct AbsAndLocalTime {
  double abs_value;   // |B_t|
  double local_time;  // L_t
};

/// Exact draw of (|B_t|, L_t): the sum is sqrt(t) chi_3 and, given the sum,
/// the split is uniform.
inline AbsAndLocalTime sample_abs_bm_with_local_time(double t, RngStream& rng) {
  if (!(t > 0.0)) {
    throw DomainError("sample_abs_bm_with_local_time: t must be positive");
  }
  const double total = std::sqrt(t) * sample_chi3(rng);
  const double u = rng.uniform();
  return {u * total, (1.0 - u) * total};
}

/// Increment of the stable(1/2) subordinator over a local-time span delta,
/// with Laplace transform exp(-delta sqrt(2q)): delta^2 / N^2.
inline double stable_half_from_normal(double delta, double normal) {
  return delta * delta / (normal * normal);
}

inline double sample_stable_half(double delta, RngStream& rng) {
  if (!(delta > 0.0)) {
    throw DomainError("sample_stable_half: delta must be positive");
  }
  for (;;) {
    const double value = stable_half_from_normal(delta, rng.normal());
    if (std::isfinite(value)) {
      return value;
    }
  }
}

struct Jump {
  double location;  // local-time coordinate in [0, horizon]
  double size;      // > threshold
};

/// Jumps of the stable(1/2) subordinator above a threshold on [0, horizon],
/// sorted by location; smaller jumps are represented by their mean.
struct JumpSet {
  double horizon = 0.0;
  double threshold = 0.0;
  std::vector<Jump> jumps;

  /// Mean contribution of the discarded jumps per unit local time.
  double drift() const { return std::sqrt(2.0 * threshold / std::numbers::pi); }
  double small_jump_mean() const { return horizon * drift(); }

  double total() const {
    double sum = small_jump_mean();
    for (const auto& jump : jumps) {
      sum += jump.size;
    }
    return sum;
  }

  /// Expected number of retained jumps, horizon * sqrt(2 / (pi threshold)).
  static double expected_count(double horizon, double threshold) {
    return horizon * std::sqrt(2.0 / (std::numbers::pi * threshold));
  }
};

/// Poisson jump set with intensity dl x dt / sqrt(2 pi t^3) restricted to
/// t > epsilon. Locations come from exponential gaps; sizes are epsilon / U^2.
inline JumpSet sample_stable_half_jumps(double horizon, double epsilon, RngStream& rng) {
  if (!(horizon > 0.0) || !(epsilon > 0.0)) {
    throw DomainError("sample_stable_half_jumps: horizon and epsilon must be positive");
  }
  JumpSet set{horizon, epsilon, {}};
  const double rate = JumpSet::expected_count(1.0, epsilon);
  if (!(rate > 0.0)) {
    return set;
  }
  double location = sample_exponential(rate, rng);
  while (location <= horizon) {
    const double u = rng.uniform();
    set.jumps.push_back({location, epsilon / (u * u)});
    location += sample_exponential(rate, rng);
  }
  return set;
}

/// Exact draw of A^{(nu)}_{S_p} as beta(1, a) / (2 gamma(b)).
inline double sample_exp_functional_beta_gamma(double nu, double p, RngStream& rng) {
  if (!(p > 0.0)) {
    throw DomainError("sample_exp_functional_beta_gamma: rate p must be positive");
  }
  const double a = beta_index(nu, p);
  const double b = gamma_index(nu, p);
  return sample_beta(1.0, a, rng) / (2.0 * sample_gamma(b, rng));
}

}  // namespace bougerol
