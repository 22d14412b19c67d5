#pragma once

// Discretised Brownian paths carrying their exponential functional
// A_t = int_0^t exp(2 B_s) ds, inversion of A (the Bessel clock through the
// skew product), and evaluation of the clock at subordinated levels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "bougerol/errors.hpp"
#include "bougerol/rng.hpp"
#include "bougerol/samplers.hpp"

namespace bougerol {

inline constexpr double kDefaultDt = 0x1.0p-10;

/// int_0^h exp(2 (b0 + x s / (2h))) ds for a linear path rising by x/2 over
/// the step, given e0 = exp(2 b0) and e1 = exp(2 b0 + x).
inline double exp_step_integral(double e0, double e1, double x, double h) {
  if (std::fabs(x) < 1e-3) {
    // expm1(x)/x to fifth order.
    const double series = 1.0 + x * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x / 120.0)));
    return h * e0 * series;
  }
  return h * (e1 - e0) / x;
}

/// Time at which the linear-interpolant integral over one step reaches
/// `remaining`, i.e. the s in [0, h] solving e0 (exp(k s) - 1) / k = remaining
/// with k = x / h.
inline double exp_step_inverse(double e0, double x, double h, double remaining) {
  if (remaining <= 0.0) {
    return 0.0;
  }
  const double k = x / h;
  const double y = k * remaining / e0;
  double s = 0.0;
  if (std::fabs(y) < 1e-12) {
    s = remaining / e0 * (1.0 - 0.5 * y);
  } else {
    s = std::log1p(y) / k;
  }
  if (!(s >= 0.0)) {
    return 0.0;
  }
  return std::min(s, h);
}

struct PathOptions {
  double noise = 1.0;  // diffusion coefficient; zero gives the deterministic path B = nu t
};

/// A stored Brownian path on a regular grid (the final step may be shorter).
struct GridPath {
  double dt = kDefaultDt;
  double drift = 0.0;
  std::vector<double> time;
  std::vector<double> b;
  std::vector<double> a;

  std::size_t steps() const { return time.empty() ? 0 : time.size() - 1; }
  double t_end() const { return time.back(); }
  double b_end() const { return b.back(); }
  double a_end() const { return a.back(); }

  /// The same path observed on every `factor`-th grid point (plus the end
  /// point), with A re-accumulated on the coarser grid.
  GridPath coarsened(std::size_t factor) const {
    if (factor == 0) {
      throw DomainError("GridPath::coarsened: factor must be positive");
    }
    GridPath out{dt * static_cast<double>(factor), drift, {}, {}, {}};
    for (std::size_t i = 0; i < time.size(); i += factor) {
      out.time.push_back(time[i]);
      out.b.push_back(b[i]);
    }
    if (out.time.back() != time.back()) {
      out.time.push_back(time.back());
      out.b.push_back(b.back());
    }
    out.a.assign(out.time.size(), 0.0);
    double e0 = std::exp(2.0 * out.b[0]);
    for (std::size_t i = 1; i < out.time.size(); ++i) {
      const double x = 2.0 * (out.b[i] - out.b[i - 1]);
      const double e1 = std::exp(2.0 * out.b[i]);
      out.a[i] = out.a[i - 1] + exp_step_integral(e0, e1, x, out.time[i] - out.time[i - 1]);
      e0 = e1;
    }
    return out;
  }
};

namespace detail {

inline std::size_t grid_steps(double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end > 0.0) || !std::isfinite(t_end) || dt > t_end) {
    throw DomainError("simulate_bm: need 0 < dt <= t_end (dt=" + std::to_string(dt) +
                      ", t_end=" + std::to_string(t_end) + ")");
  }
  return static_cast<std::size_t>(std::ceil(t_end / dt * (1.0 - 1e-14)));
}

}  // namespace detail

/// Brownian motion with drift nu on [0, t_end] with step dt, plus A on the grid.
inline GridPath simulate_bm(double t_end, double dt, double nu, RngStream& rng,
                            PathOptions options = {}) {
  const std::size_t steps = detail::grid_steps(t_end, dt);
  GridPath path{dt, nu, {}, {}, {}};
  path.time.resize(steps + 1);
  path.b.resize(steps + 1);
  path.a.resize(steps + 1);
  path.time[0] = path.b[0] = path.a[0] = 0.0;
  double e0 = 1.0;
  for (std::size_t i = 1; i <= steps; ++i) {
    const double t = (i == steps) ? t_end : static_cast<double>(i) * dt;
    const double h = t - path.time[i - 1];
    const double db = nu * h + options.noise * std::sqrt(h) * rng.normal();
    const double b1 = path.b[i - 1] + db;
    const double e1 = std::exp(2.0 * b1);
    path.time[i] = t;
    path.b[i] = b1;
    path.a[i] = path.a[i - 1] + exp_step_integral(e0, e1, 2.0 * db, h);
    e0 = e1;
  }
  return path;
}

struct EndpointSample {
  double b;  // B_t
  double a;  // A_t
};

/// Endpoint (B_t, A_t) of a fresh path, without storing the grid.
inline EndpointSample joint_bt_at(double t, double dt, RngStream& rng, double nu = 0.0) {
  const std::size_t steps = detail::grid_steps(t, dt);
  const double sqrt_dt = std::sqrt(dt);
  double b = 0.0;
  double a = 0.0;
  double e0 = 1.0;
  double prev_t = 0.0;
  for (std::size_t i = 1; i <= steps; ++i) {
    double db = 0.0;
    double h = dt;
    if (i == steps) {
      h = t - prev_t;
      db = nu * h + std::sqrt(h) * rng.normal();
    } else {
      db = nu * dt + sqrt_dt * rng.normal();
    }
    b += db;
    const double e1 = std::exp(2.0 * b);
    a += exp_step_integral(e0, e1, 2.0 * db, h);
    e0 = e1;
    prev_t = (i == steps) ? t : static_cast<double>(i) * dt;
  }
  return {b, a};
}

/// Endpoint at a possibly random time t: the step is capped at t, so times
/// shorter than dt take a single exact step.
inline EndpointSample endpoint_at_time(double t, double dt, RngStream& rng, double nu = 0.0) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw DomainError("endpoint_at_time: t must be positive and finite");
  }
  return joint_bt_at(t, std::min(dt, t), rng, nu);
}

struct CoupledEndpoint {
  double b;         // B_t
  double a_coarse;  // A_t accumulated with step dt
  double a_fine;    // A_t accumulated with step dt/2 on the same path
};

/// One path observed at step dt/2; A is accumulated both on the fine grid
/// and on the coarse grid of every other point. Used for dt-halving checks.
inline CoupledEndpoint joint_bt_at_coupled(double t, double dt, RngStream& rng, double nu = 0.0) {
  const std::size_t steps = detail::grid_steps(t, dt);
  double b = 0.0;
  double a_coarse = 0.0;
  double a_fine = 0.0;
  double e0 = 1.0;
  double prev_t = 0.0;
  for (std::size_t i = 1; i <= steps; ++i) {
    const double t1 = (i == steps) ? t : static_cast<double>(i) * dt;
    const double h = t1 - prev_t;
    const double half = 0.5 * h;
    const double sd = std::sqrt(half);
    const double db1 = nu * half + sd * rng.normal();
    const double db2 = nu * half + sd * rng.normal();
    const double em = std::exp(2.0 * (b + db1));
    const double e1 = std::exp(2.0 * (b + db1 + db2));
    a_fine += exp_step_integral(e0, em, 2.0 * db1, half) + exp_step_integral(em, e1, 2.0 * db2, half);
    a_coarse += exp_step_integral(e0, e1, 2.0 * (db1 + db2), h);
    b += db1 + db2;
    e0 = e1;
    prev_t = t1;
  }
  return {b, a_coarse, a_fine};
}

struct ClockOptions {
  double dt = kDefaultDt;
  double drift = 0.0;
  double noise = 1.0;
  /// Past this path time the step doubles at every doubling of time.
  double coarsen_after = 64.0;
  std::uint64_t max_steps = std::uint64_t{1} << 26;
  bool keep_history = false;
};

/// Clock value H with A_H = level, and B at that time.
struct ClockPoint {
  double time;
  double b;
};

/// An extendable path used to invert A. Increments are drawn on demand until
/// A passes the requested level. Levels must be nondecreasing unless history
/// is kept. A is tracked as A * exp(-shift) so that levels near the top of
/// the double range stay representable.
class ClockPath {
 public:
  ClockPath(const ClockOptions& options, RngStream& rng) : options_(options), rng_(&rng) {
    if (!(options.dt > 0.0)) {
      throw DomainError("ClockPath: dt must be positive");
    }
    h_ = options.dt;
    sqrt_h_ = std::sqrt(h_);
    next_boundary_ = options.coarsen_after > 0.0 ? options.coarsen_after
                                                 : std::numeric_limits<double>::infinity();
    if (options_.keep_history) {
      hist_time_.push_back(0.0);
      hist_b_.push_back(0.0);
      hist_a_.push_back(0.0);
    }
  }

  std::uint64_t steps() const { return steps_; }
  double current_time() const { return t1_; }
  double current_b() const { return b1_; }
  /// log A at the current end of the path (-inf at time zero).
  double current_log_a() const { return std::log(a1_) + shift_; }

  const std::vector<double>& history_time() const { return hist_time_; }
  const std::vector<double>& history_b() const { return hist_b_; }
  const std::vector<double>& history_a() const { return hist_a_; }

  ClockPoint invert(double level) {
    if (!(level >= 0.0) || std::isnan(level)) {
      throw DomainError("ClockPath::invert: level must be nonnegative");
    }
    if (level == 0.0) {
      return {0.0, 0.0};
    }
    if (std::isinf(level)) {
      throw DomainError("ClockPath::invert: level must be finite");
    }
    const double log_level = std::log(level);
    if (options_.keep_history && !hist_a_.empty() && level < hist_a_.back()) {
      return invert_from_history(level);
    }
    double scaled = std::exp(log_level - shift_);
    while (a1_ <= scaled) {
      advance(log_level);
      scaled = std::exp(log_level - shift_);
    }
    if (scaled < a0_) {
      throw DomainError("ClockPath::invert: levels must be nondecreasing");
    }
    const double x = 2.0 * (b1_ - b0_);
    const double h = t1_ - t0_;
    const double s = exp_step_inverse(e0_, x, h, scaled - a0_);
    return {t0_ + s, b0_ + (b1_ - b0_) * (s / h)};
  }

 private:
  void advance(double log_level) {
    if (steps_ >= options_.max_steps) {
      throw BudgetError(steps_, t1_, log_level);
    }
    while (t1_ >= next_boundary_) {
      h_ *= 2.0;
      sqrt_h_ = std::sqrt(h_);
      next_boundary_ *= 2.0;
    }
    t0_ = t1_;
    b0_ = b1_;
    a0_ = a1_;
    e0_ = e1_;
    const double db = options_.drift * h_ + options_.noise * sqrt_h_ * rng_->normal();
    t1_ = t0_ + h_;
    b1_ = b0_ + db;
    e1_ = std::exp(2.0 * b1_ - shift_);
    a1_ = a0_ + exp_step_integral(e0_, e1_, 2.0 * db, h_);
    ++steps_;
    if (a1_ > kRescaleAbove) {
      if (options_.keep_history) {
        throw DomainError("ClockPath: history is not kept beyond A = 1e300");
      }
      shift_ += kLogRescale;
      a0_ *= kRescaleFactor;
      a1_ *= kRescaleFactor;
      e0_ *= kRescaleFactor;
      e1_ *= kRescaleFactor;
    }
    if (options_.keep_history) {
      hist_time_.push_back(t1_);
      hist_b_.push_back(b1_);
      hist_a_.push_back(a1_);
    }
  }

  ClockPoint invert_from_history(double level) const {
    const auto it = std::upper_bound(hist_a_.begin(), hist_a_.end(), level);
    const auto i = static_cast<std::size_t>(it - hist_a_.begin()) - 1;
    const double x = 2.0 * (hist_b_[i + 1] - hist_b_[i]);
    const double h = hist_time_[i + 1] - hist_time_[i];
    const double s = exp_step_inverse(std::exp(2.0 * hist_b_[i]), x, h, level - hist_a_[i]);
    return {hist_time_[i] + s, hist_b_[i] + (hist_b_[i + 1] - hist_b_[i]) * (s / h)};
  }

  static constexpr double kRescaleAbove = 1e300;
  static constexpr double kRescaleFactor = 1e-300;
  static constexpr double kLogRescale = 690.77552789821370520;  // 300 ln 10

  ClockOptions options_;
  RngStream* rng_;
  double h_ = 0.0;
  double sqrt_h_ = 0.0;
  double next_boundary_ = 0.0;
  double shift_ = 0.0;
  double t0_ = 0.0, b0_ = 0.0, a0_ = 0.0, e0_ = 1.0;
  double t1_ = 0.0, b1_ = 0.0, a1_ = 0.0, e1_ = 1.0;
  std::uint64_t steps_ = 0;
  std::vector<double> hist_time_;
  std::vector<double> hist_b_;
  std::vector<double> hist_a_;
};

/// H = A^{-1}(level) on the given path together with B at that time.
inline ClockPoint invert_exp_functional(ClockPath& path, double level) { return path.invert(level); }

/// Clock and radius at a subordinated level: H_{sigma_lambda} and
/// log R_{sigma_lambda} = B at the inversion time.
struct ClockEval {
  double lambda = 0.0;
  double sigma_level = 0.0;
  double clock = 0.0;
  double log_radius = 0.0;
};

/// Evaluates one fresh path at explicit, sorted sigma-levels.
inline std::vector<ClockEval> eval_clock_at_sigma_levels(std::span<const double> lambdas,
                                                         std::span<const double> sigma_levels,
                                                         const ClockOptions& options,
                                                         RngStream& rng) {
  if (lambdas.size() != sigma_levels.size()) {
    throw DomainError("eval_clock_at_sigma_levels: size mismatch");
  }
  ClockPath path(options, rng);
  std::vector<ClockEval> out;
  out.reserve(lambdas.size());
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const auto point = path.invert(sigma_levels[i]);
    out.push_back({lambdas[i], sigma_levels[i], point.time, point.b});
  }
  return out;
}

/// Draws sigma at the sorted local-time levels from exact stable(1/2)
/// increments, then inverts A at every sigma-level on a single fresh path.
inline std::vector<ClockEval> eval_clock_at_subordinator(std::span<const double> lambdas,
                                                         const ClockOptions& options,
                                                         RngStream& rng) {
  std::vector<double> sigma(lambdas.size());
  double previous_lambda = 0.0;
  double level = 0.0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    const double lambda = lambdas[i];
    if (!(lambda >= previous_lambda)) {
      throw DomainError("eval_clock_at_subordinator: levels must be nonnegative and sorted");
    }
    if (lambda > previous_lambda) {
      level += sample_stable_half(lambda - previous_lambda, rng);
    }
    sigma[i] = level;
    previous_lambda = lambda;
  }
  return eval_clock_at_sigma_levels(lambdas, sigma, options, rng);
}

struct WindingSample {
  double clock;  // H_t
  double theta;  // winding angle
};

/// Winding angle of planar Brownian motion from 1 at time t via the skew
/// product: theta_t = gamma_{H_t} = sqrt(H_t) N.
inline WindingSample winding_at_time(double t, const ClockOptions& options, RngStream& rng) {
  if (!(t > 0.0)) {
    throw DomainError("winding_at_time: t must be positive");
  }
  ClockPath path(options, rng);
  const double clock = path.invert(t).time;
  return {clock, std::sqrt(clock) * rng.normal()};
}

}  // namespace bougerol
