#pragma once

// One verification per identity in law. Each wires the exact samplers, the
// path machinery and the closed forms into a TestReport; the registry at the
// bottom enumerates them for the command-line runner.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "bougerol/errors.hpp"
#include "bougerol/parallel.hpp"
#include "bougerol/paths.hpp"
#include "bougerol/report.hpp"
#include "bougerol/rng.hpp"
#include "bougerol/samplers.hpp"
#include "bougerol/special_functions.hpp"
#include "bougerol/stat_tests.hpp"

namespace bougerol {

/// Everything a verification needs besides its parameters.
struct RunContext {
  std::uint64_t seed = 42;  // per-test seed (already mixed with the attempt)
  std::uint64_t attempt = 0;
  std::size_t workers = 1;
  std::size_t chunk_size = 1000;
  double alpha = 0.01;
  double k_sigma = 3.0;
  bool negative_control = false;
  bool dump_samples = false;

  ParallelOptions parallel() const { return {seed, 0, workers, chunk_size}; }
  RngStream stream(std::string_view purpose) const { return RngStream(seed, hash_name(purpose)); }
};

/// Typed access to a test's JSON parameter object.
class Params {
 public:
  explicit Params(const Json& j) : j_(j) {}

  double real(const char* key) const {
    const Json& v = at(key);
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      throw DomainError(std::string("parameter '") + key + "' must be a finite number");
    }
    return v.get<double>();
  }

  double positive(const char* key) const {
    const double x = real(key);
    if (!(x > 0.0)) {
      throw DomainError(std::string("parameter '") + key + "' must be positive");
    }
    return x;
  }

  std::size_t count(const char* key, std::size_t minimum = 1) const {
    const double x = real(key);
    if (x < static_cast<double>(minimum) || x != std::floor(x) || x > 1e9) {
      throw DomainError(std::string("parameter '") + key + "' must be an integer >= " +
                        std::to_string(minimum));
    }
    return static_cast<std::size_t>(x);
  }

  std::vector<double> reals(const char* key) const {
    const Json& v = at(key);
    if (!v.is_array() || v.empty()) {
      throw DomainError(std::string("parameter '") + key + "' must be a nonempty list");
    }
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number() || !std::isfinite(x.get<double>())) {
        throw DomainError(std::string("parameter '") + key + "' must hold finite numbers");
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::vector<double> positive_sorted(const char* key) const {
    auto out = reals(key);
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (!(out[i] > 0.0) || (i > 0 && !(out[i] > out[i - 1]))) {
        throw DomainError(std::string("parameter '") + key +
                          "' must be positive and strictly increasing");
      }
    }
    return out;
  }

  const Json& at(const char* key) const {
    if (!j_.contains(key)) {
      throw DomainError(std::string("missing parameter '") + key + "'");
    }
    return j_.at(key);
  }

 private:
  const Json& j_;
};

namespace detail {

inline double asinh_value(double x) { return arg_sinh(x).value; }

inline std::string fmt(double x) { return format_number(x); }

inline ClockOptions clock_options(const Params& p) {
  ClockOptions options;
  options.dt = p.positive("dt");
  options.max_steps = p.count("max_steps");
  return options;
}

inline void add_ks(TestReport& report, const RunContext& ctx, std::span<const double> xs,
                   std::span<const double> ys, std::string check) {
  report.add(ks_two_sample(xs, ys, ctx.alpha, std::move(check)));
}

inline void add_mean(TestReport& report, const RunContext& ctx, std::span<const double> samples,
                     double target, const std::string& check, double allowance = 0.0) {
  auto v = mean_within_ci(samples, target, ctx.k_sigma, check, allowance);
  const auto est = estimate_mean(samples);
  report.estimate(check, est.mean, est.std_error);
  report.target(check, target);
  report.add(std::move(v));
}

/// dt-halving: the coarse and fine estimates (same paths) must differ by
/// less than one standard error of the coarse estimate.
inline void add_dt_halving(TestReport& report, std::span<const double> coarse,
                           std::span<const double> fine, const std::string& check) {
  const auto c = estimate_mean(coarse);
  const auto f = estimate_mean(fine);
  TestVerdict v;
  v.check = check;
  v.kind = "dt_halving";
  v.statistic = c.mean - f.mean;
  v.z_score = c.std_error > 0.0 ? v.statistic / c.std_error : 0.0;
  v.n = {coarse.size(), fine.size()};
  v.pass = std::fabs(v.statistic) < c.std_error;
  report.add(std::move(v));
}

inline void add_exact_check(TestReport& report, const std::string& check, double value,
                            double expected, double rel_tol) {
  TestVerdict v;
  v.check = check;
  v.kind = "closed_form_identity";
  v.statistic = std::fabs(value - expected) / std::max(std::fabs(expected), 1e-300);
  v.n = {};
  v.pass = v.statistic <= rel_tol;
  v.note = "value " + fmt(value) + " vs " + fmt(expected);
  report.add(std::move(v));
  report.target(check, expected);
}

template <class T, class F>
std::vector<double> column(const std::vector<T>& rows, F&& f) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    out.push_back(f(r));
  }
  return out;
}

/// Unwraps replicates, dropping budget exclusions.
template <class T>
std::vector<T> kept(const Replicates<T>& reps) {
  std::vector<T> out;
  out.reserve(reps.values.size());
  for (const auto& v : reps.values) {
    if (v) {
      out.push_back(*v);
    }
  }
  return out;
}

/// Drops comparator entries paired with excluded replicates.
inline std::vector<double> matched(const std::vector<double>& comparator,
                                   const std::vector<bool>& excluded) {
  std::vector<double> out;
  out.reserve(comparator.size());
  for (std::size_t i = 0; i < comparator.size(); ++i) {
    if (!excluded[i]) {
      out.push_back(comparator[i]);
    }
  }
  return out;
}

template <class T>
std::vector<bool> exclusion_mask(const Replicates<T>& reps) {
  std::vector<bool> out(reps.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = !reps.values[i].has_value();
  }
  return out;
}

inline void add_exclusion_rate(TestReport& report, std::size_t excluded, std::size_t n,
                               double max_rate) {
  report.budget_exclusions += excluded;
  TestVerdict v;
  v.check = "budget_exclusion_rate";
  v.kind = "exclusion_rate";
  v.statistic = static_cast<double>(excluded) / static_cast<double>(n);
  v.n = {n};
  v.pass = v.statistic < max_rate;
  v.note = std::to_string(excluded) + " of " + std::to_string(n) + " replicates hit the step budget";
  report.add(std::move(v));
}

inline std::string tag(const char* name, double value) { return std::string(name) + "=" + fmt(value); }

}  // namespace detail

// ---------------------------------------------------------------------------
// sinh(B_t) against beta(A_t) = sqrt(A_t) N.

inline TestReport verify_bougerol_identity(const Json& params, const RunContext& ctx) {
  const Params p(params);
  const auto ts = p.positive_sorted("t");
  const std::size_t n = p.count("n", 100);
  const double dt = p.positive("dt");
  TestReport report;
  for (const double t : ts) {
    const double t_rhs = ctx.negative_control ? 2.0 * t : t;
    const auto lhs = generate(n, "lhs/" + detail::fmt(t), ctx.parallel(), [&](RngStream& rng) {
      return std::sinh(std::sqrt(t) * rng.normal());
    });
    const auto rhs = generate(n, "rhs/" + detail::fmt(t), ctx.parallel(), [&](RngStream& rng) {
      const auto end = joint_bt_at(t_rhs, std::min(dt, t_rhs), rng);
      return std::sqrt(end.a) * rng.normal();
    });
    detail::add_ks(report, ctx, lhs, rhs, detail::tag("ks_t", t));
    if (ctx.dump_samples) {
      report.samples.add("sinh_Bt_t" + detail::fmt(t), lhs);
      report.samples.add("sqrtA_N_t" + detail::fmt(t_rhs), rhs);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// E[exp(-x^2 / 2A_t) / sqrt(A_t)] = a'(x)/sqrt(t) exp(-a(x)^2 / 2t).

inline TestReport verify_gaussian_mixture_kernel(const Json& params, const RunContext& ctx) {
  const Params p(params);
  const auto ts = p.positive_sorted("t");
  const auto xs = p.reals("x");
  const std::size_t n = p.count("n", 100);
  const double dt = p.positive("dt");
  TestReport report;
  for (const double t : ts) {
    const auto ends = generate(n, "paths/" + detail::fmt(t), ctx.parallel(),
                               [&](RngStream& rng) { return joint_bt_at_coupled(t, dt, rng); });
    const double t_target = ctx.negative_control ? 2.0 * t : t;
    for (const double x : xs) {
      const auto coarse = detail::column(ends, [&](const CoupledEndpoint& e) {
        return std::exp(-x * x / (2.0 * e.a_coarse)) / std::sqrt(e.a_coarse);
      });
      const std::string check = detail::tag("t", t) + "," + detail::tag("x", x);
      detail::add_mean(report, ctx, coarse, bougerol_kernel_rhs(x, t_target), "mean_" + check);
      if (!ctx.negative_control) {
        const auto fine = detail::column(ends, [&](const CoupledEndpoint& e) {
          return std::exp(-x * x / (2.0 * e.a_fine)) / std::sqrt(e.a_fine);
        });
        detail::add_dt_halving(report, coarse, fine, "dt_halving_" + check);
      }
    }
    if (ctx.dump_samples) {
      report.samples.add("Bt_t" + detail::fmt(t), detail::column(ends, [](const CoupledEndpoint& e) { return e.b; }));
      report.samples.add("At_t" + detail::fmt(t), detail::column(ends, [](const CoupledEndpoint& e) { return e.a_coarse; }));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// E[A_t^{-1/2}] = t^{-1/2}, E[e^{B_t} A_t^{-3/2}] = E[e^{2B_t} A_t^{-3/2}] = t^{-3/2}.

inline TestReport verify_negative_moments(const Json& params, const RunContext& ctx) {
  const Params p(params);
  const auto ts = p.positive_sorted("t");
  const std::size_t n = p.count("n", 100);
  const double dt = p.positive("dt");
  TestReport report;
  for (const double t : ts) {
    const auto ends = generate(n, "paths/" + detail::fmt(t), ctx.parallel(),
                               [&](RngStream& rng) { return joint_bt_at_coupled(t, dt, rng); });
    const double tt = ctx.negative_control ? 2.0 * t : t;
    struct Moment {
      const char* name;
      double target;
      double (*coarse)(const CoupledEndpoint&);
      double (*fine)(const CoupledEndpoint&);
    };
    const Moment moments[] = {
        {"inv_sqrt_A", 1.0 / std::sqrt(tt),
         [](const CoupledEndpoint& e) { return 1.0 / std::sqrt(e.a_coarse); },
         [](const CoupledEndpoint& e) { return 1.0 / std::sqrt(e.a_fine); }},
        {"exp_B_over_A32", std::pow(tt, -1.5),
         [](const CoupledEndpoint& e) { return std::exp(e.b) / std::pow(e.a_coarse, 1.5); },
         [](const CoupledEndpoint& e) { return std::exp(e.b) / std::pow(e.a_fine, 1.5); }},
        {"exp_2B_over_A32", std::pow(tt, -1.5),
         [](const CoupledEndpoint& e) { return std::exp(2.0 * e.b) / std::pow(e.a_coarse, 1.5); },
         [](const CoupledEndpoint& e) { return std::exp(2.0 * e.b) / std::pow(e.a_fine, 1.5); }},
    };
    const std::string suffix = "_" + detail::tag("t", t);
    for (const auto& m : moments) {
      const auto coarse = detail::column(ends, m.coarse);
      detail::add_mean(report, ctx, coarse, m.target, std::string("mean_") + m.name + suffix);
      if (!ctx.negative_control) {
        detail::add_dt_halving(report, coarse, detail::column(ends, m.fine),
                               std::string("dt_halving_") + m.name + suffix);
      }
    }
    if (!ctx.negative_control) {
      // Time reversal: the two 3/2-moments agree (paired difference).
      const auto diff = detail::column(ends, [&](const CoupledEndpoint& e) {
        return moments[1].coarse(e) - moments[2].coarse(e);
      });
      detail::add_mean(report, ctx, diff, 0.0, "time_reversal_pair" + suffix);
    }
    if (ctx.dump_samples) {
      report.samples.add("Bt_t" + detail::fmt(t), detail::column(ends, [](const CoupledEndpoint& e) { return e.b; }));
      report.samples.add("At_t" + detail::fmt(t), detail::column(ends, [](const CoupledEndpoint& e) { return e.a_coarse; }));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// (sinh B_t, sinh L_t) = (beta(A_t), e^{-B_t} lambda(A_t)) = (e^{-B_t} beta(A_t), lambda(A_t)).

inline TestReport verify_joint_local_time_identity(const Json& params, const RunContext& ctx) {
  const Params p(params);
  const double t = p.positive("t");
  const std::size_t n = p.count("n", 50);
  const double dt = p.positive("dt");
  EnergyTestOptions energy;
  energy.n_perm = p.count("n_perm", 200);
  energy.directions = p.count("directions");
  energy.alpha = ctx.alpha;
  TestReport report;

  auto sign = [](RngStream& rng) { return (rng.next_u64() >> 63) != 0 ? -1.0 : 1.0; };
  // V1 from the exact (|B_t|, L_t) sampler.
  const auto v1 = generate(n, "v1", ctx.parallel(), [&](RngStream& rng) {
    const auto s = sample_abs_bm_with_local_time(t, rng);
    return Point2{std::sinh(s.abs_value) * sign(rng), std::sinh(s.local_time)};
  });
  const double t_path = ctx.negative_control ? 2.0 * t : t;
  // V2 and V3 from (B_t, A_t) and an independent (|beta(1)|, lambda(1)).
  auto scaled = [&](bool reversed) {
    return [&, reversed](RngStream& rng) {
      const auto end = joint_bt_at(t_path, std::min(dt, t_path), rng);
      const auto unit = sample_abs_bm_with_local_time(1.0, rng);
      const double root = std::sqrt(end.a);
      const double damp = std::exp(-end.b);
      const double s = sign(rng);
      return reversed ? Point2{damp * root * unit.abs_value * s, root * unit.local_time}
                      : Point2{root * unit.abs_value * s, damp * root * unit.local_time};
    };
  };
  const auto v2 = generate(n, "v2", ctx.parallel(), scaled(false));
  const auto v3 = generate(n, "v3", ctx.parallel(), scaled(true));

  auto abs_first = [](const std::vector<Point2>& v) {
    std::vector<Point2> out(v);
    for (auto& q : out) {
      q.x = std::fabs(q.x);
    }
    return out;
  };
  auto first = [](const std::vector<Point2>& v) { return detail::column(v, [](const Point2& q) { return q.x; }); };
  auto second = [](const std::vector<Point2>& v) { return detail::column(v, [](const Point2& q) { return q.y; }); };
  const auto a1 = abs_first(v1);
  const auto a2 = abs_first(v2);
  const auto a3 = abs_first(v3);

  {
    auto rng = ctx.stream("energy/v1_v2");
    report.add(energy_distance_test(a1, a2, rng, energy, "energy_v1_v2"));
  }
  detail::add_ks(report, ctx, first(v1), first(v2), "ks_first_v1_v2");
  if (!ctx.negative_control) {
    {
      auto rng = ctx.stream("energy/v1_v3");
      report.add(energy_distance_test(a1, a3, rng, energy, "energy_v1_v3"));
    }
    {
      auto rng = ctx.stream("energy/v2_v3");
      report.add(energy_distance_test(a2, a3, rng, energy, "energy_v2_v3"));
    }
    detail::add_ks(report, ctx, second(v1), second(v2), "ks_second_v1_v2");
    detail::add_ks(report, ctx, first(v2), first(v3), "ks_first_v2_v3");
    detail::add_ks(report, ctx, second(v2), second(v3), "ks_second_v2_v3");
    // sinh(L_t) against lambda(A_t) = sqrt(A_t) lambda(1).
    detail::add_ks(report, ctx, second(v1), second(v3), "ks_sinh_local_time");
    // Sign symmetry of the first coordinate across independent samples.
    auto negated = first(v2);
    for (auto& x : negated) {
      x = -x;
    }
    detail::add_ks(report, ctx, first(v1), negated, "ks_sign_symmetry");
  }
  if (ctx.dump_samples) {
    report.samples.add("sinh_Bt", first(v1));
    report.samples.add("sinh_Lt", second(v1));
    report.samples.add("sqrtA_beta", first(v2));
    report.samples.add("expmB_sqrtA_lambda", second(v2));
    report.samples.add("expmB_sqrtA_beta", first(v3));
    report.samples.add("sqrtA_lambda", second(v3));
  }
  return report;
}

// ---------------------------------------------------------------------------
// H_{sigma_s} = sigma_{a(s)} in law.

inline TestReport verify_subordinated_clock(const Json& params, const RunContext& ctx) {
  const Params p(params);
  const auto ss = p.positive_sorted("s");
  const std::size_t n = p.count("n", 100);
  const double q = p.positive("q");
  const double max_rate = p.positive("max_exclusion_rate");
  const auto options = detail::clock_options(p);
  TestReport report;
  const auto reps = generate_replicates(n, "clock", ctx.parallel(), [&](RngStream& rng) {
    return eval_clock_at_subordinator(ss, options, rng);
  });
  const auto mask = detail::exclusion_mask(reps);
  const auto rows = detail::kept(reps);
  const double level_scale = ctx.negative_control ? 1.1 : 1.0;
  for (std::size_t k = 0; k < ss.size(); ++k) {
    const double s = ss[k];
    const double level = level_scale * detail::asinh_value(s);
    const auto clock = detail::column(rows, [&](const std::vector<ClockEval>& r) { return r[k].clock; });
    const auto exact = generate(n, "exact/" + detail::fmt(s), ctx.parallel(), [&](RngStream& rng) {
      return sample_stable_half(level, rng);
    });
    detail::add_ks(report, ctx, clock, detail::matched(exact, mask), detail::tag("ks_s", s));
    const auto laplace = detail::column(clock, [&](double h) { return std::exp(-q * h); });
    detail::add_mean(report, ctx, laplace, std::exp(-level * std::sqrt(2.0 * q)),
                     detail::tag("laplace_s", s));
    if (ctx.dump_samples) {
      report.samples.add("H_sigma_s" + detail::fmt(s), clock);
      report.samples.add("sigma_a_s" + detail::fmt(s), exact);
    }
  }
  if (!ctx.negative_control) {
    detail::add_exclusion_rate(report, reps.excluded(), n, max_rate);
  } else {
    report.budget_exclusions += reps.excluded();
  }
  return report;
}

// ---------------------------------------------------------------------------
// sigma_t = H_{sigma_{eta(t)}} at fixed t, eta the inverse of s -> int_0^s du / R_{sigma_u}.

namespace detail {

/// One replicate: left-point Riemann sum of du / R_{sigma_u} on a mesh of
/// width delta; when the sum would pass a target t inside a cell, eta(t) is
/// located by linear interpolation and sigma_eta drawn as a fresh increment.
inline std::vector<double> clock_at_inverse_radius_integral(std::span<const double> ts, double delta,
                                                            const ClockOptions& options,
                                                            RngStream& rng) {
  ClockPath path(options, rng);
  std::vector<double> out;
  out.reserve(ts.size());
  double u = 0.0;
  double sigma = 0.0;
  double radius = 1.0;
  double integral = 0.0;
  std::size_t k = 0;
  while (k < ts.size()) {
    const double increment = delta / radius;
    if (integral + increment >= ts[k]) {
      const double eta = u + (ts[k] - integral) * radius;
      if (eta > u) {
        sigma += sample_stable_half(eta - u, rng);
      }
      const auto point = path.invert(sigma);
      out.push_back(point.time);
      u = eta;
      radius = std::exp(point.b);
      integral = ts[k];
      ++k;
      continue;
    }
    integral += increment;
    u += delta;
    sigma += sample_stable_half(delta, rng);
    radius = std::exp(path.invert(sigma).b);
  }
  return out;
}

}  // namespace detail

inline TestReport verify_time_changed_clock(const Json& params, const RunContext& ctx) {
  const Params p(params);
  const auto ts = p.positive_sorted("t");
  const std::size_t n = p.count("n", 100);
  const double mesh = p.positive("mesh");
  const auto options = detail::clock_options(p);
  TestReport report;
  const double scale = ctx.negative_control ? 1.1 : 1.0;
  std::vector<double> meshes = {mesh};
  if (!ctx.negative_control) {
    meshes.push_back(0.5 * mesh);
  }
  for (const double delta : meshes) {
    const std::string mesh_tag = detail::tag("mesh", delta);
    const auto reps = generate_replicates(n, "clock/" + mesh_tag, ctx.parallel(), [&](RngStream& rng) {
      return detail::clock_at_inverse_radius_integral(ts, delta, options, rng);
    });
    const auto mask = detail::exclusion_mask(reps);
    const auto rows = detail::kept(reps);
    report.budget_exclusions += reps.excluded();
    for (std::size_t k = 0; k < ts.size(); ++k) {
      const double t = ts[k];
      const auto clock = detail::column(rows, [&](const std::vector<double>& r) { return r[k]; });
      const auto exact = generate(n, "exact/" + mesh_tag + "/" + detail::fmt(t), ctx.parallel(),
                                  [&](RngStream& rng) { return sample_stable_half(scale * t, rng); });
      detail::add_ks(report, ctx, clock, detail::matched(exact, mask),
                     "ks_" + detail::tag("t", t) + "," + mesh_tag);
      if (ctx.dump_samples) {
        report.samples.add("H_sigma_eta_t" + detail::fmt(t) + "_" + mesh_tag, clock);
        report.samples.add("sigma_t" + detail::fmt(t) + "_" + mesh_tag, exact);
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// E[f(H_{sigma_s}) / R_{sigma_s}] = E[f(sigma_{a(s)})] / sqrt(1 + s^2).

inline TestReport verify_reciprocal_radius(const Json& params, const RunContext& ctx) {
  const Params p(params);
  const auto ss = p.positive_sorted("s");
  const auto qs = p.reals("q");
  const std::size_t n = p.count("n", 100);
  const auto options = detail::clock_options(p);
  for (const double q : qs) {
    if (!(q > 0.0)) {
      throw DomainError("parameter 'q' must hold positive rates (q = 0 has infinite variance)");
    }
  }
  TestReport report;
  const auto reps = generate_replicates(n, "clock", ctx.parallel(), [&](RngStream& rng) {
    return eval_clock_at_subordinator(ss, options, rng);
  });
  const auto rows = detail::kept(reps);
  report.budget_exclusions += reps.excluded();
  const double scale = ctx.negative_control ? 1.1 : 1.0;
  for (std::size_t k = 0; k < ss.size(); ++k) {
    const double s = ss[k];
    const auto [a, a_prime] = arg_sinh(s);
    const auto clock = detail::column(rows, [&](const std::vector<ClockEval>& r) { return r[k].clock; });
    const auto inv_radius =
        detail::column(rows, [&](const std::vector<ClockEval>& r) { return std::exp(-r[k].log_radius); });
    for (const double q : qs) {
      std::vector<double> values(clock.size());
      for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = std::exp(-q * clock[i]) * inv_radius[i];
      }
      const double target = scale * std::exp(-a * std::sqrt(2.0 * q)) * a_prime;
      detail::add_mean(report, ctx, values, target,
                       "mean_" + detail::tag("s", s) + "," + detail::tag("q", q));
    }
    if (!ctx.negative_control) {
      // f = 1: E[1/R] = 1/sqrt(1+s^2). Its second moment is infinite, so it
      // is reported without a verdict.
      const auto est = estimate_mean(inv_radius);
      report.estimate("inv_radius_" + detail::tag("s", s), est.mean, est.std_error);
      report.target("inv_radius_" + detail::tag("s", s), a_prime);
      // Non-independence: E[1/R | H] is constant, so the linear correlation
      // vanishes; the rank correlation does not.
      report.add(spearman_dependence(inv_radius, clock, ctx.k_sigma, "dependence_" + detail::tag("s", s)));
    }
    if (ctx.dump_samples) {
      report.samples.add("H_sigma_s" + detail::fmt(s), clock);
      report.samples.add("inv_R_sigma_s" + detail::fmt(s), inv_radius);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Jump sums of the subordinated clock (product-form intensity functionals).

namespace detail {

struct JumpTerm {
  double location;
  double size;
  double clock_before;
  double clock_after;
  double log_radius_before;
  double log_radius_after;
};

/// Clock and radius just before and after every jump of size > threshold
/// located in [0, horizon]; jumps below the threshold enter through their
/// mean drift.
inline std::vector<JumpTerm> jump_terms(const JumpSet& set, double threshold, double horizon,
                                        const ClockOptions& options, RngStream& path_rng) {
  ClockPath path(options, path_rng);
  const double drift = std::sqrt(2.0 * threshold / std::numbers::pi);
  std::vector<JumpTerm> out;
  double jumps_so_far = 0.0;
  for (const auto& jump : set.jumps) {
    if (jump.location > horizon) {
      break;
    }
    if (!(jump.size > threshold)) {
      continue;
    }
    const double before = drift * jump.location + jumps_so_far;
    const auto p0 = path.invert(before);
    jumps_so_far += jump.size;
    const auto p1 = path.invert(before + jump.size);
    out.push_back({jump.location, jump.size, p0.time, p1.time, p0.b, p1.b});
  }
  return out;
}

/// Jump terms at threshold epsilon and epsilon/2 on the same Brownian path;
/// the coarser set is the finer one thinned to sizes above epsilon.
inline std::pair<std::vector<JumpTerm>, std::vector<JumpTerm>> coupled_jump_terms(
    double horizon, double epsilon, const ClockOptions& options, RngStream& rng) {
  const auto fine_set = sample_stable_half_jumps(horizon, 0.5 * epsilon, rng);
  const std::uint64_t path_id = rng.next_u64();
  RngStream coarse_path(rng.master_seed(), path_id);
  RngStream fine_path(rng.master_seed(), path_id);
  auto coarse = jump_terms(fine_set, epsilon, horizon, options, coarse_path);
  auto fine = jump_terms(fine_set, 0.5 * epsilon, horizon, options, fine_path);
  return {std::move(coarse), std::move(fine)};
}

struct HalvingResult {
  MeanEstimate coarse;
  MeanEstimate fine;
  MeanEstimate difference;  // fine - coarse, paired
  double allowance = 0.0;   // |c| sqrt(epsilon) from the halving run
};

inline HalvingResult halving(std::span<const double> coarse, std::span<const double> fine) {
  std::vector<double> diff(coarse.size());
  for (std::size_t i = 0; i < diff.size(); ++i) {
    diff[i] = fine[i] - coarse[i];
  }
  HalvingResult out{estimate_mean(coarse), estimate_mean(fine), estimate_mean(diff), 0.0};
  // bias(eps) = c sqrt(eps): fine - coarse = c sqrt(eps) (1 - 1/sqrt 2).
  out.allowance = std::fabs(out.difference.mean) / (1.0 - std::numbers::sqrt2 / 2.0);
  return out;
}

inline void add_toward_target(TestReport& report, const HalvingResult& h, double target,
                              const std::string& check) {
  TestVerdict v;
  v.check = check;
  v.kind = "epsilon_halving";
  v.statistic = std::fabs(h.fine.mean - target) - std::fabs(h.coarse.mean - target);
  v.z_score = h.difference.std_error > 0.0 ? h.difference.mean / h.difference.std_error : 0.0;
  v.n = {h.coarse.n};
  v.pass = v.statistic < 0.0;
  v.note = "estimate " + fmt(h.coarse.mean) + " -> " + fmt(h.fine.mean) + ", target " + fmt(target);
  report.add(std::move(v));
}

}  // namespace detail

inline TestReport verify_jump_sum_factorization(const Json& params, const RunContext& ctx) {
  const Params p(params);
  const double l = p.positive("l");
  const double q = p.positive("q");
  const double nu = p.positive("nu");
  const double epsilon = p.positive("epsilon");
  const std::size_t n = p.count("n", 100);
  const auto options = detail::clock_options(p);
  const double l_half = 0.5 * l;
  TestReport report;
  auto jump_sum = [&](const std::vector<detail::JumpTerm>& terms) {
    double sum = 0.0;
    for (const auto& term : terms) {
      if (term.location <= l_half) {
        sum += std::exp(-q * term.clock_before) * -std::expm1(-nu * (term.clock_after - term.clock_before));
      }
    }
    return sum;
  };
  const auto reps = generate_replicates(n, "jumps", ctx.parallel(), [&](RngStream& rng) {
    const auto [coarse, fine] = detail::coupled_jump_terms(l, epsilon, options, rng);
    return std::pair<double, double>{jump_sum(coarse), jump_sum(fine)};
  });
  const auto rows = detail::kept(reps);
  report.budget_exclusions += reps.excluded();
  const auto coarse = detail::column(rows, [](const auto& r) { return r.first; });
  const auto fine = detail::column(rows, [](const auto& r) { return r.second; });
  const double c_f = -std::expm1(-detail::asinh_value(l_half) * std::sqrt(2.0 * q)) / std::sqrt(2.0 * q);
  const double d_g = std::sqrt(2.0 * nu);
  const double target = (ctx.negative_control ? 1.1 : 1.0) * c_f * d_g;
  report.target("C_f", c_f);
  report.target("D_g", d_g);
  const auto h = detail::halving(coarse, fine);
  report.estimate("epsilon_half", h.fine.mean, h.fine.std_error);
  report.estimate("halving_difference", h.difference.mean, h.difference.std_error);
  report.estimate("truncation_allowance", h.allowance, 0.0);
  detail::add_mean(report, ctx, coarse, target, "jump_sum_vs_closed_form", h.allowance);
  if (!ctx.negative_control) {
    detail::add_toward_target(report, h, target, "moves_toward_target");
  }
  if (ctx.dump_samples) {
    report.samples.add("jump_sum_eps", coarse);
    report.samples.add("jump_sum_eps_half", fine);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Radius-weighted jump sums: H^{a,b}(f (x) g)(l) = h^-_{a-b}(f, l) h^+_b(g).

inline TestReport verify_weighted_jump_sum(const Json& params, const RunContext& ctx) {
  const Params p(params);
  const double l = p.positive("l");
  const double q = p.positive("q");
  const double nu = p.positive("nu");
  const double a_exp = p.real("a");
  const double b_exp = p.real("b");
  const double nu_general = p.positive("nu_general");
  const double epsilon = p.positive("epsilon");
  const std::size_t n = p.count("n", 100);
  const std::size_t n_aux = p.count("n_aux", 100);
  const double dt = p.positive("dt");
  const auto options = detail::clock_options(p);
  if (a_exp < 0.0 || b_exp < 0.0) {
    throw DomainError("weighted jump sum: exponents a, b must be nonnegative");
  }
  TestReport report;

  struct Sums {
    double special;  // a = 0, b = 1, g = 1 - e^{-nu y}
    double general;  // (a, b), g = y e^{-nu_general y}
  };
  auto sums = [&](const std::vector<detail::JumpTerm>& terms) {
    Sums out{0.0, 0.0};
    for (const auto& term : terms) {
      const double jump = term.clock_after - term.clock_before;
      const double f = std::exp(-q * term.clock_before);
      out.special += f * -std::expm1(-nu * jump) * std::exp(-term.log_radius_after);
      out.general += f * jump * std::exp(-nu_general * jump) *
                     std::exp(a_exp * term.log_radius_before - b_exp * term.log_radius_after);
    }
    return out;
  };
  const auto reps = generate_replicates(n, "jumps", ctx.parallel(), [&](RngStream& rng) {
    const auto [coarse, fine] = detail::coupled_jump_terms(l, epsilon, options, rng);
    return std::pair<Sums, Sums>{sums(coarse), sums(fine)};
  });
  const auto rows = detail::kept(reps);
  report.budget_exclusions += reps.excluded();
  const double scale = ctx.negative_control ? 1.1 : 1.0;

  // (i) a = 0, b = 1 against the closed form.
  const auto [al, al_prime] = arg_sinh(l);
  const double h_minus_closed = (1.0 - al_prime * std::exp(-al * std::sqrt(2.0 * q))) / std::sqrt(2.0 * q);
  const double h_plus_1 = std::sqrt(2.0 * nu);
  {
    const auto coarse = detail::column(rows, [](const auto& r) { return r.first.special; });
    const auto fine = detail::column(rows, [](const auto& r) { return r.second.special; });
    const auto h = detail::halving(coarse, fine);
    report.estimate("special_epsilon_half", h.fine.mean, h.fine.std_error);
    report.estimate("special_truncation_allowance", h.allowance, 0.0);
    detail::add_mean(report, ctx, coarse, scale * h_minus_closed * h_plus_1,
                     "special_case_vs_closed_form", h.allowance);
    if (ctx.dump_samples) {
      report.samples.add("special_jump_sum", coarse);
    }
  }

  // (ii) general (a, b): jump sum against the product of independent
  // estimates of h^-_{a-b}(f, l) and h^+_b(g), each written as an
  // expectation over a gamma(1/2) time T:
  //   h^-_c = E[G(1/2) q^{-1/2} T^{1/2} e^{(c+1)B_T} (1 - e^{-l^2/2A_T}) / sqrt(2 pi A_T)], T ~ gamma(1/2, q)
  //   h^+_b = E[T^{3/2} e^{(2-b)B_T} A_T^{-3/2}] / sqrt(2 nu),                             T ~ gamma(1/2, nu)
  const double c = a_exp - b_exp;
  const auto h_minus = generate(n_aux, "h_minus", ctx.parallel(), [&](RngStream& rng) {
    const double t = sample_gamma(0.5, rng) / q;
    const auto end = endpoint_at_time(t, dt, rng);
    return std::sqrt(std::numbers::pi / q) * std::sqrt(t) * std::exp((c + 1.0) * end.b) *
           -std::expm1(-l * l / (2.0 * end.a)) / std::sqrt(2.0 * std::numbers::pi * end.a);
  });
  const auto h_plus = generate(n_aux, "h_plus", ctx.parallel(), [&](RngStream& rng) {
    const double t = sample_gamma(0.5, rng) / nu_general;
    const auto end = endpoint_at_time(t, dt, rng);
    return std::pow(t / end.a, 1.5) * std::exp((2.0 - b_exp) * end.b) / std::sqrt(2.0 * nu_general);
  });
  const auto em = estimate_mean(h_minus);
  const auto ep = estimate_mean(h_plus);
  report.estimate("h_minus", em.mean, em.std_error);
  report.estimate("h_plus", ep.mean, ep.std_error);
  if (c == -1.0) {
    // h^-_{-1} has a closed form through the Gaussian-mixture kernel.
    detail::add_mean(report, ctx, h_minus, scale * h_minus_closed, "h_minus_vs_closed_form");
  }
  MeanEstimate product;
  product.mean = scale * em.mean * ep.mean;
  product.std_error = scale * std::hypot(em.mean * ep.std_error, ep.mean * em.std_error);
  product.n = n_aux;
  const auto coarse = detail::column(rows, [](const auto& r) { return r.first.general; });
  const auto fine = detail::column(rows, [](const auto& r) { return r.second.general; });
  const auto h = detail::halving(coarse, fine);
  report.estimate("general_jump_sum", h.coarse.mean, h.coarse.std_error);
  report.estimate("general_epsilon_half", h.fine.mean, h.fine.std_error);
  report.estimate("general_truncation_allowance", h.allowance, 0.0);
  report.estimate("product_h_minus_h_plus", product.mean, product.std_error);
  report.add(estimates_agree(h.coarse, product, ctx.k_sigma, "general_factorization", h.allowance));
  if (ctx.dump_samples) {
    report.samples.add("general_jump_sum", coarse);
    report.samples.add("h_minus_terms", h_minus);
    report.samples.add("h_plus_terms", h_plus);
  }
  return report;
}

// ---------------------------------------------------------------------------
// theta_{sigma_l} = C_{a(l)} in law.

inline TestReport verify_subordinated_winding(const Json& params, const RunContext& ctx) {
  const Params p(params);
  const auto ls = p.positive_sorted("l");
  const std::size_t n = p.count("n", 100);
  const auto options = detail::clock_options(p);
  TestReport report;
  const auto reps = generate_replicates(n, "winding", ctx.parallel(), [&](RngStream& rng) {
    auto evals = eval_clock_at_subordinator(ls, options, rng);
    std::vector<double> theta(evals.size());
    for (std::size_t k = 0; k < evals.size(); ++k) {
      theta[k] = std::sqrt(evals[k].clock) * rng.normal();
    }
    return theta;
  });
  const auto mask = detail::exclusion_mask(reps);
  const auto rows = detail::kept(reps);
  report.budget_exclusions += reps.excluded();
  for (std::size_t k = 0; k < ls.size(); ++k) {
    const double l = ls[k];
    const double scale = detail::asinh_value(ctx.negative_control ? 2.0 * l : l);
    const auto theta = detail::column(rows, [&](const std::vector<double>& r) { return r[k]; });
    const auto cauchy = generate(n, "cauchy/" + detail::fmt(l), ctx.parallel(),
                                 [&](RngStream& rng) { return scale * sample_cauchy(rng); });
    detail::add_ks(report, ctx, theta, detail::matched(cauchy, mask), detail::tag("ks_l", l));
    if (!ctx.negative_control) {
      // The median of |C_a| is a: P(|theta| <= a(l)) = 1/2.
      const auto inside = detail::column(theta, [&](double x) { return std::fabs(x) <= scale ? 1.0 : 0.0; });
      detail::add_mean(report, ctx, inside, 0.5, detail::tag("median_abs_l", l));
    }
    if (ctx.dump_samples) {
      report.samples.add("theta_sigma_l" + detail::fmt(l), theta);
      report.samples.add("cauchy_a_l" + detail::fmt(l), cauchy);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// 2 theta_t / log t -> standard Cauchy.

inline TestReport verify_winding_limit(const Json& params, const RunContext& ctx) {
  const Params p(params);
  const auto ts = p.positive_sorted("t");
  const std::size_t n = p.count("n", 100);
  const std::size_t grid = p.count("cdf_grid", 10);
  const double threshold = p.positive("max_distance");
  const auto options = detail::clock_options(p);
  for (const double t : ts) {
    if (!(t > 1.0)) {
      throw DomainError("parameter 't' must exceed 1 (log t normalisation)");
    }
  }
  TestReport report;
  const auto reps = generate_replicates(n, "winding", ctx.parallel(), [&](RngStream& rng) {
    ClockPath path(options, rng);
    std::vector<double> clock(ts.size());
    for (std::size_t k = 0; k < ts.size(); ++k) {
      clock[k] = path.invert(ts[k]).time;
    }
    return clock;
  });
  const auto rows = detail::kept(reps);
  report.budget_exclusions += reps.excluded();
  const double factor = ctx.negative_control ? 1.0 : 2.0;
  auto normals_rng = ctx.stream("angles");
  std::vector<double> smoothed(ts.size());
  std::vector<double> raw(ts.size());
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double scale = factor / std::log(ts[k]);
    const auto clock = detail::column(rows, [&](const std::vector<double>& r) { return r[k]; });
    std::vector<double> angle(clock.size());
    for (std::size_t i = 0; i < clock.size(); ++i) {
      angle[i] = scale * std::sqrt(clock[i]) * normals_rng.normal();
    }
    raw[k] = ks_distance_to_cdf(angle, [](double y) { return cauchy_cdf(y); });
    // Conditional CDF given H: P(scale sqrt(H) N <= y | H) = Phi(y / (scale sqrt(H))).
    double distance = 0.0;
    for (std::size_t g = 0; g < grid; ++g) {
      const double u = (static_cast<double>(g) + 0.5) / static_cast<double>(grid);
      const double y = std::tan(std::numbers::pi * (u - 0.5));
      double sum = 0.0;
      for (const double h : clock) {
        sum += h > 0.0 ? normal_cdf(y / (scale * std::sqrt(h))) : (y >= 0.0 ? 1.0 : 0.0);
      }
      distance = std::max(distance, std::fabs(sum / static_cast<double>(clock.size()) - u));
    }
    smoothed[k] = distance;
    report.estimate("cdf_distance_" + detail::tag("t", ts[k]), distance, 0.0);
    report.estimate("ecdf_distance_" + detail::tag("t", ts[k]), raw[k], 0.0);
    if (ctx.dump_samples) {
      report.samples.add("scaled_winding_t" + detail::fmt(ts[k]), angle);
    }
  }
  if (!ctx.negative_control) {
    TestVerdict v;
    v.check = "distance_decreasing";
    v.kind = "monotone_decrease";
    v.statistic = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < ts.size(); ++k) {
      v.statistic = std::max(v.statistic, smoothed[k] - smoothed[k - 1]);
    }
    v.n = {rows.size()};
    v.pass = ts.size() < 2 || v.statistic < 0.0;
    report.add(std::move(v));
  }
  TestVerdict last;
  last.check = "distance_at_largest_t";
  last.kind = "threshold";
  last.statistic = smoothed.back();
  last.n = {rows.size()};
  last.pass = smoothed.back() < threshold;
  last.note = "threshold " + detail::fmt(threshold);
  report.add(std::move(last));
  return report;
}

// ---------------------------------------------------------------------------
// E[R_{sigma_l}^{-2b} exp(-mu^2 H_{sigma_l} / 2)] in closed form.

namespace detail {

/// Finite second moment of R^{-2b} exp(-mu^2 H / 2): the closed form must
/// exist at (2b, sqrt(2) mu).
inline bool laplace_mellin_finite_variance(double b, double mu) {
  const double b2 = 2.0 * b;
  const double mu2 = std::numbers::sqrt2 * mu;
  return 1.0 + 0.5 * mu2 - b2 > 0.0 && b2 + 0.5 * mu2 + 0.5 > 0.0;
}

struct GridPoint {
  double b;
  double mu;
  double lambda;
};

}  // namespace detail

inline TestReport verify_laplace_mellin(const Json& params, const RunContext& ctx) {
  const Params p(params);
  const auto mus = p.reals("mu");
  const auto lambdas = p.positive_sorted("lambda");
  const std::size_t n = p.count("n", 100);
  const auto options = detail::clock_options(p);
  std::vector<detail::GridPoint> points;
  for (const double mu : mus) {
    for (const double b : {-0.5 * mu, 0.0, 0.5}) {
      for (const double lambda : lambdas) {
        points.push_back({b, mu, lambda});
      }
    }
  }
  const Json& extra = p.at("extra_points");
  if (!extra.is_array()) {
    throw DomainError("parameter 'extra_points' must be a list of [b, mu, lambda]");
  }
  for (const auto& e : extra) {
    if (!e.is_array() || e.size() != 3 || !e[0].is_number() || !e[1].is_number() || !e[2].is_number()) {
      throw DomainError("parameter 'extra_points' must be a list of [b, mu, lambda]");
    }
    points.push_back({e[0].get<double>(), e[1].get<double>(), e[2].get<double>()});
  }
  std::set<double> level_set;
  for (const auto& point : points) {
    if (!(point.mu >= 0.0) || !(point.lambda > 0.0)) {
      throw DomainError("laplace_mellin: need mu >= 0 and lambda > 0");
    }
    if (!detail::laplace_mellin_finite_variance(point.b, point.mu)) {
      throw DomainError("laplace_mellin: (b=" + detail::fmt(point.b) + ", mu=" + detail::fmt(point.mu) +
                        ") has infinite Monte-Carlo variance");
    }
    level_set.insert(point.lambda);
  }
  const std::vector<double> levels(level_set.begin(), level_set.end());
  TestReport report;

  // Analytic anchors of the closed form.
  for (const double mu : mus) {
    for (const double lambda : lambdas) {
      const std::string where = detail::tag("mu", mu) + "," + detail::tag("lambda", lambda);
      const double a = detail::asinh_value(lambda);
      if (!ctx.negative_control) {
        detail::add_exact_check(report, "anchor_b0_" + where, laplace_mellin_closed_form({0.0, mu, lambda}),
                                std::exp(-mu * a), 1e-10);
        detail::add_exact_check(report, "anchor_bhalf_" + where, laplace_mellin_closed_form({0.5, mu, lambda}),
                                std::exp(-mu * a) / std::sqrt(1.0 + lambda * lambda), 1e-10);
        detail::add_exact_check(report, "anchor_bmhalfmu_" + where,
                                laplace_mellin_closed_form({-0.5 * mu, mu, lambda}), 1.0, 1e-10);
      }
    }
  }

  const auto reps = generate_replicates(n, "clock", ctx.parallel(), [&](RngStream& rng) {
    return eval_clock_at_subordinator(levels, options, rng);
  });
  const auto rows = detail::kept(reps);
  report.budget_exclusions += reps.excluded();
  const double scale = ctx.negative_control ? 1.1 : 1.0;
  for (const auto& point : points) {
    const auto k = static_cast<std::size_t>(
        std::lower_bound(levels.begin(), levels.end(), point.lambda) - levels.begin());
    const auto values = detail::column(rows, [&](const std::vector<ClockEval>& r) {
      return std::exp(-2.0 * point.b * r[k].log_radius - 0.5 * point.mu * point.mu * r[k].clock);
    });
    detail::add_mean(report, ctx, values, scale * laplace_mellin_closed_form({point.b, point.mu, point.lambda}),
                     "mean_" + detail::tag("b", point.b) + "," + detail::tag("mu", point.mu) + "," +
                         detail::tag("lambda", point.lambda));
  }
  if (ctx.dump_samples) {
    for (std::size_t k = 0; k < levels.size(); ++k) {
      report.samples.add("H_sigma_l" + detail::fmt(levels[k]),
                         detail::column(rows, [&](const std::vector<ClockEval>& r) { return r[k].clock; }));
      report.samples.add("logR_sigma_l" + detail::fmt(levels[k]),
                         detail::column(rows, [&](const std::vector<ClockEval>& r) { return r[k].log_radius; }));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// A^{(nu)}_{S_p} = beta(1, a) / (2 gamma(b)) in law, and its Mellin transform.

inline TestReport verify_beta_gamma_functional(const Json& params, const RunContext& ctx) {
  const Params p(params);
  const std::size_t n = p.count("n", 100);
  const double dt = p.positive("dt");
  const auto rs = p.reals("r");
  const Json& cases = p.at("cases");
  if (!cases.is_array() || cases.empty()) {
    throw DomainError("parameter 'cases' must be a nonempty list of [nu, p]");
  }
  TestReport report;
  if (!ctx.negative_control) {
    detail::add_exact_check(report, "mellin_r1_nu0_p4", mellin_exp_functional({1.0, 0.0, 4.0}), 0.5, 1e-12);
  }
  for (const auto& c : cases) {
    if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number() || !(c[1].get<double>() > 0.0)) {
      throw DomainError("parameter 'cases' must be a nonempty list of [nu, p] with p > 0");
    }
    const double nu = c[0].get<double>();
    const double rate = c[1].get<double>();
    const double rate_exact = ctx.negative_control ? 2.0 * rate : rate;
    const std::string where = detail::tag("nu", nu) + "," + detail::tag("p", rate);
    const auto exact = generate(n, "beta_gamma/" + where, ctx.parallel(), [&](RngStream& rng) {
      return sample_exp_functional_beta_gamma(nu, rate_exact, rng);
    });
    const auto path = generate(n, "path/" + where, ctx.parallel(), [&](RngStream& rng) {
      const double s = sample_exponential(rate, rng);
      return endpoint_at_time(s, dt, rng, nu).a;
    });
    detail::add_ks(report, ctx, exact, path, "ks_" + where);
    const double b = gamma_index(nu, rate_exact);
    for (const double r : rs) {
      // Finite variance of A^r needs -1/2 < r < b/2.
      if (!(2.0 * r < b) || !(2.0 * r > -1.0) || r == 0.0) {
        continue;
      }
      const double target = mellin_exp_functional({r, nu, rate_exact});
      const auto path_pow = detail::column(path, [&](double a) { return std::pow(a, r); });
      detail::add_mean(report, ctx, path_pow, target, "mellin_path_" + where + "," + detail::tag("r", r));
      if (!ctx.negative_control) {
        const auto exact_pow = detail::column(exact, [&](double a) { return std::pow(a, r); });
        detail::add_mean(report, ctx, exact_pow, target, "mellin_sampler_" + where + "," + detail::tag("r", r));
      }
    }
    if (ctx.dump_samples) {
      report.samples.add("beta_gamma_" + where, exact);
      report.samples.add("path_A_Sp_" + where, path);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Brownian motion at an independent exponential time:
// sqrt(2e) (|beta(1)|, lambda(1)) = (e, e') and L_{S_p}, |B_{S_p}| i.i.d. exponential(sqrt(2p)).

inline TestReport verify_exponential_time_facts(const Json& params, const RunContext& ctx) {
  const Params p(params);
  const std::size_t n = p.count("n", 100);
  const std::size_t n_energy = p.count("n_energy", 50);
  const double rate = p.positive("p");
  EnergyTestOptions energy;
  energy.n_perm = p.count("n_perm", 200);
  energy.directions = p.count("directions");
  energy.alpha = ctx.alpha;
  TestReport report;
  const double e_scale = ctx.negative_control ? 4.0 : 2.0;
  const auto scaled_unit = generate(n, "scaled_unit", ctx.parallel(), [&](RngStream& rng) {
    const auto unit = sample_abs_bm_with_local_time(1.0, rng);
    const double root = std::sqrt(e_scale * sample_exponential(1.0, rng));
    return Point2{root * unit.abs_value, root * unit.local_time};
  });
  const auto first = detail::column(scaled_unit, [](const Point2& q) { return q.x; });
  const auto second = detail::column(scaled_unit, [](const Point2& q) { return q.y; });
  const auto unit_cdf = [](double x) { return exponential_cdf(x, 1.0); };
  report.add(ks_one_sample(first, unit_cdf, ctx.alpha, "ks_scaled_abs_beta"));
  report.add(ks_one_sample(second, unit_cdf, ctx.alpha, "ks_scaled_local_time"));
  {
    const auto pairs = generate(n_energy, "exp_pairs", ctx.parallel(), [&](RngStream& rng) {
      const double e1 = sample_exponential(1.0, rng);
      return Point2{e1, sample_exponential(1.0, rng)};
    });
    const std::vector<Point2> head(scaled_unit.begin(),
                                   scaled_unit.begin() + static_cast<std::ptrdiff_t>(std::min(n_energy, n)));
    auto rng = ctx.stream("energy/scaled_unit");
    report.add(energy_distance_test(head, pairs, rng, energy, "energy_scaled_unit_vs_exponentials"));
  }
  const double rate_time = ctx.negative_control ? 2.0 * rate : rate;
  const double root = std::sqrt(2.0 * rate);
  const auto at_exp = generate(n, "at_exponential_time", ctx.parallel(), [&](RngStream& rng) {
    const double s = sample_exponential(rate_time, rng);
    const auto v = sample_abs_bm_with_local_time(s, rng);
    return Point2{v.abs_value, v.local_time};
  });
  const auto exp_cdf = [root](double x) { return exponential_cdf(x, root); };
  report.add(ks_one_sample(detail::column(at_exp, [](const Point2& q) { return q.y; }), exp_cdf, ctx.alpha,
                           "ks_local_time_at_exponential_time"));
  report.add(ks_one_sample(detail::column(at_exp, [](const Point2& q) { return q.x; }), exp_cdf, ctx.alpha,
                           "ks_abs_bm_at_exponential_time"));
  if (!ctx.negative_control) {
    // Independence of |B_{S_p}| and L_{S_p}.
    const auto pairs = generate(n_energy, "independent_pairs", ctx.parallel(), [&](RngStream& rng) {
      const double e1 = sample_exponential(root, rng);
      return Point2{e1, sample_exponential(root, rng)};
    });
    const std::vector<Point2> head(at_exp.begin(), at_exp.begin() + static_cast<std::ptrdiff_t>(std::min(n_energy, n)));
    auto rng = ctx.stream("energy/at_exponential_time");
    report.add(energy_distance_test(head, pairs, rng, energy, "energy_independence_at_exponential_time"));
  }
  if (ctx.dump_samples) {
    report.samples.add("scaled_abs_beta", first);
    report.samples.add("scaled_local_time", second);
    report.samples.add("abs_B_Sp", detail::column(at_exp, [](const Point2& q) { return q.x; }));
    report.samples.add("L_Sp", detail::column(at_exp, [](const Point2& q) { return q.y; }));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Registry.

using VerifyFn = TestReport (*)(const Json&, const RunContext&);

struct TestSpec {
  std::string name;
  std::vector<std::string> aliases;
  std::string anchor;  // the identity, in words and symbols
  Json defaults;
  VerifyFn run;
};

inline const std::vector<TestSpec>& registry() {
  static const std::vector<TestSpec> specs = [] {
    const double dt = kDefaultDt;
    const double max_steps = static_cast<double>(std::uint64_t{1} << 26);
    std::vector<TestSpec> s;
    s.push_back({"bougerol_identity",
                 {"eq1"},
                 "sinh(B_t) =law beta(A_t)",
                 {{"t", {0.5, 1.0, 2.0}}, {"n", 100000}, {"dt", dt}},
                 verify_bougerol_identity});
    s.push_back({"gaussian_mixture_kernel",
                 {"eq2", "kernel"},
                 "E[exp(-x^2/2A_t)/sqrt(A_t)] = a'(x)/sqrt(t) exp(-a(x)^2/2t), a = arcsinh",
                 {{"t", {0.5, 1.0, 2.0}}, {"x", {0.0, 0.5, 1.0, 2.0, 4.0}}, {"n", 100000}, {"dt", dt}},
                 verify_gaussian_mixture_kernel});
    s.push_back({"negative_moments",
                 {"eq3", "eq4", "moments"},
                 "E[A_t^-1/2] = t^-1/2; E[e^B_t A_t^-3/2] = E[e^2B_t A_t^-3/2] = t^-3/2",
                 {{"t", {1.0, 4.0}}, {"n", 100000}, {"dt", dt}},
                 verify_negative_moments});
    s.push_back({"joint_local_time_identity",
                 {"theorem1"},
                 "(sinh B_t, sinh L_t) =law (beta(A_t), e^-B_t lambda(A_t)) =law (e^-B_t beta(A_t), lambda(A_t))",
                 {{"t", 1.0}, {"n", 20000}, {"n_perm", 500}, {"directions", 64}, {"dt", dt}},
                 verify_joint_local_time_identity});
    s.push_back({"subordinated_clock",
                 {"corollary1"},
                 "H_{sigma_s} =law sigma_{a(s)}",
                 {{"s", {0.5, 1.0, 2.0}}, {"n", 10000}, {"q", 1.0}, {"max_exclusion_rate", 0.001},
                  {"dt", dt}, {"max_steps", max_steps}},
                 verify_subordinated_clock});
    s.push_back({"time_changed_clock",
                 {"corollary2"},
                 "sigma_t =law H_{sigma_{eta(t)}}, eta inverse of s -> int_0^s du / R_{sigma_u}",
                 {{"t", {0.5, 1.0}}, {"n", 5000}, {"mesh", 0.01}, {"dt", dt}, {"max_steps", max_steps}},
                 verify_time_changed_clock});
    s.push_back({"reciprocal_radius",
                 {"lemma1", "eq9"},
                 "E[f(H_{sigma_s}) / R_{sigma_s}] = E[f(sigma_{a(s)})] / sqrt(1+s^2)",
                 {{"s", {0.5, 1.0, 2.0}}, {"q", {0.5, 1.0, 2.0}}, {"n", 10000}, {"dt", dt}, {"max_steps", max_steps}},
                 verify_reciprocal_radius});
    s.push_back({"jump_sum_factorization",
                 {"theorem2"},
                 "E[sum f(H_{sigma_l-}, l) g(dH_{sigma_l})] = C(f) D(g)",
                 {{"l", 2.0}, {"q", 1.0}, {"nu", 1.0}, {"epsilon", 1e-4}, {"n", 10000}, {"dt", dt},
                  {"max_steps", max_steps}},
                 verify_jump_sum_factorization});
    s.push_back({"weighted_jump_sum",
                 {"theorem3"},
                 "E[sum R_{sigma_l-}^a f(H_{sigma_l-}) g(dH) / R_{sigma_l}^b] = h-_{a-b}(f,l) h+_b(g)",
                 {{"l", 1.0}, {"q", 1.0}, {"nu", 1.0}, {"a", 1.0}, {"b", 2.0}, {"nu_general", 2.0},
                  {"epsilon", 6.25e-6}, {"n", 10000}, {"n_aux", 100000}, {"dt", dt}, {"max_steps", max_steps}},
                 verify_weighted_jump_sum});
    s.push_back({"subordinated_winding",
                 {"theorem4"},
                 "theta_{sigma_l} =law C_{a(l)}",
                 {{"l", {1.0, 2.0}}, {"n", 10000}, {"dt", dt}, {"max_steps", max_steps}},
                 verify_subordinated_winding});
    s.push_back({"winding_limit",
                 {"spitzer"},
                 "2 theta_t / log t -> C_1 as t -> infinity",
                 {{"t", {100.0, 1000.0, 10000.0}}, {"n", 5000}, {"cdf_grid", 2000}, {"max_distance", 0.05},
                  {"dt", dt}, {"max_steps", max_steps}},
                 verify_winding_limit});
    s.push_back({"laplace_mellin",
                 {"theorem5", "eq10"},
                 "E[R_{sigma_l}^-2b exp(-mu^2 H_{sigma_l}/2)] = C_{b,mu} 2F1(...; -1/l^2) / ((1+l^2)^(2b-1/2) l^(mu+1-2b))",
                 {{"mu", {0.5, 0.75, 1.0}}, {"lambda", {0.5, 1.0, 2.0}},
                  {"extra_points", Json::array({Json::array({0.25, 1.5, 0.8})})}, {"n", 20000}, {"dt", dt},
                  {"max_steps", max_steps}},
                 verify_laplace_mellin});
    s.push_back({"beta_gamma_functional",
                 {"eq12"},
                 "A^(nu)_{S_p} =law beta(1,a) / (2 gamma(b)); E[A^r] = 2^-r G(1+a)G(1+r)G(b-r) / (G(1+a+r)G(b))",
                 {{"cases", Json::array({Json::array({0.0, 4.0}), Json::array({1.0, 2.0})})},
                  {"r", {-0.25, 0.25, 0.5, 1.0}}, {"n", 10000}, {"dt", dt}},
                 verify_beta_gamma_functional});
    s.push_back({"exponential_time_facts",
                 {"exp_time"},
                 "sqrt(2e) (|beta(1)|, lambda(1)) =law (e, e'); L_{S_p}, |B_{S_p}| i.i.d. exponential(sqrt(2p))",
                 {{"n", 100000}, {"n_energy", 10000}, {"p", 1.0}, {"n_perm", 500}, {"directions", 64}},
                 verify_exponential_time_facts});
    return s;
  }();
  return specs;
}

/// Looks a test up by name or alias.
inline const TestSpec& find_test(std::string_view name) {
  for (const auto& spec : registry()) {
    if (spec.name == name) {
      return spec;
    }
    for (const auto& alias : spec.aliases) {
      if (alias == name) {
        return spec;
      }
    }
  }
  throw UsageError("unknown test '" + std::string(name) + "' (see `list`)");
}

/// Defaults with overrides applied; unknown keys are usage errors.
inline Json merge_parameters(const TestSpec& spec, const Json& overrides) {
  Json out = spec.defaults;
  if (overrides.is_null()) {
    return out;
  }
  if (!overrides.is_object()) {
    throw UsageError("parameters for '" + spec.name + "' must be an object");
  }
  for (const auto& [key, value] : overrides.items()) {
    if (!out.contains(key)) {
      throw UsageError("test '" + spec.name + "' has no parameter '" + key + "'");
    }
    out[key] = value;
  }
  return out;
}

/// Per-test seed: a function of the master seed, the test and the attempt.
inline std::uint64_t test_seed(std::uint64_t master_seed, std::string_view test_name, std::uint64_t attempt) {
  return mix_stream(mix_stream(master_seed, hash_name(test_name)), attempt);
}

/// Runs one attempt of one test and fills the bookkeeping fields.
inline TestReport run_test(const TestSpec& spec, const Json& parameters, RunContext ctx) {
  const auto start = std::chrono::steady_clock::now();
  TestReport report = spec.run(parameters, ctx);
  const auto stop = std::chrono::steady_clock::now();
  report.test_name = spec.name;
  report.anchor = spec.anchor;
  report.parameters = parameters;
  report.seed = ctx.seed;
  report.attempt = ctx.attempt;
  report.negative_control = ctx.negative_control;
  report.runtime_seconds = std::chrono::duration<double>(stop - start).count();
  report.pass = report.all_checks_pass();
  return report;
}

}  // namespace bougerol
