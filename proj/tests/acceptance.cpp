// End-to-end acceptance run. Executes the default suite, the negative-control
// suite and a reproducibility comparison, then prints one PASS/FAIL line per
// criterion. Exit status is nonzero if any line fails.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "bougerol/cli.hpp"

using namespace bougerol;

namespace {

// Pinned tolerances.
constexpr double kAlpha = 0.01;
constexpr double kZ = 3.0;
constexpr double kIdentitySecondsPerTime = 120.0;
constexpr double kJointSeconds = 300.0;
constexpr double kMaxExclusionRate = 1e-3;
constexpr double kMaxCauchyDistance = 0.05;
constexpr double kAnchorTolerance = 1e-10;
constexpr std::size_t kReproducibilityN = 600;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

const TestReport& find(const SuiteReport& suite, const std::string& name) {
  for (const auto& t : suite.tests) {
    if (t.test_name == name) {
      return t;
    }
  }
  throw std::runtime_error("missing test " + name);
}

bool same_number(const Json& a, const Json& b) {
  if (a.is_array() && b.is_array()) {
    if (a.size() != b.size()) {
      return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!same_number(a[i], b[i])) {
        return false;
      }
    }
    return true;
  }
  return a.is_number() && b.is_number() && a.get<double>() == b.get<double>();
}

// The run used the sample sizes and grids the criterion names.
void require_parameters(Outcome& o, const TestReport& t, const Json& expected) {
  for (const auto& [key, value] : expected.items()) {
    o.require(t.parameters.contains(key) && same_number(t.parameters[key], value),
              t.test_name + " parameter " + key + " differs from " + value.dump());
  }
}

std::size_t require_each(Outcome& o, const TestReport& t, const std::string& kind,
                         const std::function<bool(const TestVerdict&)>& ok) {
  std::size_t count = 0;
  for (const auto& v : t.verdicts) {
    if (v.kind != kind) {
      continue;
    }
    ++count;
    o.require(ok(v), v.check + " (statistic " + detail::format_number(v.statistic) + ", p " +
                         detail::format_number(v.p_value) + ", z " + detail::format_number(v.z_score) + ")");
  }
  return count;
}

const TestVerdict* verdict(const TestReport& t, const std::string& check) {
  for (const auto& v : t.verdicts) {
    if (v.check == check) {
      return &v;
    }
  }
  return nullptr;
}

void require_check(Outcome& o, const TestReport& t, const std::string& check,
                   const std::function<bool(const TestVerdict&)>& ok) {
  const auto* v = verdict(t, check);
  o.require(v != nullptr, "missing " + check);
  if (v) {
    o.require(ok(*v), check + " (statistic " + detail::format_number(v->statistic) + ", z " +
                          detail::format_number(v->z_score) + ")");
  }
}

const auto ks_ok = [](const TestVerdict& v) { return v.p_value > kAlpha; };
const auto z_ok = [](const TestVerdict& v) { return std::fabs(v.z_score) <= kZ; };
const auto passed = [](const TestVerdict& v) { return v.pass; };

void require_count(Outcome& o, std::size_t got, std::size_t want, const std::string& what) {
  o.require(got == want, what + ": " + std::to_string(got) + " checks, expected " + std::to_string(want));
}

Json normalized(const SuiteReport& suite) {
  Json j = Json::parse(dump_report(suite));
  j["timestamp"] = "";
  for (auto& t : j["tests"]) {
    t["runtime_seconds"] = 0;
  }
  return j;
}

std::vector<const TestSpec*> all_tests() {
  std::vector<const TestSpec*> out;
  for (const auto& spec : registry()) {
    out.push_back(&spec);
  }
  return out;
}

}  // namespace

int main() {
  const std::size_t workers = std::max(1U, std::thread::hardware_concurrency());
  const auto out_dir = std::filesystem::current_path();

  RunConfig config;
  config.workers = workers;
  std::cout << "== default suite (seed " << config.master_seed << ", " << workers << " workers)" << std::endl;
  const auto suite = run_suite(config, all_tests(), &std::cout);
  write_report(suite, out_dir / "acceptance_report.json");

  RunConfig nc_config = config;
  nc_config.negative_control = true;
  std::cout << "== negative-control suite" << std::endl;
  const auto nc = run_suite(nc_config, all_tests(), &std::cout);
  write_report(nc, out_dir / "acceptance_negative_control.json");

  std::cout << "== reproducibility (n = " << kReproducibilityN << ", 1 vs 2 workers)" << std::endl;
  RunConfig small;
  small.n = static_cast<double>(kReproducibilityN);
  small.workers = 1;
  const auto repro_one = run_suite(small, all_tests());
  small.workers = 2;
  const auto repro_two = run_suite(small, all_tests());
  const auto repro_again = run_suite(small, all_tests());

  std::vector<std::pair<std::string, Outcome>> results;
  auto criterion = [&](const std::string& label, const std::function<void(Outcome&)>& body) {
    Outcome o;
    try {
      body(o);
    } catch (const std::exception& e) {
      o.require(false, e.what());
    }
    results.emplace_back(label, o);
  };

  criterion("1 sinh(B_t) vs sqrt(A_t) N, KS", [&](Outcome& o) {
    const auto& t = find(suite, "bougerol_identity");
    require_parameters(o, t, {{"t", {0.5, 1.0, 2.0}}, {"n", 100000}, {"dt", std::ldexp(1.0, -10)}});
    require_count(o, require_each(o, t, "ks_two_sample", ks_ok), 3, "KS");
    o.require(t.runtime_seconds <= 3 * kIdentitySecondsPerTime,
              "runtime " + detail::format_number(t.runtime_seconds) + " s");
  });

  criterion("2 kernel and negative moments, means and dt halving", [&](Outcome& o) {
    for (const char* name : {"gaussian_mixture_kernel", "negative_moments"}) {
      const auto& t = find(suite, name);
      require_parameters(o, t, {{"n", 100000}});
      o.require(require_each(o, t, "mean_vs_target", z_ok) > 0, std::string(name) + " has no mean checks");
      o.require(require_each(o, t, "dt_halving", passed) > 0, std::string(name) + " has no halving checks");
    }
  });

  criterion("3 joint law with local time, energy and marginal KS", [&](Outcome& o) {
    const auto& t = find(suite, "joint_local_time_identity");
    require_parameters(o, t, {{"t", 1.0}, {"n", 20000}, {"n_perm", 500}});
    require_count(o, require_each(o, t, "energy_permutation", ks_ok), 3, "energy");
    require_count(o, require_each(o, t, "ks_two_sample", ks_ok), 6, "KS");
    o.require(verdict(t, "ks_sinh_local_time") != nullptr, "missing sinh marginal");
    o.require(t.runtime_seconds <= kJointSeconds, "runtime " + detail::format_number(t.runtime_seconds) + " s");
  });

  criterion("4 subordinated clock, KS and budget exclusions", [&](Outcome& o) {
    const auto& t = find(suite, "subordinated_clock");
    require_parameters(o, t, {{"s", {0.5, 1.0, 2.0}}, {"n", 10000}});
    require_count(o, require_each(o, t, "ks_two_sample", ks_ok), 3, "KS");
    require_count(o, require_each(o, t, "exclusion_rate", [](const TestVerdict& v) {
                    return v.statistic < kMaxExclusionRate;
                  }),
                  1, "exclusion rate");
  });

  criterion("5 time-changed clock, KS at two meshes", [&](Outcome& o) {
    const auto& t = find(suite, "time_changed_clock");
    require_parameters(o, t, {{"t", {0.5, 1.0}}, {"n", 5000}});
    require_count(o, require_each(o, t, "ks_two_sample", ks_ok), 4, "KS");
  });

  criterion("6 reciprocal radius, means and dependence", [&](Outcome& o) {
    const auto& t = find(suite, "reciprocal_radius");
    require_parameters(o, t, {{"s", {0.5, 1.0, 2.0}}, {"q", {0.5, 1.0, 2.0}}, {"n", 10000}});
    require_count(o, require_each(o, t, "mean_vs_target", z_ok), 9, "means");
    require_count(o, require_each(o, t, "rank_correlation", [](const TestVerdict& v) {
                    return std::fabs(v.z_score) > kZ;
                  }),
                  3, "dependence");
  });

  criterion("7 jump sum vs closed-form product", [&](Outcome& o) {
    const auto& t = find(suite, "jump_sum_factorization");
    require_parameters(o, t, {{"epsilon", 1e-4}, {"l", 2.0}, {"n", 10000}});
    require_check(o, t, "jump_sum_vs_closed_form", passed);
    require_check(o, t, "moves_toward_target", passed);
  });

  criterion("8 weighted jump sums, special and general", [&](Outcome& o) {
    const auto& t = find(suite, "weighted_jump_sum");
    require_parameters(o, t, {{"a", 1.0}, {"b", 2.0}});
    require_check(o, t, "special_case_vs_closed_form", passed);
    // Joint 3-se interval without the truncation allowance.
    require_check(o, t, "general_factorization", z_ok);
  });

  criterion("9 subordinated winding, KS", [&](Outcome& o) {
    const auto& t = find(suite, "subordinated_winding");
    require_parameters(o, t, {{"l", {1.0, 2.0}}, {"n", 10000}});
    require_count(o, require_each(o, t, "ks_two_sample", ks_ok), 2, "KS");
  });

  criterion("10 winding limit, distance to Cauchy", [&](Outcome& o) {
    const auto& t = find(suite, "winding_limit");
    require_parameters(o, t, {{"t", {100.0, 1000.0, 10000.0}}, {"n", 5000}});
    require_check(o, t, "distance_decreasing", passed);
    require_check(o, t, "distance_at_largest_t",
                  [](const TestVerdict& v) { return v.statistic < kMaxCauchyDistance; });
  });

  criterion("11 Laplace-Mellin transform, grid and anchors", [&](Outcome& o) {
    const auto& t = find(suite, "laplace_mellin");
    require_parameters(o, t, {{"mu", {0.5, 0.75, 1.0}}, {"lambda", {0.5, 1.0, 2.0}}});
    o.require(require_each(o, t, "mean_vs_target", z_ok) >= 27, "fewer than 27 grid points");
    require_count(o, require_each(o, t, "closed_form_identity",
                                  [](const TestVerdict& v) { return v.statistic <= kAnchorTolerance; }),
                  27, "anchors");
    std::size_t b0 = 0;
    for (const auto& v : t.verdicts) {
      b0 += v.check.rfind("anchor_b0_", 0) == 0 ? 1 : 0;
    }
    require_count(o, b0, 9, "b=0 anchors");
  });

  criterion("12 beta/gamma factorization, KS and Mellin moments", [&](Outcome& o) {
    const auto& t = find(suite, "beta_gamma_functional");
    require_parameters(o, t, {{"cases", {{0.0, 4.0}, {1.0, 2.0}}}});
    require_count(o, require_each(o, t, "ks_two_sample", ks_ok), 2, "KS");
    o.require(require_each(o, t, "mean_vs_target", z_ok) > 0, "no Mellin checks");
    require_check(o, t, "mellin_r1_nu0_p4", passed);
  });

  criterion("13 every negative control rejects", [&](Outcome& o) {
    require_count(o, nc.tests.size(), registry().size(), "negative-control tests");
    for (const auto& t : nc.tests) {
      o.require(t.negative_control && !t.verdicts.empty(), t.test_name + " ran no negative control");
      for (const auto& v : t.verdicts) {
        o.require(!v.pass, t.test_name + "/" + v.check + " accepted the perturbation");
      }
    }
  });

  criterion("14 reports identical across runs and worker counts", [&](Outcome& o) {
    const auto a = normalized(repro_one).dump(2);
    o.require(a == normalized(repro_two).dump(2), "1 vs 2 workers differ");
    o.require(a == normalized(repro_again).dump(2), "repeat run differs");
  });

  criterion("suite rule: no red tests, at most one first-attempt failure", [&](Outcome& o) {
    o.require(suite.verdict.pass, "red " + std::to_string(suite.verdict.red_tests.size()) +
                                      ", first-attempt failures " +
                                      std::to_string(suite.verdict.first_attempt_failures));
  });

  std::cout << "== acceptance" << std::endl;
  bool all = true;
  for (const auto& [label, o] : results) {
    std::cout << (o.pass ? "PASS " : "FAIL ") << label << (o.pass ? "" : "  [" + o.detail + "]") << std::endl;
    all = all && o.pass;
  }
  std::cout << (all ? "ACCEPTED" : "REJECTED") << std::endl;
  return all ? 0 : 1;
}
