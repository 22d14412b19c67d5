#pragma once

// Command-line front end: configuration, the suite rule, report persistence
// and sample export. `run_cli` is the whole program minus main().

#include <algorithm>
#include <cctype>
#include <cmath>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "bougerol/errors.hpp"
#include "bougerol/report.hpp"
#include "bougerol/verifications.hpp"

namespace bougerol {

enum ExitCode : int { kExitPass = 0, kExitStatistical = 1, kExitUsage = 2, kExitIo = 3 };

struct RunConfig {
  std::uint64_t master_seed = 42;
  std::optional<double> n;   // replicate count for every selected test
  std::optional<double> dt;  // path step for every selected test
  double alpha = 0.01;
  double k_sigma = 3.0;
  std::size_t workers = 1;
  std::size_t chunk_size = 1000;
  bool negative_control = false;
  std::size_t max_attempts = 2;
  std::size_t max_first_attempt_failures = 1;
  std::string out;           // report path; empty for none
  std::string dump_samples;  // CSV directory; empty for none
  Json tests = Json::object();  // per-test parameter overrides
};

namespace detail {

// Counts given as 1e5 or 2000.0 are stored as JSON integers.
inline Json integral_or_real(double x) {
  if (x == std::floor(x) && std::fabs(x) < 9.0e15) {
    return static_cast<std::int64_t>(x);
  }
  return x;
}

}  // namespace detail

/// Fields that determine the numbers in a report. Worker count and output
/// paths are left out so reports compare equal across them.
inline Json config_to_json(const RunConfig& c) {
  Json j = Json::object();
  j["master_seed"] = c.master_seed;
  if (c.n) {
    j["n"] = detail::integral_or_real(*c.n);
  }
  if (c.dt) {
    j["dt"] = *c.dt;
  }
  j["alpha"] = c.alpha;
  j["k_sigma"] = c.k_sigma;
  j["chunk_size"] = c.chunk_size;
  j["negative_control"] = c.negative_control;
  j["max_attempts"] = c.max_attempts;
  j["max_first_attempt_failures"] = c.max_first_attempt_failures;
  j["tests"] = c.tests;
  return j;
}

namespace detail {

inline std::uint64_t parse_seed(const std::string& text, const char* source) {
  if (text.empty() || !std::all_of(text.begin(), text.end(), [](unsigned char ch) { return std::isdigit(ch); })) {
    throw UsageError(std::string(source) + ": seed must be a nonnegative integer");
  }
  try {
    return std::stoull(text);
  } catch (const std::exception&) {
    throw UsageError(std::string(source) + ": seed out of range");
  }
}

/// Applies a JSON config object (RunConfig field names) onto `c`.
inline void apply_config_json(RunConfig& c, const Json& j) {
  if (!j.is_object()) {
    throw UsageError("config: top level must be an object");
  }
  auto number = [&](const std::string& key) {
    if (!j[key].is_number()) {
      throw UsageError("config: '" + key + "' must be a number");
    }
    return j[key].get<double>();
  };
  auto count = [&](const std::string& key) {
    const double x = number(key);
    if (x < 0.0 || x != std::floor(x)) {
      throw UsageError("config: '" + key + "' must be a nonnegative integer");
    }
    return static_cast<std::size_t>(x);
  };
  auto boolean = [&](const std::string& key) {
    if (!j[key].is_boolean()) {
      throw UsageError("config: '" + key + "' must be true or false");
    }
    return j[key].get<bool>();
  };
  auto text = [&](const std::string& key) {
    if (!j[key].is_string()) {
      throw UsageError("config: '" + key + "' must be a string");
    }
    return j[key].get<std::string>();
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "master_seed") {
      if (!value.is_number_unsigned()) {
        throw UsageError("config: 'master_seed' must be a nonnegative integer");
      }
      c.master_seed = value.get<std::uint64_t>();
    } else if (key == "n") {
      c.n = number(key);
    } else if (key == "dt") {
      c.dt = number(key);
    } else if (key == "alpha") {
      c.alpha = number(key);
    } else if (key == "k_sigma") {
      c.k_sigma = number(key);
    } else if (key == "workers") {
      c.workers = count(key);
    } else if (key == "chunk_size") {
      c.chunk_size = count(key);
    } else if (key == "negative_control") {
      c.negative_control = boolean(key);
    } else if (key == "max_attempts") {
      c.max_attempts = count(key);
    } else if (key == "max_first_attempt_failures") {
      c.max_first_attempt_failures = count(key);
    } else if (key == "out") {
      c.out = text(key);
    } else if (key == "dump_samples") {
      c.dump_samples = text(key);
    } else if (key == "tests") {
      if (!value.is_object()) {
        throw UsageError("config: 'tests' must map test names to parameter objects");
      }
      for (const auto& [name, overrides] : value.items()) {
        const auto& spec = find_test(name);
        merge_parameters(spec, overrides);  // validates the keys
        c.tests[spec.name] = overrides;
      }
    } else {
      throw UsageError("config: unknown field '" + key + "'");
    }
  }
}

inline void validate_config(const RunConfig& c) {
  if (!(c.alpha > 0.0 && c.alpha < 1.0)) {
    throw UsageError("alpha must lie in (0, 1)");
  }
  if (!(c.k_sigma > 0.0)) {
    throw UsageError("k_sigma must be positive");
  }
  if (c.workers == 0 || c.chunk_size == 0 || c.max_attempts == 0) {
    throw UsageError("workers, chunk_size and max_attempts must be positive");
  }
}

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

}  // namespace detail

/// Effective parameters of one test under `config`: defaults, then the
/// config file's per-test object, then the global --n / --dt.
inline Json effective_parameters(const TestSpec& spec, const RunConfig& config) {
  Json params = merge_parameters(spec, config.tests.contains(spec.name) ? config.tests[spec.name] : Json());
  if (config.n && params.contains("n")) {
    params["n"] = detail::integral_or_real(*config.n);
  }
  if (config.dt && params.contains("dt")) {
    params["dt"] = *config.dt;
  }
  return params;
}

inline RunContext make_context(const RunConfig& config, const TestSpec& spec, std::uint64_t attempt) {
  RunContext ctx;
  ctx.seed = test_seed(config.master_seed, spec.name, attempt);
  ctx.attempt = attempt;
  ctx.workers = config.workers;
  ctx.chunk_size = config.chunk_size;
  ctx.alpha = config.alpha;
  ctx.k_sigma = config.k_sigma;
  ctx.negative_control = config.negative_control;
  ctx.dump_samples = !config.dump_samples.empty();
  return ctx;
}

/// Suite rule: a failing test is rerun on a fresh stream; it is red when
/// every attempt fails. The suite passes with no red test and at most
/// `max_first_attempt_failures` first-attempt failures. Negative controls
/// are never rerun.
inline SuiteReport run_suite(const RunConfig& config, const std::vector<const TestSpec*>& selected,
                             std::ostream* progress = nullptr) {
  detail::validate_config(config);
  SuiteReport suite;
  suite.master_seed = config.master_seed;
  suite.timestamp = detail::utc_timestamp();
  suite.config = config_to_json(config);
  const std::size_t attempts = config.negative_control ? 1 : config.max_attempts;
  for (const auto* spec : selected) {
    const Json params = effective_parameters(*spec, config);
    std::vector<std::vector<std::string>> failures;
    TestReport report;
    for (std::size_t attempt = 0; attempt < attempts; ++attempt) {
      report = run_test(*spec, params, make_context(config, *spec, attempt));
      if (report.pass) {
        break;
      }
      failures.push_back(report.failed_checks());
    }
    if (!report.pass) {
      failures.pop_back();  // the final attempt's failures are the verdicts themselves
    }
    report.failed_attempts = std::move(failures);
    if (!config.dump_samples.empty()) {
      write_sample_dumps(report, config.dump_samples);
      report.samples = SampleDump{};
    }
    if (progress) {
      *progress << (report.pass ? "PASS " : "FAIL ") << report.test_name << " ("
                << detail::format_number(report.runtime_seconds) << " s)" << std::endl;
    }
    const bool first_failed = report.attempt > 0 || !report.pass;
    suite.verdict.first_attempt_failures += first_failed ? 1 : 0;
    if (!report.pass) {
      suite.verdict.red_tests.push_back(report.test_name);
    }
    suite.tests.push_back(std::move(report));
  }
  suite.verdict.pass = suite.verdict.red_tests.empty() &&
                       suite.verdict.first_attempt_failures <= config.max_first_attempt_failures;
  return suite;
}

/// Parses and executes one command line. `args` excludes the program name.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation checks of sinh(B_t) = beta(A_t) and its extensions", "bougerol-verify"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::optional<std::string> seed_flag;
  std::optional<double> n_flag;
  std::optional<double> dt_flag;
  std::optional<double> alpha_flag;
  std::optional<std::size_t> workers_flag;
  std::optional<std::string> out_flag;
  std::optional<std::string> dump_flag;
  std::string config_path;
  bool negative_control = false;

  auto add_run_options = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed_flag, "Master seed (overrides BOUGEROL_SEED and the config file)");
    cmd->add_option("--n", n_flag, "Replicate count for each selected test");
    cmd->add_option("--dt", dt_flag, "Path time step");
    cmd->add_option("--alpha", alpha_flag, "Significance floor for p-value verdicts");
    cmd->add_option("--workers", workers_flag, "Worker threads (results do not depend on it)");
    cmd->add_option("--out", out_flag, "Write the JSON report here");
    cmd->add_option("--dump-samples", dump_flag, "Write one CSV of raw samples per test into this directory");
    cmd->add_option("--config", config_path, "JSON config file with RunConfig field names")->check(CLI::ExistingFile);
    cmd->add_flag("--negative-control", negative_control, "Run the perturbed targets; every check should reject");
  };

  auto* list_cmd = app.add_subcommand("list", "List registered tests and the identities they check");
  auto* verify_cmd = app.add_subcommand("verify", "Run one test (by name or alias) or `all`");
  std::string target;
  verify_cmd->add_option("test", target, "Test name, alias or `all`")->required();
  add_run_options(verify_cmd);
  auto* report_cmd = app.add_subcommand("report", "Re-render the summary of a stored JSON report");
  std::string report_path;
  report_cmd->add_option("path", report_path, "Report file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitPass;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitPass;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (list_cmd->parsed()) {
      for (const auto& spec : registry()) {
        out << spec.name;
        for (const auto& alias : spec.aliases) {
          out << (alias == spec.aliases.front() ? " (" : ", ") << alias;
        }
        out << (spec.aliases.empty() ? "" : ")") << "\n    " << spec.anchor << "\n";
      }
      return kExitPass;
    }
    if (report_cmd->parsed()) {
      const auto stored = read_report(report_path);
      out << render_summary(stored);
      return stored.verdict.pass ? kExitPass : kExitStatistical;
    }

    RunConfig config;
    config.workers = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("BOUGEROL_SEED"); env != nullptr && *env != '\0') {
      config.master_seed = detail::parse_seed(env, "BOUGEROL_SEED");
    }
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      Json j;
      try {
        j = Json::parse(in);
      } catch (const Json::parse_error& e) {
        throw UsageError("config: " + std::string(e.what()));
      }
      detail::apply_config_json(config, j);
    }
    if (seed_flag) {
      config.master_seed = detail::parse_seed(*seed_flag, "--seed");
    }
    if (n_flag) {
      config.n = *n_flag;
    }
    if (dt_flag) {
      config.dt = *dt_flag;
    }
    if (alpha_flag) {
      config.alpha = *alpha_flag;
    }
    if (workers_flag) {
      config.workers = *workers_flag;
    }
    if (out_flag) {
      config.out = *out_flag;
    }
    if (dump_flag) {
      config.dump_samples = *dump_flag;
    }
    config.negative_control = config.negative_control || negative_control;

    std::vector<const TestSpec*> selected;
    if (target == "all") {
      for (const auto& spec : registry()) {
        selected.push_back(&spec);
      }
    } else {
      selected.push_back(&find_test(target));
    }
    // Surface parameter errors before any simulation starts.
    for (const auto* spec : selected) {
      effective_parameters(*spec, config);
    }
    SuiteReport suite;
    try {
      suite = run_suite(config, selected, &err);
    } catch (const DomainError& e) {
      throw UsageError(e.what());
    }
    out << render_summary(suite);
    if (!config.out.empty()) {
      write_report(suite, config.out);
    }
    return suite.verdict.pass ? kExitPass : kExitStatistical;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace bougerol
