#pragma once

// Test reports: JSON persistence, structural validation, summary rendering
// and CSV sample export.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "bougerol/errors.hpp"
#include "bougerol/stat_tests.hpp"

namespace bougerol {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportVersion = "1.0";

/// I/O failure while reading or writing reports and dumps.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Estimate {
  std::string label;
  double value = 0.0;
  double std_error = 0.0;
};

struct Target {
  std::string label;
  double value = 0.0;
};

/// Raw samples of one test, exported as CSV. Columns may differ in length.
struct SampleDump {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;

  bool empty() const { return columns.empty(); }
  void add(std::string name, std::vector<double> values) {
    columns.push_back(std::move(name));
    data.push_back(std::move(values));
  }
};

struct TestReport {
  std::string test_name;
  std::string anchor;
  Json parameters = Json::object();
  std::vector<TestVerdict> verdicts;
  std::vector<Estimate> estimates;
  std::vector<Target> targets;
  std::uint64_t seed = 0;
  std::uint64_t attempt = 0;
  std::size_t budget_exclusions = 0;
  double runtime_seconds = 0.0;
  bool pass = false;
  bool negative_control = false;
  std::vector<std::string> notes;
  /// Failed checks of earlier attempts, one entry per attempt.
  std::vector<std::vector<std::string>> failed_attempts;
  SampleDump samples;  // filled only when dumping; not serialised

  bool all_checks_pass() const {
    for (const auto& v : verdicts) {
      if (!v.pass) {
        return false;
      }
    }
    return !verdicts.empty();
  }

  std::vector<std::string> failed_checks() const {
    std::vector<std::string> out;
    for (const auto& v : verdicts) {
      if (!v.pass) {
        out.push_back(v.check);
      }
    }
    return out;
  }

  void add(TestVerdict v) { verdicts.push_back(std::move(v)); }
  void estimate(std::string label, double value, double se) {
    estimates.push_back({std::move(label), value, se});
  }
  void target(std::string label, double value) { targets.push_back({std::move(label), value}); }
};

struct SuiteVerdict {
  bool pass = false;
  std::size_t first_attempt_failures = 0;
  std::vector<std::string> red_tests;
};

struct SuiteReport {
  std::uint64_t master_seed = 0;
  std::string timestamp;
  Json config = Json::object();
  std::vector<TestReport> tests;
  SuiteVerdict verdict;
};

namespace detail {

inline Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline double number_from(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace detail

inline Json to_json(const TestVerdict& v) {
  Json j;
  j["check"] = v.check;
  j["kind"] = v.kind;
  j["statistic"] = detail::number_or_null(v.statistic);
  if (!std::isnan(v.p_value)) {
    j["p_value"] = v.p_value;
  }
  if (!std::isnan(v.z_score)) {
    j["z_score"] = detail::number_or_null(v.z_score);
  }
  j["n"] = v.n;
  j["pass"] = v.pass;
  if (!v.note.empty()) {
    j["note"] = v.note;
  }
  return j;
}

inline TestVerdict verdict_from_json(const Json& j) {
  TestVerdict v;
  v.check = j.at("check").get<std::string>();
  v.kind = j.at("kind").get<std::string>();
  v.statistic = detail::number_from(j.at("statistic"));
  if (j.contains("p_value")) {
    v.p_value = j["p_value"].get<double>();
  }
  if (j.contains("z_score")) {
    v.z_score = detail::number_from(j["z_score"]);
    if (j["z_score"].is_null()) {
      v.z_score = std::numeric_limits<double>::infinity();
    }
  }
  v.n = j.at("n").get<std::vector<std::size_t>>();
  v.pass = j.at("pass").get<bool>();
  if (j.contains("note")) {
    v.note = j["note"].get<std::string>();
  }
  return v;
}

inline Json to_json(const TestReport& r) {
  Json j;
  j["test_name"] = r.test_name;
  j["anchor"] = r.anchor;
  j["parameters"] = r.parameters;
  j["negative_control"] = r.negative_control;
  Json verdicts = Json::array();
  for (const auto& v : r.verdicts) {
    verdicts.push_back(to_json(v));
  }
  j["verdicts"] = verdicts;
  Json estimates = Json::array();
  for (const auto& e : r.estimates) {
    estimates.push_back({{"label", e.label},
                         {"value", detail::number_or_null(e.value)},
                         {"std_error", detail::number_or_null(e.std_error)}});
  }
  j["estimates"] = estimates;
  Json targets = Json::array();
  for (const auto& t : r.targets) {
    targets.push_back({{"label", t.label}, {"value", detail::number_or_null(t.value)}});
  }
  j["targets"] = targets;
  j["seed"] = r.seed;
  j["attempt"] = r.attempt;
  j["budget_exclusions"] = r.budget_exclusions;
  j["runtime_seconds"] = r.runtime_seconds;
  j["failed_attempts"] = r.failed_attempts;
  j["notes"] = r.notes;
  j["pass"] = r.pass;
  return j;
}

inline TestReport test_report_from_json(const Json& j) {
  TestReport r;
  r.test_name = j.at("test_name").get<std::string>();
  r.anchor = j.at("anchor").get<std::string>();
  r.parameters = j.at("parameters");
  r.negative_control = j.value("negative_control", false);
  for (const auto& v : j.at("verdicts")) {
    r.verdicts.push_back(verdict_from_json(v));
  }
  for (const auto& e : j.at("estimates")) {
    r.estimates.push_back({e.at("label").get<std::string>(), detail::number_from(e.at("value")),
                           detail::number_from(e.at("std_error"))});
  }
  for (const auto& t : j.at("targets")) {
    r.targets.push_back({t.at("label").get<std::string>(), detail::number_from(t.at("value"))});
  }
  r.seed = j.at("seed").get<std::uint64_t>();
  r.attempt = j.at("attempt").get<std::uint64_t>();
  r.budget_exclusions = j.at("budget_exclusions").get<std::size_t>();
  r.runtime_seconds = j.at("runtime_seconds").get<double>();
  r.failed_attempts = j.value("failed_attempts", std::vector<std::vector<std::string>>{});
  r.notes = j.value("notes", std::vector<std::string>{});
  r.pass = j.at("pass").get<bool>();
  return r;
}

inline Json to_json(const SuiteReport& s) {
  Json j;
  j["version"] = kReportVersion;
  j["master_seed"] = s.master_seed;
  j["timestamp"] = s.timestamp;
  j["config"] = s.config;
  Json tests = Json::array();
  for (const auto& t : s.tests) {
    tests.push_back(to_json(t));
  }
  j["tests"] = tests;
  j["suite_verdict"] = {{"pass", s.verdict.pass},
                        {"first_attempt_failures", s.verdict.first_attempt_failures},
                        {"red_tests", s.verdict.red_tests}};
  return j;
}

inline SuiteReport suite_report_from_json(const Json& j) {
  SuiteReport s;
  s.master_seed = j.at("master_seed").get<std::uint64_t>();
  s.timestamp = j.at("timestamp").get<std::string>();
  s.config = j.value("config", Json::object());
  for (const auto& t : j.at("tests")) {
    s.tests.push_back(test_report_from_json(t));
  }
  const auto& v = j.at("suite_verdict");
  s.verdict.pass = v.at("pass").get<bool>();
  s.verdict.first_attempt_failures = v.value("first_attempt_failures", std::size_t{0});
  s.verdict.red_tests = v.value("red_tests", std::vector<std::string>{});
  return s;
}

/// Structural check of a stored report; returns one message per problem.
inline std::vector<std::string> validate_report(const Json& j) {
  std::vector<std::string> errors;
  auto require = [&](const Json& obj, const char* key, auto predicate, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) {
      errors.push_back(where + ": missing '" + key + "'");
      return false;
    }
    if (!predicate(obj.at(key))) {
      errors.push_back(where + ": '" + key + "' has the wrong type");
      return false;
    }
    return true;
  };
  const auto is_string = [](const Json& v) { return v.is_string(); };
  const auto is_bool = [](const Json& v) { return v.is_boolean(); };
  const auto is_uint = [](const Json& v) { return v.is_number_unsigned(); };
  const auto is_number = [](const Json& v) { return v.is_number(); };
  const auto is_number_or_null = [](const Json& v) { return v.is_number() || v.is_null(); };
  const auto is_array = [](const Json& v) { return v.is_array(); };
  const auto is_object = [](const Json& v) { return v.is_object(); };

  if (!j.is_object()) {
    return {"report: top level must be an object"};
  }
  require(j, "version", is_string, "report");
  require(j, "master_seed", is_uint, "report");
  require(j, "timestamp", is_string, "report");
  if (require(j, "suite_verdict", is_object, "report")) {
    require(j["suite_verdict"], "pass", is_bool, "suite_verdict");
  }
  if (!require(j, "tests", is_array, "report")) {
    return errors;
  }
  for (std::size_t i = 0; i < j["tests"].size(); ++i) {
    const auto& t = j["tests"][i];
    const std::string where = "tests[" + std::to_string(i) + "]";
    require(t, "test_name", is_string, where);
    require(t, "anchor", is_string, where);
    require(t, "parameters", is_object, where);
    require(t, "seed", is_uint, where);
    require(t, "attempt", is_uint, where);
    require(t, "budget_exclusions", is_uint, where);
    require(t, "runtime_seconds", is_number, where);
    require(t, "pass", is_bool, where);
    if (require(t, "estimates", is_array, where)) {
      for (const auto& e : t["estimates"]) {
        require(e, "label", is_string, where + ".estimates");
        require(e, "value", is_number_or_null, where + ".estimates");
        require(e, "std_error", is_number_or_null, where + ".estimates");
      }
    }
    if (require(t, "targets", is_array, where)) {
      for (const auto& e : t["targets"]) {
        require(e, "label", is_string, where + ".targets");
        require(e, "value", is_number_or_null, where + ".targets");
      }
    }
    if (!require(t, "verdicts", is_array, where)) {
      continue;
    }
    for (std::size_t k = 0; k < t["verdicts"].size(); ++k) {
      const auto& v = t["verdicts"][k];
      const std::string vw = where + ".verdicts[" + std::to_string(k) + "]";
      require(v, "check", is_string, vw);
      require(v, "kind", is_string, vw);
      require(v, "statistic", is_number_or_null, vw);
      require(v, "n", is_array, vw);
      require(v, "pass", is_bool, vw);
      const bool has_p = v.is_object() && v.contains("p_value");
      const bool has_z = v.is_object() && v.contains("z_score");
      if (has_p) {
        const auto& p = v["p_value"];
        if (!p.is_number() || p.get<double>() < 0.0 || p.get<double>() > 1.0) {
          errors.push_back(vw + ": 'p_value' must be a number in [0, 1]");
        }
      }
      if (has_z && !is_number_or_null(v["z_score"])) {
        errors.push_back(vw + ": 'z_score' has the wrong type");
      }
    }
  }
  return errors;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out << text;
  out.flush();
  if (!out) {
    throw IoError("failed writing '" + path.string() + "'");
  }
}

inline std::string dump_report(const SuiteReport& report) { return to_json(report).dump(2) + "\n"; }

inline void write_report(const SuiteReport& report, const std::filesystem::path& path) {
  write_text_file(path, dump_report(report));
}

inline SuiteReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "'");
  }
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
  const auto errors = validate_report(j);
  if (!errors.empty()) {
    throw IoError("'" + path.string() + "' is not a valid report: " + errors.front());
  }
  return suite_report_from_json(j);
}

namespace detail {

inline std::string format_number(double x) {
  if (std::isnan(x)) {
    return "nan";
  }
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 6);
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Human-readable summary; rendering a stored report reproduces the text
/// printed when it was produced (runtime excluded).
inline std::string render_summary(const SuiteReport& report) {
  std::ostringstream out;
  out << "master seed " << report.master_seed << "\n";
  for (const auto& t : report.tests) {
    std::size_t passed = 0;
    for (const auto& v : t.verdicts) {
      passed += v.pass ? 1 : 0;
    }
    out << (t.pass ? "PASS " : "FAIL ") << t.test_name << "  [" << t.anchor << "]  " << passed
        << "/" << t.verdicts.size() << " checks";
    if (t.attempt > 0) {
      out << ", attempt " << t.attempt + 1;
    }
    if (t.budget_exclusions > 0) {
      out << ", " << t.budget_exclusions << " budget exclusions";
    }
    out << "\n";
    for (const auto& v : t.verdicts) {
      if (v.pass == !t.negative_control) {
        continue;
      }
      out << "    " << (v.pass ? "pass " : "fail ") << v.check << ": " << v.kind << " statistic "
          << detail::format_number(v.statistic);
      if (!std::isnan(v.p_value)) {
        out << ", p " << detail::format_number(v.p_value);
      }
      if (!std::isnan(v.z_score)) {
        // JSON keeps no sign for an infinite z, so neither does the summary.
        out << ", z " << (std::isfinite(v.z_score) ? detail::format_number(v.z_score) : "unbounded");
      }
      out << "\n";
    }
  }
  out << "suite: " << (report.verdict.pass ? "PASS" : "FAIL");
  if (!report.verdict.red_tests.empty()) {
    out << " (red:";
    for (const auto& name : report.verdict.red_tests) {
      out << " " << name;
    }
    out << ")";
  }
  out << "\n";
  return out.str();
}

/// Writes one CSV: a header row, then one replicate per row. Columns shorter
/// than the longest one leave blank cells.
inline void write_csv(const SampleDump& dump, const std::filesystem::path& path) {
  std::string text;
  for (std::size_t c = 0; c < dump.columns.size(); ++c) {
    text += (c ? "," : "") + dump.columns[c];
  }
  text += "\n";
  std::size_t rows = 0;
  for (const auto& col : dump.data) {
    rows = std::max(rows, col.size());
  }
  char buf[64];
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < dump.data.size(); ++c) {
      if (c) {
        text += ',';
      }
      if (r < dump.data[c].size()) {
        const auto res = std::to_chars(buf, buf + sizeof buf, dump.data[c][r]);
        text.append(buf, res.ptr);
      }
    }
    text += "\n";
  }
  write_text_file(path, text);
}

inline void write_sample_dumps(const TestReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  }
  if (!report.samples.empty()) {
    write_csv(report.samples, dir / (report.test_name + ".csv"));
  }
}

}  // namespace bougerol
