#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "bougerol/report.hpp"

using namespace bougerol;

namespace {

SuiteReport sample_suite() {
  SuiteReport suite;
  suite.master_seed = 42;
  suite.timestamp = "2026-01-01T00:00:00Z";
  suite.config = {{"alpha", 0.01}};
  TestReport r;
  r.test_name = "demo";
  r.anchor = "X =law Y";
  r.parameters = {{"n", 1000}, {"t", {0.5, 1.0}}};
  TestVerdict ks;
  ks.check = "ks_t=1";
  ks.kind = "ks_two_sample";
  ks.statistic = 0.0123456789012345;
  ks.p_value = 0.4;
  ks.n = {1000, 1000};
  ks.pass = true;
  r.add(ks);
  TestVerdict mean;
  mean.check = "mean";
  mean.kind = "mean_vs_target";
  mean.statistic = 1.0 / 3.0;
  mean.z_score = -std::numeric_limits<double>::infinity();
  mean.n = {1000};
  mean.pass = false;
  mean.note = "zero variance";
  r.add(mean);
  r.estimate("mean", 0.1 + 0.2, 1e-17);
  r.target("mean", 0.3);
  r.seed = 0xFFFFFFFFFFFFFFFFULL;
  r.runtime_seconds = 1.5;
  r.failed_attempts = {{"mean"}};
  r.attempt = 1;
  r.pass = false;
  suite.tests.push_back(r);
  suite.verdict = {false, 1, {"demo"}};
  return suite;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Report, RoundTripIsLossless) {
  const auto suite = sample_suite();
  const auto text = dump_report(suite);
  const auto back = suite_report_from_json(Json::parse(text));
  EXPECT_EQ(dump_report(back), text);
  ASSERT_EQ(back.tests.size(), 1U);
  const auto& v = back.tests[0].verdicts;
  EXPECT_EQ(v[0].statistic, 0.0123456789012345);
  EXPECT_EQ(v[1].statistic, 1.0 / 3.0);
  EXPECT_EQ(back.tests[0].estimates[0].value, 0.1 + 0.2);
  EXPECT_TRUE(std::isinf(v[1].z_score));
  EXPECT_TRUE(std::isnan(v[1].p_value));
  EXPECT_EQ(back.tests[0].seed, 0xFFFFFFFFFFFFFFFFULL);
}

TEST(Report, KeyOrderIsStable) {
  const auto text = dump_report(sample_suite());
  const auto pos = [&](const char* key) { return text.find(std::string("\"") + key + "\""); };
  EXPECT_LT(pos("version"), pos("master_seed"));
  EXPECT_LT(pos("master_seed"), pos("timestamp"));
  EXPECT_LT(pos("timestamp"), pos("config"));
  EXPECT_LT(pos("config"), pos("tests"));
  EXPECT_LT(pos("tests"), pos("suite_verdict"));
}

TEST(Report, EmptySuiteIsValid) {
  SuiteReport empty;
  empty.timestamp = "t";
  const auto j = Json::parse(dump_report(empty));
  EXPECT_TRUE(validate_report(j).empty());
  EXPECT_TRUE(j["tests"].is_array());
  EXPECT_TRUE(j["tests"].empty());
}

TEST(Report, FixtureAccepted) {
  const auto j = Json::parse(slurp(std::filesystem::path(BOUGEROL_FIXTURE_DIR) / "report_example.json"));
  const auto errors = validate_report(j);
  EXPECT_TRUE(errors.empty()) << (errors.empty() ? "" : errors.front());
  const auto suite = suite_report_from_json(j);
  EXPECT_FALSE(suite.tests.empty());
}

TEST(Report, MalformedDocumentsRejected) {
  auto j = Json::parse(dump_report(sample_suite()));
  j.erase("suite_verdict");
  EXPECT_FALSE(validate_report(j).empty());
  j = Json::parse(dump_report(sample_suite()));
  j["tests"][0]["verdicts"][0]["p_value"] = 1.5;
  EXPECT_FALSE(validate_report(j).empty());
  j = Json::parse(dump_report(sample_suite()));
  j["tests"][0]["verdicts"][0]["pass"] = "yes";
  EXPECT_FALSE(validate_report(j).empty());
  EXPECT_FALSE(validate_report(Json::array()).empty());
}

TEST(Report, ReadRejectsInvalidFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "bougerol_report_test";
  std::filesystem::create_directories(dir);
  write_text_file(dir / "bad.json", "{not json");
  EXPECT_THROW(read_report(dir / "bad.json"), IoError);
  write_text_file(dir / "partial.json", "{\"version\": \"1.0\"}");
  EXPECT_THROW(read_report(dir / "partial.json"), IoError);
  EXPECT_THROW(read_report(dir / "missing.json"), IoError);
  EXPECT_THROW(write_report(sample_suite(), dir / "no_such_dir" / "r.json"), IoError);
  std::filesystem::remove_all(dir);
}

TEST(Report, SummaryRerendersFromDisk) {
  const auto dir = std::filesystem::temp_directory_path() / "bougerol_summary_test";
  std::filesystem::create_directories(dir);
  const auto suite = sample_suite();
  write_report(suite, dir / "r.json");
  EXPECT_EQ(render_summary(read_report(dir / "r.json")), render_summary(suite));
  const auto text = render_summary(suite);
  EXPECT_NE(text.find("FAIL demo"), std::string::npos);
  EXPECT_NE(text.find("suite: FAIL (red: demo)"), std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST(Csv, HeaderAndLocaleFreeNumbers) {
  SampleDump dump;
  dump.add("sinh_Bt", {0.5, -1.25, 1e-20});
  dump.add("sinh_Lt", {2.0, 3.0});
  const auto dir = std::filesystem::temp_directory_path() / "bougerol_csv_test";
  std::filesystem::create_directories(dir);
  write_csv(dump, dir / "x.csv");
  EXPECT_EQ(slurp(dir / "x.csv"), "sinh_Bt,sinh_Lt\n0.5,2\n-1.25,3\n1e-20,\n");
  TestReport r;
  r.test_name = "demo";
  r.samples = dump;
  write_sample_dumps(r, dir / "dumps");
  EXPECT_TRUE(std::filesystem::exists(dir / "dumps" / "demo.csv"));
  std::filesystem::remove_all(dir);
}
