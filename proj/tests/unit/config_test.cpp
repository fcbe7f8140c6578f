#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kgflock/config.hpp"
#include "kgflock/error.hpp"
#include "kgflock/run.hpp"

using namespace kgflock;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class RunDir : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("kgflock_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  RunConfig config(const std::string& text, const std::string& out = "out") {
    RunConfig c = parse_config(text + "output_dir = " + (root_ / out).string() + "\n", root_);
    return c;
  }
  fs::path root_;
};

std::size_t parse_error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST(Config, MinimalDefaults) {
  const RunConfig c = parse_config("alpha = 1\nbeta = 1\nM = 1\n");
  EXPECT_EQ(c.n, 1);
  EXPECT_EQ(c.D, 8);
  EXPECT_EQ(c.mission, MissionChoice::Thm1);
  EXPECT_DOUBLE_EQ(make_params(c).gamma(), 2.0);
  EXPECT_DOUBLE_EQ(resolved_epsilon(c), 0.5 * epsilon_bound(make_lattice(c), make_params(c)));
}

TEST(Config, BoundBelowCubicPeakNamesBothSides) {
  const RunConfig c = parse_config("alpha = 1\nbeta = 1\nM = 0.3\n");
  try {
    validate_config(c);
    FAIL() << "expected ParameterError";
  } catch (const ParameterError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("0.3"), std::string::npos) << what;
    EXPECT_NE(what.find("0.3849"), std::string::npos) << what;
  }
}

TEST(Config, DuplicateAndUnknownKeysReportLine) {
  EXPECT_EQ(parse_error_line("alpha = 1\nbeta = 1\n# note\nalpha = 2\n"), 4u);
  EXPECT_EQ(parse_error_line("alpha = 1\nspeed = 3\n"), 2u);
  EXPECT_EQ(parse_error_line("alpha 1\n"), 1u);
  EXPECT_EQ(parse_error_line("mission = thm9\n"), 1u);
}

TEST(Config, CommentsAndExplicitFields) {
  const RunConfig c = parse_config(
      "n = 1  # ring\nD = 3\nalpha = 1\nbeta = 1\nM = 1\ninitial = explicit\nx0 = 0.1, 0.2 0.3\nv0 = 0 0 -1\n");
  const State s = make_initial(c, make_lattice(c), make_params(c));
  EXPECT_EQ(s.x, (NodeField{0.1, 0.2, 0.3}));
  EXPECT_EQ(s.v, (NodeField{0.0, 0.0, -1.0}));
}

TEST(Config, WrongFieldLengthRejected) {
  const RunConfig c =
      parse_config("D = 3\nalpha = 1\nbeta = 1\nM = 1\ninitial = explicit\nx0 = 0 0\nv0 = 0 0 0\n");
  EXPECT_THROW(validate_config(c), Error);
}

TEST(Config, MissingFilesRejected) {
  const RunConfig c = parse_config("alpha = 1\nbeta = 1\nM = 1\ninitial = file\ninitial_file = /nonexistent/init.txt\n");
  EXPECT_THROW(validate_config(c), ParameterError);
  EXPECT_THROW(load_config("/nonexistent/run.cfg"), ParseError);
}

TEST(Config, RandomInitialIsSeeded) {
  const RunConfig a = parse_config("alpha = 1\nbeta = 1\nM = 1\nseed = 4\n");
  const RunConfig b = parse_config("alpha = 1\nbeta = 1\nM = 1\nseed = 5\n");
  const Lattice lat = make_lattice(a);
  const Params p = make_params(a);
  EXPECT_EQ(make_initial(a, lat, p).x, make_initial(a, lat, p).x);
  EXPECT_NE(make_initial(a, lat, p).x, make_initial(b, lat, p).x);
  for (double x : make_initial(a, lat, p).x) EXPECT_LE(std::abs(x), 2.0);
}

TEST(Config, SinusoidTargetHalfBound) {
  const Lattice lat(2, 4);
  EXPECT_NEAR(max_abs_laplacian(lat, sinusoid_target(lat, 1.0)), 0.5, 1e-14);
}

TEST_F(RunDir, FlockMissionSucceeds) {
  std::ostringstream log;
  EXPECT_EQ(run(config("alpha = 1\nbeta = 1\nM = 1\nseed = 42\n"), log, true), kExitOk) << log.str();
  for (const char* f : {"trajectory.csv", "summary.json", "certificates.txt", "plot.gp"})
    EXPECT_TRUE(fs::exists(root_ / "out" / f)) << f;
  const std::string summary = slurp(root_ / "out" / "summary.json");
  EXPECT_NE(summary.find("\"exit_code\": 0"), std::string::npos);
}

TEST_F(RunDir, BoundAtCubicPeakIsConfigError) {
  std::ostringstream log;
  RunConfig c = config("alpha = 1\nbeta = 1\nM = 1\n");
  c.M = 2.0 / (3.0 * std::sqrt(3.0));
  EXPECT_EQ(run(c, log, true), kExitConfigError);
  EXPECT_NE(log.str().find("error"), std::string::npos);
}

TEST_F(RunDir, MovingTargetFromTargetFlockSucceeds) {
  const Lattice lat(1, 8);
  const NodeField shape = sinusoid_target(lat, 1.0);
  std::ostringstream x0, v0;
  x0.precision(17);
  for (double x : shape) x0 << x << " ";
  for (std::size_t l = 0; l < 8; ++l) v0 << "1 ";
  std::ostringstream log;
  const RunConfig c = config("alpha = 1\nbeta = 1\nM = 1\nmission = thm2\ninitial = explicit\nx0 = " + x0.str() +
                             "\nv0 = " + v0.str() + "\n");
  EXPECT_EQ(run(c, log, true), kExitOk) << log.str();
}

TEST_F(RunDir, RunsAreByteIdentical) {
  std::ostringstream log;
  const std::string text = "alpha = 1\nbeta = 1\nM = 1\nmission = thm2\nseed = 9\n";
  ASSERT_EQ(run(config(text, "a"), log, true), kExitOk);
  ASSERT_EQ(run(config(text, "b"), log, true), kExitOk);
  EXPECT_EQ(slurp(root_ / "a" / "trajectory.csv"), slurp(root_ / "b" / "trajectory.csv"));
  EXPECT_EQ(slurp(root_ / "a" / "certificates.txt"), slurp(root_ / "b" / "certificates.txt"));
}

TEST_F(RunDir, CertifyReproducesRecordedReports) {
  std::ostringstream log;
  ASSERT_EQ(run(config("alpha = 1\nbeta = 1\nM = 1\nmission = thm3\nseed = 2\n"), log, true), kExitOk);
  std::ostringstream out;
  EXPECT_EQ(certify(root_ / "out", out), kExitOk) << out.str();
  EXPECT_NE(out.str().find("matches_recorded: yes"), std::string::npos) << out.str();
  EXPECT_EQ(certify(root_ / "missing", out), kExitConfigError);
}

TEST_F(RunDir, PlotScriptMarksSwitchTimes) {
  std::ostringstream log;
  ASSERT_EQ(run(config("alpha = 1\nbeta = 1\nM = 1\nmission = thm2\nseed = 1\n"), log, true), kExitOk);
  fs::remove(root_ / "out" / "plot.gp");
  const fs::path gp = emit_plots(root_ / "out");
  const std::string script = slurp(gp);
  EXPECT_NE(script.find("$traj << EOD"), std::string::npos);
  std::size_t arrows = 0;
  for (std::size_t pos = 0; (pos = script.find("set arrow", pos)) != std::string::npos; ++pos) ++arrows;
  EXPECT_GE(arrows, 5u);
  EXPECT_NE(script.find("pngcairo"), std::string::npos);
}

TEST_F(RunDir, SweepRunsEveryConfig) {
  for (int seed : {1, 2, 3}) {
    std::ofstream(root_ / ("s" + std::to_string(seed) + ".cfg"))
        << "alpha = 1\nbeta = 1\nM = 1\nD = 4\nseed = " << seed << "\n";
  }
  std::ostringstream log;
  const int code = sweep({root_ / "s1.cfg", root_ / "s2.cfg", root_ / "s3.cfg"}, root_ / "sweep",
                         {{"hold_time", "0.5"}}, log, true);
  EXPECT_EQ(code, kExitOk) << log.str();
  for (const char* stem : {"s1", "s2", "s3"}) EXPECT_TRUE(fs::exists(root_ / "sweep" / stem / "summary.json"));
}

TEST_F(RunDir, SingleNodeHjbRun) {
  std::ostringstream log;
  const RunConfig c = config("D = 1\nalpha = 1\nbeta = 1\nM = 1\nmission = hjb\ninitial = explicit\nx0 = 0\nv0 = 0\nhjb_resolution = 101\n");
  EXPECT_EQ(run_hjb(c, log, true), kExitOk) << log.str();
  EXPECT_TRUE(fs::exists(root_ / "out" / "value_field.txt"));
  EXPECT_TRUE(fs::exists(root_ / "out" / "value_slice.csv"));
  EXPECT_NE(slurp(root_ / "out" / "summary.json").find("oracle"), std::string::npos);
}
