#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <string>

#include "mems4/cli.hpp"

using namespace mems4;
using namespace mems4::cli;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mems4_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunConfig config(Command c, const std::string& sub = "") const {
    RunConfig cfg;
    cfg.command = c;
    cfg.n = 60;
    cfg.output_dir = (dir_ / sub).string();
    return cfg;
  }

  int run(const RunConfig& cfg) {
    out_.str("");
    err_.str("");
    return run_command(cfg, out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

std::string first_line(const fs::path& p) {
  const std::string text = io::read_text(p.string());
  return text.substr(0, text.find('\n'));
}

}  // namespace

TEST(Config, FileSyntax) {
  RunConfig c;
  apply_config_text(c, "# comment\n d = 2\nT=50   # trailing\n\nlambda-stop = 1e-4\ncommand = evolve\nrefine=true\n");
  EXPECT_EQ(c.d, 2);
  EXPECT_EQ(c.T, 50.0);
  EXPECT_EQ(c.lambda_stop, 1e-4);
  EXPECT_EQ(c.command, Command::evolve);
  EXPECT_TRUE(c.refine);
  EXPECT_THROW(apply_config_text(c, "nokey\n"), ConfigError);
  EXPECT_THROW(apply_config_text(c, "colour = red\n"), ConfigError);
  EXPECT_THROW(apply_config_text(c, "n = 1.5\n"), ConfigError);
  EXPECT_THROW(apply_config_text(c, "B = fast\n"), ConfigError);
}

TEST(Config, Validation) {
  RunConfig c;
  EXPECT_NO_THROW(c.validate());
  c.n = 7;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.newton_tol = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.d = 3;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Config, SweepSpec) {
  const auto s = parse_sweep("T=0,1,50");
  EXPECT_EQ(s.key, "T");
  EXPECT_EQ(s.values, (std::vector<std::string>{"0", "1", "50"}));
  EXPECT_THROW((void)parse_sweep("T"), ConfigError);
  EXPECT_THROW((void)parse_sweep("T=1,,2"), ConfigError);
  EXPECT_THROW((void)parse_sweep("T=1,x"), ConfigError);
  EXPECT_THROW((void)parse_sweep("zz=1"), ConfigError);
}

TEST_F(Cli, ContinueWritesBranchFiles) {
  ASSERT_EQ(run(config(Command::continue_branch)), kOk) << err_.str();
  EXPECT_EQ(first_line(dir_ / "branch.csv"), "s,lambda,u_center,mu1,newton_iters,cert_flags");
  EXPECT_EQ(first_line(dir_ / "end_profile.csv"), "r,u");
  EXPECT_TRUE(fs::exists(dir_ / "branch.svg"));
  EXPECT_NE(out_.str().find("fold lambda*"), std::string::npos);
  const auto t = io::CsvTable::parse(io::read_text((dir_ / "branch.csv").string()));
  for (const auto& row : t.rows) EXPECT_EQ(row[t.column("cert_flags")], Certificates::kAll);
}

TEST_F(Cli, OutputsAreDeterministic) {
  ASSERT_EQ(run(config(Command::continue_branch, "a")), kOk);
  ASSERT_EQ(run(config(Command::continue_branch, "b")), kOk);
  EXPECT_EQ(io::read_text((dir_ / "a" / "branch.csv").string()), io::read_text((dir_ / "b" / "branch.csv").string()));
}

TEST_F(Cli, EmptyContinuationIsAConfigError) {
  auto cfg = config(Command::continue_branch);
  cfg.lambda_stop = 1e3;
  EXPECT_EQ(run(cfg), kConfigError);
  EXPECT_NE(err_.str().find("nothing to continue"), std::string::npos);
}

TEST_F(Cli, LambdaStarReport) {
  auto cfg = config(Command::lambda_star);
  cfg.refine = true;
  ASSERT_EQ(run(cfg), kOk) << out_.str() << err_.str();
  EXPECT_NE(out_.str().find("curvature"), std::string::npos);
  EXPECT_NE(out_.str().find("negative"), std::string::npos);
  EXPECT_NE(out_.str().find("lambda* < m1 holds"), std::string::npos);
  EXPECT_NE(out_.str().find("within 1%"), std::string::npos);
  const auto t = io::CsvTable::parse(io::read_text((dir_ / "fold.csv").string()));
  EXPECT_EQ(t.rows.size(), 2u);
}

TEST_F(Cli, EndpointSamplesOmega) {
  auto cfg = config(Command::endpoint);
  cfg.d = 2;
  cfg.T = 50.0;
  ASSERT_EQ(run(cfg), kOk) << err_.str();
  const auto t = io::CsvTable::parse(io::read_text((dir_ / "omega.csv").string()));
  ASSERT_EQ(t.rows.size(), 1001u);
  EXPECT_EQ(t.header, (std::vector<std::string>{"r", "omega"}));
  EXPECT_NEAR(t.rows.front()[1], -1.0, 1e-12);
  EXPECT_NEAR(t.rows.back()[1], 0.0, 1e-12);
  for (std::size_t i = 1; i < t.rows.size(); ++i) EXPECT_GE(t.rows[i][1], t.rows[i - 1][1] - 1e-12);
  EXPECT_TRUE(fs::exists(dir_ / "omega.svg"));
}

TEST_F(Cli, EndpointComparesBranchProfile) {
  ASSERT_EQ(run(config(Command::continue_branch, "br")), kOk);
  auto cfg = config(Command::endpoint);
  cfg.branch_file = (dir_ / "br" / "end_profile.csv").string();
  cfg.compare = true;
  ASSERT_EQ(run(cfg), kOk) << out_.str() << err_.str();
  EXPECT_NE(out_.str().find("gap to"), std::string::npos);
  EXPECT_NE(out_.str().find("gap decreases"), std::string::npos);
}

TEST_F(Cli, EvolveTouchdownWithinBounds) {
  auto cfg = config(Command::evolve);
  cfg.lambda = 5.0;  // above lambda* ~ 4.38 for the clamped beam
  ASSERT_EQ(run(cfg), kOk) << out_.str() << err_.str();
  EXPECT_NE(out_.str().find("verdict touched_down"), std::string::npos);
  EXPECT_NE(out_.str().find("sharp bound"), std::string::npos);
  EXPECT_EQ(out_.str().find("VIOLATED"), std::string::npos);
  EXPECT_EQ(first_line(dir_ / "trace.csv"), "t,min_u,N,M,E,dt");
}

TEST_F(Cli, EvolveSmallVoltageSurvives) {
  auto cfg = config(Command::evolve);
  cfg.lambda = 0.3;
  cfg.gamma = 1.0;
  cfg.horizon = 2.0;
  cfg.init = "phi1:0.05";
  ASSERT_EQ(run(cfg), kOk) << out_.str() << err_.str();
  EXPECT_NE(out_.str().find("verdict survived"), std::string::npos);
  EXPECT_NE(out_.str().find("energy drift"), std::string::npos);
}

TEST_F(Cli, EvolveRejectsBadInitialData) {
  auto cfg = config(Command::evolve);
  cfg.init = "phi1:1.5";
  EXPECT_EQ(run(cfg), kConfigError);
  cfg.init = "file:/nonexistent/profile.csv";
  EXPECT_EQ(run(cfg), kConfigError);
  cfg.init = "sine";
  EXPECT_EQ(run(cfg), kConfigError);
}

TEST_F(Cli, ValidateReportsEveryCheck) {
  auto cfg = config(Command::validate);
  cfg.n = 8;
  ASSERT_EQ(run(cfg), kOk) << out_.str();
  EXPECT_NE(out_.str().find("SKIP\tradial.convergence_order"), std::string::npos);
  EXPECT_EQ(out_.str().find("FAIL"), std::string::npos);
}

TEST(Validate, SignErrorInDerivativeIsCaught) {
  ValidationConfig v;
  v.g_prime_fn = [](double x) { return -g_prime(x); };
  bool mu1_failed = false;
  for (const auto& r : run_validation(v))
    if (r.suite == "eigen" && r.name == "mu1") mu1_failed = r.status == CheckStatus::fail;
  EXPECT_TRUE(mu1_failed);
}
