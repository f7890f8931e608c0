// mems4: continuation, fold location, limit profile, time evolution and
// self-validation for the radial fourth-order MEMS model.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "mems4/cli.hpp"
#include "mems4/io.hpp"

namespace {

using mems4::cli::ConfigError;
using mems4::cli::RunConfig;

// The config file is applied before flag parsing so that flags override it.
void preload_config(int argc, char** argv, RunConfig& cfg) {
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    std::string path;
    if (a == "--config" && i + 1 < argc)
      path = argv[i + 1];
    else if (a.rfind("--config=", 0) == 0)
      path = a.substr(9);
    if (path.empty()) continue;
    std::string text;
    try {
      text = mems4::io::read_text(path);
    } catch (const mems4::Error&) {
      throw ConfigError("cannot read config file '" + path + "'");
    }
    mems4::cli::apply_config_text(cfg, text);
  }
}

struct Job {
  RunConfig cfg;
  std::string label;
  std::ostringstream out;
  std::ostringstream err;
  int code = 0;
};

int run_sweep(const RunConfig& base, const std::string& spec) {
  const auto sweep = mems4::cli::parse_sweep(spec);
  std::vector<Job> jobs(sweep.values.size());
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    jobs[k].cfg = base;
    mems4::cli::set_key(jobs[k].cfg, sweep.key, sweep.values[k]);
    jobs[k].label = sweep.key + "_" + sweep.values[k];
    jobs[k].cfg.output_dir = (std::filesystem::path(base.output_dir) / jobs[k].label).string();
  }
  std::vector<std::size_t> order(jobs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (base.seed != 0) std::shuffle(order.begin(), order.end(), std::mt19937_64(base.seed));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < order.size();) {
      Job& j = jobs[order[i]];
      j.code = mems4::cli::run_command(j.cfg, j.out, j.err);
    }
  };
  const std::size_t nthreads =
      std::min<std::size_t>(jobs.size(), std::max(1u, std::thread::hardware_concurrency()));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  int code = 0;
  for (const auto& j : jobs) {
    std::cout << "== " << j.label << " (exit " << j.code << ")\n" << j.out.str();
    std::cerr << j.err.str();
    code = std::max(code, j.code);
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  try {
    preload_config(argc, argv, cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return mems4::cli::kConfigError;
  }

  CLI::App app{"Radial fourth-order MEMS model: branches, folds, limit profile and dynamics", "mems4"};
  std::string command = to_string(cfg.command);
  std::string config_path;
  std::string sweep;
  app.add_option("command", command, "continue | lambda-star | endpoint | evolve | validate")
      ->check(CLI::IsMember({"continue", "lambda-star", "endpoint", "evolve", "validate"}));
  app.add_option("--config", config_path, "key = value file, applied before the flags");
  app.add_option("--d", cfg.d, "dimension")->check(CLI::IsMember({1, 2}));
  app.add_option("--B", cfg.B, "bending coefficient");
  app.add_option("--T", cfg.T, "stretching coefficient");
  app.add_option("--lambda", cfg.lambda, "voltage parameter (evolve)");
  app.add_option("--gamma", cfg.gamma, "inertia, 0 for the parabolic model (evolve)");
  app.add_option("--n", cfg.n, "number of grid cells");
  app.add_option("--horizon", cfg.horizon, "final time (evolve)");
  app.add_option("--out", cfg.output_dir, "output directory");
  app.add_option("--sweep", sweep, "key=a,b,c: one run per value in out/key_value");
  app.add_option("--seed", cfg.seed, "shuffles the sweep execution order");
  app.add_option("--lambda-stop", cfg.lambda_stop, "continuation stops below this lambda");
  app.add_option("--eps-min", cfg.eps_min, "continuation stops when 1 + u(0) falls below this");
  app.add_option("--ds-min", cfg.ds_min, "smallest arclength step");
  app.add_option("--ds-max", cfg.ds_max, "largest arclength step");
  app.add_option("--newton-tol", cfg.newton_tol, "Newton step tolerance");
  app.add_option("--eig-tol", cfg.eig_tol, "eigenvalue tolerance");
  app.add_option("--fold-tol", cfg.fold_tol, "fold refinement tolerance");
  app.add_option("--eps-td", cfg.eps_td, "touchdown when min u <= -1 + eps_td");
  app.add_option("--init", cfg.init, "initial data: zero | phi1:<depth> | file:<csv>");
  app.add_option("--branch", cfg.branch_file, "endpoint: r,u profile to compare with omega");
  app.add_flag("--compare", cfg.compare, "endpoint: continue with both stopping thresholds at 1x and 0.1x");
  app.add_flag("--refine", cfg.refine, "lambda-star: repeat at 2n");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return mems4::cli::kConfigError;
  }

  if (app.count("command") == 0 && config_path.empty()) {
    std::cerr << "config error: no command given\n" << app.help();
    return mems4::cli::kConfigError;
  }
  try {
    cfg.command = mems4::cli::parse_command(command);
    if (!sweep.empty()) return run_sweep(cfg, sweep);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return mems4::cli::kConfigError;
  }
  return mems4::cli::run_command(cfg, std::cout, std::cerr);
}
