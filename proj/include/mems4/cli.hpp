#pragma once

// Run configuration and the five commands of the mems4 tool. Each command
// writes its files under RunConfig::output_dir, reports to a stream and
// returns an exit status.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mems4/closed_form.hpp"
#include "mems4/error.hpp"
#include "mems4/evolution.hpp"
#include "mems4/io.hpp"
#include "mems4/model.hpp"
#include "mems4/radial.hpp"
#include "mems4/stationary.hpp"
#include "mems4/validate.hpp"

namespace mems4::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kSolverFailure = 3, kCheckFailure = 4 };

enum class Command { continue_branch, lambda_star, endpoint, evolve, validate };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::continue_branch: return "continue";
    case Command::lambda_star: return "lambda-star";
    case Command::endpoint: return "endpoint";
    case Command::evolve: return "evolve";
    case Command::validate: return "validate";
  }
  return "unknown";
}

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Command parse_command(std::string_view s) {
  for (Command c : {Command::continue_branch, Command::lambda_star, Command::endpoint, Command::evolve,
                    Command::validate})
    if (s == to_string(c)) return c;
  throw ConfigError("unknown command '" + std::string(s) + "'");
}

struct RunConfig {
  Command command = Command::validate;
  int d = 1;
  double B = 1.0;
  double T = 0.0;
  double lambda = 0.0;
  double gamma = 0.0;
  int n = 200;
  double newton_tol = 1e-10;
  double eig_tol = 1e-9;
  double fold_tol = 1e-12;
  double eps_td = 1e-3;
  double lambda_stop = 1e-3;
  double eps_min = 1e-3;
  double ds_min = 1e-6;
  double ds_max = 0.1;
  double horizon = 10.0;
  std::string output_dir = ".";
  std::uint64_t seed = 0;
  std::string init = "zero";  // zero | phi1:<depth> | file:<csv with r,u columns>
  std::string branch_file;    // endpoint: profile to compare against omega
  bool compare = false;       // endpoint: also continue at lambda_stop and lambda_stop / 10
  bool refine = false;        // lambda-star: repeat at 2n

  [[nodiscard]] ModelParams params() const { return {d, B, T, lambda, gamma}; }

  [[nodiscard]] ContinuationOptions continuation() const {
    ContinuationOptions o;
    o.lambda_stop = lambda_stop;
    o.eps_min = eps_min;
    o.ds_min = ds_min;
    o.ds_max = ds_max;
    o.ds_initial = std::min(o.ds_initial, ds_max);
    o.newton_tol = newton_tol;
    o.eigen.tol = eig_tol;
    return o;
  }

  void validate() const {
    if (d != 1 && d != 2) throw ConfigError("d must be 1 or 2");
    if (!(B > 0.0)) throw ConfigError("B must be positive");
    if (!(T >= 0.0)) throw ConfigError("T must be nonnegative");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be nonnegative");
    if (!(gamma >= 0.0)) throw ConfigError("gamma must be nonnegative");
    if (n < 8) throw ConfigError("n must be at least 8");
    const std::pair<const char*, double> positive[] = {
        {"newton_tol", newton_tol}, {"eig_tol", eig_tol},     {"fold_tol", fold_tol},
        {"eps_td", eps_td},         {"lambda_stop", lambda_stop}, {"eps_min", eps_min},
        {"ds_min", ds_min},         {"ds_max", ds_max},       {"horizon", horizon}};
    for (auto [name, v] : positive)
      if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
    if (ds_min > ds_max) throw ConfigError("ds_min exceeds ds_max");
    if (eps_td >= 1.0) throw ConfigError("eps_td must be below 1");
    if (eps_min >= 1.0) throw ConfigError("eps_min must be below 1");
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    return io::parse_double(v);
  } catch (const Error&) {
    throw ConfigError(key + ": not a number: '" + v + "'");
  }
}

inline long long to_integer(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw ConfigError(key + ": not an integer: '" + v + "'");
  return x;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError(key + ": not a boolean: '" + v + "'");
}

}  // namespace detail

/// Sets one field by its config-file name. Dashes and underscores are interchangeable.
inline void set_key(RunConfig& c, std::string key, const std::string& value) {
  std::replace(key.begin(), key.end(), '-', '_');
  using Setter = std::function<void(const std::string&)>;
  auto real = [&](double& f) { return Setter([&f, key](const std::string& v) { f = detail::to_double(key, v); }); };
  const std::map<std::string, Setter> setters = {
      {"command", [&](const std::string& v) { c.command = parse_command(v); }},
      {"d", [&](const std::string& v) { c.d = static_cast<int>(detail::to_integer(key, v)); }},
      {"B", real(c.B)},
      {"T", real(c.T)},
      {"lambda", real(c.lambda)},
      {"gamma", real(c.gamma)},
      {"n", [&](const std::string& v) { c.n = static_cast<int>(detail::to_integer(key, v)); }},
      {"newton_tol", real(c.newton_tol)},
      {"eig_tol", real(c.eig_tol)},
      {"fold_tol", real(c.fold_tol)},
      {"eps_td", real(c.eps_td)},
      {"lambda_stop", real(c.lambda_stop)},
      {"eps_min", real(c.eps_min)},
      {"ds_min", real(c.ds_min)},
      {"ds_max", real(c.ds_max)},
      {"horizon", real(c.horizon)},
      {"out", [&](const std::string& v) { c.output_dir = v; }},
      {"seed", [&](const std::string& v) { c.seed = static_cast<std::uint64_t>(detail::to_integer(key, v)); }},
      {"init", [&](const std::string& v) { c.init = v; }},
      {"branch", [&](const std::string& v) { c.branch_file = v; }},
      {"compare", [&](const std::string& v) { c.compare = detail::to_bool(key, v); }},
      {"refine", [&](const std::string& v) { c.refine = detail::to_bool(key, v); }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw ConfigError("unknown key '" + key + "'");
  it->second(value);
}

/// Applies "key = value" lines; '#' starts a comment.
inline void apply_config_text(RunConfig& c, std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(std::string_view(t).substr(0, eq));
    const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    set_key(c, key, value);
  }
}

struct SweepSpec {
  std::string key;
  std::vector<std::string> values;
};

/// "key=a,b,c"
inline SweepSpec parse_sweep(std::string_view spec) {
  const auto eq = spec.find('=');
  if (eq == std::string_view::npos) throw ConfigError("sweep must look like key=a,b,c");
  SweepSpec s;
  s.key = detail::trim(spec.substr(0, eq));
  std::string_view rest = spec.substr(eq + 1);
  while (true) {
    const auto comma = rest.find(',');
    std::string v = detail::trim(rest.substr(0, comma));
    if (v.empty()) throw ConfigError("empty value in sweep");
    s.values.push_back(std::move(v));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  if (s.key.empty()) throw ConfigError("sweep key is empty");
  RunConfig probe;
  for (const auto& v : s.values) set_key(probe, s.key, v);
  return s;
}

// ---------------------------------------------------------------------------
// Commands

namespace detail {

inline std::string out_path(const RunConfig& c, const std::string& name) {
  return (std::filesystem::path(c.output_dir) / name).string();
}

inline void ensure_output_dir(const RunConfig& c) {
  std::error_code ec;
  std::filesystem::create_directories(c.output_dir, ec);
  if (ec || !std::filesystem::is_directory(c.output_dir))
    throw ConfigError("cannot create output directory '" + c.output_dir + "'");
}

inline std::string num(double x) { return io::format_double(x); }

inline Branch run_branch(const RunConfig& c, int n, const ContinuationOptions& o) {
  Branch br = continue_branch(c.params(), build_grid(n, c.d), o);
  FoldOptions f;
  f.tol = c.fold_tol;
  attach_fold(br, f, o);
  return br;
}

inline void write_profile(const std::string& path, const RadialField& u) {
  io::CsvTable t;
  t.header = {"r", "u"};
  for (std::size_t i = 0; i < u.size(); ++i) t.add_row({u.grid()->r(static_cast<int>(i)), u[i]});
  io::write_text(path, t.render());
}

/// Reads an r,u profile and interpolates it linearly onto the grid.
inline RadialField read_profile(const std::string& path, const GridPtr& grid) {
  const auto t = io::CsvTable::parse(io::read_text(path));
  const std::size_t jr = t.column("r");
  const std::size_t ju = t.column("u");
  require(t.rows.size() >= 2, Errc::invalid_argument, "profile needs at least two rows");
  std::vector<double> r, u;
  for (const auto& row : t.rows) {
    r.push_back(row[jr]);
    u.push_back(row[ju]);
  }
  for (std::size_t i = 1; i < r.size(); ++i)
    require(r[i] > r[i - 1], Errc::invalid_argument, "profile radii must increase");
  return RadialField::sample(grid, [&](double x) {
    if (x <= r.front()) return u.front();
    if (x >= r.back()) return u.back();
    const auto k = static_cast<std::size_t>(std::upper_bound(r.begin(), r.end(), x) - r.begin());
    const double th = (x - r[k - 1]) / (r[k] - r[k - 1]);
    return (1.0 - th) * u[k - 1] + th * u[k];
  });
}

}  // namespace detail

inline int cmd_continue(const RunConfig& c, std::ostream& out) {
  const Branch br = detail::run_branch(c, c.n, c.continuation());
  double lmax = 0.0;
  for (const auto& p : br.points) lmax = std::max(lmax, p.lambda);
  if (c.lambda_stop >= lmax)
    throw ConfigError("lambda_stop " + detail::num(c.lambda_stop) + " is not below the largest lambda reached (" +
                      detail::num(lmax) + "): nothing to continue");

  io::CsvTable t;
  t.header = {"s", "lambda", "u_center", "mu1", "newton_iters", "cert_flags"};
  io::Series diagram{"branch", {}, {}, "#1f77b4"};
  for (const auto& p : br.points) {
    t.add_row({p.s, p.lambda, p.u.center(), p.mu1, static_cast<double>(p.newton_iters),
               static_cast<double>(p.certificates.flags())});
    diagram.x.push_back(p.lambda);
    diagram.y.push_back(std::abs(p.u.center()));
  }
  io::write_text(detail::out_path(c, "branch.csv"), t.render());
  io::SvgPlot plot{"Bifurcation diagram, d = " + std::to_string(c.d), "lambda", "|u(0)|", {diagram}};
  if (br.fold) plot.series.push_back({"fold", {br.fold->lambda}, {std::abs(br.fold->u.center())}, "#d62728"});
  io::write_text(detail::out_path(c, "branch.svg"), plot.render());
  detail::write_profile(detail::out_path(c, "end_profile.csv"), br.points.back().u);

  out << "m1 " << detail::num(br.m1) << "\n";
  out << "points " << br.points.size() << " (pseudo-arclength from " << br.pac_start << ")\n";
  out << "rejected_certificates " << br.rejected_certificates << "\n";
  if (br.fold)
    out << "fold lambda* " << detail::num(br.fold->lambda) << " u(0) " << detail::num(br.fold->u.center()) << "\n";
  else
    out << "fold none\n";
  if (br.endpoint_gap) out << "endpoint_gap " << detail::num(*br.endpoint_gap) << "\n";
  out << "status " << (br.status == BranchStatus::completed ? "completed" : "stalled") << " (" << br.stop_reason
      << ")\n";
  return br.status == BranchStatus::completed ? kOk : kSolverFailure;
}

inline int cmd_lambda_star(const RunConfig& c, std::ostream& out) {
  auto o = c.continuation();
  o.compare_endpoint = false;
  io::CsvTable t;
  t.header = {"n", "m1", "lambda_star", "u_center", "mu1", "curvature"};
  std::vector<double> stars;
  bool ok = true;
  for (int n : c.refine ? std::vector<int>{c.n, 2 * c.n} : std::vector<int>{c.n}) {
    const Branch br = detail::run_branch(c, n, o);
    if (!br.fold) throw Error(Errc::no_fold, "no fold found at n = " + std::to_string(n));
    const FoldRecord& f = *br.fold;
    t.add_row({static_cast<double>(n), br.m1, f.lambda, f.u.center(), f.mu1, f.curvature});
    stars.push_back(f.lambda);
    const bool below = f.lambda < br.m1;
    const bool concave = f.curvature < 0.0;
    ok = ok && below && concave;
    out << "n " << n << "\n";
    out << "  lambda* " << detail::num(f.lambda) << "\n";
    out << "  u(0) " << detail::num(f.u.center()) << "\n";
    out << "  mu1 " << detail::num(f.mu1) << " (relative to m1 " << detail::num(f.mu1 / br.m1) << ")\n";
    out << "  curvature " << detail::num(f.curvature) << (concave ? " negative" : " NOT negative") << "\n";
    out << "  lambda* < m1 " << (below ? "holds" : "FAILS") << " (m1 " << detail::num(br.m1) << ")\n";
  }
  if (stars.size() == 2) {
    const double rel = std::abs(stars[1] - stars[0]) / stars[1];
    const bool close = rel <= 0.01;
    ok = ok && close;
    out << "refinement delta " << detail::num(stars[1] - stars[0]) << " relative " << detail::num(rel)
        << (close ? " (within 1%)" : " (EXCEEDS 1%)") << "\n";
  }
  io::write_text(detail::out_path(c, "fold.csv"), t.render());
  return ok ? kOk : kCheckFailure;
}

inline int cmd_endpoint(const RunConfig& c, std::ostream& out) {
  const OmegaProfile w(c.d, c.B, c.T);
  io::CsvTable t;
  t.header = {"r", "omega"};
  io::Series s{"omega", {}, {}, "#1f77b4"};
  for (int i = 0; i <= 1000; ++i) {
    const double r = i / 1000.0;
    const double v = w.value(r);
    t.add_row({r, v});
    s.x.push_back(r);
    s.y.push_back(v);
  }
  io::write_text(detail::out_path(c, "omega.csv"), t.render());
  std::ostringstream title;
  title << "Limit profile omega, d = " << c.d << ", B = " << c.B << ", T = " << c.T;
  io::write_text(detail::out_path(c, "omega.svg"), io::SvgPlot{title.str(), "r", "omega", {s}}.render());

  const OmegaChecks chk = check_invariants(w);
  const bool inv = chk.pass(1e-10);
  out << "basis " << to_string(w.basis()) << "\n";
  out << "omega(0) " << detail::num(w.value(0.0)) << ", omega(1) " << detail::num(w.value(1.0)) << ", omega'(1) "
      << detail::num(w.derivative(1.0)) << "\n";
  out << "invariants " << (inv ? "pass" : "FAIL") << " (boundary defect " << detail::num(chk.boundary_defect)
      << ", min interior " << detail::num(chk.min_interior) << ", max decrease " << detail::num(chk.max_decrease)
      << ")\n";
  bool ok = inv;
  if (!c.branch_file.empty()) {
    const auto u = detail::read_profile(c.branch_file, build_grid(c.n, c.d));
    out << "gap to " << c.branch_file << " " << detail::num(sup_distance(u, w.sample(u.grid()))) << "\n";
  }
  if (c.compare) {
    double prev = INFINITY;
    for (double f : {1.0, 0.1}) {
      auto o = c.continuation();
      o.lambda_stop *= f;
      o.eps_min *= f;
      const Branch br = continue_branch(c.params(), build_grid(c.n, c.d), o);
      if (!br.endpoint_gap) throw Error(Errc::stall, "continuation stalled: " + br.stop_reason);
      out << "lambda_stop " << detail::num(o.lambda_stop) << " eps_min " << detail::num(o.eps_min) << " gap "
          << detail::num(*br.endpoint_gap) << "\n";
      if (f < 1.0) {
        const bool shrinks = *br.endpoint_gap < prev;
        ok = ok && shrinks;
        out << "gap " << (shrinks ? "decreases" : "does NOT decrease") << "\n";
      }
      prev = *br.endpoint_gap;
    }
  }
  return ok ? kOk : kCheckFailure;
}

inline int cmd_evolve(const RunConfig& c, std::ostream& out) {
  const GridPtr grid = build_grid(c.n, c.d);
  const ModelParams p = c.params();

  // Bound data: lambda* and phi* come from the branch when its fold is found.
  auto o = c.continuation();
  o.compare_endpoint = false;
  BoundData bd;
  std::optional<double> lstar;
  try {
    Branch br = continue_branch(p, grid, o);
    FoldOptions f;
    f.tol = c.fold_tol;
    attach_fold(br, f, o);
    bd = bound_data(br);
    lstar = br.fold->lambda;
  } catch (const Error& e) {
    out << "note: no fold data (" << e.what() << "); sharp bound unavailable\n";
    bd = bound_data(grid, c.B, c.T);
  }

  RadialField u0(grid);
  if (c.init == "zero") {
  } else if (c.init.rfind("phi1:", 0) == 0) {
    const double depth = detail::to_double("init", c.init.substr(5));
    if (!(depth >= 0.0 && depth < 1.0)) throw ConfigError("init phi1 depth must lie in [0, 1)");
    const double top = bd.phi1.center();
    for (std::size_t i = 0; i < u0.size(); ++i) u0[i] = -depth * bd.phi1[i] / top;
  } else if (c.init.rfind("file:", 0) == 0) {
    u0 = detail::read_profile(c.init.substr(5), grid);
  } else {
    throw ConfigError("init must be zero, phi1:<depth> or file:<path>");
  }
  std::optional<RadialField> u1;
  if (p.gamma > 0.0) u1 = RadialField(grid);

  EvolutionOptions eo;
  eo.eps_td = c.eps_td;
  const EvolutionTrace tr = run(p, u0, u1, c.horizon, bd, eo);

  io::CsvTable t;
  t.header = {"t", "min_u", "N", "M", "E", "dt"};
  io::Series s{"min u", {}, {}, "#1f77b4"};
  for (const auto& x : tr.samples) {
    t.add_row({x.t, x.min_u, x.N, x.M, x.E, x.dt});
    s.x.push_back(x.t);
    s.y.push_back(x.min_u);
  }
  io::write_text(detail::out_path(c, "trace.csv"), t.render());
  io::write_text(detail::out_path(c, "trace.svg"), io::SvgPlot{"Minimum deflection", "t", "min u", {s}}.render());

  bool ok = true;
  out << "m1 " << detail::num(bd.m1);
  if (lstar) out << ", lambda* " << detail::num(*lstar);
  out << ", 4 m1 / 27 " << detail::num(touchdown_threshold(bd.m1)) << "\n";
  out << "verdict " << to_string(tr.verdict);
  if (tr.verdict == Verdict::touched_down)
    out << " t_td in [" << detail::num(tr.t_td_lo) << ", " << detail::num(tr.t_td_hi) << "]";
  out << "\n";
  auto report = [&](const char* name, const std::optional<double>& bound) {
    if (!bound) {
      out << name << " bound n/a\n";
      return;
    }
    out << name << " bound " << detail::num(*bound);
    if (tr.verdict == Verdict::touched_down) {
      const bool held = tr.t_td_lo <= *bound;
      ok = ok && held;
      out << (held ? " respected" : " VIOLATED");
    } else {
      const bool held = tr.samples.back().t < *bound;
      ok = ok && held;
      out << (held ? " (horizon ends before it)" : " VIOLATED: no touchdown by the bound");
    }
    out << "\n";
  };
  report("general", tr.bounds.general);
  report("sharp", tr.bounds.sharp);
  if (tr.bounds.general && p.gamma == 0.0) {
    const double rate = tr.max_dN_rate();
    const bool held = rate <= -tr.bounds.chi_min + 1e-3;
    ok = ok && held;
    out << "max dN/dt " << detail::num(rate) << " vs -chi " << detail::num(-tr.bounds.chi_min)
        << (held ? " respected" : " VIOLATED") << "\n";
  }
  if (p.gamma > 0.0)
    out << "energy drift " << detail::num(tr.energy_drift()) << " of |E(0)| "
        << detail::num(std::abs(tr.samples.front().E)) << "\n";
  if (tr.verdict == Verdict::survived || tr.verdict == Verdict::small_data_global) {
    try {
      const auto st = newton_solve(tr.final_state.u, p.lambda, assemble_A(*grid, c.B, c.T));
      out << "sup distance to stationary solution " << detail::num(sup_distance(st.u, tr.final_state.u)) << "\n";
    } catch (const Error&) {
      out << "no stationary solution near the final state\n";
    }
  }
  if (!tr.note.empty()) out << "note " << tr.note << "\n";
  if (tr.verdict == Verdict::inconclusive) return kSolverFailure;
  return ok ? kOk : kCheckFailure;
}

inline int cmd_validate(const RunConfig& c, std::ostream& out) {
  ValidationConfig v;
  v.d = c.d;
  v.B = c.B;
  v.T = c.T;
  v.n = c.n;
  const auto results = run_validation(v);
  bool ok = true;
  for (const auto& r : results) {
    out << to_string(r.status) << '\t' << r.suite << '.' << r.name << '\t' << r.detail << '\n';
    ok = ok && r.status != CheckStatus::fail;
  }
  return ok ? kOk : kCheckFailure;
}

/// Validates the configuration, runs the command and maps failures to exit codes.
inline int run_command(const RunConfig& c, std::ostream& out, std::ostream& err) {
  try {
    c.validate();
    if (c.command != Command::validate) detail::ensure_output_dir(c);
    switch (c.command) {
      case Command::continue_branch: return cmd_continue(c, out);
      case Command::lambda_star: return cmd_lambda_star(c, out);
      case Command::endpoint: return cmd_endpoint(c, out);
      case Command::evolve: return cmd_evolve(c, out);
      case Command::validate: return cmd_validate(c, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    if (e.code() == Errc::invalid_argument) {
      err << "config error: " << e.what() << '\n';
      return kConfigError;
    }
    err << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  }
  return kSolverFailure;
}

}  // namespace mems4::cli
