#include "levelset/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <limits>
#include <ostream>
#include <sstream>

#include "levelset/bench.hpp"
#include "levelset/checks.hpp"
#include "levelset/io.hpp"
#include "levelset/plot.hpp"
#include "levelset/teleport.hpp"

namespace levelset::cli {

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config;
  std::string out = "out";
  long long seed = -1;
  std::vector<std::string> overrides;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required) {
  auto* opt = cmd->add_option("--config", f.config, "Configuration file")->check(CLI::ExistingFile);
  if (config_required) opt->required();
  cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
  cmd->add_option("--seed", f.seed, "Overrides run.seed");
  cmd->add_option("--set", f.overrides, "Override a config key: key=value (repeatable)");
  cmd->add_flag("--quiet", f.quiet, "Suppress progress output");
}

Config load_config(const CommonFlags& f) {
  Config cfg = f.config.empty() ? Config{} : Config::load(f.config);
  for (const std::string& o : f.overrides) cfg.apply_override(o);
  if (f.seed >= 0) cfg.set("run.seed", std::to_string(f.seed));
  return cfg;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

template <class Fn>
std::string to_text(Fn&& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

int cmd_teleport(const CommonFlags& f, std::ostream& out) {
  const Config cfg = load_config(f);
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("run.seed", 0));
  const Problem prob = problem_from_config(cfg, cfg.get_string("objective.kind", "booth"), seed);
  const TeleportConfig tc = teleport_config_from(cfg);
  const TeleportResult res = solve_teleport(*prob.objective, prob.w0, tc);
  const std::string path = (fs::path(f.out) / "teleport_trace.csv").string();
  atomic_write(path, to_text([&](std::ostream& os) { write_teleport_trace_csv(os, res); }));
  if (!f.quiet) {
    out << "teleport: iterations=" << res.iterations << " converged=" << (res.converged ? "true" : "false")
        << " kkt_residual=" << fmt_real(res.kkt_residual) << " constraint_violation="
        << fmt_real(res.constraint_violation) << " lambda=" << fmt_real(res.lambda)
        << " grad_norm_gain=" << fmt_real(res.grad_norm_gain) << "\n";
    out << "x_plus:";
    for (Index i = 0; i < res.x_plus.size(); ++i) out << ' ' << fmt_real(res.x_plus[i]);
    out << "\nwrote " << path << "\n";
  }
  return kOk;
}

int cmd_run(const CommonFlags& f, std::ostream& out, std::ostream& err) {
  const Config cfg = load_config(f);
  const RunConfig rc = run_config_from(cfg);
  const Problem prob = problem_from_config(cfg, cfg.get_string("objective.kind", "booth"), rc.seed);
  const Method method = method_from_config(cfg, cfg.get_string("optimizer.method", "armijo"));
  if (method.rule.kind == StepKind::kFixed) {
    const double L = prob.objective->smoothness(prob.w0);
    if (method.rule.eta >= 2.0 / L) {
      err << "warning: fixed step " << fmt_real(method.rule.eta) << " >= 2/L = " << fmt_real(2.0 / L)
          << "; the descent-lemma step-size condition does not hold\n";
    }
  }
  const Trace trace =
      run(*prob.objective, prob.w0, method.rule, method.schedule_for(rc.max_iters), method.teleport_config, rc);
  const std::string path = (fs::path(f.out) / "trace.csv").string();
  atomic_write(path, to_text([&](std::ostream& os) { write_trace_csv(os, trace); }));
  if (trace.aborted) err << "warning: run aborted: " << trace.diagnostic << "\n";
  if (!f.quiet) {
    out << "run: iterations=" << (trace.records.empty() ? 0 : trace.records.back().k)
        << " f0=" << fmt_real(trace.records.front().f) << " final_f=" << fmt_real(trace.final_f())
        << " min_f=" << fmt_real(trace.min_f()) << "\nwrote " << path << "\n";
  }
  return kOk;
}

int cmd_suite(const CommonFlags& f, std::ostream& out, std::ostream& err) {
  const Config cfg = load_config(f);
  SuiteSpec spec = suite_from_config(cfg);
  spec.options.trace_dir = (fs::path(f.out) / "traces").string();
  const std::vector<RunRecord> records = run_suite(spec.problems, spec.methods, spec.options);
  const ProfileTable table = performance_profile(records, spec.tau, spec.budgets);
  const std::string summary = (fs::path(f.out) / "summary.csv").string();
  const std::string profile = (fs::path(f.out) / "profile.csv").string();
  atomic_write(summary, to_text([&](std::ostream& os) { write_summary_csv(os, records); }));
  atomic_write(profile, to_text([&](std::ostream& os) { write_profile_csv(os, table); }));
  int failed = 0;
  for (const RunRecord& r : records) {
    if (!r.failed) continue;
    ++failed;
    err << "warning: run " << r.problem << "/" << r.method << " failed: " << one_line(r.error) << "\n";
  }
  if (!f.quiet) {
    out << "suite: " << records.size() << " runs, " << failed << " failed\nwrote " << summary << "\nwrote " << profile
        << "\n";
  }
  return kOk;
}

int cmd_profile(const CommonFlags& f, const std::string& in_dir, double tau, std::ostream& out) {
  const Config cfg = load_config(f);
  const fs::path traces = fs::path(in_dir.empty() ? f.out : in_dir) / "traces";
  require(fs::is_directory(traces), "no trace directory at " + traces.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(traces)) {
    if (e.path().extension() == ".csv") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  require(!files.empty(), "no trace CSVs in " + traces.string());

  std::vector<RunRecord> records;
  bool stochastic = false;
  int max_k = 0;
  for (const fs::path& p : files) {
    const std::string stem = p.stem().string();
    const std::size_t sep = stem.find("__");
    require(sep != std::string::npos, "trace file name must be problem__method.csv: " + p.string());
    const CsvTable t = parse_csv(read_file(p.string()));
    const int ck = t.column("k");
    const int cf = t.column("f");
    require(ck >= 0 && cf >= 0, "trace lacks k or f columns: " + p.string());
    stochastic = stochastic || t.column("epoch_start") >= 0;
    RunRecord r;
    r.problem = stem.substr(0, sep);
    r.method = stem.substr(sep + 2);
    for (const auto& row : t.rows) {
      require(row.size() == t.header.size(), "ragged row in " + p.string());
      TraceRecord rec;
      rec.k = static_cast<int>(parse_int(row[static_cast<std::size_t>(ck)], "k"));
      rec.f = parse_double(row[static_cast<std::size_t>(cf)], "f");
      r.trace.records.push_back(rec);
      max_k = std::max(max_k, rec.k);
    }
    records.push_back(std::move(r));
  }
  if (!(tau > 0.0)) tau = cfg.get_double("profile.tau", default_tau(stochastic));
  std::vector<int> budgets;
  for (double b : cfg.get_doubles("profile.budgets")) budgets.push_back(static_cast<int>(b));
  if (budgets.empty()) budgets = default_budgets(max_k);
  const ProfileTable table = performance_profile(records, tau, budgets);
  const std::string path = (fs::path(f.out) / "profile.csv").string();
  atomic_write(path, to_text([&](std::ostream& os) { write_profile_csv(os, table); }));
  if (!f.quiet) out << "profile: " << records.size() << " traces, tau=" << fmt_real(tau) << "\nwrote " << path << "\n";
  return kOk;
}

int cmd_check(const CommonFlags& f, int points, std::ostream& out) {
  const Config cfg = load_config(f);
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("run.seed", 0));
  int fails = 0;
  auto report = [&](const std::string& label, const std::vector<CheckResult>& results) {
    int pass = 0;
    for (const CheckResult& r : results) {
      if (r.passed) ++pass;
      if (!f.quiet || !r.passed) out << (r.passed ? "PASS " : "FAIL ") << r.name << " " << r.detail << "\n";
    }
    out << label << ": " << pass << " passed, " << results.size() - pass << " failed\n";
    fails += static_cast<int>(results.size()) - pass;
  };
  report("finite-difference", run_derivative_checks(points, seed));
  report("envelope", run_envelope_checks());
  return fails == 0 ? kOk : kRuntimeFailure;
}

int cmd_plot(const CommonFlags& f, const std::string& kind, const std::vector<std::string>& inputs,
             const std::string& column, double f_star, bool has_f_star, std::ostream& out) {
  std::string svg;
  if (kind == "profile") {
    require(inputs.size() == 1, "plot --kind profile takes exactly one profile CSV");
    svg = profile_plot_svg(read_profile_csv(read_file(inputs.front())));
  } else {
    std::vector<TracePlotInput> traces;
    for (const std::string& p : inputs) {
      TracePlotInput t;
      t.name = fs::path(p).stem().string();
      t.table = parse_csv(read_file(p));
      require(!t.table.header.empty() && !t.table.rows.empty(), "empty CSV: " + p);
      traces.push_back(std::move(t));
    }
    svg = trace_plot_svg(traces, column, f_star, has_f_star);
  }
  const fs::path target = fs::path(f.out).extension() == ".svg" ? fs::path(f.out) : fs::path(f.out) / (kind + ".svg");
  atomic_write(target.string(), svg);
  if (!f.quiet) out << "wrote " << target.string() << "\n";
  return kOk;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gradient descent with sub-level-set teleportation"};
  app.name("levelset");
  app.require_subcommand(1);

  CommonFlags tf, rf, sf, pf, cf, plf;
  auto* teleport = app.add_subcommand("teleport", "Teleport the configured starting point; writes teleport_trace.csv");
  add_common(teleport, tf, true);
  auto* runc = app.add_subcommand("run", "Run one optimizer; writes trace.csv");
  add_common(runc, rf, true);
  auto* suite = app.add_subcommand("suite", "Run a problem x method suite; writes summary.csv, profile.csv, traces/");
  add_common(suite, sf, true);
  auto* profile = app.add_subcommand("profile", "Recompute profile.csv from a suite's traces/ directory");
  add_common(profile, pf, false);
  std::string in_dir;
  double tau = 0.0;
  profile->add_option("--in", in_dir, "Suite output directory (defaults to --out)");
  profile->add_option("--tau", tau, "Relative-gap threshold");
  auto* check = app.add_subcommand("check", "Finite-difference and convergence-envelope self checks");
  add_common(check, cf, false);
  int points = 100;
  check->add_option("--points", points, "Random points per objective")->check(CLI::PositiveNumber);
  auto* plot = app.add_subcommand("plot", "Render trace or profile CSVs to SVG");
  add_common(plot, plf, false);
  std::string kind = "trace";
  std::vector<std::string> inputs;
  std::string column = "gap";
  double f_star = 0.0;
  plot->add_option("--kind", kind, "trace or profile")->check(CLI::IsMember({"trace", "profile"}));
  plot->add_option("--column", column, "Trace column to plot, or gap for f - f*");
  auto* fstar_opt = plot->add_option("--f-star", f_star, "Optimal value for gap plots");
  plot->add_option("inputs", inputs, "Input CSV files")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: usage: " << one_line(e.what()) << "\n" << app.help();
    return kUsage;
  }

  try {
    if (*teleport) return cmd_teleport(tf, out);
    if (*runc) return cmd_run(rf, out, err);
    if (*suite) return cmd_suite(sf, out, err);
    if (*profile) return cmd_profile(pf, in_dir, tau, out);
    if (*check) return cmd_check(cf, points, out);
    if (*plot) return cmd_plot(plf, kind, inputs, column, f_star, fstar_opt->count() > 0, out);
  } catch (const std::exception& e) {
    err << "error: runtime: " << one_line(e.what()) << "\n";
    return kRuntimeFailure;
  }
  err << "error: usage: no command\n";
  return kUsage;
}

}  // namespace levelset::cli
