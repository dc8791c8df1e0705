#include "levelset/bench.hpp"

#include <omp.h>

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "levelset/io.hpp"

namespace levelset {

Schedule SchedulePreset::resolve(int K) const {
  switch (kind) {
    case Kind::kNone: return Schedule::none();
    case Kind::kEveryOther: return Schedule::every_other(K);
    case Kind::kEveryNth: return Schedule::every_nth(start, period, K, block);
  }
  return Schedule::none();
}

std::string SchedulePreset::name() const {
  switch (kind) {
    case Kind::kNone: return "none";
    case Kind::kEveryOther: return "every_other";
    case Kind::kEveryNth: return "every_nth";
  }
  return "none";
}

SchedulePreset::Kind parse_schedule_kind(const std::string& name) {
  if (name == "none" || name.empty()) return SchedulePreset::Kind::kNone;
  if (name == "every_other") return SchedulePreset::Kind::kEveryOther;
  if (name == "every_nth" || name == "periodic") return SchedulePreset::Kind::kEveryNth;
  throw InvalidArgument("unknown schedule preset '" + name + "'");
}

Schedule Method::schedule_for(int K) const { return teleport ? schedule.resolve(K) : Schedule::none(); }

namespace {

double min_finite_f(const Trace& trace) {
  double best = std::numeric_limits<double>::infinity();
  for (const TraceRecord& r : trace.records) {
    if (std::isfinite(r.f)) best = std::min(best, r.f);
    if (r.teleport && std::isfinite(r.f_plus)) best = std::min(best, r.f_plus);
  }
  return best;
}

ReferenceResult quadratic_reference(const Quadratic& q) {
  const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(q.hessian());
  const Vector w = cod.solve(-q.linear());
  const Vector resid = q.hessian() * w + q.linear();
  require(resid.norm() <= 1e-8 * std::max(1.0, q.linear().norm()), "reference_solution: quadratic is unbounded below");
  ReferenceResult out;
  out.f_star = q.value(w);
  out.exact = true;
  return out;
}

}  // namespace

ReferenceResult reference_solution(const Problem& problem, int budget, const TeleportConfig& tconfig) {
  require(problem.objective != nullptr, "reference_solution: problem has no objective");
  require(budget >= 1, "reference_solution: budget must be >= 1");
  if (const auto* q = dynamic_cast<const Quadratic*>(problem.objective.get())) return quadratic_reference(*q);

  const int K = 10 * budget;
  RunConfig rc;
  rc.max_iters = K;
  rc.record_time = false;
  const Trace trace = run(*problem.objective, problem.w0, StepRule::armijo_rule(), Schedule::every_other(K), tconfig, rc);
  ReferenceResult out;
  out.f_star = min_finite_f(trace);
  out.diverged = trace.aborted;
  require(std::isfinite(out.f_star), "reference_solution: no finite objective value for " + problem.name);
  return out;
}

int suite_threads() {
  if (const char* env = std::getenv("TELEPORT_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<int>(n);
  }
  return std::max(1, omp_get_max_threads());
}

std::vector<RunRecord> run_suite(const std::vector<Problem>& problems, const std::vector<Method>& methods,
                                 const SuiteOptions& options) {
  require(!problems.empty(), "run_suite: no problems");
  require(!methods.empty(), "run_suite: no methods");
  require(options.budget >= 1, "run_suite: budget must be >= 1");
  if (!options.trace_dir.empty()) std::filesystem::create_directories(options.trace_dir);

  const int P = static_cast<int>(problems.size());
  const int M = static_cast<int>(methods.size());
  const int threads = options.threads > 0 ? options.threads : suite_threads();
  std::vector<RunRecord> records(static_cast<std::size_t>(P * M));

#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (int idx = 0; idx < P * M; ++idx) {
    const Problem& prob = problems[static_cast<std::size_t>(idx / M)];
    const Method& meth = methods[static_cast<std::size_t>(idx % M)];
    RunRecord& rec = records[static_cast<std::size_t>(idx)];
    rec.problem = prob.name;
    rec.method = meth.name;
    rec.teleport = meth.teleport;
    try {
      RunConfig rc;
      rc.max_iters = options.budget;
      rc.seed = options.seed;
      rc.batch_size = options.batch_size;
      rc.schedule_unit = options.schedule_unit;
      rc.record_time = options.record_time;
      rec.trace = run(*prob.objective, prob.w0, meth.rule, meth.schedule_for(options.budget), meth.teleport_config, rc);
      if (!options.trace_dir.empty()) {
        std::ostringstream os;
        write_trace_csv(os, rec.trace);
        atomic_write(options.trace_dir + "/" + prob.name + "__" + meth.name + ".csv", os.str());
      }
    } catch (const std::exception& e) {
      rec.failed = true;
      rec.error = e.what();
    }
  }

  std::vector<double> ref(static_cast<std::size_t>(P), std::numeric_limits<double>::infinity());
  if (options.compute_reference) {
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (int p = 0; p < P; ++p) {
      try {
        ref[static_cast<std::size_t>(p)] = reference_solution(problems[static_cast<std::size_t>(p)], options.budget).f_star;
      } catch (const std::exception&) {
        // Falls back to the best value seen by the suite.
      }
    }
  }

  for (int p = 0; p < P; ++p) {
    double best = ref[static_cast<std::size_t>(p)];
    for (int m = 0; m < M; ++m) {
      const RunRecord& r = records[static_cast<std::size_t>(p * M + m)];
      if (!r.failed) best = std::min(best, min_finite_f(r.trace));
    }
    for (int m = 0; m < M; ++m) records[static_cast<std::size_t>(p * M + m)].f_star_estimate = best;
  }
  return records;
}

double default_tau(bool stochastic) { return stochastic ? 0.01 : 0.05; }

std::vector<int> default_budgets(int max_k) {
  require(max_k >= 0, "default_budgets: max_k must be >= 0");
  const int step = std::max(1, max_k / 100);
  std::vector<int> out;
  for (int b = 0; b < max_k; b += step) out.push_back(b);
  out.push_back(max_k);
  return out;
}

ProfileTable performance_profile(const std::vector<RunRecord>& records, double tau, const std::vector<int>& budgets) {
  require(!records.empty(), "performance_profile: no records");
  require(tau > 0.0 && std::isfinite(tau), "performance_profile: tau must be > 0");
  require(!budgets.empty(), "performance_profile: no budgets");
  ProfileTable table;
  table.tau = tau;
  table.budgets = budgets;
  std::sort(table.budgets.begin(), table.budgets.end());
  table.budgets.erase(std::unique(table.budgets.begin(), table.budgets.end()), table.budgets.end());

  std::vector<std::string> problems;
  std::map<std::string, double> f_star;
  for (const RunRecord& r : records) {
    if (std::find(problems.begin(), problems.end(), r.problem) == problems.end()) problems.push_back(r.problem);
    if (std::find(table.methods.begin(), table.methods.end(), r.method) == table.methods.end()) {
      table.methods.push_back(r.method);
    }
    double& fs = f_star.try_emplace(r.problem, std::numeric_limits<double>::infinity()).first->second;
    if (r.failed) continue;
    for (const TraceRecord& t : r.trace.records) {
      if (std::isfinite(t.f)) fs = std::min(fs, t.f);
    }
  }

  // First iteration at which each (method, problem) pair is solved; INT_MAX if never.
  std::map<std::pair<std::string, std::string>, int> solved_at;
  for (const RunRecord& r : records) {
    int first = std::numeric_limits<int>::max();
    const double fs = f_star[r.problem];
    if (!r.failed && !r.trace.records.empty() && std::isfinite(fs)) {
      const double f0 = r.trace.records.front().f;
      const double scale = f0 - fs;
      for (const TraceRecord& t : r.trace.records) {
        if (!std::isfinite(t.f)) break;
        if (scale <= 0.0 || (t.f - fs) / scale <= tau) {
          first = t.k;
          break;
        }
      }
    }
    auto [it, inserted] = solved_at.try_emplace({r.method, r.problem}, first);
    if (!inserted) it->second = std::min(it->second, first);
  }

  const double n = static_cast<double>(problems.size());
  for (const std::string& m : table.methods) {
    std::vector<double> row;
    for (int b : table.budgets) {
      int solved = 0;
      for (const std::string& p : problems) {
        const auto it = solved_at.find({m, p});
        if (it != solved_at.end() && it->second <= b) ++solved;
      }
      row.push_back(solved / n);
    }
    table.proportion.push_back(std::move(row));
  }
  return table;
}

void write_profile_csv(std::ostream& out, const ProfileTable& table) {
  out << "method,budget,proportion\n";
  for (std::size_t m = 0; m < table.methods.size(); ++m) {
    for (std::size_t b = 0; b < table.budgets.size(); ++b) {
      out << table.methods[m] << ',' << table.budgets[b] << ',' << fmt_real(table.proportion[m][b]) << '\n';
    }
  }
}

ProfileTable read_profile_csv(const std::string& text) {
  const CsvTable csv = parse_csv(text);
  const int cm = csv.column("method");
  const int cb = csv.column("budget");
  const int cp = csv.column("proportion");
  require(cm >= 0 && cb >= 0 && cp >= 0, "profile CSV needs method, budget and proportion columns");
  require(!csv.rows.empty(), "profile CSV has no rows");
  ProfileTable table;
  std::map<std::string, std::map<int, double>> values;
  for (const auto& row : csv.rows) {
    require(row.size() == csv.header.size(), "profile CSV: ragged row");
    const std::string& m = row[static_cast<std::size_t>(cm)];
    const int b = static_cast<int>(parse_int(row[static_cast<std::size_t>(cb)], "budget"));
    if (std::find(table.methods.begin(), table.methods.end(), m) == table.methods.end()) table.methods.push_back(m);
    if (std::find(table.budgets.begin(), table.budgets.end(), b) == table.budgets.end()) table.budgets.push_back(b);
    values[m][b] = parse_double(row[static_cast<std::size_t>(cp)], "proportion");
  }
  std::sort(table.budgets.begin(), table.budgets.end());
  for (const std::string& m : table.methods) {
    std::vector<double> row;
    for (int b : table.budgets) {
      const auto it = values[m].find(b);
      row.push_back(it == values[m].end() ? std::nan("") : it->second);
    }
    table.proportion.push_back(std::move(row));
  }
  return table;
}

void write_summary_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << "problem,method,teleport,status,iterations,f0,final_f,min_f,f_star,final_rel_gap,teleports,teleport_iters\n";
  const double nan = std::nan("");
  for (const RunRecord& r : records) {
    out << r.problem << ',' << r.method << ',' << (r.teleport ? 1 : 0) << ',';
    if (r.failed || r.trace.records.empty()) {
      out << "failed,0," << fmt_real(nan) << ',' << fmt_real(nan) << ',' << fmt_real(nan) << ','
          << fmt_real(r.f_star_estimate) << ',' << fmt_real(nan) << ",0,0\n";
      continue;
    }
    const Trace& t = r.trace;
    const double f0 = t.records.front().f;
    const double scale = f0 - r.f_star_estimate;
    const double rel = scale > 0.0 ? (t.final_f() - r.f_star_estimate) / scale : 0.0;
    int teleports = 0;
    long long titers = 0;
    for (const TraceRecord& rec : t.records) {
      if (!rec.teleport) continue;
      ++teleports;
      titers += rec.teleport_iters;
    }
    out << (t.aborted ? "aborted" : "ok") << ',' << t.records.back().k << ',' << fmt_real(f0) << ','
        << fmt_real(t.final_f()) << ',' << fmt_real(t.min_f()) << ',' << fmt_real(r.f_star_estimate) << ','
        << fmt_real(rel) << ',' << teleports << ',' << titers << '\n';
  }
}

namespace {

Vector vector_from(const std::vector<double>& xs) {
  Vector v(static_cast<Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) v[static_cast<Index>(i)] = xs[i];
  return v;
}

std::shared_ptr<const Dataset> dataset_from(const Config& cfg, std::uint64_t seed) {
  const bool standardize_features = cfg.get_bool("data.standardize", true);
  if (const auto path = cfg.get("data.path")) {
    return std::make_shared<const Dataset>(
        load_dataset(*path, cfg.get_string("data.label_column", "label"), standardize_features));
  }
  const std::string kind = cfg.get_string("data.synthetic", "binary");
  const auto n = static_cast<Index>(cfg.get_int("data.n", 200));
  const auto p = static_cast<Index>(cfg.get_int("data.p", 20));
  const auto dseed = static_cast<std::uint64_t>(cfg.get_int("data.seed", static_cast<long long>(seed)));
  Dataset d;
  if (kind == "binary") {
    d = make_synthetic_binary(n, p, dseed, cfg.get_double("data.noise", 0.5));
  } else if (kind == "multiclass") {
    d = make_synthetic_multiclass(n, p, static_cast<int>(cfg.get_int("data.classes", 3)), dseed);
  } else {
    throw InvalidArgument("data.synthetic must be binary or multiclass, got '" + kind + "'");
  }
  if (standardize_features) standardize(d);
  return std::make_shared<const Dataset>(std::move(d));
}

}  // namespace

Problem problem_from_config(const Config& cfg, const std::string& name, std::uint64_t seed) {
  ObjectiveSpec spec;
  spec.kind = parse_objective_kind(cfg.get_string("objective.kind", "booth"));
  spec.weight_decay = cfg.get_double("objective.weight_decay", 0.0);
  std::mt19937_64 rng(seed);
  switch (spec.kind) {
    case ObjectiveKind::kQuadratic: {
      const std::vector<double> diag = cfg.get_doubles("objective.diag");
      if (!diag.empty()) {
        spec.H = vector_from(diag).asDiagonal();
      } else {
        const auto d = static_cast<Index>(cfg.get_int("objective.dimension", 10));
        require(d >= 1, "objective.dimension must be >= 1");
        Matrix A(d, d);
        for (Index j = 0; j < d; ++j) A.col(j) = gaussian_vector(d, rng);
        spec.H = A.transpose() * A / static_cast<double>(d) +
                 cfg.get_double("objective.shift", 1.0) * Matrix::Identity(d, d);
      }
      const std::vector<double> c = cfg.get_doubles("objective.linear");
      spec.c = c.empty() ? Vector::Zero(spec.H.rows()) : vector_from(c);
      break;
    }
    case ObjectiveKind::kH2Chain:
      spec.dimension = static_cast<Index>(cfg.get_int("objective.dimension", 2));
      spec.active = static_cast<Index>(cfg.get_int("objective.active", 0));
      break;
    case ObjectiveKind::kDistanceCounterexample:
      spec.eps = cfg.get_double("objective.eps", 0.1);
      spec.alpha = cfg.get_double("objective.alpha", 1.0);
      break;
    case ObjectiveKind::kMlp: {
      for (double h : cfg.get_doubles("objective.hidden")) spec.hidden.push_back(static_cast<Index>(h));
      if (spec.hidden.empty()) spec.hidden = {16};
      const std::string act = cfg.get_string("objective.activation", "softplus");
      require(act == "softplus" || act == "relu", "objective.activation must be softplus or relu");
      spec.activation = act == "relu" ? Activation::kRelu : Activation::kSoftplus;
      spec.data = dataset_from(cfg, seed);
      break;
    }
    case ObjectiveKind::kLogReg:
      spec.data = dataset_from(cfg, seed);
      break;
    default:
      break;
  }

  Problem prob;
  prob.name = name;
  prob.weight_decay = spec.weight_decay;
  prob.objective = build_objective(spec);
  const Index d = prob.objective->dimension();
  const std::vector<double> w0 = cfg.get_doubles("objective.w0");
  if (!w0.empty()) {
    prob.w0 = vector_from(w0);
    require(prob.w0.size() == d, "objective.w0 has the wrong length");
  } else if (spec.kind == ObjectiveKind::kLogReg) {
    prob.w0 = Vector::Zero(d);
  } else if (spec.kind == ObjectiveKind::kMlp) {
    prob.w0 = static_cast<const Mlp&>(*prob.objective).kaiming_init(seed);
  } else {
    prob.w0 = cfg.get_double("objective.init_scale", 1.0) * gaussian_vector(d, rng);
  }
  return prob;
}

TeleportConfig teleport_config_from(const Config& cfg) {
  TeleportConfig t;
  t.rho0 = cfg.get_double("teleport.rho0", t.rho0);
  t.eps = cfg.get_double("teleport.eps", t.eps);
  t.delta = cfg.get_double("teleport.delta", t.delta);
  t.max_iters = static_cast<int>(cfg.get_int("teleport.max_iters", t.max_iters));
  t.gamma_safety = cfg.get_double("teleport.gamma_safety", t.gamma_safety);
  t.armijo_relax = cfg.get_double("teleport.armijo_relax", t.armijo_relax);
  t.backtrack_factor = cfg.get_double("teleport.backtrack_factor", t.backtrack_factor);
  t.max_backtracks = static_cast<int>(cfg.get_int("teleport.max_backtracks", t.max_backtracks));
  const std::string variant = cfg.get_string("teleport.variant", "consistent");
  require(variant == "consistent" || variant == "as_printed", "teleport.variant must be consistent or as_printed");
  t.variant = variant == "as_printed" ? TeleportVariant::kAsPrinted : TeleportVariant::kConsistent;
  t.validate();
  return t;
}

StepRule step_rule_from(const Config& cfg) {
  const StepKind kind = parse_step_kind(cfg.get_string("optimizer.method", "armijo"));
  StepRule rule;
  switch (kind) {
    case StepKind::kFixed: rule = StepRule::fixed(cfg.get_double("optimizer.step_size", 0.1)); break;
    case StepKind::kArmijo: rule = StepRule::armijo_rule(cfg.get_double("optimizer.step_size", 1.0)); break;
    case StepKind::kPolyak:
      rule = StepRule::polyak(cfg.get_double("optimizer.f_star", 0.0), cfg.get_double("optimizer.step_size", 1e12));
      break;
    case StepKind::kNormalized: rule = StepRule::normalized(cfg.get_double("optimizer.step_size", 0.1)); break;
    case StepKind::kMomentum:
      rule = StepRule::momentum(cfg.get_double("optimizer.step_size", 0.1), cfg.get_double("optimizer.momentum", 0.9),
                                cfg.get_double("optimizer.dampening", 0.9));
      break;
  }
  rule.validate();
  return rule;
}

SchedulePreset schedule_from(const Config& cfg) {
  SchedulePreset s;
  s.kind = parse_schedule_kind(cfg.get_string("schedule.preset", "none"));
  s.start = static_cast<int>(cfg.get_int("schedule.start", s.start));
  s.period = static_cast<int>(cfg.get_int("schedule.period", s.period));
  s.block = static_cast<int>(cfg.get_int("schedule.block", s.block));
  require(s.start >= 0 && s.period >= 1 && s.block >= 1, "schedule: need start >= 0, period >= 1, block >= 1");
  return s;
}

RunConfig run_config_from(const Config& cfg) {
  RunConfig rc;
  rc.max_iters = static_cast<int>(cfg.get_int("run.max_iters", rc.max_iters));
  rc.batch_size = static_cast<Index>(cfg.get_int("run.batch_size", 0));
  rc.seed = static_cast<std::uint64_t>(cfg.get_int("run.seed", 0));
  rc.grad_tol = cfg.get_double("run.grad_tol", 0.0);
  const std::string unit = cfg.get_string("schedule.unit", "iterations");
  require(unit == "iterations" || unit == "epochs", "schedule.unit must be iterations or epochs");
  rc.schedule_unit = unit == "epochs" ? ScheduleUnit::kEpochs : ScheduleUnit::kIterations;
  rc.validate();
  return rc;
}

Method method_from_config(const Config& cfg, const std::string& name) {
  Method m;
  m.name = name;
  m.rule = step_rule_from(cfg);
  m.schedule = schedule_from(cfg);
  m.teleport = cfg.get_bool("optimizer.teleport", m.schedule.kind != SchedulePreset::Kind::kNone);
  m.teleport_config = teleport_config_from(cfg);
  return m;
}

SuiteSpec suite_from_config(const Config& cfg) {
  Config base;
  for (const auto& [k, v] : cfg.values()) {
    if (k.rfind("problem.", 0) != 0 && k.rfind("method.", 0) != 0) base.set(k, v);
  }
  SuiteSpec spec;
  const RunConfig rc = run_config_from(base);
  spec.options.budget = rc.max_iters;
  spec.options.seed = rc.seed;
  spec.options.batch_size = rc.batch_size;
  spec.options.schedule_unit = rc.schedule_unit;
  spec.options.compute_reference = base.get_bool("run.reference", true);

  std::vector<std::string> pnames = cfg.children("problem");
  if (pnames.empty()) {
    spec.problems.push_back(problem_from_config(base, base.get_string("objective.kind", "booth"), rc.seed));
  }
  for (const std::string& n : pnames) {
    spec.problems.push_back(problem_from_config(base.merged(cfg.subtree("problem." + n)), n, rc.seed));
  }
  std::vector<std::string> mnames = cfg.children("method");
  if (mnames.empty()) spec.methods.push_back(method_from_config(base, base.get_string("optimizer.method", "armijo")));
  for (const std::string& n : mnames) {
    spec.methods.push_back(method_from_config(base.merged(cfg.subtree("method." + n)), n));
  }

  spec.tau = base.get_double("profile.tau", default_tau(rc.batch_size > 0));
  for (double b : base.get_doubles("profile.budgets")) spec.budgets.push_back(static_cast<int>(b));
  if (spec.budgets.empty()) spec.budgets = default_budgets(rc.max_iters);
  return spec;
}

}  // namespace levelset
