#pragma once

// Experiment harness: problems, method suites, reference solutions and performance profiles.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "levelset/config.hpp"
#include "levelset/objectives.hpp"
#include "levelset/optimize.hpp"
#include "levelset/teleport.hpp"

namespace levelset {

struct Problem {
  std::string name;
  ObjectivePtr objective;
  Vector w0;
  double weight_decay = 0.0;
};

/// Teleport schedule resolved against the run length.
struct SchedulePreset {
  enum class Kind { kNone, kEveryOther, kEveryNth };
  Kind kind = Kind::kNone;
  int start = 5;
  int period = 50;
  int block = 1;

  Schedule resolve(int K) const;
  std::string name() const;
};

SchedulePreset::Kind parse_schedule_kind(const std::string& name);

struct Method {
  std::string name;
  StepRule rule;
  bool teleport = false;
  SchedulePreset schedule;
  TeleportConfig teleport_config;

  /// The schedule actually used: empty unless `teleport` is set.
  Schedule schedule_for(int K) const;
};

struct RunRecord {
  std::string problem;
  std::string method;
  bool teleport = false;
  Trace trace;
  /// min(reference f*, smallest f seen by any run on this problem).
  double f_star_estimate = 0.0;
  bool failed = false;
  std::string error;
};

struct ReferenceResult {
  double f_star = 0.0;
  bool exact = false;
  /// A non-finite value appeared; f_star is the best finite value seen.
  bool diverged = false;
};

/// Exact minimum for quadratics, otherwise the smallest value seen by Armijo descent with
/// every-other teleportation over 10 x budget iterations.
ReferenceResult reference_solution(const Problem& problem, int budget = 100,
                                   const TeleportConfig& tconfig = {});

struct SuiteOptions {
  int budget = 100;
  std::uint64_t seed = 0;
  Index batch_size = 0;
  ScheduleUnit schedule_unit = ScheduleUnit::kIterations;
  bool compute_reference = true;
  /// 0: TELEPORT_THREADS if set, otherwise the OpenMP default.
  int threads = 0;
  bool record_time = true;
  /// Per-run trace CSVs go to trace_dir/<problem>__<method>.csv when set.
  std::string trace_dir;
};

/// Problem-major cross product of runs. A failing run is recorded and the suite continues.
std::vector<RunRecord> run_suite(const std::vector<Problem>& problems, const std::vector<Method>& methods,
                                 const SuiteOptions& options);

/// TELEPORT_THREADS when set to a positive integer, otherwise the OpenMP maximum.
int suite_threads();

struct ProfileTable {
  double tau = 0.05;
  std::vector<std::string> methods;
  std::vector<int> budgets;
  /// proportion[m][b]: share of problems method m solved within budgets[b] iterations.
  std::vector<std::vector<double>> proportion;
};

/// 0.01 for stochastic runs, 0.05 otherwise.
double default_tau(bool stochastic);

/// 0..max_k in about 100 even steps.
std::vector<int> default_budgets(int max_k);

/// A problem counts as solved by budget B once some k <= B has
/// (f(w_k) - f*) / (f(w_0) - f*) <= tau, where f* is the smallest f over all records on
/// that problem.
ProfileTable performance_profile(const std::vector<RunRecord>& records, double tau, const std::vector<int>& budgets);

/// Columns: method, budget, proportion.
void write_profile_csv(std::ostream& out, const ProfileTable& table);
ProfileTable read_profile_csv(const std::string& text);

/// Columns: problem, method, teleport, status, iterations, f0, final_f, min_f, f_star,
/// final_rel_gap, teleports, teleport_iters.
void write_summary_csv(std::ostream& out, const std::vector<RunRecord>& records);

// Construction from configuration keys (see README for the key reference).

Problem problem_from_config(const Config& cfg, const std::string& name, std::uint64_t seed);
Method method_from_config(const Config& cfg, const std::string& name);
TeleportConfig teleport_config_from(const Config& cfg);
StepRule step_rule_from(const Config& cfg);
SchedulePreset schedule_from(const Config& cfg);
RunConfig run_config_from(const Config& cfg);

struct SuiteSpec {
  std::vector<Problem> problems;
  std::vector<Method> methods;
  SuiteOptions options;
  double tau = 0.05;
  std::vector<int> budgets;
};

/// Problems from [problem.NAME] sections and methods from [method.NAME] sections; top-level
/// keys act as defaults for every section.
SuiteSpec suite_from_config(const Config& cfg);

}  // namespace levelset
