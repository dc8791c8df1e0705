#pragma once

// Gradient methods with block teleportation schedules.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "levelset/objectives.hpp"
#include "levelset/teleport.hpp"

namespace levelset {

/// Teleportation blocks: iterations k, ..., k + b_k - 1 are teleported for each start k.
struct Schedule {
  std::vector<int> block_starts;
  std::vector<int> block_lengths;

  /// Throws InvalidArgument unless starts are sorted, lengths positive, and consecutive
  /// blocks are separated by at least one plain step.
  void validate() const;
  bool empty() const { return block_starts.empty(); }
  /// |T| = sum of block lengths.
  int total() const;
  /// Members of T below `limit`, ascending.
  std::vector<int> members(int limit) const;

  static Schedule none() { return {}; }
  /// B = {1, 3, 5, ...} below K, b_k = 1.
  static Schedule every_other(int K);
  /// B = {start, start + period, ...} below K, all blocks of length `block`.
  static Schedule every_nth(int start, int period, int K, int block = 1);
};

bool schedule_member(const Schedule& schedule, int k);

/// n_k = |{i in T : k < i < K}|.
int teleports_after(const Schedule& schedule, int k, int K);

enum class StepKind { kFixed, kArmijo, kPolyak, kNormalized, kMomentum };

struct ArmijoParams {
  double forward = 1.25;
  double backward = 0.8;
  double c = 0.5;
  int max_growths = 1000;
  double floor = 1e-12;
  /// After bracketing, bisect between the last accepted and first rejected step until their
  /// relative gap is below this. 0 keeps the bracketing result.
  double refine_tol = 1e-10;
};

struct StepRule {
  StepKind kind = StepKind::kArmijo;
  /// Step size (fixed, normalized, momentum), initial trial step (armijo) or cap (polyak).
  double eta = 1.0;
  double f_star = 0.0;
  double beta = 0.9;
  double dampening = 0.9;
  ArmijoParams armijo;

  static StepRule fixed(double eta);
  static StepRule armijo_rule(double eta_init = 1.0);
  static StepRule polyak(double f_star = 0.0, double eta_max = 1e12);
  static StepRule normalized(double eta);
  static StepRule momentum(double eta, double beta = 0.9, double dampening = 0.9);

  void validate() const;
  std::string name() const;
};

StepKind parse_step_kind(const std::string& name);
std::string to_string(StepKind kind);

struct ArmijoResult {
  double eta = 0.0;
  int evaluations = 0;
  bool hit_floor = false;
  bool hit_cap = false;
};

/// Largest tested eta with value_at(eta) <= f0 - c * eta * grad_sq. Forward-tracks while the
/// condition holds, backtracks otherwise, then refines the bracket.
ArmijoResult armijo_search(const std::function<double(double)>& value_at, double f0, double grad_sq,
                           double eta_init, const ArmijoParams& params = {});

/// armijo_search along -g from w on the full objective.
double armijo_step(const Objective& obj, const Vector& w, const Vector& g, double eta_init,
                   const ArmijoParams& params = {});

/// (f_w - f_star) / grad_sq, clamped below at 0.
double polyak_step(double f_w, double f_star, double grad_sq);

enum class ScheduleUnit { kIterations, kEpochs };

struct RunConfig {
  int max_iters = 100;
  std::uint64_t seed = 0;
  /// 0 means deterministic full-batch steps.
  Index batch_size = 0;
  /// Stop once ||grad f(w_k^+)|| <= grad_tol. 0 disables.
  double grad_tol = 0.0;
  /// For stochastic runs, schedule entries may count epochs; block k then starts at the first
  /// iteration of epoch k.
  ScheduleUnit schedule_unit = ScheduleUnit::kIterations;
  bool record_time = true;

  void validate() const;
};

struct TraceRecord {
  int k = 0;
  bool teleport = false;
  /// f(w_k), full batch.
  double f = 0.0;
  /// f(w_k^+), full batch.
  double f_plus = 0.0;
  /// ||grad f(w_k^+)||, full batch.
  double grad_norm = 0.0;
  /// Step taken from w_k^+ to w_{k+1}; 0 on the final record.
  double step_size = 0.0;
  int teleport_iters = 0;
  double kkt_residual = 0.0;
  double lambda = 0.0;
  bool teleport_converged = true;
  double cumulative_time = 0.0;
  int epoch = 0;
  bool epoch_start = false;
};

struct Trace {
  std::vector<TraceRecord> records;
  bool stochastic = false;
  bool aborted = false;
  std::string diagnostic;
  /// Armijo search ended at its floor at least once.
  bool armijo_floor_hit = false;
  Vector w_final;
  /// Every teleport-solver iterate, for diameter estimates. Filled only when requested.
  std::vector<Vector> teleport_points;

  double final_f() const { return records.empty() ? 0.0 : records.back().f; }
  double min_f() const;
};

struct RunOptions {
  bool keep_teleport_points = false;
};

/// Gradient descent with teleportation on the iterations in `schedule`.
Trace run(const Objective& obj, const Vector& w0, const StepRule& rule, const Schedule& schedule,
          const TeleportConfig& tconfig, const RunConfig& rconfig, const RunOptions& options = {});

/// Columns: k, phase, f, grad_norm, step_size, teleport_iters, kkt_residual, cumulative_time,
/// plus epoch_start for stochastic runs.
void write_trace_csv(std::ostream& out, const Trace& trace);

}  // namespace levelset
