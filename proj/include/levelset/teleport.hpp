#pragma once

// Sub-level-set teleportation: maximize ||grad f(x)||^2 / 2 subject to f(x) <= f(w_k) by
// projected gradient ascent on a linearized constraint, globalized with a merit line search.

#include <iosfwd>
#include <vector>

#include "levelset/objectives.hpp"

namespace levelset {

/// Which algebra the update, penalty and line-search test use.
///   kConsistent: the forms obtained by carrying out the two-case projection and the
///                directional-derivative expansion. The projected step lands exactly on the
///                linearized level set.
///   kAsPrinted:  the shorthand formulas as typeset in the published pseudocode. Kept for
///                comparison; see README.
enum class TeleportVariant { kConsistent, kAsPrinted };

struct TeleportConfig {
  double rho0 = 0.1;
  double eps = 1e-10;
  double delta = 1e-10;
  int max_iters = 50;
  double gamma_safety = 2.0;
  double armijo_relax = 1e-3;
  int max_backtracks = 100;
  double backtrack_factor = 0.5;
  TeleportVariant variant = TeleportVariant::kConsistent;

  /// Throws InvalidArgument on out-of-range fields.
  void validate() const;
};

struct SqpStep {
  Vector q;
  Vector v;
  Vector x_next;
  double rho_used = 0.0;
  bool projected = false;
};

/// One row of the solver trace. t = 0 is the starting point.
struct TeleportIterate {
  int t = 0;
  double f = 0.0;
  double grad_norm_sq = 0.0;
  double kkt_residual = 0.0;
  double constraint_gap = 0.0;
  double rho = 0.0;
  int backtracks = 0;
  double gamma = 0.0;
  bool projected = false;
  /// The accepted step satisfied the merit test (always true for t > 0 unless the line
  /// search failed, in which case no step is recorded).
  bool ls_satisfied = true;
};

struct TeleportResult {
  Vector x_plus;
  int iterations = 0;
  double kkt_residual = 0.0;
  double constraint_violation = 0.0;
  double lambda = 0.0;
  bool converged = false;
  double grad_norm_gain = 1.0;
  bool line_search_failed = false;
  std::vector<TeleportIterate> trace;
  /// Every accepted iterate, x_0 first. Filled only when requested.
  std::vector<Vector> iterates;
};

struct KktResidual {
  double residual = 0.0;
  double lambda = 0.0;
};

SqpStep sqp_step(const Objective& obj, const Vector& x_t, double level, double rho,
                 TeleportVariant variant = TeleportVariant::kConsistent);

/// -1/2 ||grad f(x)||^2 + gamma (f(x) - level)_+.
double merit(const Objective& obj, const Vector& x, double gamma, double level);

/// Smallest penalty that makes the step a merit descent direction, times `gamma_safety`,
/// clamped at 0. Returns 0 when v = 0 or gap <= 0.
double penalty_strength(const Vector& q, const Vector& v, double grad_sq, double gap, double rho,
                        double gamma_safety = 2.0,
                        TeleportVariant variant = TeleportVariant::kConsistent);

/// Right-hand side of the merit test before relaxation. kConsistent: phi(x_t) + D/2 with D the
/// directional-derivative bound -(<q,v> + rho ||q||^2)/||g||^2 - gamma gap_+. kAsPrinted:
/// -||g||^2/2 + (<q,v> - rho ||q||^2)/||g||^2.
double ls_rhs(const Vector& q, const Vector& v, double grad_sq, double rho, double gamma, double gap,
              TeleportVariant variant = TeleportVariant::kConsistent);

bool ls_condition(const Objective& obj, const SqpStep& step, const Vector& x_t, double level,
                  double gamma, double rho, double relax,
                  TeleportVariant variant = TeleportVariant::kConsistent);

/// residual = ||q - lambda g||, lambda = <q, g> / ||g||^2, with g = grad f(x), q = H(x) g.
KktResidual kkt_residual(const Objective& obj, const Vector& x);
KktResidual kkt_residual(const Vector& g, const Vector& q);

TeleportResult solve_teleport(const Objective& obj, const Vector& w_k, const TeleportConfig& config,
                              bool keep_iterates = false);

/// Columns: t, grad_norm_sq, kkt_residual, constraint_gap, rho, backtracks.
void write_teleport_trace_csv(std::ostream& out, const TeleportResult& result);

}  // namespace levelset
