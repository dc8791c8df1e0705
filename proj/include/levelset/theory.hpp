#pragma once

// Convergence envelopes for gradient descent with teleportation, and numerical diagnostics.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "levelset/objectives.hpp"
#include "levelset/optimize.hpp"

namespace levelset {

struct RateInputs {
  double L = 1.0;
  double mu = 0.0;
  double L_tilde = 1.0;
  double mu_tilde = 1.0;
  double R = 1.0;
  double delta0 = 0.0;
  double eta = 1.0;
  /// Per-iteration step sizes; when empty, `eta` is used everywhere.
  std::vector<double> eta_sequence;
  Schedule schedule;
  /// lambda_k indexed by iteration; entries outside T are ignored.
  std::vector<double> lambda_sequence;
  int K = 1;

  double eta_at(int k) const;
};

/// bound[k] is an upper bound on delta_k for k = 0..K. +inf where the formula gives no bound.
struct BoundCurve {
  std::string tag;
  std::vector<double> bound;
};

constexpr double kNoBound = std::numeric_limits<double>::infinity();

/// 2 R^2 / (k eta (2 - L eta)).
BoundCurve convex_bound(const RateInputs& in);

struct StronglyConvexBounds {
  BoundCurve slow;
  BoundCurve nonexpansive;
};

/// slow: prod (1 - 2 mu eta_i (1 - eta_i L / 2)) delta0.
/// nonexpansive: (L / mu) prod max{(1 - eta_i L)^2, (1 - eta_i mu)^2} delta0.
StronglyConvexBounds strongly_convex_bounds(const RateInputs& in);

/// r = L~ / (L~ - mu~); +inf when L~ = mu~.
double stability_ratio(double L_tilde, double mu_tilde);

/// 2 R^2 L / (M + 2 R^2 L sum_{k in B} (r^{b_k} - 1) / delta_{k-1}) at iteration K.
/// gaps[j] = delta_j; blocks must start at k >= 1.
double stability_ls_bound(const RateInputs& in, const std::vector<double>& gaps);
BoundCurve stability_ls_curve(const RateInputs& in, const std::vector<double>& gaps);

struct CombinedLsBounds {
  BoundCurve general;
  /// Closed form for the every-other preset; present only when the schedule is that preset.
  std::optional<BoundCurve> every_other;
};

/// 2 R^2 L / sum_{k not in T, 0 < k <= K} r^{n_k}.
CombinedLsBounds combined_ls_bound(const RateInputs& in);

/// 2 R^2 L mu~ / ((L~ - mu~) (r^{K/2} - 1)), the general bound summed in closed form.
double every_other_closed_form(double R, double L, double L_tilde, double mu_tilde, double K);

/// beta_i = 1 / (1 + lambda_i eta mu~ (L~ lambda_i eta - 2)). Values above 1 mean contraction.
double stability_beta(double lambda, double eta, double L_tilde, double mu_tilde);

/// psi_{k-1} = prod_{i in block} beta_i - 1.
double stability_psi(const RateInputs& in, int block_start, int block_length);

struct FixedStepBounds {
  BoundCurve blockwise;
  BoundCurve combined;
};

/// blockwise: 2 R^2 / (xi M + 2 R^2 sum_{k in B} psi_{k-1} / delta_{k-1}).
/// combined:  2 R^2 / (xi sum_{k not in T, 0 < k <= K} prod_{i in T, k < i < K} beta_i).
FixedStepBounds fixed_step_bounds(const RateInputs& in, const std::vector<double>& gaps);

struct NewtonCollinearity {
  double cosine = 0.0;
  bool defined = false;
  /// <g, H g> / ||g||^2.
  double lambda = 0.0;
  int cg_iters = 0;
};

/// Cosine between grad f(w) and the Newton direction H^{-1} grad f(w), with the solve done by
/// conjugate gradients on Hessian-vector products.
NewtonCollinearity newton_collinearity(const Objective& obj, const Vector& w, double tol = 1e-10);

struct ProgressViolation {
  int k = 0;
  double delta_k = 0.0;
  double delta_next = 0.0;
  double allowed = 0.0;
};

struct ProgressReport {
  int checked = 0;
  std::vector<ProgressViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// For each teleport iteration k: with line search, delta_{k+1} <= (1 - mu~/L~) delta_k;
/// with a fixed step, delta_{k+1} <= (1 + 2 mu~ lambda_k eta (eta lambda_k L~ / 2 - 1)) delta_k.
/// delta_k = f(w_k) - f_star. Tolerance is absolute plus relative to delta_k.
ProgressReport stability_progress_check(const Trace& trace, const RateInputs& in, double f_star,
                                        bool line_search, double tol = 1e-10);

/// Largest distance from w_star to w0, to every point in `points`, and to `probes` random
/// points of the level set {f = level} found by doubling then bisection along seeded
/// directions from w_star.
double estimate_radius(const Objective& obj, const Vector& w_star, const Vector& w0,
                       const std::vector<Vector>& points, double level, int probes = 100,
                       std::uint64_t seed = 0);

/// Observed gaps f(w_k) - f_star from a trace.
std::vector<double> trace_gaps(const Trace& trace, double f_star);

/// Fills eta_sequence, lambda_sequence and K from a trace.
void fill_from_trace(RateInputs& in, const Trace& trace);

/// First k with gaps[k] > bound[k] (1 + rel_tol) + abs_tol, or -1.
int first_envelope_violation(const std::vector<double>& gaps, const BoundCurve& curve, double rel_tol,
                             double abs_tol = 0.0);

/// Columns: k, bound, theorem_tag.
void write_bound_csv(std::ostream& out, const std::vector<BoundCurve>& curves);

}  // namespace levelset
