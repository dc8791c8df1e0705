#include "levelset/teleport.hpp"

#include <cmath>
#include <ostream>

#include "levelset/io.hpp"

namespace levelset {

void TeleportConfig::validate() const {
  require(rho0 > 0.0 && std::isfinite(rho0), "teleport: rho0 must be > 0");
  require(eps > 0.0, "teleport: eps must be > 0");
  require(delta > 0.0, "teleport: delta must be > 0");
  require(max_iters >= 0, "teleport: max_iters must be >= 0");
  require(gamma_safety >= 1.0, "teleport: gamma_safety must be >= 1");
  require(armijo_relax > 0.0, "teleport: armijo_relax must be > 0");
  require(max_backtracks >= 0, "teleport: max_backtracks must be >= 0");
  require(backtrack_factor > 0.0 && backtrack_factor < 1.0, "teleport: backtrack_factor must be in (0, 1)");
}

namespace {

struct Point {
  Vector x;
  double f = 0.0;
  Vector g;
  double grad_sq = 0.0;
};

Point evaluate_point(const Objective& obj, Vector x) {
  Point p;
  ValueGrad vg = obj.value_grad(x);
  p.x = std::move(x);
  p.f = vg.value;
  p.g = std::move(vg.grad);
  p.grad_sq = p.g.squaredNorm();
  return p;
}

SqpStep make_step(const Vector& x, const Vector& g, double grad_sq, const Vector& q, double gap,
                  double rho, TeleportVariant variant) {
  const double gq = g.dot(q);
  const double coef = variant == TeleportVariant::kConsistent ? rho * gq / grad_sq + gap : rho * gq + gap;
  SqpStep s;
  s.q = q;
  s.rho_used = rho;
  s.projected = coef > 0.0;
  s.v = -positive_part(coef) * g;
  s.x_next = x + (rho * q + s.v) / grad_sq;
  return s;
}

}  // namespace

SqpStep sqp_step(const Objective& obj, const Vector& x_t, double level, double rho, TeleportVariant variant) {
  require(rho > 0.0, "sqp_step: rho must be > 0");
  const Point p = evaluate_point(obj, x_t);
  require(p.grad_sq > 0.0, "sqp_step: zero gradient at x_t");
  const Vector q = obj.hvp(x_t, p.g);
  return make_step(x_t, p.g, p.grad_sq, q, p.f - level, rho, variant);
}

double merit(const Objective& obj, const Vector& x, double gamma, double level) {
  require(gamma >= 0.0, "merit: gamma must be >= 0");
  const ValueGrad vg = obj.value_grad(x);
  return -0.5 * vg.grad.squaredNorm() + gamma * positive_part(vg.value - level);
}

double penalty_strength(const Vector& q, const Vector& v, double grad_sq, double gap, double rho,
                        double gamma_safety, TeleportVariant variant) {
  require(grad_sq > 0.0, "penalty_strength: grad_sq must be > 0");
  if (gap <= 0.0 || v.squaredNorm() == 0.0) return 0.0;
  const double qv = q.dot(v);
  const double threshold = variant == TeleportVariant::kConsistent
                               ? (-qv - rho * q.squaredNorm()) / (grad_sq * gap)
                               : qv / (grad_sq * gap);
  return positive_part(gamma_safety * threshold);
}

double ls_rhs(const Vector& q, const Vector& v, double grad_sq, double rho, double gamma, double gap,
              TeleportVariant variant) {
  const double qv = q.dot(v);
  const double qq = q.squaredNorm();
  if (variant == TeleportVariant::kAsPrinted) return -0.5 * grad_sq + (qv - rho * qq) / grad_sq;
  const double phi = -0.5 * grad_sq + gamma * positive_part(gap);
  const double slope = -(qv + rho * qq) / grad_sq - gamma * positive_part(gap);
  return phi + 0.5 * slope;
}

bool ls_condition(const Objective& obj, const SqpStep& step, const Vector& x_t, double level, double gamma,
                  double rho, double relax, TeleportVariant variant) {
  const ValueGrad vg = obj.value_grad(x_t);
  const double grad_sq = vg.grad.squaredNorm();
  require(grad_sq > 0.0, "ls_condition: zero gradient at x_t");
  const double rhs = ls_rhs(step.q, step.v, grad_sq, rho, gamma, vg.value - level, variant);
  return merit(obj, step.x_next, gamma, level) <= rhs + relax * std::abs(rhs);
}

KktResidual kkt_residual(const Vector& g, const Vector& q) {
  const double grad_sq = g.squaredNorm();
  if (grad_sq == 0.0) return {};
  KktResidual out;
  out.lambda = q.dot(g) / grad_sq;
  out.residual = (q - out.lambda * g).norm();
  return out;
}

KktResidual kkt_residual(const Objective& obj, const Vector& x) {
  const Vector g = obj.gradient(x);
  if (g.squaredNorm() == 0.0) return {};
  return kkt_residual(g, obj.hvp(x, g));
}

TeleportResult solve_teleport(const Objective& obj, const Vector& w_k, const TeleportConfig& config,
                              bool keep_iterates) {
  config.validate();
  require(w_k.size() == obj.dimension(), "solve_teleport: dimension mismatch");
  require_finite(w_k, "solve_teleport: w_k");

  TeleportResult result;
  Point cur = evaluate_point(obj, w_k);
  require_finite(cur.f, "solve_teleport: f(w_k)");
  const double level = cur.f;
  const double grad_sq0 = cur.grad_sq;
  if (keep_iterates) result.iterates.push_back(w_k);

  if (grad_sq0 == 0.0) {
    result.x_plus = w_k;
    result.converged = true;
    result.trace.push_back({0, cur.f, 0.0, 0.0, 0.0, config.rho0, 0, 0.0, false, true});
    return result;
  }

  Vector q = obj.hvp(cur.x, cur.g);
  KktResidual kkt = kkt_residual(cur.g, q);
  result.trace.push_back({0, cur.f, cur.grad_sq, kkt.residual, 0.0, config.rho0, 0, 0.0, false, true});

  Point best = cur;
  KktResidual best_kkt = kkt;
  double rho = config.rho0;
  int t = 0;
  bool converged = false;
  for (;;) {
    const double gap = cur.f - level;
    if (kkt.residual <= config.eps && gap <= config.delta) {
      converged = true;
      break;
    }
    if (t >= config.max_iters) break;

    SqpStep step = make_step(cur.x, cur.g, cur.grad_sq, q, gap, rho, config.variant);
    double gamma = penalty_strength(q, step.v, cur.grad_sq, gap, rho, config.gamma_safety, config.variant);
    int backtracks = 0;
    bool accepted = false;
    Point next;
    for (;;) {
      next = evaluate_point(obj, step.x_next);
      if (std::isfinite(next.f) && std::isfinite(next.grad_sq)) {
        const double rhs = ls_rhs(q, step.v, cur.grad_sq, rho, gamma, gap, config.variant);
        const double phi = -0.5 * next.grad_sq + gamma * positive_part(next.f - level);
        if (phi <= rhs + config.armijo_relax * std::abs(rhs)) {
          accepted = true;
          break;
        }
      }
      if (backtracks >= config.max_backtracks) break;
      rho *= config.backtrack_factor;
      ++backtracks;
      step = make_step(cur.x, cur.g, cur.grad_sq, q, gap, rho, config.variant);
      gamma = penalty_strength(q, step.v, cur.grad_sq, gap, rho, config.gamma_safety, config.variant);
    }
    if (!accepted) {
      result.line_search_failed = true;
      break;
    }

    cur = std::move(next);
    q = obj.hvp(cur.x, cur.g);
    if (!q.allFinite()) throw NonFiniteError("solve_teleport: non-finite Hessian-vector product at t=" + std::to_string(t + 1));
    kkt = kkt_residual(cur.g, q);
    ++t;
    const double new_gap = cur.f - level;
    result.trace.push_back({t, cur.f, cur.grad_sq, kkt.residual, new_gap, rho, backtracks, gamma, step.projected, true});
    if (keep_iterates) result.iterates.push_back(cur.x);
    if (new_gap <= config.delta && cur.grad_sq > best.grad_sq) {
      best = cur;
      best_kkt = kkt;
    }
  }

  // A converged final iterate carries the KKT certificate; keep it unless an earlier feasible
  // iterate is better by more than the solver's accuracy.
  if (converged && cur.grad_sq >= best.grad_sq * (1.0 - 1e-8)) {
    best = cur;
    best_kkt = kkt;
  }
  result.x_plus = best.x;
  result.iterations = t;
  result.kkt_residual = best_kkt.residual;
  result.lambda = best_kkt.lambda;
  result.constraint_violation = best.f - level;
  result.converged = converged;
  result.grad_norm_gain = std::sqrt(best.grad_sq / grad_sq0);
  return result;
}

void write_teleport_trace_csv(std::ostream& out, const TeleportResult& result) {
  out << "t,grad_norm_sq,kkt_residual,constraint_gap,rho,backtracks\n";
  for (const TeleportIterate& it : result.trace) {
    out << it.t << ',' << fmt_real(it.grad_norm_sq) << ',' << fmt_real(it.kkt_residual) << ','
        << fmt_real(it.constraint_gap) << ',' << fmt_real(it.rho) << ',' << it.backtracks << '\n';
  }
}

}  // namespace levelset
