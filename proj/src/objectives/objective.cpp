#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "levelset/objectives.hpp"

namespace levelset {

void Objective::check_dim(const Vector& w, const char* what) const {
  if (w.size() != dimension_) {
    throw InvalidArgument(std::string(what) + ": dimension " + std::to_string(w.size()) +
                          " does not match objective dimension " + std::to_string(dimension_));
  }
}

double Objective::value(const Vector& w) const {
  check_dim(w, "value");
  return do_value(w);
}

Vector Objective::gradient(const Vector& w) const {
  check_dim(w, "gradient");
  return do_gradient(w);
}

ValueGrad Objective::value_grad(const Vector& w) const {
  check_dim(w, "value_grad");
  return do_value_grad(w);
}

Vector Objective::hvp(const Vector& w, const Vector& v) const {
  check_dim(w, "hvp point");
  check_dim(v, "hvp direction");
  return do_hvp(w, v);
}

ValueGrad Objective::batch_value_grad(const Vector& w, std::span<const Index> rows) const {
  check_dim(w, "batch_value_grad");
  return do_batch_value_grad(w, rows);
}

EvalBundle evaluate(const ObjectivePtr& obj, const Vector& w) {
  require(obj != nullptr, "evaluate: null objective");
  ValueGrad vg = obj->value_grad(w);
  EvalBundle out;
  out.value = vg.value;
  out.gradient = std::move(vg.grad);
  out.hvp = [obj, w](const Vector& v) { return obj->hvp(w, v); };
  return out;
}

Vector fd_gradient_oracle(const Objective& obj, const Vector& w, double h) {
  require(h > 0.0, "fd_gradient_oracle: h must be positive");
  Vector g(w.size());
  Vector probe = w;
  for (Index i = 0; i < w.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = obj.value(probe);
    probe[i] = orig - h;
    const double fm = obj.value(probe);
    probe[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

Vector fd_hvp_oracle(const Objective& obj, const Vector& w, const Vector& v, double h) {
  require(h > 0.0, "fd_hvp_oracle: h must be positive");
  const Vector gp = obj.gradient(w + h * v);
  const Vector gm = obj.gradient(w - h * v);
  return (gp - gm) / (2.0 * h);
}

double power_iteration(const std::function<Vector(const Vector&)>& apply, Index dim,
                       std::uint64_t seed, double tol, int max_iters) {
  require(dim > 0, "power_iteration: empty operator");
  std::mt19937_64 rng(seed);
  Vector v = gaussian_vector(dim, rng);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    const Vector av = apply(v);
    const double next = v.dot(av);
    const double norm = av.norm();
    if (norm == 0.0) return 0.0;
    v = av / norm;
    if (it > 0 && std::abs(next - lambda) <= tol * std::max(std::abs(next), 1e-300)) {
      return next;
    }
    lambda = next;
  }
  return lambda;
}

ObjectiveKind parse_objective_kind(const std::string& name) {
  if (name == "quadratic") return ObjectiveKind::kQuadratic;
  if (name == "booth") return ObjectiveKind::kBooth;
  if (name == "goldstein_price") return ObjectiveKind::kGoldsteinPrice;
  if (name == "h2_chain") return ObjectiveKind::kH2Chain;
  if (name == "distance_counterexample") return ObjectiveKind::kDistanceCounterexample;
  if (name == "logreg") return ObjectiveKind::kLogReg;
  if (name == "mlp") return ObjectiveKind::kMlp;
  throw InvalidArgument("unknown objective kind '" + name + "'");
}

std::string to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::kQuadratic: return "quadratic";
    case ObjectiveKind::kBooth: return "booth";
    case ObjectiveKind::kGoldsteinPrice: return "goldstein_price";
    case ObjectiveKind::kH2Chain: return "h2_chain";
    case ObjectiveKind::kDistanceCounterexample: return "distance_counterexample";
    case ObjectiveKind::kLogReg: return "logreg";
    case ObjectiveKind::kMlp: return "mlp";
  }
  return "unknown";
}

ObjectivePtr build_objective(const ObjectiveSpec& spec) {
  switch (spec.kind) {
    case ObjectiveKind::kQuadratic: {
      Vector c = spec.c.size() == 0 ? Vector::Zero(spec.H.rows()) : spec.c;
      return std::make_shared<Quadratic>(spec.H, std::move(c));
    }
    case ObjectiveKind::kBooth:
      return std::make_shared<Booth>();
    case ObjectiveKind::kGoldsteinPrice:
      return std::make_shared<GoldsteinPrice>();
    case ObjectiveKind::kH2Chain:
      return std::make_shared<H2Chain>(spec.dimension, spec.active == 0 ? spec.dimension : spec.active);
    case ObjectiveKind::kDistanceCounterexample:
      return std::make_shared<DistanceCounterexample>(spec.eps, spec.alpha);
    case ObjectiveKind::kLogReg:
      return std::make_shared<LogisticRegression>(spec.data, spec.weight_decay);
    case ObjectiveKind::kMlp:
      return std::make_shared<Mlp>(spec.data, spec.hidden, spec.activation, spec.weight_decay);
  }
  throw InvalidArgument("build_objective: unknown kind");
}

}  // namespace levelset
