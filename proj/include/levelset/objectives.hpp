#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "levelset/dataset.hpp"
#include "levelset/kernels.hpp"
#include "levelset/types.hpp"

namespace levelset {

using kernels::Activation;
using kernels::ValueGrad;

/// A twice-differentiable objective with exact value, gradient and Hessian-vector products.
///
/// Objectives are immutable after construction; every const member may be called from
/// several threads at once. Public members check dimensions and finiteness, then forward to
/// the do_* hooks implemented by each kind.
class Objective {
 public:
  explicit Objective(Index dimension) : dimension_(dimension) {}
  virtual ~Objective() = default;

  Index dimension() const { return dimension_; }
  virtual std::string name() const = 0;

  double value(const Vector& w) const;
  Vector gradient(const Vector& w) const;
  ValueGrad value_grad(const Vector& w) const;
  Vector hvp(const Vector& w, const Vector& v) const;

  /// Number of samples for data-backed objectives, 0 otherwise.
  virtual Index num_samples() const { return 0; }
  /// Mini-batch value and gradient, regularization included. Analytic objectives ignore
  /// `rows` and return the full evaluation.
  ValueGrad batch_value_grad(const Vector& w, std::span<const Index> rows) const;

  /// Smoothness constant L (exact, analytic bound, or local estimate at w; see each kind).
  virtual double smoothness(const Vector& w) const = 0;
  virtual bool convex() const = 0;
  virtual bool coercive() const = 0;

 protected:
  virtual double do_value(const Vector& w) const = 0;
  virtual Vector do_gradient(const Vector& w) const = 0;
  virtual ValueGrad do_value_grad(const Vector& w) const { return {do_value(w), do_gradient(w)}; }
  virtual Vector do_hvp(const Vector& w, const Vector& v) const = 0;
  virtual ValueGrad do_batch_value_grad(const Vector& w, std::span<const Index>) const {
    return do_value_grad(w);
  }

  void check_dim(const Vector& w, const char* what) const;

 private:
  Index dimension_;
};

using ObjectivePtr = std::shared_ptr<const Objective>;

/// f(w) = 1/2 w'Hw + c'w with H symmetric positive semi-definite.
class Quadratic final : public Objective {
 public:
  Quadratic(Matrix H, Vector c);
  std::string name() const override { return "quadratic"; }
  double smoothness(const Vector&) const override { return max_eig_; }
  bool convex() const override { return true; }
  bool coercive() const override { return min_eig_ > 0.0; }
  const Matrix& hessian() const { return H_; }
  const Vector& linear() const { return c_; }
  double min_eigenvalue() const { return min_eig_; }

 protected:
  double do_value(const Vector& w) const override;
  Vector do_gradient(const Vector& w) const override;
  Vector do_hvp(const Vector& w, const Vector& v) const override;

 private:
  Matrix H_;
  Vector c_;
  double max_eig_ = 0.0;
  double min_eig_ = 0.0;
};

/// (x + 2y - 7)^2 + (2x + y - 5)^2, minimizer (1, 3).
class Booth final : public Objective {
 public:
  Booth() : Objective(2) {}
  std::string name() const override { return "booth"; }
  double smoothness(const Vector&) const override { return 18.0; }
  bool convex() const override { return true; }
  bool coercive() const override { return true; }

 protected:
  double do_value(const Vector& w) const override;
  Vector do_gradient(const Vector& w) const override;
  Vector do_hvp(const Vector& w, const Vector& v) const override;
};

/// Goldstein-Price test function, global minimum 3 at (0, -1).
class GoldsteinPrice final : public Objective {
 public:
  GoldsteinPrice() : Objective(2) {}
  std::string name() const override { return "goldstein_price"; }
  /// Local curvature estimate |lambda_max(Hessian(w))|; the function is not globally smooth.
  double smoothness(const Vector& w) const override;
  bool convex() const override { return false; }
  bool coercive() const override { return true; }
  Matrix hessian(const Vector& w) const;

 protected:
  double do_value(const Vector& w) const override;
  Vector do_gradient(const Vector& w) const override;
  Vector do_hvp(const Vector& w, const Vector& v) const override;
};

/// Second-order Huber: -x^4/8 + 3x^2/4 + 3/8 on |x| < 1, |x| otherwise. C^2 and convex.
double huber2(double x);
double huber2_d1(double x);
double huber2_d2(double x);

/// f(x) = sum_{i < active} huber2(x_i) in `dimension` coordinates; the remaining
/// coordinates do not enter f.
class H2Chain final : public Objective {
 public:
  H2Chain(Index dimension, Index active);
  std::string name() const override { return "h2_chain"; }
  double smoothness(const Vector&) const override { return 1.5; }
  bool convex() const override { return true; }
  bool coercive() const override { return active_ == dimension(); }
  Index active() const { return active_; }

 protected:
  double do_value(const Vector& w) const override;
  Vector do_gradient(const Vector& w) const override;
  Vector do_hvp(const Vector& w, const Vector& v) const override;

 private:
  Index active_;
};

/// Huber g_delta: x^2/2 on |x| <= delta, delta(|x| - delta/2) otherwise.
double huber(double x, double delta);

/// f(x, y) = g_1(x) + g_eps(y) + 1/2 [y >= alpha] (y - alpha)^2 with 0 < eps < alpha.
/// Teleporting from a point with y < alpha lands beyond y = alpha, far from the minimizer.
class DistanceCounterexample final : public Objective {
 public:
  DistanceCounterexample(double eps, double alpha);
  std::string name() const override { return "distance_counterexample"; }
  double smoothness(const Vector&) const override { return 1.0; }
  bool convex() const override { return true; }
  bool coercive() const override { return true; }
  double eps() const { return eps_; }
  double alpha() const { return alpha_; }

 protected:
  double do_value(const Vector& w) const override;
  Vector do_gradient(const Vector& w) const override;
  Vector do_hvp(const Vector& w, const Vector& v) const override;

 private:
  double eps_;
  double alpha_;
};

/// (1/n) sum log(1 + exp(-y_i <x_i, w>)) + (lambda/2) ||w||^2, labels in {-1, +1}.
class LogisticRegression final : public Objective {
 public:
  LogisticRegression(std::shared_ptr<const Dataset> data, double weight_decay);
  std::string name() const override { return "logreg"; }
  Index num_samples() const override { return data_->num_samples(); }
  /// ||X||_op^2 / (4n) + lambda.
  double smoothness(const Vector&) const override { return smoothness_; }
  bool convex() const override { return true; }
  bool coercive() const override { return weight_decay_ > 0.0; }
  const Dataset& data() const { return *data_; }
  double weight_decay() const { return weight_decay_; }

 protected:
  double do_value(const Vector& w) const override;
  Vector do_gradient(const Vector& w) const override;
  ValueGrad do_value_grad(const Vector& w) const override;
  Vector do_hvp(const Vector& w, const Vector& v) const override;
  ValueGrad do_batch_value_grad(const Vector& w, std::span<const Index> rows) const override;

 private:
  std::shared_ptr<const Dataset> data_;
  double weight_decay_;
  double smoothness_ = 0.0;
};

/// Fully-connected network without biases, linear output layer, logistic loss for +-1 labels
/// and softmax cross-entropy for class indices, plus (lambda/2) ||w||^2.
class Mlp final : public Objective {
 public:
  Mlp(std::shared_ptr<const Dataset> data, std::vector<Index> hidden, Activation activation,
      double weight_decay);
  std::string name() const override { return "mlp"; }
  Index num_samples() const override { return data_->num_samples(); }
  /// Local estimate: power iteration on the HVP at w.
  double smoothness(const Vector& w) const override;
  bool convex() const override { return false; }
  bool coercive() const override { return weight_decay_ > 0.0; }
  const kernels::MlpShape& shape() const { return shape_; }
  const Dataset& data() const { return *data_; }
  double weight_decay() const { return weight_decay_; }
  /// Network outputs (one column per sample) at parameters w.
  Matrix outputs(const Vector& w) const;
  /// Fan-in scaled Gaussian initialization: W_l ~ N(0, 2 / fan_in).
  Vector kaiming_init(std::uint64_t seed) const;

 protected:
  double do_value(const Vector& w) const override;
  Vector do_gradient(const Vector& w) const override;
  ValueGrad do_value_grad(const Vector& w) const override;
  Vector do_hvp(const Vector& w, const Vector& v) const override;
  ValueGrad do_batch_value_grad(const Vector& w, std::span<const Index> rows) const override;

 private:
  std::shared_ptr<const Dataset> data_;
  kernels::MlpShape shape_;
  double weight_decay_;
};

enum class ObjectiveKind {
  kQuadratic,
  kBooth,
  kGoldsteinPrice,
  kH2Chain,
  kDistanceCounterexample,
  kLogReg,
  kMlp,
};

/// Descriptor consumed by build_objective. Only the fields relevant to `kind` are read.
struct ObjectiveSpec {
  ObjectiveKind kind = ObjectiveKind::kBooth;
  Matrix H;                 // quadratic
  Vector c;                 // quadratic; empty means zero
  Index dimension = 0;      // h2_chain
  Index active = 0;         // h2_chain; 0 means all coordinates
  double eps = 0.1;         // distance_counterexample
  double alpha = 1.0;       // distance_counterexample
  std::shared_ptr<const Dataset> data;  // logreg, mlp
  double weight_decay = 0.0;            // logreg, mlp
  std::vector<Index> hidden;            // mlp hidden layer widths
  Activation activation = Activation::kSoftplus;
};

ObjectivePtr build_objective(const ObjectiveSpec& spec);

ObjectiveKind parse_objective_kind(const std::string& name);
std::string to_string(ObjectiveKind kind);

/// Value, gradient, and a Hessian-vector-product closure bound to the evaluation point.
struct EvalBundle {
  double value = 0.0;
  Vector gradient;
  std::function<Vector(const Vector&)> hvp;
};

EvalBundle evaluate(const ObjectivePtr& obj, const Vector& w);

inline double eval(const Objective& obj, const Vector& w) { return obj.value(w); }
inline Vector grad(const Objective& obj, const Vector& w) { return obj.gradient(w); }
inline Vector hvp(const Objective& obj, const Vector& w, const Vector& v) { return obj.hvp(w, v); }

/// Central differences (f(w + h e_i) - f(w - h e_i)) / 2h, one coordinate at a time.
Vector fd_gradient_oracle(const Objective& obj, const Vector& w, double h);

/// (grad(w + h v) - grad(w - h v)) / 2h.
Vector fd_hvp_oracle(const Objective& obj, const Vector& w, const Vector& v, double h);

/// Largest-magnitude eigenvalue of a symmetric linear operator by power iteration.
double power_iteration(const std::function<Vector(const Vector&)>& apply, Index dim,
                       std::uint64_t seed = 0, double tol = 1e-10, int max_iters = 1000);

}  // namespace levelset
