#include "levelset/checks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "levelset/io.hpp"
#include "levelset/theory.hpp"

namespace levelset {

Vector ZooEntry::sample(std::mt19937_64& rng) const {
  const Index d = problem.w0.size();
  if (box) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Vector w(d);
    for (Index i = 0; i < d; ++i) w[i] = u(rng);
    return w;
  }
  return problem.w0 + scale * gaussian_vector(d, rng);
}

namespace {

ZooEntry entry(const std::string& name, ObjectivePtr obj, Vector w0, double scale, bool box = false,
               bool smooth = true, double wd = 0.0) {
  ZooEntry e;
  e.problem.name = name;
  e.problem.objective = std::move(obj);
  e.problem.w0 = std::move(w0);
  e.problem.weight_decay = wd;
  e.scale = scale;
  e.box = box;
  e.smooth = smooth;
  return e;
}

}  // namespace

std::vector<ZooEntry> objective_zoo(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ZooEntry> zoo;

  const Index d = 10;
  Matrix A(d, d);
  for (Index j = 0; j < d; ++j) A.col(j) = gaussian_vector(d, rng);
  const Matrix H = A.transpose() * A / static_cast<double>(d) + Matrix::Identity(d, d);
  zoo.push_back(entry("quadratic", std::make_shared<Quadratic>(H, gaussian_vector(d, rng)), Vector::Zero(d), 2.0));

  zoo.push_back(entry("booth", std::make_shared<Booth>(), Vector::Zero(2), 5.0));
  zoo.push_back(entry("goldstein_price", std::make_shared<GoldsteinPrice>(), Vector::Zero(2), 2.0, true));
  zoo.push_back(entry("h2_chain", std::make_shared<H2Chain>(5, 5), Vector::Zero(5), 2.0));
  zoo.push_back(entry("distance_counterexample", std::make_shared<DistanceCounterexample>(0.1, 1.0),
                      Vector::Zero(2), 2.0));

  auto bin = std::make_shared<Dataset>(make_synthetic_binary(100, 10, seed));
  standardize(*bin);
  zoo.push_back(entry("logreg", std::make_shared<LogisticRegression>(bin, 1e-2), Vector::Zero(10), 1.0, false, true,
                      1e-2));

  auto small = std::make_shared<Dataset>(make_synthetic_binary(50, 5, seed + 1));
  standardize(*small);
  auto mlp = std::make_shared<Mlp>(small, std::vector<Index>{8}, Activation::kSoftplus, 1e-3);
  zoo.push_back(entry("mlp", mlp, mlp->kaiming_init(seed), 0.5, false, true, 1e-3));

  auto multi = std::make_shared<Dataset>(make_synthetic_multiclass(60, 4, 3, seed + 2));
  standardize(*multi);
  auto mlp3 = std::make_shared<Mlp>(multi, std::vector<Index>{6}, Activation::kSoftplus, 1e-3);
  zoo.push_back(entry("mlp_multiclass", mlp3, mlp3->kaiming_init(seed), 0.5, false, true, 1e-3));

  auto relu = std::make_shared<Mlp>(small, std::vector<Index>{8}, Activation::kRelu, 0.0);
  zoo.push_back(entry("mlp_relu", relu, relu->kaiming_init(seed), 0.5, false, false));
  return zoo;
}

double rel_error(const Vector& a, const Vector& b) { return (a - b).norm() / (1.0 + b.norm()); }

DerivativeErrors check_derivatives(const Objective& obj, const Vector& w, std::mt19937_64& rng, double h) {
  const double step = h * std::max(1.0, w.lpNorm<Eigen::Infinity>());
  DerivativeErrors e;
  e.gradient = rel_error(obj.gradient(w), fd_gradient_oracle(obj, w, step));

  Vector u = gaussian_vector(w.size(), rng);
  Vector v = gaussian_vector(w.size(), rng);
  u.normalize();
  v.normalize();
  const Vector Hu = obj.hvp(w, u);
  const Vector Hv = obj.hvp(w, v);
  e.hvp = rel_error(Hu, fd_hvp_oracle(obj, w, u, step));
  e.symmetry = std::abs(u.dot(Hv) - v.dot(Hu)) / std::max(1.0, Hu.norm() * v.norm());
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  const double a = coef(rng);
  const double b = coef(rng);
  const Vector lhs = obj.hvp(w, a * u + b * v);
  e.linearity = (lhs - a * Hu - b * Hv).norm() / std::max(1.0, std::abs(a) * Hu.norm() + std::abs(b) * Hv.norm());
  return e;
}

std::vector<CheckResult> run_derivative_checks(int points, std::uint64_t seed, const DerivativeTolerances& tol) {
  std::vector<CheckResult> out;
  for (const ZooEntry& z : objective_zoo(seed)) {
    if (!z.smooth) continue;
    std::mt19937_64 rng(seed + 17);
    DerivativeErrors worst;
    for (int i = 0; i < points; ++i) {
      const Vector w = z.sample(rng);
      const DerivativeErrors e = check_derivatives(*z.problem.objective, w, rng);
      worst.gradient = std::max(worst.gradient, e.gradient);
      worst.hvp = std::max(worst.hvp, e.hvp);
      worst.symmetry = std::max(worst.symmetry, e.symmetry);
      worst.linearity = std::max(worst.linearity, e.linearity);
    }
    CheckResult r;
    r.name = "derivatives/" + z.problem.name;
    r.passed = worst.gradient <= tol.gradient && worst.hvp <= tol.hvp && worst.symmetry <= tol.symmetry &&
               worst.linearity <= tol.linearity;
    std::ostringstream d;
    d << "grad=" << fmt_real(worst.gradient) << " hvp=" << fmt_real(worst.hvp) << " sym=" << fmt_real(worst.symmetry)
      << " lin=" << fmt_real(worst.linearity);
    r.detail = d.str();
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

CheckResult envelope_result(const std::string& name, const std::vector<double>& gaps, const BoundCurve& curve,
                            double rel_tol, double abs_tol) {
  const int k = first_envelope_violation(gaps, curve, rel_tol, abs_tol);
  CheckResult r;
  r.name = "envelope/" + name;
  r.passed = k < 0;
  std::ostringstream d;
  if (k < 0) {
    d << "checked " << std::min(gaps.size(), curve.bound.size()) << " iterates";
  } else {
    d << "k=" << k << " gap=" << fmt_real(gaps[static_cast<std::size_t>(k)])
      << " bound=" << fmt_real(curve.bound[static_cast<std::size_t>(k)]);
  }
  r.detail = d.str();
  return r;
}

RunConfig quiet_run(int K) {
  RunConfig rc;
  rc.max_iters = K;
  rc.record_time = false;
  return rc;
}

}  // namespace

std::vector<CheckResult> run_envelope_checks() {
  std::vector<CheckResult> out;

  {
    // f(w) = h2(w_1) in 5 dimensions; the minimizer closest to w0 zeroes the first coordinate.
    const H2Chain obj(5, 1);
    Vector w0(5);
    w0 << 3.0, 1.0, -1.0, 0.5, 2.0;
    const double eta = 1.0;
    const int K = 60;
    for (bool tp : {false, true}) {
      const Trace t = run(obj, w0, StepRule::fixed(eta), tp ? Schedule::every_other(K) : Schedule::none(),
                          TeleportConfig{}, quiet_run(K));
      Vector w_star = w0;
      w_star[0] = 0.0;
      RateInputs in;
      in.L = obj.smoothness(w0);
      in.eta = eta;
      in.K = K;
      in.R = (w0 - w_star).norm();
      out.push_back(envelope_result(std::string("convex_h2") + (tp ? "_teleport" : ""),
                                    trace_gaps(t, obj.value(w_star)), convex_bound(in), 1e-12, 1e-14));
    }
  }

  {
    std::mt19937_64 rng(3);
    const Index d = 10;
    Matrix A(d, d);
    for (Index j = 0; j < d; ++j) A.col(j) = gaussian_vector(d, rng);
    const Quadratic obj(A.transpose() * A / static_cast<double>(d) + 0.1 * Matrix::Identity(d, d), Vector::Zero(d));
    const Vector w0 = gaussian_vector(d, rng);
    const int K = 50;
    const double L = obj.smoothness(w0);
    const Trace t = run(obj, w0, StepRule::fixed(1.0 / L), Schedule::none(), TeleportConfig{}, quiet_run(K));
    RateInputs in;
    in.L = L;
    in.mu = obj.min_eigenvalue();
    in.eta = 1.0 / L;
    in.K = K;
    in.delta0 = obj.value(w0);
    const StronglyConvexBounds b = strongly_convex_bounds(in);
    const std::vector<double> gaps = trace_gaps(t, 0.0);
    out.push_back(envelope_result("strongly_convex_slow", gaps, b.slow, 1e-10, 1e-15));
    out.push_back(envelope_result("strongly_convex_nonexpansive", gaps, b.nonexpansive, 1e-10, 1e-15));
  }

  {
    RateInputs in;
    in.L = 3.0;
    in.L_tilde = 4.0;
    in.mu_tilde = 1.5;
    in.R = 2.0;
    in.K = 40;
    in.schedule = Schedule::every_other(in.K);
    const CombinedLsBounds b = combined_ls_bound(in);
    bool ok = b.every_other.has_value();
    double worst = 0.0;
    for (int k = 2; ok && k <= in.K; k += 2) {
      const double g = b.general.bound[static_cast<std::size_t>(k)];
      const double c = b.every_other->bound[static_cast<std::size_t>(k)];
      worst = std::max(worst, std::abs(g - c) / c);
    }
    ok = ok && worst <= 1e-12;
    out.push_back({"envelope/every_other_closed_form", ok, "max rel diff " + fmt_real(worst)});
  }

  {
    const Quadratic obj(Matrix::Identity(4, 4), Vector::Zero(4));
    Vector w0(4);
    w0 << 1.0, -2.0, 0.5, 3.0;
    const int K = 10;
    TeleportConfig tc;
    tc.rho0 = 1.0;
    const Trace t = run(obj, w0, StepRule::armijo_rule(), Schedule::every_other(K), tc, quiet_run(K));
    RateInputs in;
    in.L_tilde = 1.0;
    in.mu_tilde = 1.0;
    const ProgressReport rep = stability_progress_check(t, in, 0.0, true, 1e-12);
    out.push_back({"envelope/stability_progress_isotropic", rep.ok() && rep.checked > 0,
                   std::to_string(rep.checked) + " teleport steps, " + std::to_string(rep.violations.size()) +
                       " violations"});
  }
  return out;
}

}  // namespace levelset
