// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is the number of failed criteria, not counting those named with --known-failure N.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "levelset/bench.hpp"
#include "levelset/checks.hpp"
#include "levelset/io.hpp"
#include "levelset/theory.hpp"

using namespace levelset;

namespace {

const std::string kTestDir = LEVELSET_TEST_DIR;

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

RunConfig quiet(int K) {
  RunConfig rc;
  rc.max_iters = K;
  rc.record_time = false;
  return rc;
}

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

Outcome derivatives() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = run_derivative_checks(100, 0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Outcome o;
  o.passed = secs < 30.0;
  int ok = 0;
  std::string failed;
  for (const CheckResult& r : results) {
    if (r.passed) {
      ++ok;
    } else {
      o.passed = false;
      failed += " " + r.name + "(" + r.detail + ")";
    }
  }
  o.detail = std::to_string(ok) + "/" + std::to_string(results.size()) + " objectives x 100 points in " + num(secs) +
             " s" + failed;
  return o;
}

Outcome booth_one_step() {
  const auto t0 = std::chrono::steady_clock::now();
  const Booth f;
  Vector w0(2);
  w0 << -4.0, -3.5;
  TeleportConfig tc;
  tc.rho0 = 1000.0;
  const TeleportResult r = solve_teleport(f, w0, tc);
  const double df = std::abs(f.value(r.x_plus) - f.value(w0));
  const Vector g = f.gradient(r.x_plus);
  const double eta = armijo_step(f, r.x_plus, g, 1.0);
  const double gap1 = f.value(r.x_plus - eta * g);
  const double gap0 = f.value(w0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  Outcome o;
  o.passed = r.kkt_residual <= 1e-8 && df <= 1e-8 && gap1 <= 1e-6 * gap0 && secs < 1.0;
  o.detail = "kkt=" + num(r.kkt_residual) + " |df|=" + num(df) + " gap ratio=" + num(gap1 / gap0) + " in " +
             num(secs) + " s";
  return o;
}

Outcome isotropic_tightness() {
  const Index d = 5;
  const Quadratic f(Matrix::Identity(d, d), Vector::Zero(d));
  std::mt19937_64 rng(0);
  const Vector w0 = gaussian_vector(d, rng);
  const int K = 20;
  const double eta = 0.5;
  const Trace plain = run(f, w0, StepRule::fixed(eta), Schedule::none(), TeleportConfig{}, quiet(K));
  const Trace tp = run(f, w0, StepRule::fixed(eta), Schedule::every_other(K), TeleportConfig{}, quiet(K));
  const double d0 = f.value(w0);
  const double predicted = std::pow(1 - eta, 2 * K) * d0;
  const double e_plain = rel_diff(plain.records.back().f, predicted);
  const double e_tp = rel_diff(tp.records.back().f, predicted);
  double seq = 0.0;
  for (std::size_t k = 0; k < plain.records.size(); ++k) {
    seq = std::max(seq, rel_diff(tp.records[k].f, plain.records[k].f));
  }
  Outcome o;
  o.passed = plain.records.size() == tp.records.size() && e_plain <= 1e-10 && e_tp <= 1e-10 && seq <= 1e-10;
  o.detail = "rel err no-teleport=" + num(e_plain) + " teleport=" + num(e_tp) + " max sequence diff=" + num(seq);
  return o;
}

Outcome h2_identity() {
  const H2Chain f(5, 1);
  Vector w0(5);
  w0 << 3.0, 1.0, -1.0, 0.5, 2.0;
  const double eta = 1.0;
  const int K = 50;
  const Trace plain = run(f, w0, StepRule::fixed(eta), Schedule::none(), TeleportConfig{}, quiet(K));
  const Trace tp = run(f, w0, StepRule::fixed(eta), Schedule::every_other(K), TeleportConfig{}, quiet(K));
  double diff = 0.0;
  for (std::size_t k = 0; k < plain.records.size(); ++k) {
    diff = std::max(diff, std::abs(tp.records[k].f - plain.records[k].f));
  }
  Vector w_star = w0;
  w_star[0] = 0.0;
  RateInputs in;
  in.L = f.smoothness(w0);
  in.eta = eta;
  in.K = K;
  in.R = (w0 - w_star).norm();
  const BoundCurve bound = convex_bound(in);
  const double f_star = f.value(w_star);
  const int v_plain = first_envelope_violation(trace_gaps(plain, f_star), bound, 0.0);
  const int v_tp = first_envelope_violation(trace_gaps(tp, f_star), bound, 0.0);
  Outcome o;
  o.passed = plain.records.size() == tp.records.size() && diff <= 1e-12 && v_plain < 0 && v_tp < 0;
  o.detail = "max |f diff|=" + num(diff) + " envelope violations at k=" + std::to_string(v_plain) + "/" +
             std::to_string(v_tp) + " (-1 = none)";
  return o;
}

Outcome newton_breakdown() {
  const H2Chain f(2, 2);
  Vector w0(2);
  w0 << 1.5, 1.5;
  TeleportConfig tc;
  tc.rho0 = 1.0;
  tc.max_iters = 200;
  const TeleportResult r = solve_teleport(f, w0, tc);
  const NewtonCollinearity nc = newton_collinearity(f, r.x_plus);
  const double lam = std::abs(kkt_residual(f, r.x_plus).lambda);
  Outcome o;
  o.passed = r.x_plus.minCoeff() >= 1 - 1e-6 && std::abs(r.x_plus.sum() - 3.0) <= 1e-6 && !nc.defined && lam <= 1e-8;
  o.detail = "x+=(" + num(r.x_plus[0]) + ", " + num(r.x_plus[1]) + ") sum-3=" + num(r.x_plus.sum() - 3.0) +
             " defined=" + (nc.defined ? "true" : "false") + " lambda=" + num(lam);
  return o;
}

Outcome collinearity() {
  std::mt19937_64 rng(0);
  const Index d = 10;
  Matrix A(d, d);
  for (Index j = 0; j < d; ++j) A.col(j) = gaussian_vector(d, rng);
  const Quadratic q(A.transpose() * A / static_cast<double>(d) + 0.1 * Matrix::Identity(d, d), Vector::Zero(d));

  auto data = std::make_shared<Dataset>(make_synthetic_binary(200, 20, 0));
  standardize(*data);
  const LogisticRegression lr(data, 1e-2);

  TeleportConfig tc;
  tc.rho0 = 1.0;
  tc.max_iters = 2000;
  Outcome o{true, ""};
  for (auto [name, obj, w0] : {std::tuple<const char*, const Objective*, Vector>{"quadratic", &q, gaussian_vector(d, rng)},
                               std::tuple<const char*, const Objective*, Vector>{"logreg", &lr, Vector::Zero(20)}}) {
    const TeleportResult r = solve_teleport(*obj, w0, tc);
    const NewtonCollinearity nc = newton_collinearity(*obj, r.x_plus);
    const bool ok = r.converged && nc.defined && nc.cosine >= 1 - 1e-4;
    o.passed = o.passed && ok;
    o.detail += std::string(o.detail.empty() ? "" : " ") + name + ": converged=" + (r.converged ? "true" : "false") +
                " iters=" + std::to_string(r.iterations) + " cosine=" + num(nc.cosine);
  }
  return o;
}

Outcome descent_invariants() {
  int runs = 0;
  int monotone_fail = 0;
  int lemma_fail = 0;
  std::mt19937_64 rng(0);
  TeleportConfig tc;
  tc.rho0 = 1.0;
  tc.max_iters = 30;
  for (const ZooEntry& z : objective_zoo(0)) {
    if (!z.smooth) continue;
    const Objective& f = *z.problem.objective;
    for (int rep = 0; rep < 3; ++rep) {
      const Vector w0 = z.sample(rng);
      for (bool tp : {false, true}) {
        const Schedule s = tp ? Schedule::every_other(30) : Schedule::none();
        std::vector<std::pair<StepRule, double>> rules = {{StepRule::armijo_rule(), 0.0}};
        // Fixed steps need a global smoothness constant; the convex zoo members have one.
        if (f.convex()) {
          const double L = f.smoothness(w0);
          for (double frac : {0.5, 1.0, 1.9}) rules.emplace_back(StepRule::fixed(frac / L), L);
        }
        for (const auto& [rule, L] : rules) {
          const Trace t = run(f, w0, rule, s, tc, quiet(30));
          ++runs;
          for (std::size_t k = 0; k + 1 < t.records.size(); ++k) {
            const TraceRecord& r = t.records[k];
            const double next = t.records[k + 1].f;
            if (next > r.f + 1e-10) ++monotone_fail;
            if (rule.kind == StepKind::kFixed) {
              const double eta = rule.eta;
              const double rhs = r.f_plus - eta * (1 - eta * L / 2) * r.grad_norm * r.grad_norm;
              if (next > rhs + 1e-8 * (1 + std::abs(r.f))) ++lemma_fail;
            }
          }
        }
      }
    }
  }
  Outcome o;
  o.passed = monotone_fail == 0 && lemma_fail == 0;
  o.detail = std::to_string(runs) + " runs, monotonicity violations=" + std::to_string(monotone_fail) +
             ", descent-lemma violations=" + std::to_string(lemma_fail);
  return o;
}

Outcome acceleration_trend() {
  auto data = std::make_shared<Dataset>(make_synthetic_binary(200, 20, 0));
  standardize(*data);
  const LogisticRegression f(data, 1e-3);
  const Vector w0 = Vector::Zero(20);
  const int K = 400;
  RunOptions keep;
  keep.keep_teleport_points = true;
  // The default rho0 = 0.1 does not reach the level set within 50 iterations here.
  TeleportConfig tc;
  tc.rho0 = 1.0;
  tc.max_iters = 1000;
  const Trace plain = run(f, w0, StepRule::armijo_rule(), Schedule::none(), tc, quiet(K));
  const Trace tp = run(f, w0, StepRule::armijo_rule(), Schedule::every_other(K), tc, quiet(K), keep);
  int moved = 0;
  for (const TraceRecord& r : tp.records) {
    if (r.teleport && r.teleport_converged && r.teleport_iters > 0) ++moved;
  }

  Problem prob{"logreg", std::make_shared<LogisticRegression>(data, 1e-3), w0, 1e-3};
  const ReferenceResult ref = reference_solution(prob, K);
  const double f_star = std::min({ref.f_star, plain.min_f(), tp.min_f()});
  const double gap_plain = plain.final_f() - f_star;
  const double gap_tp = tp.final_f() - f_star;

  const Trace long_run = run(f, w0, StepRule::armijo_rule(), Schedule::none(), tc, quiet(10 * K));
  RateInputs in;
  in.L = f.smoothness(w0);
  in.L_tilde = 100.0;
  in.mu_tilde = 0.01;
  in.K = K;
  in.schedule = Schedule::every_other(K);
  in.R = estimate_radius(f, long_run.w_final, w0, tp.teleport_points, f.value(w0), 100, 0);
  const std::vector<double> gaps = trace_gaps(tp, f_star);
  int violation = -1;
  for (int k = 1; k <= K && violation < 0; ++k) {
    const double b = every_other_closed_form(in.R, in.L, in.L_tilde, in.mu_tilde, k);
    if (gaps[static_cast<std::size_t>(k)] > b * (1 + 1e-9)) violation = k;
  }
  const int general = first_envelope_violation(gaps, combined_ls_bound(in).general, 1e-9);
  Outcome o;
  o.passed = gap_tp <= gap_plain && violation < 0 && general < 0;
  o.detail = std::to_string(moved) + " converged teleports; final gap teleport=" + num(gap_tp) + " plain=" + num(gap_plain) + "; gap at k=25 teleport=" +
             num(gaps[25]) + " plain=" + num(plain.records[25].f - f_star) + "; k=50 teleport=" + num(gaps[50]) +
             " plain=" + num(plain.records[50].f - f_star) + "; R=" + num(in.R) +
             " closed-form violation k=" + std::to_string(violation) + " general k=" + std::to_string(general);
  return o;
}

Outcome merit_soundness() {
  std::mt19937_64 rng(0);
  const TeleportConfig tc;
  int steps = 0;
  int unsound = 0;
  int exhausted = 0;
  for (const ZooEntry& z : objective_zoo(0)) {
    if (!z.smooth) continue;
    const Objective& f = *z.problem.objective;
    for (int rep = 0; rep < 10; ++rep) {
      const Vector w = z.sample(rng);
      const TeleportResult r = solve_teleport(f, w, tc, true);
      if (r.line_search_failed) ++exhausted;
      const double level = f.value(w);
      for (std::size_t t = 0; t + 1 < r.iterates.size(); ++t) {
        const Vector& x = r.iterates[t];
        const TeleportIterate& it = r.trace[t + 1];
        if (it.backtracks >= tc.max_backtracks) ++exhausted;
        // Recompute the accepted step independently from the recorded rho.
        const SqpStep s = sqp_step(f, x, level, it.rho, tc.variant);
        const ValueGrad vg = f.value_grad(x);
        const double gamma =
            penalty_strength(s.q, s.v, vg.grad.squaredNorm(), vg.value - level, it.rho, tc.gamma_safety, tc.variant);
        const bool same = (s.x_next - r.iterates[t + 1]).norm() <= 1e-12 * (1 + x.norm());
        if (!same || !ls_condition(f, s, x, level, gamma, it.rho, tc.armijo_relax, tc.variant)) ++unsound;
        ++steps;
      }
    }
  }
  Outcome o;
  o.passed = steps > 0 && unsound == 0 && exhausted == 0;
  o.detail = std::to_string(steps) + " accepted steps, unsound=" + std::to_string(unsound) +
             ", exhausted line searches=" + std::to_string(exhausted);
  return o;
}

Outcome relu_probe() {
  auto data = std::make_shared<Dataset>(make_synthetic_binary(100, 5, 0));
  standardize(*data);
  std::string detail;
  bool ok = true;
  for (double wd : {0.0, 1e-2}) {
    const Mlp f(data, {16}, Activation::kRelu, wd);
    const kernels::MlpShape& s = f.shape();
    const Vector w = f.kaiming_init(0);
    // W1 -> W1 / alpha, W2 -> alpha W2 keeps the network output fixed.
    auto along = [&](double alpha) {
      Vector v = w;
      v.segment(s.offset(1), s.sizes[1] * s.sizes[0]) /= alpha;
      v.segment(s.offset(2), s.sizes[2] * s.sizes[1]) *= alpha;
      return v;
    };
    const double f1 = f.value(w);
    const double g1 = f.gradient(w).norm();
    const Vector w01 = along(0.1);
    const double f01 = f.value(w01);
    const double g01 = f.gradient(w01).norm();
    if (wd == 0.0) {
      const bool pass = std::abs(f01 - f1) <= 1e-10 && g01 >= 10.0 * g1;
      ok = ok && pass;
      detail += "wd=0: |df|=" + num(std::abs(f01 - f1)) + " grad ratio=" + num(g01 / g1) +
                " (alpha=0.01: " + num(f.gradient(along(0.01)).norm() / g1) + ")";
    } else {
      bool increasing = true;
      double prev = f1;
      for (double alpha = 0.9; alpha > 0.1 - 1e-12; alpha -= 0.1) {
        const double cur = f.value(along(alpha));
        increasing = increasing && cur > prev;
        prev = cur;
      }
      ok = ok && increasing;
      detail += "; wd=1e-2: f " + num(f1) + " -> " + num(f01) + (increasing ? " strictly increasing" : " not monotone");
    }
  }
  return {ok, detail};
}

Outcome golden_suite() {
  const std::string golden_summary = read_file(kTestDir + "/golden/summary.csv");
  const std::string golden_profile = read_file(kTestDir + "/golden/profile.csv");
  SuiteSpec spec = suite_from_config(Config::load(kTestDir + "/golden/suite.toml"));
  const auto records = run_suite(spec.problems, spec.methods, spec.options);
  const ProfileTable table = performance_profile(records, spec.tau, spec.budgets);
  std::ostringstream summary;
  std::ostringstream profile;
  write_summary_csv(summary, records);
  write_profile_csv(profile, table);
  bool monotone = true;
  for (const auto& row : table.proportion) {
    for (std::size_t b = 0; b < row.size(); ++b) {
      monotone = monotone && row[b] >= 0.0 && row[b] <= 1.0 && (b == 0 || row[b] >= row[b - 1]);
    }
  }
  Outcome o;
  const bool s_ok = summary.str() == golden_summary;
  const bool p_ok = profile.str() == golden_profile;
  o.passed = s_ok && p_ok && monotone;
  o.detail = std::to_string(spec.problems.size()) + "x" + std::to_string(spec.methods.size()) + " suite, summary " +
             (s_ok ? "identical" : "differs") + ", profile " + (p_ok ? "identical" : "differs") + ", proportions " +
             (monotone ? "monotone" : "not monotone");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::size_t> known;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--known-failure") known.insert(std::stoul(argv[++i]));
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"derivative correctness", derivatives},
      {"booth one-step convergence after teleport", booth_one_step},
      {"isotropic quadratic tightness", isotropic_tightness},
      {"h2 identity construction", h2_identity},
      {"newton breakdown on h2 chain", newton_breakdown},
      {"newton collinearity after teleport", collinearity},
      {"descent invariants", descent_invariants},
      {"teleport acceleration on logreg", acceleration_trend},
      {"merit line-search soundness", merit_soundness},
      {"relu rescaling probe", relu_probe},
      {"golden profile suite", golden_suite},
  };
  int failures = 0;
  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const bool expected_fail = known.count(i + 1) > 0;
    if (!o.passed) ++failures;
    if (!o.passed && !expected_fail) ++unexpected;
    std::cout << (o.passed ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << o.detail
              << (!o.passed && expected_fail ? " (known failure)" : "") << std::endl;
  }
  std::cout << criteria.size() - static_cast<std::size_t>(failures) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return unexpected;
}
