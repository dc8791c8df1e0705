#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <Eigen/LU>

#include "levelset/checks.hpp"
#include "levelset/theory.hpp"

using namespace levelset;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

RunConfig quiet(int K) {
  RunConfig rc;
  rc.max_iters = K;
  rc.record_time = false;
  return rc;
}

Schedule from_members(const std::set<int>& T) {
  Schedule s;
  for (int k : T) {
    if (!s.block_starts.empty() && s.block_starts.back() + s.block_lengths.back() == k) {
      ++s.block_lengths.back();
    } else {
      s.block_starts.push_back(k);
      s.block_lengths.push_back(1);
    }
  }
  return s;
}

// Direct evaluation of sum_{k not in T, 0 < k <= K} r^{n_k}.
double plain_sum(const std::set<int>& T, int K, double r) {
  double s = 0.0;
  for (int k = 1; k <= K; ++k) {
    if (T.count(k)) continue;
    int n = 0;
    for (int i : T) n += (i > k && i < K) ? 1 : 0;
    s += std::pow(r, n);
  }
  return s;
}

}  // namespace

TEST_CASE("convex bound") {
  RateInputs in;
  in.R = 1.0;
  in.L = 1.0;
  in.eta = 1.0;
  in.K = 20;
  const BoundCurve c = convex_bound(in);
  CHECK(c.tag == "convex_fixed_step");
  REQUIRE(c.bound.size() == 21);
  CHECK(c.bound[10] == doctest::Approx(0.2));
  CHECK(c.bound[20] == doctest::Approx(0.5 * c.bound[10]));
  CHECK(c.bound[0] == kNoBound);
  in.L = 4.0;
  in.R = 3.0;
  in.eta = 0.25;
  const BoundCurve d = convex_bound(in);
  CHECK(d.bound[7] == doctest::Approx(2 * 9.0 * 4.0 / 7));
  in.eta = 0.5;
  CHECK_THROWS_AS(convex_bound(in), InvalidArgument);
}

TEST_CASE("strongly convex bounds") {
  RateInputs in;
  in.L = 1.0;
  in.mu = 1.0;
  in.eta = 0.5;
  in.K = 1;
  in.delta0 = 1.0;
  const StronglyConvexBounds b = strongly_convex_bounds(in);
  CHECK(b.nonexpansive.bound[1] == doctest::Approx(0.25));
  CHECK(b.slow.bound[1] == doctest::Approx(1 - 2 * 0.5 * 0.75));

  in.L = 5.0;
  in.mu = 1.0;
  const double best = 2.0 / 6.0;
  auto factor = [&](double eta) {
    in.eta = eta;
    return strongly_convex_bounds(in).nonexpansive.bound[1] * in.mu / in.L;
  };
  CHECK(factor(best) == doctest::Approx(std::pow(4.0 / 6.0, 2)));
  for (double eta : {0.2, 0.3, 0.32, 0.35, 0.38}) CHECK(factor(eta) >= factor(best) - 1e-15);

  in.L = 1.0;
  in.mu = 1e-14;
  in.eta = 1.0;
  in.K = 5;
  CHECK(strongly_convex_bounds(in).slow.bound[5] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("isotropic quadratic is a tightness witness") {
  const Quadratic f(Matrix::Identity(3, 3), Vector::Zero(3));
  const Vector w0 = vec({1.0, 2.0, -1.0});
  for (bool tp : {false, true}) {
    const Trace t = run(f, w0, StepRule::fixed(0.5), tp ? Schedule::every_other(20) : Schedule::none(),
                        TeleportConfig{}, quiet(20));
    RateInputs in;
    in.L = 1.0;
    in.mu = 1.0;
    in.eta = 0.5;
    in.K = 20;
    in.delta0 = f.value(w0);
    const BoundCurve b = strongly_convex_bounds(in).nonexpansive;
    const std::vector<double> gaps = trace_gaps(t, 0.0);
    for (int k = 0; k <= 20; ++k) CHECK(gaps[k] == doctest::Approx(b.bound[k]).epsilon(1e-10));
  }
}

TEST_CASE("stability line-search bound") {
  RateInputs in;
  in.R = 1.5;
  in.L = 2.0;
  in.L_tilde = 3.0;
  in.mu_tilde = 1.0;
  in.K = 12;
  const std::vector<double> gaps(13, 1.0);
  const double base = 2 * in.R * in.R * in.L;
  CHECK(stability_ls_bound(in, gaps) == doctest::Approx(base / 12));

  const double threshold = base * in.mu_tilde / (in.L_tilde - in.mu_tilde);
  in.schedule.block_starts = {5};
  in.schedule.block_lengths = {1};
  std::vector<double> g2(13, 1.0);
  g2[4] = threshold;
  const int M = in.K - 1;
  CHECK(stability_ls_bound(in, g2) == doctest::Approx(base / (M + 1)));

  in.L_tilde = 1.0;
  CHECK(stability_ls_bound(in, g2) == doctest::Approx(0.0));
  CHECK(stability_ratio(1.0, 1.0) == kNoBound);
  CHECK(stability_ratio(4.0, 1.0) == doctest::Approx(4.0 / 3.0));

  in.L_tilde = 3.0;
  in.schedule.block_starts = {0};
  CHECK_THROWS_AS(stability_ls_bound(in, g2), InvalidArgument);
  in.schedule.block_starts = {5};
  CHECK_THROWS_AS(stability_ls_bound(in, std::vector<double>(3, 1.0)), InvalidArgument);
}

TEST_CASE("combined line-search bound") {
  RateInputs in;
  in.L_tilde = 2.0;
  in.mu_tilde = 1.0;
  in.R = 1.0;
  in.L = 1.0;
  in.K = 4;
  in.schedule = Schedule::every_other(4);
  const CombinedLsBounds b = combined_ls_bound(in);
  REQUIRE(b.every_other.has_value());
  CHECK(b.every_other->bound[4] == doctest::Approx(2.0 / 3.0));
  CHECK(b.general.bound[4] == doctest::Approx(2.0 / 3.0));
  CHECK(every_other_closed_form(1.0, 1.0, 2.0, 1.0, 4) == doctest::Approx(2.0 / 3.0));

  CHECK(teleports_after(in.schedule, 0, 4) == 2);
  CHECK(teleports_after(in.schedule, 2, 4) == 1);
  CHECK(teleports_after(in.schedule, 4, 4) == 0);

  in.schedule = Schedule::none();
  in.K = 9;
  const CombinedLsBounds e = combined_ls_bound(in);
  CHECK_FALSE(e.every_other.has_value());
  CHECK(e.general.bound[9] == doctest::Approx(2.0 / 9));

  in.schedule.block_starts = {0};
  in.schedule.block_lengths = {1};
  CHECK_THROWS_AS(combined_ls_bound(in), InvalidArgument);
}

TEST_CASE("every-other closed form matches the general sum") {
  for (double Lt : {1.5, 2.0, 5.0}) {
    for (int K : {2, 6, 20, 50}) {
      RateInputs in;
      in.L_tilde = Lt;
      in.mu_tilde = 1.0;
      in.R = 0.7;
      in.L = 3.0;
      in.K = K;
      in.schedule = Schedule::every_other(K);
      const CombinedLsBounds b = combined_ls_bound(in);
      REQUIRE(b.every_other.has_value());
      CHECK(b.every_other->bound[K] == doctest::Approx(b.general.bound[K]).epsilon(1e-12));
      const std::vector<int> members = in.schedule.members(K);
      const double direct =
          2 * 0.49 * 3.0 / plain_sum(std::set<int>(members.begin(), members.end()), K, Lt / (Lt - 1.0));
      CHECK(b.general.bound[K] == doctest::Approx(direct).epsilon(1e-12));
    }
  }
}

TEST_CASE("empty schedule: combined bound equals the convex bound at eta = 1/L") {
  for (int K : {1, 3, 10, 40}) {
    RateInputs in;
    in.L = 2.5;
    in.R = 1.3;
    in.eta = 1.0 / in.L;
    in.L_tilde = 3.0;
    in.mu_tilde = 1.0;
    in.K = K;
    const BoundCurve c = convex_bound(in);
    const BoundCurve g = combined_ls_bound(in).general;
    for (int k = 1; k <= K; ++k) CHECK(g.bound[k] == doctest::Approx(c.bound[k]).epsilon(1e-12));
  }
}

TEST_CASE("adding a teleport lowers the combined bound exactly when earlier plain steps outweigh it") {
  RateInputs base;
  base.L_tilde = 3.0;
  base.mu_tilde = 1.0;
  const double r = stability_ratio(base.L_tilde, base.mu_tilde);

  // Counterexample to unconditional monotonicity.
  base.K = 2;
  const double before = combined_ls_bound(base).general.bound[2];
  base.schedule = from_members({1});
  const double after = combined_ls_bound(base).general.bound[2];
  CHECK(after > before);

  std::mt19937_64 rng(9);
  int decreases = 0;
  int increases = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int K = 3 + static_cast<int>(uniform_index(rng, 20));
    std::set<int> T;
    for (int k = 1; k < K; ++k) {
      if (uniform_index(rng, 3) == 0) T.insert(k);
    }
    std::vector<int> free;
    for (int k = 1; k < K; ++k) {
      if (!T.count(k)) free.push_back(k);
    }
    if (free.empty()) continue;
    const int j = free[uniform_index(rng, free.size())];

    RateInputs in = base;
    in.K = K;
    in.schedule = from_members(T);
    const double b0 = combined_ls_bound(in).general.bound[K];
    std::set<int> T2 = T;
    T2.insert(j);
    in.schedule = from_members(T2);
    const double b1 = combined_ls_bound(in).general.bound[K];

    double lhs = 0.0;
    for (int k = 1; k < j; ++k) {
      if (T.count(k)) continue;
      int n = 0;
      for (int i : T) n += (i > k && i < K) ? 1 : 0;
      lhs += std::pow(r, n) * (r - 1);
    }
    int nj = 0;
    for (int i : T) nj += (i > j && i < K) ? 1 : 0;
    const double rhs = std::pow(r, nj);
    if (std::abs(lhs - rhs) <= 1e-9 * rhs) continue;
    CHECK((b1 <= b0) == (lhs > rhs));
    (b1 <= b0 ? decreases : increases) += 1;
  }
  CHECK(decreases > 0);
  CHECK(increases > 0);
}

TEST_CASE("fixed-step stability bounds") {
  RateInputs in;
  in.L = 2.0;
  in.L_tilde = 1.5;
  in.mu_tilde = 0.5;
  in.R = 1.0;
  in.K = 10;
  in.eta = 1.0 / (in.L * in.L_tilde);
  in.schedule = Schedule::every_nth(2, 4, in.K);
  in.lambda_sequence.assign(in.K + 1, 0.0);
  const std::vector<double> gaps(in.K + 1, 0.3);
  const FixedStepBounds zero = fixed_step_bounds(in, gaps);
  const double xi = in.eta * (2 - in.L * in.eta);
  const int M = in.K - in.schedule.total();
  CHECK(zero.blockwise.bound[in.K] == doctest::Approx(2.0 / (xi * M)));
  CHECK(zero.combined.bound[in.K] == doctest::Approx(2.0 / (xi * M)));

  for (double lambda : {0.3, 1.0, 1.7, 2.0}) {
    in.lambda_sequence.assign(in.K + 1, lambda);
    const double c = 1.0 - lambda * in.mu_tilde / (in.L * in.L_tilde) * (2 - lambda / in.L);
    const double psi = stability_psi(in, 2, 1);
    CHECK(psi == doctest::Approx((1 - c) / c).epsilon(1e-12));
    CHECK(psi >= 1 - c - 1e-15);
    CHECK(stability_beta(lambda, in.eta, in.L_tilde, in.mu_tilde) == doctest::Approx(1.0 / c));
    const FixedStepBounds b = fixed_step_bounds(in, gaps);
    CHECK(b.blockwise.bound[in.K] <= zero.blockwise.bound[in.K]);
    CHECK(b.combined.bound[in.K] <= zero.combined.bound[in.K]);
  }

  RateInputs plain = in;
  plain.schedule = Schedule::none();
  const FixedStepBounds p = fixed_step_bounds(plain, gaps);
  const BoundCurve conv = convex_bound(plain);
  for (int k = 1; k <= in.K; ++k) {
    CHECK(p.combined.bound[k] == doctest::Approx(conv.bound[k]).epsilon(1e-12));
    CHECK(p.blockwise.bound[k] == doctest::Approx(conv.bound[k]).epsilon(1e-12));
  }

  in.lambda_sequence.assign(in.K + 1, 3.0);
  CHECK_THROWS_AS(fixed_step_bounds(in, gaps), InvalidArgument);
  in.lambda_sequence.assign(in.K + 1, 1.0);
  in.eta = 2.0 / (in.L * in.L_tilde);
  CHECK_THROWS_AS(fixed_step_bounds(in, gaps), InvalidArgument);
}

TEST_CASE("newton collinearity") {
  Matrix H = Matrix::Zero(3, 3);
  H.diagonal() << 1.0, 4.0, 9.0;
  const Quadratic f(H, Vector::Zero(3));
  const NewtonCollinearity at_eig = newton_collinearity(f, vec({0.0, 0.0, 2.0}));
  CHECK(at_eig.defined);
  CHECK(at_eig.cosine == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(at_eig.lambda == doctest::Approx(9.0));

  const NewtonCollinearity off = newton_collinearity(f, vec({1.0, 1.0, 1.0}));
  CHECK(off.defined);
  CHECK(off.cosine < 1.0 - 1e-3);
  // Oracle: cos(H^{-1} g, g) with g = H w.
  const Vector g = H * vec({1.0, 1.0, 1.0});
  const Vector d = H.inverse() * g;
  CHECK(off.cosine == doctest::Approx(d.dot(g) / (d.norm() * g.norm())).epsilon(1e-8));

  const H2Chain h(2, 2);
  const NewtonCollinearity flat = newton_collinearity(h, vec({1.5, 1.5}));
  CHECK_FALSE(flat.defined);

  CHECK_THROWS_AS(newton_collinearity(f, Vector::Zero(3)), InvalidArgument);
}

TEST_CASE("collinearity after teleporting a quadratic") {
  std::mt19937_64 rng(2);
  const Index d = 6;
  Matrix A(d, d);
  for (Index j = 0; j < d; ++j) A.col(j) = gaussian_vector(d, rng);
  const Quadratic f(A.transpose() * A / 6.0 + 0.5 * Matrix::Identity(d, d), Vector::Zero(d));
  TeleportConfig tc;
  tc.rho0 = 10.0;
  tc.max_iters = 500;
  const TeleportResult r = solve_teleport(f, gaussian_vector(d, rng), tc);
  REQUIRE(r.kkt_residual <= 1e-6);
  CHECK(newton_collinearity(f, r.x_plus).cosine >= 1 - 1e-8);
}

TEST_CASE("progress check after teleporting a quadratic") {
  Matrix H = Matrix::Zero(3, 3);
  H.diagonal() << 1.0, 4.0, 9.0;
  const Quadratic f(H, Vector::Zero(3));
  TeleportConfig tc;
  tc.rho0 = 10.0;
  tc.max_iters = 200;
  RateInputs in;
  in.L_tilde = 1.0;
  in.mu_tilde = 1.0;
  const Trace t = run(f, vec({1.0, 1.0, 1.0}), StepRule::armijo_rule(), Schedule::every_nth(1, 4, 8), tc, quiet(8));
  const ProgressReport rep = stability_progress_check(t, in, 0.0, true, 1e-9);
  CHECK(rep.checked == 2);
  CHECK(rep.ok());
  CHECK(t.records[2].f <= 1e-9 * t.records[1].f);

  // Fixed step: delta_{k+1} = (1 - eta lambda)^2 delta_k exactly at an eigenvector.
  in.L_tilde = 1.0;
  const Trace fixed = run(f, vec({1.0, 1.0, 1.0}), StepRule::fixed(0.1), Schedule::every_nth(1, 4, 8), tc, quiet(8));
  const ProgressReport rf = stability_progress_check(fixed, in, 0.0, false, 1e-9);
  CHECK(rf.checked == 2);
  CHECK(rf.ok());

  // A too-optimistic constant is flagged.
  in.L_tilde = 1.0;
  in.mu_tilde = 1.0;
  const Trace plain_tp = run(f, vec({1.0, 1.0, 1.0}), StepRule::fixed(0.01), Schedule::every_nth(1, 4, 8), tc, quiet(8));
  CHECK_FALSE(stability_progress_check(plain_tp, in, 0.0, true, 1e-9).ok());
}

TEST_CASE("progress check skips plain steps") {
  const Quadratic f(Matrix::Identity(2, 2), Vector::Zero(2));
  const Trace t = run(f, vec({1.0, 1.0}), StepRule::fixed(0.1), Schedule::none(), TeleportConfig{}, quiet(5));
  RateInputs in;
  const ProgressReport rep = stability_progress_check(t, in, 0.0, true);
  CHECK(rep.checked == 0);
  CHECK(rep.ok());
}

TEST_CASE("envelope dominance on runs satisfying the hypotheses") {
  auto data = std::make_shared<Dataset>(make_synthetic_binary(80, 5, 4));
  standardize(*data);
  const LogisticRegression f(data, 1e-2);
  const Vector w0 = Vector::Constant(5, 1.0);
  const double L = f.smoothness(w0);
  const int K = 100;
  const Trace ref = run(f, w0, StepRule::armijo_rule(), Schedule::none(), TeleportConfig{}, quiet(2000));
  const double f_star = ref.min_f();
  for (double frac : {0.5, 1.0, 1.5}) {
    const double eta = frac / L;
    const Trace t = run(f, w0, StepRule::fixed(eta), Schedule::none(), TeleportConfig{}, quiet(K));
    RateInputs in;
    in.L = L;
    in.eta = eta;
    in.K = K;
    in.R = (w0 - ref.w_final).norm();
    CHECK(first_envelope_violation(trace_gaps(t, f_star), convex_bound(in), 1e-9) < 0);
  }
  for (const CheckResult& r : run_envelope_checks()) {
    INFO(r.name << " " << r.detail);
    CHECK(r.passed);
  }
}

TEST_CASE("first envelope violation") {
  BoundCurve c{"t", {kNoBound, 1.0, 0.5, 0.25}};
  CHECK(first_envelope_violation({5.0, 0.9, 0.5, 0.2}, c, 0.0) == -1);
  CHECK(first_envelope_violation({5.0, 0.9, 0.6, 0.2}, c, 0.0) == 2);
  CHECK(first_envelope_violation({5.0, 0.9, 0.6, 0.2}, c, 0.3) == -1);
}

TEST_CASE("radius estimate") {
  const Quadratic f(Matrix::Identity(2, 2), Vector::Zero(2));
  const Vector w0 = vec({0.6, 0.8});
  const double R = estimate_radius(f, Vector::Zero(2), w0, {}, f.value(w0), 100, 0);
  CHECK(R == doctest::Approx(1.0).epsilon(1e-8));
  const double R2 = estimate_radius(f, Vector::Zero(2), w0, {vec({3.0, 4.0})}, f.value(w0), 10, 0);
  CHECK(R2 == doctest::Approx(5.0));
}

TEST_CASE("fill_from_trace and bound csv") {
  const Booth f;
  TeleportConfig tc;
  tc.rho0 = 1000.0;
  const Trace t = run(f, vec({-4.0, -3.5}), StepRule::armijo_rule(), Schedule::every_other(4), tc, quiet(4));
  RateInputs in;
  fill_from_trace(in, t);
  CHECK(in.K == 4);
  REQUIRE(in.eta_sequence.size() >= 4);
  CHECK(in.eta_sequence[0] == t.records[0].step_size);
  CHECK(in.lambda_sequence[1] == t.records[1].lambda);

  RateInputs c;
  c.K = 2;
  std::ostringstream out;
  write_bound_csv(out, {convex_bound(c)});
  const std::string s = out.str();
  CHECK(s.rfind("k,bound,theorem_tag\n", 0) == 0);
  CHECK(s.find("2,1,convex_fixed_step") != std::string::npos);
}
