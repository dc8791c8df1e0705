#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/SVD>

#include "levelset/checks.hpp"
#include "levelset/dataset.hpp"
#include "levelset/objectives.hpp"

using namespace levelset;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Quadratic diag28() {
  Matrix H = Matrix::Zero(2, 2);
  H(0, 0) = 2.0;
  H(1, 1) = 8.0;
  return Quadratic(H, Vector::Zero(2));
}

double sigmoid_ref(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::shared_ptr<Dataset> binary_data(Index n, Index p, std::uint64_t seed) {
  auto d = std::make_shared<Dataset>(make_synthetic_binary(n, p, seed));
  standardize(*d);
  return d;
}

}  // namespace

TEST_CASE("quadratic diag(2,8) is x^2 + 4y^2") {
  const Quadratic q = diag28();
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const Vector w = gaussian_vector(2, rng);
    CHECK(q.value(w) == doctest::Approx(w[0] * w[0] + 4 * w[1] * w[1]).epsilon(1e-14));
  }
  const Vector g = q.gradient(vec({std::sqrt(2.0), std::sqrt(2.0) / 2}));
  CHECK(g[0] == doctest::Approx(2 * std::sqrt(2.0)));
  CHECK(g[1] == doctest::Approx(4 * std::sqrt(2.0)));
  CHECK(g.squaredNorm() == doctest::Approx(40.0));
  const Vector v = vec({0.3, -1.2});
  CHECK((q.hvp(vec({5.0, 1.0}), v) - q.hessian() * v).norm() == 0.0);
  CHECK(q.smoothness(Vector::Zero(2)) == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("analytic test functions at reference points") {
  const Booth booth;
  CHECK(booth.value(vec({1.0, 3.0})) == 0.0);
  CHECK(booth.value(vec({0.0, 0.0})) == 74.0);
  CHECK(booth.gradient(vec({1.0, 3.0})).norm() == 0.0);

  const GoldsteinPrice gp;
  CHECK(gp.value(vec({0.0, -1.0})) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(gp.gradient(vec({0.0, -1.0})).norm() < 1e-10);

  const H2Chain h1(1, 1);
  CHECK(h1.value(vec({0.0})) == doctest::Approx(3.0 / 8.0));
  CHECK(h1.value(vec({2.0})) == doctest::Approx(2.0));
  CHECK(h1.gradient(vec({0.5}))[0] == doctest::Approx(0.6875).epsilon(1e-15));
  CHECK(h1.gradient(vec({0.0}))[0] == 0.0);
  CHECK(h1.hvp(vec({2.0}), vec({1.0}))[0] == 0.0);
}

TEST_CASE("h2 is C2 across the transition at |x| = 1") {
  for (double s : {-1.0, 1.0}) {
    const double lo = s * (1.0 - 1e-9);
    const double hi = s * (1.0 + 1e-9);
    CHECK(huber2(lo) == doctest::Approx(huber2(hi)).epsilon(1e-8));
    CHECK(huber2_d1(lo) == doctest::Approx(huber2_d1(hi)).epsilon(1e-8));
    CHECK(std::abs(huber2_d2(lo) - huber2_d2(hi)) < 1e-8);
  }
}

TEST_CASE("distance counterexample matches its piecewise definition") {
  const DistanceCounterexample f(0.1, 1.0);
  auto g = [](double x, double d) { return std::abs(x) <= d ? 0.5 * x * x : d * (std::abs(x) - d / 2); };
  for (const Vector& w : {vec({0.5, 0.05}), vec({3.0, -2.0}), vec({-0.2, 1.5})}) {
    const double extra = w[1] >= 1.0 ? 0.5 * (w[1] - 1.0) * (w[1] - 1.0) : 0.0;
    CHECK(f.value(w) == doctest::Approx(g(w[0], 1.0) + g(w[1], 0.1) + extra).epsilon(1e-14));
  }
}

TEST_CASE("logistic regression hvp for a single sample") {
  auto data = std::make_shared<Dataset>();
  data->features = Matrix(1, 3);
  data->features << 0.5, -1.0, 2.0;
  data->labels = vec({-1.0});
  const LogisticRegression f(data, 0.0);
  const Vector w = vec({0.3, 0.1, -0.4});
  const Vector v = vec({1.0, 2.0, -0.5});
  const Vector x = data->features.row(0).transpose();
  const double s = sigmoid_ref(-1.0 * x.dot(w));
  const Vector expected = s * (1 - s) * x.dot(v) * x;
  CHECK((f.hvp(w, v) - expected).norm() < 1e-14);
  CHECK(f.value(w) == doctest::Approx(std::log1p(std::exp(x.dot(w)))).epsilon(1e-14));
}

TEST_CASE("logistic loss is stable for large margins") {
  auto data = std::make_shared<Dataset>();
  data->features = Matrix(2, 1);
  data->features << 1.0, -1.0;
  data->labels = vec({1.0, 1.0});
  const LogisticRegression f(data, 0.0);
  const double v = f.value(vec({800.0}));
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(400.0).epsilon(1e-12));
}

TEST_CASE("logreg smoothness is ||X||^2 / (4n) + lambda") {
  auto data = binary_data(40, 5, 2);
  const LogisticRegression f(data, 0.05);
  const Eigen::JacobiSVD<Matrix> svd(data->features);
  const double op = svd.singularValues()[0];
  CHECK(f.smoothness(Vector::Zero(5)) == doctest::Approx(op * op / (4.0 * 40) + 0.05).epsilon(1e-10));
}

TEST_CASE("construction errors") {
  Matrix asym(2, 2);
  asym << 1.0, 0.5, 0.0, 1.0;
  CHECK_THROWS_AS(Quadratic(asym, Vector::Zero(2)), InvalidArgument);
  Matrix indef(2, 2);
  indef << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(Quadratic(indef, Vector::Zero(2)), InvalidArgument);
  CHECK_THROWS_AS(DistanceCounterexample(1.0, 0.5), InvalidArgument);
  CHECK_THROWS_AS(H2Chain(0, 0), InvalidArgument);
  CHECK_THROWS_AS(LogisticRegression(binary_data(10, 2, 0), -1.0), InvalidArgument);
  const Booth b;
  CHECK_THROWS_AS(b.value(Vector::Zero(3)), InvalidArgument);
  CHECK_THROWS_AS(b.hvp(Vector::Zero(2), Vector::Zero(3)), InvalidArgument);
}

TEST_CASE("coercivity flags") {
  auto data = binary_data(20, 3, 1);
  CHECK_FALSE(Mlp(data, {4}, Activation::kRelu, 0.0).coercive());
  CHECK(Mlp(data, {4}, Activation::kRelu, 1e-2).coercive());
  CHECK_FALSE(LogisticRegression(data, 0.0).coercive());
  CHECK(H2Chain(3, 3).coercive());
  CHECK_FALSE(H2Chain(3, 1).coercive());
}

TEST_CASE("build_objective dispatches on kind") {
  ObjectiveSpec spec;
  spec.kind = parse_objective_kind("h2_chain");
  spec.dimension = 4;
  const ObjectivePtr f = build_objective(spec);
  CHECK(f->dimension() == 4);
  CHECK(f->name() == "h2_chain");
  CHECK_THROWS_AS(parse_objective_kind("rosenbrock"), InvalidArgument);
  const EvalBundle e = evaluate(f, Vector::Constant(4, 2.0));
  CHECK(e.value == doctest::Approx(8.0));
  CHECK(e.gradient.size() == 4);
  CHECK(e.hvp(Vector::Ones(4)).norm() == 0.0);
}

TEST_CASE("finite-difference oracles") {
  const Booth booth;
  const Vector z = Vector::Zero(2);
  CHECK(rel_error(fd_gradient_oracle(booth, z, 1e-5), booth.gradient(z)) <= 1e-6);

  const Quadratic q = diag28();
  const Vector w = vec({0.7, -1.3});
  CHECK((fd_gradient_oracle(q, w, 1e-3) - q.gradient(w)).norm() < 1e-9);
  const Vector v = vec({1.0, 2.0});
  CHECK((fd_hvp_oracle(q, w, v, 1e-3) - q.hessian() * v).norm() < 1e-9);

  const H2Chain h1(1, 1);
  CHECK(fd_gradient_oracle(h1, vec({0.5}), 1e-5)[0] == doctest::Approx(0.6875).epsilon(1e-8));
  CHECK(std::abs(fd_hvp_oracle(h1, vec({2.0}), vec({1.0}), 1e-5)[0]) < 1e-12);

  auto data = binary_data(30, 4, 3);
  const Mlp mlp(data, {5}, Activation::kSoftplus, 1e-3);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 5; ++i) {
    const Vector p = mlp.kaiming_init(static_cast<std::uint64_t>(i));
    const Vector dir = gaussian_vector(p.size(), rng);
    CHECK(rel_error(mlp.hvp(p, dir), fd_hvp_oracle(mlp, p, dir, 1e-4)) <= 1e-5);
  }
  CHECK_THROWS_AS(fd_gradient_oracle(booth, z, 0.0), InvalidArgument);
}

TEST_CASE("derivative checks over the smooth zoo") {
  for (const CheckResult& r : run_derivative_checks(100, 0)) {
    INFO(r.name << " " << r.detail);
    CHECK(r.passed);
  }
}

TEST_CASE("relu mlp gradient away from kinks") {
  auto data = binary_data(30, 4, 5);
  const Mlp f(data, {6}, Activation::kRelu, 0.0);
  const kernels::MlpShape& s = f.shape();
  std::mt19937_64 rng(11);
  int checked = 0;
  for (int i = 0; i < 100; ++i) {
    const Vector w = f.kaiming_init(static_cast<std::uint64_t>(100 + i));
    const Eigen::Map<const Matrix> W1(w.data() + s.offset(1), s.sizes[1], s.sizes[0]);
    const Matrix Z = W1 * data->features.transpose();
    if (Z.cwiseAbs().minCoeff() < 1e-3) continue;
    ++checked;
    CHECK(rel_error(f.gradient(w), fd_gradient_oracle(f, w, 1e-6)) <= 1e-5);
    const Vector v = gaussian_vector(w.size(), rng);
    CHECK(rel_error(f.hvp(w, v), fd_hvp_oracle(f, w, v, 1e-6)) <= 1e-5);
  }
  CHECK(checked >= 10);
}

TEST_CASE("relu mlp is positively homogeneous across layers") {
  auto data = binary_data(25, 3, 6);
  const Mlp f(data, {5}, Activation::kRelu, 0.0);
  const kernels::MlpShape& s = f.shape();
  const Vector w = f.kaiming_init(1);
  const Matrix base = f.outputs(w);
  for (double alpha : {0.1, 0.5, 3.0, 17.0}) {
    Vector scaled = w;
    const Index n1 = s.sizes[1] * s.sizes[0];
    scaled.segment(s.offset(1), n1) /= alpha;
    scaled.segment(s.offset(2), s.sizes[2] * s.sizes[1]) *= alpha;
    CHECK((f.outputs(scaled) - base).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, base.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("midpoint convexity of the convex objectives") {
  std::mt19937_64 rng(21);
  for (const ZooEntry& z : objective_zoo(0)) {
    const Objective& f = *z.problem.objective;
    if (!f.convex()) continue;
    INFO(z.problem.name);
    for (int i = 0; i < 200; ++i) {
      const Vector x = z.sample(rng);
      const Vector y = z.sample(rng);
      CHECK(f.value(0.5 * (x + y)) <= 0.5 * (f.value(x) + f.value(y)) + 1e-12);
    }
  }
}

TEST_CASE("gradient norm is non-decreasing along the gradient ray for convex objectives") {
  std::mt19937_64 rng(22);
  for (const ZooEntry& z : objective_zoo(0)) {
    const Objective& f = *z.problem.objective;
    if (!f.convex()) continue;
    INFO(z.problem.name);
    for (int i = 0; i < 20; ++i) {
      const Vector w = z.sample(rng);
      const Vector g = f.gradient(w);
      double prev = g.norm();
      for (int j = 1; j <= 50; ++j) {
        const double cur = f.gradient(w + (j / 50.0) * g).norm();
        CHECK(cur >= prev * (1 - 1e-12) - 1e-14);
        prev = cur;
      }
    }
  }
}

TEST_CASE("serial and parallel kernels agree") {
  auto data = binary_data(700, 6, 8);
  std::mt19937_64 rng(5);
  const Vector w = gaussian_vector(6, rng);
  const Vector v = gaussian_vector(6, rng);
  std::vector<Index> rows;
  for (Index i = 0; i < 700; i += 3) rows.push_back(i);
  for (std::span<const Index> sel : {std::span<const Index>{}, std::span<const Index>(rows)}) {
    const auto a = kernels::serial::logreg_value_grad(data->features, data->labels, w, sel);
    const auto b = kernels::parallel::logreg_value_grad(data->features, data->labels, w, sel);
    CHECK(a.value == doctest::Approx(b.value).epsilon(1e-13));
    CHECK((a.grad - b.grad).norm() <= 1e-13 * (1 + a.grad.norm()));
    const Vector ha = kernels::serial::logreg_hvp(data->features, data->labels, w, v, sel);
    const Vector hb = kernels::parallel::logreg_hvp(data->features, data->labels, w, v, sel);
    CHECK((ha - hb).norm() <= 1e-13 * (1 + ha.norm()));
  }

  for (bool binary : {true, false}) {
    kernels::MlpShape shape;
    shape.sizes = {6, 7, 5, binary ? 1 : 3};
    shape.binary = binary;
    shape.activation = Activation::kSoftplus;
    Dataset d = binary ? *data : make_synthetic_multiclass(700, 6, 3, 8);
    const Vector p = 0.3 * gaussian_vector(shape.num_params(), rng);
    const Vector pv = gaussian_vector(shape.num_params(), rng);
    for (std::span<const Index> sel : {std::span<const Index>{}, std::span<const Index>(rows)}) {
      const auto a = kernels::serial::mlp_value_grad(shape, p, d.features, d.labels, sel);
      const auto b = kernels::parallel::mlp_value_grad(shape, p, d.features, d.labels, sel);
      CHECK(a.value == doctest::Approx(b.value).epsilon(1e-13));
      CHECK((a.grad - b.grad).norm() <= 1e-12 * (1 + a.grad.norm()));
      const Vector ha = kernels::serial::mlp_hvp(shape, p, d.features, d.labels, pv, sel);
      const Vector hb = kernels::parallel::mlp_hvp(shape, p, d.features, d.labels, pv, sel);
      CHECK((ha - hb).norm() <= 1e-12 * (1 + ha.norm()));
    }
  }
}

TEST_CASE("objectives are safe to evaluate concurrently") {
  auto data = binary_data(300, 5, 12);
  const Mlp f(data, {6}, Activation::kSoftplus, 1e-3);
  const Vector w = f.kaiming_init(2);
  const Vector ref = f.gradient(w);
  int mismatches = 0;
#pragma omp parallel for reduction(+ : mismatches)
  for (int i = 0; i < 64; ++i) {
    if ((f.gradient(w) - ref).norm() != 0.0) ++mismatches;
  }
  CHECK(mismatches == 0);
}

TEST_CASE("dataset ingestion") {
  const std::string csv = "x1,x2,label\n1.0,2.0,b\n3.0,4.0,a\n";
  const Dataset d = parse_dataset(csv, "label", false);
  CHECK(d.num_samples() == 2);
  CHECK(d.labels[0] == 1.0);
  CHECK(d.labels[1] == -1.0);
  CHECK(d.features(1, 0) == 3.0);

  CHECK_THROWS_AS(parse_dataset(csv, "target", false), InvalidArgument);
  CHECK_THROWS_AS(parse_dataset("x,label\nfoo,a\n1,b\n", "label", false), InvalidArgument);
  CHECK_THROWS_AS(parse_dataset("x,label\n1,a\n2,a\n", "label", false), InvalidArgument);

  const Dataset m = parse_dataset("x,label\n1,c\n2,a\n3,b\n", "label", false);
  CHECK(m.label_kind == LabelKind::kMulticlass);
  CHECK(m.num_classes == 3);
  CHECK(m.labels[0] == 2.0);
  CHECK(m.labels[1] == 0.0);

  Dataset s = make_synthetic_binary(50, 4, 3);
  s.features.col(2).array() *= 7.0;
  s.features.col(2).array() += 3.0;
  standardize(s);
  for (Index j = 0; j < 4; ++j) {
    const double mean = s.features.col(j).mean();
    const double var = (s.features.col(j).array() - mean).square().mean();
    CHECK(std::abs(mean) <= 1e-12);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("power iteration finds the largest eigenvalue") {
  const Quadratic q = diag28();
  const double lam = power_iteration([&](const Vector& v) { return q.hessian() * v; }, 2, 0);
  CHECK(lam == doctest::Approx(8.0).epsilon(1e-8));
}
