#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "levelset/objectives.hpp"

namespace levelset {

// ---------------------------------------------------------------- quadratic

Quadratic::Quadratic(Matrix H, Vector c) : Objective(H.rows()), H_(std::move(H)), c_(std::move(c)) {
  require(H_.rows() >= 1 && H_.rows() == H_.cols(), "quadratic: H must be square and non-empty");
  require(c_.size() == H_.rows(), "quadratic: c dimension mismatch");
  require(H_.allFinite() && c_.allFinite(), "quadratic: non-finite coefficients");
  const double scale = std::max(1.0, H_.cwiseAbs().maxCoeff());
  require((H_ - H_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale,
          "quadratic: H is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(H_, Eigen::EigenvaluesOnly);
  min_eig_ = es.eigenvalues().minCoeff();
  max_eig_ = es.eigenvalues().maxCoeff();
  require(min_eig_ >= -1e-12 * scale, "quadratic: H is not positive semi-definite");
  min_eig_ = std::max(min_eig_, 0.0);
}

double Quadratic::do_value(const Vector& w) const { return 0.5 * w.dot(H_ * w) + c_.dot(w); }
Vector Quadratic::do_gradient(const Vector& w) const { return H_ * w + c_; }
Vector Quadratic::do_hvp(const Vector&, const Vector& v) const { return H_ * v; }

// ---------------------------------------------------------------- booth

double Booth::do_value(const Vector& w) const {
  const double a = w[0] + 2.0 * w[1] - 7.0;
  const double b = 2.0 * w[0] + w[1] - 5.0;
  return a * a + b * b;
}

Vector Booth::do_gradient(const Vector& w) const {
  const double a = w[0] + 2.0 * w[1] - 7.0;
  const double b = 2.0 * w[0] + w[1] - 5.0;
  Vector g(2);
  g << 2.0 * a + 4.0 * b, 4.0 * a + 2.0 * b;
  return g;
}

Vector Booth::do_hvp(const Vector&, const Vector& v) const {
  Vector out(2);
  out << 10.0 * v[0] + 8.0 * v[1], 8.0 * v[0] + 10.0 * v[1];
  return out;
}

// ---------------------------------------------------------------- goldstein-price
//
// f = A * C with
//   A = 1 + a^2 B,  a = x + y + 1,   B = 19 - 14x + 3x^2 - 14y + 6xy + 3y^2
//   C = 30 + c^2 D, c = 2x - 3y,     D = 18 - 32x + 12x^2 + 48y - 36xy + 27y^2

namespace {

struct GpParts {
  double A, Ax, Ay, Axx, Axy, Ayy;
  double C, Cx, Cy, Cxx, Cxy, Cyy;
};

GpParts gp_parts(double x, double y) {
  const double a = x + y + 1.0;
  const double B = 19.0 - 14.0 * x + 3.0 * x * x - 14.0 * y + 6.0 * x * y + 3.0 * y * y;
  const double Bx = -14.0 + 6.0 * x + 6.0 * y;
  const double By = -14.0 + 6.0 * x + 6.0 * y;
  const double c = 2.0 * x - 3.0 * y;
  const double D = 18.0 - 32.0 * x + 12.0 * x * x + 48.0 * y - 36.0 * x * y + 27.0 * y * y;
  const double Dx = -32.0 + 24.0 * x - 36.0 * y;
  const double Dy = 48.0 - 36.0 * x + 54.0 * y;

  GpParts p{};
  p.A = 1.0 + a * a * B;
  p.Ax = 2.0 * a * B + a * a * Bx;
  p.Ay = 2.0 * a * B + a * a * By;
  p.Axx = 2.0 * B + 4.0 * a * Bx + 6.0 * a * a;
  p.Axy = 2.0 * B + 2.0 * a * By + 2.0 * a * Bx + 6.0 * a * a;
  p.Ayy = 2.0 * B + 4.0 * a * By + 6.0 * a * a;

  p.C = 30.0 + c * c * D;
  p.Cx = 4.0 * c * D + c * c * Dx;
  p.Cy = -6.0 * c * D + c * c * Dy;
  p.Cxx = 8.0 * D + 8.0 * c * Dx + 24.0 * c * c;
  p.Cxy = -12.0 * D + 4.0 * c * Dy - 6.0 * c * Dx - 36.0 * c * c;
  p.Cyy = 18.0 * D - 12.0 * c * Dy + 54.0 * c * c;
  return p;
}

}  // namespace

double GoldsteinPrice::do_value(const Vector& w) const {
  const GpParts p = gp_parts(w[0], w[1]);
  return p.A * p.C;
}

Vector GoldsteinPrice::do_gradient(const Vector& w) const {
  const GpParts p = gp_parts(w[0], w[1]);
  Vector g(2);
  g << p.Ax * p.C + p.A * p.Cx, p.Ay * p.C + p.A * p.Cy;
  return g;
}

Matrix GoldsteinPrice::hessian(const Vector& w) const {
  check_dim(w, "goldstein_price hessian");
  const GpParts p = gp_parts(w[0], w[1]);
  Matrix H(2, 2);
  H(0, 0) = p.Axx * p.C + 2.0 * p.Ax * p.Cx + p.A * p.Cxx;
  H(0, 1) = p.Axy * p.C + p.Ax * p.Cy + p.Ay * p.Cx + p.A * p.Cxy;
  H(1, 0) = H(0, 1);
  H(1, 1) = p.Ayy * p.C + 2.0 * p.Ay * p.Cy + p.A * p.Cyy;
  return H;
}

Vector GoldsteinPrice::do_hvp(const Vector& w, const Vector& v) const { return hessian(w) * v; }

double GoldsteinPrice::smoothness(const Vector& w) const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hessian(w), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------- h2 chain

double huber2(double x) {
  if (std::abs(x) < 1.0) {
    const double x2 = x * x;
    return -0.125 * x2 * x2 + 0.75 * x2 + 0.375;
  }
  return std::abs(x);
}

double huber2_d1(double x) {
  if (std::abs(x) < 1.0) return -0.5 * x * x * x + 1.5 * x;
  return x > 0.0 ? 1.0 : -1.0;
}

double huber2_d2(double x) {
  if (std::abs(x) < 1.0) return 1.5 * (1.0 - x * x);
  return 0.0;
}

H2Chain::H2Chain(Index dimension, Index active) : Objective(dimension), active_(active) {
  require(dimension >= 1, "h2_chain: dimension must be >= 1");
  require(active >= 1 && active <= dimension, "h2_chain: active coordinates must be in [1, d]");
}

double H2Chain::do_value(const Vector& w) const {
  double f = 0.0;
  for (Index i = 0; i < active_; ++i) f += huber2(w[i]);
  return f;
}

Vector H2Chain::do_gradient(const Vector& w) const {
  Vector g = Vector::Zero(w.size());
  for (Index i = 0; i < active_; ++i) g[i] = huber2_d1(w[i]);
  return g;
}

Vector H2Chain::do_hvp(const Vector& w, const Vector& v) const {
  Vector out = Vector::Zero(w.size());
  for (Index i = 0; i < active_; ++i) out[i] = huber2_d2(w[i]) * v[i];
  return out;
}

// ---------------------------------------------------------------- distance counterexample

double huber(double x, double delta) {
  const double ax = std::abs(x);
  if (ax <= delta) return 0.5 * x * x;
  return delta * (ax - 0.5 * delta);
}

namespace {
double huber_d1(double x, double delta) {
  if (std::abs(x) <= delta) return x;
  return x > 0.0 ? delta : -delta;
}
double huber_d2(double x, double delta) { return std::abs(x) < delta ? 1.0 : 0.0; }
}  // namespace

DistanceCounterexample::DistanceCounterexample(double eps, double alpha)
    : Objective(2), eps_(eps), alpha_(alpha) {
  require(eps > 0.0 && alpha > 0.0, "distance_counterexample: eps and alpha must be positive");
  require(eps < alpha, "distance_counterexample: requires eps < alpha");
}

double DistanceCounterexample::do_value(const Vector& w) const {
  const double x = w[0];
  const double y = w[1];
  double f = huber(x, 1.0) + huber(y, eps_);
  if (y >= alpha_) f += 0.5 * (y - alpha_) * (y - alpha_);
  return f;
}

Vector DistanceCounterexample::do_gradient(const Vector& w) const {
  const double x = w[0];
  const double y = w[1];
  Vector g(2);
  g[0] = huber_d1(x, 1.0);
  g[1] = huber_d1(y, eps_) + (y >= alpha_ ? y - alpha_ : 0.0);
  return g;
}

Vector DistanceCounterexample::do_hvp(const Vector& w, const Vector& v) const {
  const double y = w[1];
  Vector out(2);
  out[0] = huber_d2(w[0], 1.0) * v[0];
  out[1] = (huber_d2(y, eps_) + (y > alpha_ ? 1.0 : 0.0)) * v[1];
  return out;
}

}  // namespace levelset
