#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "levelset/objectives.hpp"

namespace levelset {

// ---------------------------------------------------------------- logistic regression

LogisticRegression::LogisticRegression(std::shared_ptr<const Dataset> data, double weight_decay)
    : Objective(data ? data->num_features() : 0), data_(std::move(data)), weight_decay_(weight_decay) {
  require(data_ != nullptr, "logreg: dataset required");
  validate(*data_);
  require(data_->label_kind == LabelKind::kBinary, "logreg: labels must be binary (-1/+1)");
  require(weight_decay_ >= 0.0 && std::isfinite(weight_decay_), "logreg: weight decay must be >= 0");
  const Matrix gram = data_->features.transpose() * data_->features;
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  smoothness_ = es.eigenvalues().maxCoeff() / (4.0 * static_cast<double>(data_->num_samples())) +
                weight_decay_;
}

double LogisticRegression::do_value(const Vector& w) const { return do_value_grad(w).value; }
Vector LogisticRegression::do_gradient(const Vector& w) const { return do_value_grad(w).grad; }

ValueGrad LogisticRegression::do_value_grad(const Vector& w) const {
  return do_batch_value_grad(w, {});
}

ValueGrad LogisticRegression::do_batch_value_grad(const Vector& w, std::span<const Index> rows) const {
  ValueGrad out = kernels::parallel::logreg_value_grad(data_->features, data_->labels, w, rows);
  out.value += 0.5 * weight_decay_ * w.squaredNorm();
  out.grad += weight_decay_ * w;
  return out;
}

Vector LogisticRegression::do_hvp(const Vector& w, const Vector& v) const {
  return kernels::parallel::logreg_hvp(data_->features, data_->labels, w, v) + weight_decay_ * v;
}

// ---------------------------------------------------------------- mlp

namespace {
kernels::MlpShape make_shape(const Dataset& data, const std::vector<Index>& hidden, Activation act) {
  kernels::MlpShape s;
  s.activation = act;
  s.binary = data.label_kind == LabelKind::kBinary;
  s.sizes.push_back(data.num_features());
  for (Index h : hidden) {
    require(h >= 1, "mlp: hidden widths must be >= 1");
    s.sizes.push_back(h);
  }
  s.sizes.push_back(s.binary ? 1 : data.num_classes);
  return s;
}
}  // namespace

Mlp::Mlp(std::shared_ptr<const Dataset> data, std::vector<Index> hidden, Activation activation,
         double weight_decay)
    : Objective([&] {
        require(data != nullptr, "mlp: dataset required");
        return make_shape(*data, hidden, activation).num_params();
      }()),
      data_(std::move(data)),
      shape_(make_shape(*data_, hidden, activation)),
      weight_decay_(weight_decay) {
  validate(*data_);
  require(weight_decay_ >= 0.0 && std::isfinite(weight_decay_), "mlp: weight decay must be >= 0");
}

double Mlp::do_value(const Vector& w) const { return do_value_grad(w).value; }
Vector Mlp::do_gradient(const Vector& w) const { return do_value_grad(w).grad; }

ValueGrad Mlp::do_value_grad(const Vector& w) const { return do_batch_value_grad(w, {}); }

ValueGrad Mlp::do_batch_value_grad(const Vector& w, std::span<const Index> rows) const {
  ValueGrad out = kernels::parallel::mlp_value_grad(shape_, w, data_->features, data_->labels, rows);
  out.value += 0.5 * weight_decay_ * w.squaredNorm();
  out.grad += weight_decay_ * w;
  return out;
}

Vector Mlp::do_hvp(const Vector& w, const Vector& v) const {
  return kernels::parallel::mlp_hvp(shape_, w, data_->features, data_->labels, v) + weight_decay_ * v;
}

double Mlp::smoothness(const Vector& w) const {
  check_dim(w, "mlp smoothness");
  return std::abs(power_iteration([&](const Vector& v) { return do_hvp(w, v); }, dimension(), 0,
                                  1e-8, 500));
}

Matrix Mlp::outputs(const Vector& w) const {
  check_dim(w, "mlp outputs");
  return kernels::serial::mlp_forward(shape_, w, data_->features);
}

Vector Mlp::kaiming_init(std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  Vector w(dimension());
  for (Index l = 1; l <= shape_.num_layers(); ++l) {
    const Index fan_in = shape_.sizes[static_cast<std::size_t>(l - 1)];
    const Index count = shape_.sizes[static_cast<std::size_t>(l)] * fan_in;
    const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (Index j = 0; j < count; ++j) w[shape_.offset(l) + j] = scale * standard_normal(rng);
  }
  return w;
}

}  // namespace levelset
