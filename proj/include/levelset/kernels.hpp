#pragma once

// Per-sample loss kernels for the data-backed objectives.
//
// Each kernel has two implementations with identical contracts:
//   serial::   one sample at a time, plain loops. Kept as the reference for tests.
//   parallel:: fixed-size sample blocks evaluated with OpenMP, partial sums reduced in
//              block order. Results do not depend on the thread count.
//
// `rows` selects a subset of samples (mini-batch); an empty span means all samples.
// Returned values are means over the selected samples and exclude regularization.

#include <cmath>
#include <span>
#include <vector>

#include "levelset/types.hpp"

namespace levelset::kernels {

inline constexpr Index kBlockRows = 128;

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + exp(-z)) without overflow.
inline double logistic_loss(double z) { return std::log1p(std::exp(-std::abs(z))) + positive_part(-z); }

inline double softplus(double z) { return positive_part(z) + std::log1p(std::exp(-std::abs(z))); }

enum class Activation { kSoftplus, kRelu };

inline double activate(Activation a, double z) {
  return a == Activation::kRelu ? positive_part(z) : softplus(z);
}
/// ReLU'(0) is 0.
inline double activate_d1(Activation a, double z) {
  return a == Activation::kRelu ? (z > 0.0 ? 1.0 : 0.0) : sigmoid(z);
}
inline double activate_d2(Activation a, double z) {
  if (a == Activation::kRelu) return 0.0;
  const double s = sigmoid(z);
  return s * (1.0 - s);
}

struct ValueGrad {
  double value = 0.0;
  Vector grad;
};

/// Fully-connected network without bias terms. Hidden layers use `activation`; the output
/// layer is linear. Parameters are the column-major weight matrices W_1..W_L concatenated,
/// W_l of shape sizes[l] x sizes[l-1].
struct MlpShape {
  std::vector<Index> sizes;
  Activation activation = Activation::kSoftplus;
  /// True: one logit with labels in {-1,+1}. False: softmax cross-entropy over class indices.
  bool binary = true;

  Index num_layers() const { return static_cast<Index>(sizes.size()) - 1; }
  Index num_params() const;
  /// Offset of W_l (1-based layer index) in the flat parameter vector.
  Index offset(Index layer) const;
};

namespace serial {
ValueGrad logreg_value_grad(const Matrix& X, const Vector& y, const Vector& w,
                            std::span<const Index> rows = {});
Vector logreg_hvp(const Matrix& X, const Vector& y, const Vector& w, const Vector& v,
                  std::span<const Index> rows = {});

ValueGrad mlp_value_grad(const MlpShape& shape, const Vector& params, const Matrix& X,
                         const Vector& y, std::span<const Index> rows = {});
Vector mlp_hvp(const MlpShape& shape, const Vector& params, const Matrix& X, const Vector& y,
               const Vector& v, std::span<const Index> rows = {});
/// Network outputs, one column per sample.
Matrix mlp_forward(const MlpShape& shape, const Vector& params, const Matrix& X);
}  // namespace serial

namespace parallel {
ValueGrad logreg_value_grad(const Matrix& X, const Vector& y, const Vector& w,
                            std::span<const Index> rows = {});
Vector logreg_hvp(const Matrix& X, const Vector& y, const Vector& w, const Vector& v,
                  std::span<const Index> rows = {});

ValueGrad mlp_value_grad(const MlpShape& shape, const Vector& params, const Matrix& X,
                         const Vector& y, std::span<const Index> rows = {});
Vector mlp_hvp(const MlpShape& shape, const Vector& params, const Matrix& X, const Vector& y,
               const Vector& v, std::span<const Index> rows = {});
}  // namespace parallel

}  // namespace levelset::kernels
