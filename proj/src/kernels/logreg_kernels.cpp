#include <vector>

#include "block_rows.hpp"
#include "levelset/kernels.hpp"

namespace levelset::kernels {

namespace serial {

ValueGrad logreg_value_grad(const Matrix& X, const Vector& y, const Vector& w,
                            std::span<const Index> rows) {
  detail::check_rows(X.rows(), rows);
  const Index m = detail::selection_size(X.rows(), rows);
  const Index p = X.cols();
  ValueGrad out{0.0, Vector::Zero(p)};
  for (Index j = 0; j < m; ++j) {
    const Index i = rows.empty() ? j : rows[static_cast<std::size_t>(j)];
    double margin = 0.0;
    for (Index c = 0; c < p; ++c) margin += X(i, c) * w[c];
    const double z = y[i] * margin;
    out.value += logistic_loss(z);
    const double coef = -y[i] * sigmoid(-z);
    for (Index c = 0; c < p; ++c) out.grad[c] += coef * X(i, c);
  }
  out.value /= static_cast<double>(m);
  out.grad /= static_cast<double>(m);
  return out;
}

Vector logreg_hvp(const Matrix& X, const Vector& y, const Vector& w, const Vector& v,
                  std::span<const Index> rows) {
  detail::check_rows(X.rows(), rows);
  const Index m = detail::selection_size(X.rows(), rows);
  const Index p = X.cols();
  Vector out = Vector::Zero(p);
  for (Index j = 0; j < m; ++j) {
    const Index i = rows.empty() ? j : rows[static_cast<std::size_t>(j)];
    double margin = 0.0;
    double xv = 0.0;
    for (Index c = 0; c < p; ++c) {
      margin += X(i, c) * w[c];
      xv += X(i, c) * v[c];
    }
    const double s = sigmoid(y[i] * margin);
    const double coef = s * (1.0 - s) * xv;
    for (Index c = 0; c < p; ++c) out[c] += coef * X(i, c);
  }
  return out / static_cast<double>(m);
}

}  // namespace serial

namespace parallel {

ValueGrad logreg_value_grad(const Matrix& X, const Vector& y, const Vector& w,
                            std::span<const Index> rows) {
  detail::check_rows(X.rows(), rows);
  const Index m = detail::selection_size(X.rows(), rows);
  const Index nb = detail::num_blocks(m);
  std::vector<double> values(static_cast<std::size_t>(nb), 0.0);
  std::vector<Vector> grads(static_cast<std::size_t>(nb));

#pragma omp parallel for schedule(static)
  for (Index b = 0; b < nb; ++b) {
    const detail::RowBlock blk = detail::block(b, m, rows);
    const Matrix xb = detail::gather_columns(X, blk);
    Vector yb(blk.size);
    for (Index j = 0; j < blk.size; ++j) yb[j] = y[blk[j]];
    const Vector z = (xb.transpose() * w).cwiseProduct(yb);
    Vector coef(blk.size);
    double value = 0.0;
    for (Index j = 0; j < blk.size; ++j) {
      value += logistic_loss(z[j]);
      coef[j] = -yb[j] * sigmoid(-z[j]);
    }
    values[static_cast<std::size_t>(b)] = value;
    grads[static_cast<std::size_t>(b)] = xb * coef;
  }

  ValueGrad out{0.0, Vector::Zero(X.cols())};
  for (Index b = 0; b < nb; ++b) {
    out.value += values[static_cast<std::size_t>(b)];
    out.grad += grads[static_cast<std::size_t>(b)];
  }
  out.value /= static_cast<double>(m);
  out.grad /= static_cast<double>(m);
  return out;
}

Vector logreg_hvp(const Matrix& X, const Vector& y, const Vector& w, const Vector& v,
                  std::span<const Index> rows) {
  detail::check_rows(X.rows(), rows);
  const Index m = detail::selection_size(X.rows(), rows);
  const Index nb = detail::num_blocks(m);
  std::vector<Vector> parts(static_cast<std::size_t>(nb));

#pragma omp parallel for schedule(static)
  for (Index b = 0; b < nb; ++b) {
    const detail::RowBlock blk = detail::block(b, m, rows);
    const Matrix xb = detail::gather_columns(X, blk);
    const Vector margin = xb.transpose() * w;
    const Vector xv = xb.transpose() * v;
    Vector coef(blk.size);
    for (Index j = 0; j < blk.size; ++j) {
      const double s = sigmoid(y[blk[j]] * margin[j]);
      coef[j] = s * (1.0 - s) * xv[j];
    }
    parts[static_cast<std::size_t>(b)] = xb * coef;
  }

  Vector out = Vector::Zero(X.cols());
  for (const Vector& part : parts) out += part;
  return out / static_cast<double>(m);
}

}  // namespace parallel

}  // namespace levelset::kernels
