#include <vector>

#include "block_rows.hpp"
#include "levelset/kernels.hpp"

namespace levelset::kernels {

Index MlpShape::num_params() const { return offset(num_layers() + 1); }

Index MlpShape::offset(Index layer) const {
  Index off = 0;
  for (Index l = 1; l < layer; ++l) {
    off += sizes[static_cast<std::size_t>(l)] * sizes[static_cast<std::size_t>(l - 1)];
  }
  return off;
}

namespace {

using ConstMap = Eigen::Map<const Matrix>;
using MutMap = Eigen::Map<Matrix>;

ConstMap weight(const MlpShape& s, const Vector& params, Index l) {
  return ConstMap(params.data() + s.offset(l), s.sizes[static_cast<std::size_t>(l)],
                  s.sizes[static_cast<std::size_t>(l - 1)]);
}

MutMap weight(const MlpShape& s, Vector& params, Index l) {
  return MutMap(params.data() + s.offset(l), s.sizes[static_cast<std::size_t>(l)],
                s.sizes[static_cast<std::size_t>(l - 1)]);
}

void check_shape(const MlpShape& s, const Vector& params, const Matrix& X) {
  require(s.sizes.size() >= 2, "mlp needs at least an input and an output layer");
  require(params.size() == s.num_params(), "mlp parameter dimension mismatch");
  require(X.cols() == s.sizes.front(), "mlp input width does not match features");
  require(!s.binary || s.sizes.back() == 1, "binary mlp must have a single output");
}

// Loss on a single output column. Returns the loss; fills first derivative.
double output_loss(const MlpShape& s, const Vector& o, double label, Vector& d1) {
  if (s.binary) {
    const double t = label * o[0];
    d1.resize(1);
    d1[0] = -label * sigmoid(-t);
    return logistic_loss(t);
  }
  const double mx = o.maxCoeff();
  const Vector e = (o.array() - mx).exp().matrix();
  const double z = e.sum();
  d1 = e / z;
  const auto cls = static_cast<Index>(label);
  d1[cls] -= 1.0;
  return mx + std::log(z) - o[cls];
}

// Output-loss Hessian applied to r.
Vector output_hess(const MlpShape& s, const Vector& o, double label, const Vector& r) {
  if (s.binary) {
    const double t = label * o[0];
    Vector out(1);
    out[0] = sigmoid(t) * sigmoid(-t) * r[0];
    return out;
  }
  const double mx = o.maxCoeff();
  Vector p = (o.array() - mx).exp().matrix();
  p /= p.sum();
  return p.cwiseProduct(r) - p * p.dot(r);
}

// Column-wise versions for the blocked path.
double output_loss_cols(const MlpShape& s, const Matrix& o, const Vector& labels, Matrix& d1) {
  d1.resize(o.rows(), o.cols());
  double total = 0.0;
  Vector col;
  for (Index j = 0; j < o.cols(); ++j) {
    total += output_loss(s, o.col(j), labels[j], col);
    d1.col(j) = col;
  }
  return total;
}

Matrix output_hess_cols(const MlpShape& s, const Matrix& o, const Vector& labels, const Matrix& r) {
  Matrix out(o.rows(), o.cols());
  for (Index j = 0; j < o.cols(); ++j) out.col(j) = output_hess(s, o.col(j), labels[j], r.col(j));
  return out;
}

template <class Fn>
Matrix map_cols(const Matrix& z, Fn fn) {
  return z.unaryExpr(fn);
}

// Forward pass over a block: a[0] = inputs (features x samples), z[l], a[l] for l = 1..L.
struct Forward {
  std::vector<Matrix> z;
  std::vector<Matrix> a;
};

Forward forward_block(const MlpShape& s, const Vector& params, Matrix inputs) {
  const Index L = s.num_layers();
  Forward f;
  f.z.resize(static_cast<std::size_t>(L + 1));
  f.a.resize(static_cast<std::size_t>(L + 1));
  f.a[0] = std::move(inputs);
  for (Index l = 1; l <= L; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    f.z[ul] = weight(s, params, l) * f.a[ul - 1];
    if (l < L) {
      f.a[ul] = map_cols(f.z[ul], [&](double v) { return activate(s.activation, v); });
    } else {
      f.a[ul] = f.z[ul];
    }
  }
  return f;
}

}  // namespace

namespace serial {

// Per-sample reference: every quantity is a vector, loops are explicit.
namespace {

struct SampleState {
  std::vector<Vector> z, a;
};

SampleState forward_sample(const MlpShape& s, const Vector& params, const Vector& x) {
  const Index L = s.num_layers();
  SampleState st;
  st.z.resize(static_cast<std::size_t>(L + 1));
  st.a.resize(static_cast<std::size_t>(L + 1));
  st.a[0] = x;
  for (Index l = 1; l <= L; ++l) {
    const auto ul = static_cast<std::size_t>(l);
    const ConstMap W = weight(s, params, l);
    Vector z = Vector::Zero(W.rows());
    for (Index r = 0; r < W.rows(); ++r) {
      for (Index c = 0; c < W.cols(); ++c) z[r] += W(r, c) * st.a[ul - 1][c];
    }
    st.z[ul] = z;
    if (l < L) {
      Vector act(z.size());
      for (Index r = 0; r < z.size(); ++r) act[r] = activate(s.activation, z[r]);
      st.a[ul] = act;
    } else {
      st.a[ul] = z;
    }
  }
  return st;
}

Vector transpose_times(const ConstMap& W, const Vector& d) {
  Vector out = Vector::Zero(W.cols());
  for (Index r = 0; r < W.rows(); ++r) {
    for (Index c = 0; c < W.cols(); ++c) out[c] += W(r, c) * d[r];
  }
  return out;
}

}  // namespace

ValueGrad mlp_value_grad(const MlpShape& s, const Vector& params, const Matrix& X, const Vector& y,
                         std::span<const Index> rows) {
  check_shape(s, params, X);
  detail::check_rows(X.rows(), rows);
  const Index m = detail::selection_size(X.rows(), rows);
  const Index L = s.num_layers();
  ValueGrad out{0.0, Vector::Zero(params.size())};
  for (Index j = 0; j < m; ++j) {
    const Index i = rows.empty() ? j : rows[static_cast<std::size_t>(j)];
    const SampleState st = forward_sample(s, params, X.row(i).transpose());
    Vector delta;
    out.value += output_loss(s, st.z[static_cast<std::size_t>(L)], y[i], delta);
    for (Index l = L; l >= 1; --l) {
      const auto ul = static_cast<std::size_t>(l);
      MutMap G = weight(s, out.grad, l);
      for (Index r = 0; r < G.rows(); ++r) {
        for (Index c = 0; c < G.cols(); ++c) G(r, c) += delta[r] * st.a[ul - 1][c];
      }
      if (l > 1) {
        Vector back = transpose_times(weight(s, params, l), delta);
        for (Index r = 0; r < back.size(); ++r) back[r] *= activate_d1(s.activation, st.z[ul - 1][r]);
        delta = back;
      }
    }
  }
  out.value /= static_cast<double>(m);
  out.grad /= static_cast<double>(m);
  return out;
}

Vector mlp_hvp(const MlpShape& s, const Vector& params, const Matrix& X, const Vector& y,
               const Vector& v, std::span<const Index> rows) {
  check_shape(s, params, X);
  require(v.size() == params.size(), "mlp hvp direction dimension mismatch");
  detail::check_rows(X.rows(), rows);
  const Index m = detail::selection_size(X.rows(), rows);
  const Index L = s.num_layers();
  Vector out = Vector::Zero(params.size());
  for (Index j = 0; j < m; ++j) {
    const Index i = rows.empty() ? j : rows[static_cast<std::size_t>(j)];
    const SampleState st = forward_sample(s, params, X.row(i).transpose());

    // Directional (R) forward pass.
    std::vector<Vector> rz(static_cast<std::size_t>(L + 1)), ra(static_cast<std::size_t>(L + 1));
    ra[0] = Vector::Zero(X.cols());
    for (Index l = 1; l <= L; ++l) {
      const auto ul = static_cast<std::size_t>(l);
      const ConstMap W = weight(s, params, l);
      const ConstMap V = weight(s, v, l);
      Vector r = Vector::Zero(W.rows());
      for (Index a = 0; a < W.rows(); ++a) {
        for (Index c = 0; c < W.cols(); ++c) r[a] += V(a, c) * st.a[ul - 1][c] + W(a, c) * ra[ul - 1][c];
      }
      rz[ul] = r;
      if (l < L) {
        Vector rr(r.size());
        for (Index a = 0; a < r.size(); ++a) rr[a] = activate_d1(s.activation, st.z[ul][a]) * r[a];
        ra[ul] = rr;
      } else {
        ra[ul] = r;
      }
    }

    // Backward pass and its directional derivative.
    Vector delta;
    output_loss(s, st.z[static_cast<std::size_t>(L)], y[i], delta);
    Vector rdelta = output_hess(s, st.z[static_cast<std::size_t>(L)], y[i], rz[static_cast<std::size_t>(L)]);
    for (Index l = L; l >= 1; --l) {
      const auto ul = static_cast<std::size_t>(l);
      MutMap H = weight(s, out, l);
      for (Index r = 0; r < H.rows(); ++r) {
        for (Index c = 0; c < H.cols(); ++c) {
          H(r, c) += rdelta[r] * st.a[ul - 1][c] + delta[r] * ra[ul - 1][c];
        }
      }
      if (l > 1) {
        const ConstMap W = weight(s, params, l);
        const ConstMap V = weight(s, v, l);
        const Vector u = transpose_times(W, delta);
        const Vector ru = transpose_times(V, delta) + transpose_times(W, rdelta);
        Vector nd(u.size()), nrd(u.size());
        for (Index a = 0; a < u.size(); ++a) {
          const double zz = st.z[ul - 1][a];
          nd[a] = activate_d1(s.activation, zz) * u[a];
          nrd[a] = activate_d2(s.activation, zz) * rz[ul - 1][a] * u[a] +
                   activate_d1(s.activation, zz) * ru[a];
        }
        delta = nd;
        rdelta = nrd;
      }
    }
  }
  return out / static_cast<double>(m);
}

Matrix mlp_forward(const MlpShape& s, const Vector& params, const Matrix& X) {
  check_shape(s, params, X);
  Matrix out(s.sizes.back(), X.rows());
  for (Index i = 0; i < X.rows(); ++i) {
    const SampleState st = forward_sample(s, params, X.row(i).transpose());
    out.col(i) = st.z.back();
  }
  return out;
}

}  // namespace serial

namespace parallel {

ValueGrad mlp_value_grad(const MlpShape& s, const Vector& params, const Matrix& X, const Vector& y,
                         std::span<const Index> rows) {
  check_shape(s, params, X);
  detail::check_rows(X.rows(), rows);
  const Index m = detail::selection_size(X.rows(), rows);
  const Index nb = detail::num_blocks(m);
  const Index L = s.num_layers();
  std::vector<double> values(static_cast<std::size_t>(nb), 0.0);
  std::vector<Vector> grads(static_cast<std::size_t>(nb));

#pragma omp parallel for schedule(static)
  for (Index b = 0; b < nb; ++b) {
    const detail::RowBlock blk = detail::block(b, m, rows);
    Vector yb(blk.size);
    for (Index j = 0; j < blk.size; ++j) yb[j] = y[blk[j]];
    const Forward f = forward_block(s, params, detail::gather_columns(X, blk));
    Matrix delta;
    values[static_cast<std::size_t>(b)] = output_loss_cols(s, f.z.back(), yb, delta);
    Vector grad = Vector::Zero(params.size());
    for (Index l = L; l >= 1; --l) {
      const auto ul = static_cast<std::size_t>(l);
      weight(s, grad, l).noalias() = delta * f.a[ul - 1].transpose();
      if (l > 1) {
        const Matrix back = weight(s, params, l).transpose() * delta;
        delta = back.cwiseProduct(map_cols(f.z[ul - 1], [&](double v) { return activate_d1(s.activation, v); }));
      }
    }
    grads[static_cast<std::size_t>(b)] = std::move(grad);
  }

  ValueGrad out{0.0, Vector::Zero(params.size())};
  for (Index b = 0; b < nb; ++b) {
    out.value += values[static_cast<std::size_t>(b)];
    out.grad += grads[static_cast<std::size_t>(b)];
  }
  out.value /= static_cast<double>(m);
  out.grad /= static_cast<double>(m);
  return out;
}

Vector mlp_hvp(const MlpShape& s, const Vector& params, const Matrix& X, const Vector& y,
               const Vector& v, std::span<const Index> rows) {
  check_shape(s, params, X);
  require(v.size() == params.size(), "mlp hvp direction dimension mismatch");
  detail::check_rows(X.rows(), rows);
  const Index m = detail::selection_size(X.rows(), rows);
  const Index nb = detail::num_blocks(m);
  const Index L = s.num_layers();
  std::vector<Vector> parts(static_cast<std::size_t>(nb));

#pragma omp parallel for schedule(static)
  for (Index b = 0; b < nb; ++b) {
    const detail::RowBlock blk = detail::block(b, m, rows);
    Vector yb(blk.size);
    for (Index j = 0; j < blk.size; ++j) yb[j] = y[blk[j]];
    const Forward f = forward_block(s, params, detail::gather_columns(X, blk));

    std::vector<Matrix> rz(static_cast<std::size_t>(L + 1)), ra(static_cast<std::size_t>(L + 1));
    ra[0] = Matrix::Zero(f.a[0].rows(), f.a[0].cols());
    for (Index l = 1; l <= L; ++l) {
      const auto ul = static_cast<std::size_t>(l);
      rz[ul] = weight(s, v, l) * f.a[ul - 1] + weight(s, params, l) * ra[ul - 1];
      ra[ul] = l < L ? Matrix(rz[ul].cwiseProduct(map_cols(f.z[ul], [&](double z) {
                         return activate_d1(s.activation, z);
                       })))
                     : rz[ul];
    }

    Matrix delta;
    output_loss_cols(s, f.z.back(), yb, delta);
    Matrix rdelta = output_hess_cols(s, f.z.back(), yb, rz.back());
    Vector part = Vector::Zero(params.size());
    for (Index l = L; l >= 1; --l) {
      const auto ul = static_cast<std::size_t>(l);
      weight(s, part, l).noalias() = rdelta * f.a[ul - 1].transpose() + delta * ra[ul - 1].transpose();
      if (l > 1) {
        const auto W = weight(s, params, l);
        const auto V = weight(s, v, l);
        const Matrix u = W.transpose() * delta;
        const Matrix ru = V.transpose() * delta + W.transpose() * rdelta;
        const Matrix d1 = map_cols(f.z[ul - 1], [&](double z) { return activate_d1(s.activation, z); });
        const Matrix d2 = map_cols(f.z[ul - 1], [&](double z) { return activate_d2(s.activation, z); });
        delta = d1.cwiseProduct(u);
        rdelta = d2.cwiseProduct(rz[ul - 1]).cwiseProduct(u) + d1.cwiseProduct(ru);
      }
    }
    parts[static_cast<std::size_t>(b)] = std::move(part);
  }

  Vector out = Vector::Zero(params.size());
  for (const Vector& part : parts) out += part;
  return out / static_cast<double>(m);
}

}  // namespace parallel

}  // namespace levelset::kernels
