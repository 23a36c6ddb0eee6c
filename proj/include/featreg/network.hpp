#pragma once

// Fully connected feed-forward networks with an elementwise activation on
// every layer (the output layer included), together with the first and second
// order input sensitivities needed to differentiate Jacobian penalties.
//
// Layer t (0-based) maps act[t] to act[t + 1]:
//
//   pre[t]     = W[t] * act[t] + b[t]
//   act[t + 1] = h(pre[t])
//
// act[0] is the network input and act.back() the output phi(x).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <type_traits>
#include <vector>

#include "featreg/error.hpp"

namespace featreg {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Logistic sigmoid. Derivatives are computed from the stored activation
/// z = h(a) rather than by re-evaluating h.
struct Sigmoid {
  template <typename Scalar>
  static Scalar value(Scalar a) {
    return Scalar(1) / (Scalar(1) + std::exp(-a));
  }
  template <typename Scalar>
  static Scalar first(Scalar z) {
    return z * (Scalar(1) - z);
  }
  template <typename Scalar>
  static Scalar second(Scalar z) {
    return z * (Scalar(1) - z) * (Scalar(1) - Scalar(2) * z);
  }
};

namespace testing {

/// h(a) = a. Turns the network into a stack of affine maps; only used to
/// check that the penalties collapse to their linear-model counterparts.
struct Identity {
  template <typename Scalar>
  static Scalar value(Scalar a) {
    return a;
  }
  template <typename Scalar>
  static Scalar first(Scalar) {
    return Scalar(1);
  }
  template <typename Scalar>
  static Scalar second(Scalar) {
    return Scalar(0);
  }
};

}  // namespace testing

template <typename Scalar>
struct Layer {
  Matrix<Scalar> W;
  Vector<Scalar> b;
};

/// Weights and biases of every layer. Also used to hold gradients, which
/// therefore always have the same shapes as the parameters they belong to.
template <typename Scalar>
struct NetworkParams {
  std::vector<Layer<Scalar>> layers;

  Index num_layers() const { return static_cast<Index>(layers.size()); }
  Index input_dim() const { return layers.front().W.cols(); }
  Index output_dim() const { return layers.back().W.rows(); }

  /// [d, h_1, ..., m]
  std::vector<Index> dims() const {
    std::vector<Index> out;
    out.reserve(layers.size() + 1);
    out.push_back(input_dim());
    for (const auto& layer : layers) out.push_back(layer.W.rows());
    return out;
  }

  static NetworkParams zeros(const std::vector<Index>& dims) {
    if (dims.size() < 2) throw ShapeError("a network needs at least an input and an output dimension");
    NetworkParams out;
    for (std::size_t k = 1; k < dims.size(); ++k) {
      if (dims[k - 1] < 1 || dims[k] < 1) throw ShapeError("layer dimensions must be positive");
      out.layers.push_back({Matrix<Scalar>::Zero(dims[k], dims[k - 1]), Vector<Scalar>::Zero(dims[k])});
    }
    return out;
  }

  NetworkParams zeros_like() const { return zeros(dims()); }

  Index parameter_count() const {
    Index n = 0;
    for (const auto& layer : layers) n += layer.W.size() + layer.b.size();
    return n;
  }
};

template <typename Scalar>
using Gradients = NetworkParams<Scalar>;

/// y += alpha * x
template <typename Scalar>
void axpy(Scalar alpha, const NetworkParams<Scalar>& x, NetworkParams<Scalar>& y) {
  for (std::size_t k = 0; k < y.layers.size(); ++k) {
    y.layers[k].W.noalias() += alpha * x.layers[k].W;
    y.layers[k].b.noalias() += alpha * x.layers[k].b;
  }
}

template <typename Scalar>
void scale(Scalar alpha, NetworkParams<Scalar>& x) {
  for (auto& layer : x.layers) {
    layer.W *= alpha;
    layer.b *= alpha;
  }
}

template <typename Scalar>
bool all_finite(const NetworkParams<Scalar>& x) {
  for (const auto& layer : x.layers)
    if (!layer.W.allFinite() || !layer.b.allFinite()) return false;
  return true;
}

template <typename Scalar>
Scalar max_abs(const NetworkParams<Scalar>& x) {
  Scalar out = 0;
  for (const auto& layer : x.layers) {
    if (layer.W.size()) out = std::max(out, layer.W.cwiseAbs().maxCoeff());
    if (layer.b.size()) out = std::max(out, layer.b.cwiseAbs().maxCoeff());
  }
  return out;
}

/// Glorot-uniform weights, zero biases. Entries of each W are drawn in
/// row-major order from a single 64-bit Mersenne twister seeded with `seed`.
template <typename Scalar = double>
NetworkParams<Scalar> glorot_init(const std::vector<Index>& dims, std::uint64_t seed) {
  auto params = NetworkParams<Scalar>::zeros(dims);
  std::mt19937_64 rng(seed);
  for (auto& layer : params.layers) {
    const double r = std::sqrt(6.0 / static_cast<double>(layer.W.rows() + layer.W.cols()));
    std::uniform_real_distribution<double> dist(-r, r);
    for (Index i = 0; i < layer.W.rows(); ++i)
      for (Index j = 0; j < layer.W.cols(); ++j) layer.W(i, j) = static_cast<Scalar>(dist(rng));
  }
  return params;
}

/// Per-instance record of a forward pass.
template <typename Scalar>
struct ActivationTrace {
  std::vector<Vector<Scalar>> pre;        ///< pre[t], t = 0..L-1
  std::vector<Vector<Scalar>> act;        ///< act[0] = x, act[t+1] = h(pre[t]) (times keep[t] under dropout)
  std::vector<Vector<Scalar>> slope;      ///< h'(pre[t])
  std::vector<Vector<Scalar>> curvature;  ///< h''(pre[t])
  /// Inverted-dropout scale per hidden layer (0 or 1/(1-rate)); empty when no
  /// dropout was applied.
  std::vector<Vector<Scalar>> keep;

  const Vector<Scalar>& output() const { return act.back(); }
};

namespace detail {

template <typename Scalar>
void check_input(const NetworkParams<Scalar>& params, Index rows) {
  if (params.layers.empty()) throw ShapeError("network has no layers");
  if (rows != params.input_dim())
    throw ShapeError("input has " + std::to_string(rows) + " features, network expects " +
                     std::to_string(params.input_dim()));
}

}  // namespace detail

/// Forward pass. `keep`, when non-empty, holds one dropout scale vector per
/// hidden layer and is applied to that layer's activation.
template <typename Act = Sigmoid, typename Scalar, typename Derived>
ActivationTrace<Scalar> forward(const NetworkParams<Scalar>& params, const Eigen::MatrixBase<Derived>& x,
                                std::vector<Vector<Scalar>> keep = {}) {
  detail::check_input(params, x.rows());
  if (x.cols() != 1) throw ShapeError("forward expects a single column vector");
  if (!keep.empty() && static_cast<Index>(keep.size()) != params.num_layers() - 1)
    throw ShapeError("one dropout mask per hidden layer required");
  const auto L = params.layers.size();
  ActivationTrace<Scalar> trace;
  trace.pre.reserve(L);
  trace.act.reserve(L + 1);
  trace.slope.reserve(L);
  trace.curvature.reserve(L);
  trace.act.push_back(x.template cast<Scalar>());
  for (std::size_t t = 0; t < L; ++t) {
    const auto& layer = params.layers[t];
    Vector<Scalar> a = layer.W * trace.act[t] + layer.b;
    Vector<Scalar> z = a.unaryExpr([](Scalar v) { return Act::value(v); });
    trace.slope.push_back(z.unaryExpr([](Scalar v) { return Act::first(v); }));
    trace.curvature.push_back(z.unaryExpr([](Scalar v) { return Act::second(v); }));
    if (!keep.empty() && t + 1 < L) z.array() *= keep[t].array();
    trace.pre.push_back(std::move(a));
    trace.act.push_back(std::move(z));
  }
  trace.keep = std::move(keep);
  return trace;
}

/// First and second order sensitivities of the output w.r.t. the
/// pre-activations:
///
///   delta[t](l, j) = d phi_j / d pre[t]_l                      (h_t x m)
///   G[t](l, g)     = d pre[t]_l / d pre[0]_g                   (h_t x h_1)
///   B[t][j](l, g)  = d delta[t](l, j) / d pre[0]_g             (m slices of h_t x h_1)
///
/// delta runs backwards from the output (where it is diag(h')), G forwards
/// from G[0] = I, and B backwards from the output slice
/// B[L-1][j](l, g) = h''(pre[L-1]_l) [l == j] G[L-1](l, g).
template <typename Scalar>
struct SensitivityTensors {
  std::vector<Matrix<Scalar>> delta;
  std::vector<Matrix<Scalar>> G;
  std::vector<std::vector<Matrix<Scalar>>> B;
};

/// delta[t] only; enough for the model Jacobian.
template <typename Scalar>
std::vector<Matrix<Scalar>> output_sensitivities(const NetworkParams<Scalar>& params,
                                                 const ActivationTrace<Scalar>& trace) {
  const auto L = params.layers.size();
  std::vector<Matrix<Scalar>> delta(L);
  delta[L - 1] = trace.slope[L - 1].asDiagonal();
  for (std::size_t t = L - 1; t-- > 0;) {
    delta[t].noalias() = params.layers[t + 1].W.transpose() * delta[t + 1];
    if (!trace.keep.empty()) delta[t] = trace.keep[t].asDiagonal() * delta[t];
    delta[t] = trace.slope[t].asDiagonal() * delta[t];
  }
  return delta;
}

template <typename Scalar>
SensitivityTensors<Scalar> sensitivity_tensors(const NetworkParams<Scalar>& params,
                                               const ActivationTrace<Scalar>& trace) {
  if (!trace.keep.empty()) throw ContractError("sensitivity tensors are defined for deterministic passes only");
  const auto L = params.layers.size();
  const Index m = params.output_dim();
  const Index h1 = params.layers[0].W.rows();
  SensitivityTensors<Scalar> out;
  out.delta = output_sensitivities(params, trace);

  out.G.resize(L);
  out.G[0] = Matrix<Scalar>::Identity(h1, h1);
  for (std::size_t t = 1; t < L; ++t)
    out.G[t].noalias() = params.layers[t].W * (trace.slope[t - 1].asDiagonal() * out.G[t - 1]);

  out.B.assign(L, std::vector<Matrix<Scalar>>(static_cast<std::size_t>(m)));
  for (Index j = 0; j < m; ++j) {
    Matrix<Scalar> top = Matrix<Scalar>::Zero(m, h1);
    top.row(j) = trace.curvature[L - 1](j) * out.G[L - 1].row(j);
    out.B[L - 1][j] = std::move(top);
  }
  for (std::size_t t = L - 1; t-- > 0;) {
    const auto& Wn = params.layers[t + 1].W;
    const Matrix<Scalar> back = Wn.transpose() * out.delta[t + 1];  // h_t x m
    for (Index j = 0; j < m; ++j) {
      Matrix<Scalar> slice = (trace.curvature[t].array() * back.col(j).array()).matrix().asDiagonal() * out.G[t];
      slice.noalias() += trace.slope[t].asDiagonal() * (Wn.transpose() * out.B[t + 1][j]);
      out.B[t][j] = std::move(slice);
    }
  }
  return out;
}

/// J(x) = delta[0]^T W[0], the m x d Jacobian of phi at the traced input.
template <typename Scalar>
Matrix<Scalar> jacobian(const NetworkParams<Scalar>& params, const std::vector<Matrix<Scalar>>& delta) {
  return delta[0].transpose() * params.layers[0].W;
}

template <typename Scalar>
Matrix<Scalar> jacobian(const NetworkParams<Scalar>& params, const ActivationTrace<Scalar>& trace) {
  return jacobian(params, output_sensitivities(params, trace));
}

/// Standard backpropagation starting from dE/d pre[L-1].
/// Returns dE/dW and dE/db for every layer.
template <typename Scalar>
Gradients<Scalar> backprop_from_pre(const NetworkParams<Scalar>& params, const ActivationTrace<Scalar>& trace,
                                    Vector<Scalar> g) {
  const auto L = params.layers.size();
  Gradients<Scalar> grad = params.zeros_like();
  for (std::size_t t = L; t-- > 0;) {
    grad.layers[t].W.noalias() = g * trace.act[t].transpose();
    grad.layers[t].b = g;
    if (t > 0) {
      Vector<Scalar> up = params.layers[t].W.transpose() * g;
      if (!trace.keep.empty()) up.array() *= trace.keep[t - 1].array();
      g = up.cwiseProduct(trace.slope[t - 1]);
    }
  }
  return grad;
}

/// Backpropagation of an output-space gradient `seed` = dE/dphi.
template <typename Scalar, typename Derived>
Gradients<Scalar> backprop(const NetworkParams<Scalar>& params, const ActivationTrace<Scalar>& trace,
                           const Eigen::MatrixBase<Derived>& seed) {
  return backprop_from_pre(params, trace, Vector<Scalar>(seed.cwiseProduct(trace.slope.back())));
}

inline constexpr double kProbabilityClamp = 1e-12;

template <typename Scalar>
void check_one_hot(const Vector<Scalar>& y) {
  Index ones = 0;
  for (Index i = 0; i < y.size(); ++i) {
    if (y(i) == Scalar(1))
      ++ones;
    else if (y(i) != Scalar(0))
      throw DataError("target vector is not one-hot");
  }
  if (ones != 1) throw DataError("target vector is not one-hot");
}

/// E = -sum_i y_i log phi_i + (1 - y_i) log(1 - phi_i), phi clamped to
/// [1e-12, 1 - 1e-12].
template <typename Scalar>
Scalar cross_entropy_loss(const Vector<Scalar>& y, const Vector<Scalar>& phi) {
  check_one_hot(y);
  if (y.size() != phi.size()) throw ShapeError("target and output sizes differ");
  const Scalar lo = Scalar(kProbabilityClamp), hi = Scalar(1) - Scalar(kProbabilityClamp);
  Scalar e = 0;
  for (Index i = 0; i < y.size(); ++i) {
    const Scalar p = std::clamp(phi(i), lo, hi);
    e -= y(i) * std::log(p) + (Scalar(1) - y(i)) * std::log(Scalar(1) - p);
  }
  return e;
}

/// dE/dW, dE/db of the cross-entropy loss. For the sigmoid output the product
/// dE/dphi * h'(a) is formed as phi - y directly, which stays exact when the
/// output saturates.
template <typename Act = Sigmoid, typename Scalar>
Gradients<Scalar> loss_gradients(const NetworkParams<Scalar>& params, const ActivationTrace<Scalar>& trace,
                                 const Vector<Scalar>& y) {
  check_one_hot(y);
  const Vector<Scalar>& phi = trace.output();
  if (y.size() != phi.size()) throw ShapeError("target and output sizes differ");
  if constexpr (std::is_same_v<Act, Sigmoid>) {
    return backprop_from_pre(params, trace, Vector<Scalar>(phi - y));
  } else {
    const Scalar lo = Scalar(kProbabilityClamp), hi = Scalar(1) - Scalar(kProbabilityClamp);
    Vector<Scalar> seed(phi.size());
    for (Index i = 0; i < phi.size(); ++i) {
      const Scalar p = std::clamp(phi(i), lo, hi);
      seed(i) = -y(i) / p + (Scalar(1) - y(i)) / (Scalar(1) - p);
    }
    return backprop(params, trace, seed);
  }
}

//
// Batched variants. Instances are the columns of the input matrix.
//

template <typename Scalar>
struct BatchTrace {
  std::vector<Matrix<Scalar>> pre;
  std::vector<Matrix<Scalar>> act;
  std::vector<Matrix<Scalar>> keep;  ///< per hidden layer, empty without dropout

  const Matrix<Scalar>& output() const { return act.back(); }
};

template <typename Act = Sigmoid, typename Scalar, typename Derived>
BatchTrace<Scalar> forward_batch(const NetworkParams<Scalar>& params, const Eigen::MatrixBase<Derived>& X,
                                 std::vector<Matrix<Scalar>> keep = {}) {
  detail::check_input(params, X.rows());
  const auto L = params.layers.size();
  BatchTrace<Scalar> trace;
  trace.act.push_back(X.template cast<Scalar>());
  for (std::size_t t = 0; t < L; ++t) {
    const auto& layer = params.layers[t];
    Matrix<Scalar> a = layer.W * trace.act[t];
    a.colwise() += layer.b;
    Matrix<Scalar> z = a.unaryExpr([](Scalar v) { return Act::value(v); });
    if (!keep.empty() && t + 1 < L) z.array() *= keep[t].array();
    trace.pre.push_back(std::move(a));
    trace.act.push_back(std::move(z));
  }
  trace.keep = std::move(keep);
  return trace;
}

/// Backpropagates dE/d(pre-activation of the output layer) for every column.
/// Gradients are summed over the batch. Activation is the sigmoid.
template <typename Scalar>
Gradients<Scalar> backprop_batch_from_pre(const NetworkParams<Scalar>& params, const BatchTrace<Scalar>& trace,
                                          Matrix<Scalar> g) {
  const auto L = params.layers.size();
  Gradients<Scalar> grad = params.zeros_like();
  for (std::size_t t = L; t-- > 0;) {
    grad.layers[t].W.noalias() = g * trace.act[t].transpose();
    grad.layers[t].b = g.rowwise().sum();
    if (t > 0) {
      Matrix<Scalar> up = params.layers[t].W.transpose() * g;
      // act[t] already carries the dropout scale; slope needs the raw value.
      const auto& z = trace.act[t];
      if (!trace.keep.empty()) {
        const auto& k = trace.keep[t - 1];
        for (Index c = 0; c < up.cols(); ++c)
          for (Index r = 0; r < up.rows(); ++r) {
            const Scalar kr = k(r, c);
            if (kr == Scalar(0)) {
              up(r, c) = 0;
            } else {
              const Scalar raw = z(r, c) / kr;
              up(r, c) *= kr * raw * (Scalar(1) - raw);
            }
          }
      } else {
        up.array() *= z.array() * (Scalar(1) - z.array());
      }
      g = std::move(up);
    }
  }
  return grad;
}

/// Summed cross-entropy loss and its gradients over a batch; `labels[c]` is
/// the class of column c.
template <typename Scalar>
std::pair<Scalar, Gradients<Scalar>> loss_gradients_batch(const NetworkParams<Scalar>& params,
                                                          const BatchTrace<Scalar>& trace,
                                                          const std::vector<int>& labels) {
  const Matrix<Scalar>& phi = trace.output();
  Matrix<Scalar> g = phi;
  Scalar loss = 0;
  const Scalar lo = Scalar(kProbabilityClamp), hi = Scalar(1) - Scalar(kProbabilityClamp);
  for (Index c = 0; c < phi.cols(); ++c) {
    const int label = labels[static_cast<std::size_t>(c)];
    for (Index r = 0; r < phi.rows(); ++r) {
      const Scalar p = std::clamp(phi(r, c), lo, hi);
      const Scalar y = r == label ? Scalar(1) : Scalar(0);
      loss -= y * std::log(p) + (Scalar(1) - y) * std::log(Scalar(1) - p);
      g(r, c) = phi(r, c) - y;
    }
  }
  return {loss, backprop_batch_from_pre(params, trace, std::move(g))};
}

/// Index of the largest output per column; ties go to the lowest index.
template <typename Scalar>
std::vector<int> argmax_columns(const Matrix<Scalar>& out) {
  std::vector<int> labels(static_cast<std::size_t>(out.cols()));
  for (Index c = 0; c < out.cols(); ++c) {
    Index best = 0;
    for (Index r = 1; r < out.rows(); ++r)
      if (out(r, c) > out(best, c)) best = r;
    labels[static_cast<std::size_t>(c)] = static_cast<int>(best);
  }
  return labels;
}

template <typename Scalar, typename Derived>
std::vector<int> predict(const NetworkParams<Scalar>& params, const Eigen::MatrixBase<Derived>& X) {
  return argmax_columns(forward_batch(params, X).output());
}

}  // namespace featreg
