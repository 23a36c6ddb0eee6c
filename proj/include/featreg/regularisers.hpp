#pragma once

// Penalties that tie the model's response to similar features together, and
// the two standard baselines.
//
//   AN       R(x) = Tr[J(x) L J(x)^T] = sum_{i<j} S_ij |J_.i - J_.j|^2
//   ST       R    = sum_pairs S_ij |phi(x + l_i e_i + l_j e_j) - phi(x + l'_i e_i + l'_j e_j)|^2
//                   with l_i + l_j = l'_i + l'_j
//   L2       R    = sum_k |W_k|_F^2
//   Dropout  inverted dropout on hidden activations
//
// All batch arguments hold instances as columns.

#include <Eigen/Dense>

#include <random>
#include <vector>

#include "featreg/error.hpp"
#include "featreg/network.hpp"
#include "featreg/similarity.hpp"

namespace featreg {

enum class RegKind { None, Analytical, Stochastic, L2, Dropout };

struct RegConfig {
  RegKind kind = RegKind::None;
  double strength = 0.0;        ///< lambda
  double dropout_rate = 0.0;    ///< drop probability
  double neighborhood = 1.0;    ///< c
  int samples_per_instance = 5; ///< p

  void validate() const {
    if (!(strength >= 0.0)) throw ParameterError("regularisation strength must be nonnegative");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ParameterError("dropout rate must lie in [0, 1)");
    if (!(neighborhood > 0.0)) throw ParameterError("neighborhood size must be positive");
    if (samples_per_instance < 1) throw ParameterError("samples per instance must be positive");
  }
};

template <typename Scalar>
struct PenaltyGradient {
  Scalar value = 0;
  Gradients<Scalar> grad;
};

//
// Analytical penalty
//

namespace detail {

/// Accumulates into `grad` the gradient of R = Tr[J L J^T] for one instance,
/// given M = dR/dJ (m x d). Returns nothing; the penalty is formed by the
/// caller because the two routes compute it differently.
template <typename Scalar>
void accumulate_jacobian_penalty_gradient(const NetworkParams<Scalar>& params, const ActivationTrace<Scalar>& trace,
                                          const SensitivityTensors<Scalar>& T, const Matrix<Scalar>& M,
                                          Gradients<Scalar>& grad) {
  const auto L = params.layers.size();
  const Index m = params.output_dim();
  // dR/d delta[0] = W[0] M^T  (h_1 x m)
  const Matrix<Scalar> gamma = params.layers[0].W * M.transpose();
  for (std::size_t t = 0; t < L; ++t) {
    // q_l = sum_{j,g} gamma(g, j) B[t][j](l, g)
    Vector<Scalar> q = Vector<Scalar>::Zero(params.layers[t].W.rows());
    for (Index j = 0; j < m; ++j) q.noalias() += T.B[t][j] * gamma.col(j);
    auto& gW = grad.layers[t].W;
    gW.noalias() += q * trace.act[t].transpose();
    grad.layers[t].b += q;
    if (t == 0) {
      // J depends on W[0] directly as well as through delta[0].
      gW.noalias() += T.delta[0] * M;
    } else {
      // d act[t] / d pre[0] = diag(h'(pre[t-1])) G[t-1]
      const Matrix<Scalar> Gg = T.G[t - 1] * gamma;  // h_{t-1} x m
      gW.noalias() += (T.delta[t] * Gg.transpose()) * trace.slope[t - 1].asDiagonal();
    }
  }
}

template <typename Scalar>
Matrix<Scalar> pair_penalty_seed(const Matrix<Scalar>& J, const PairSet& pairs, Scalar& value) {
  Matrix<Scalar> M = Matrix<Scalar>::Zero(J.rows(), J.cols());
  for (const auto& p : pairs) {
    const Vector<Scalar> diff = J.col(p.i) - J.col(p.j);
    const Scalar w = static_cast<Scalar>(p.weight);
    value += w * diff.squaredNorm();
    M.col(p.i).noalias() += Scalar(2) * w * diff;
    M.col(p.j).noalias() -= Scalar(2) * w * diff;
  }
  return M;
}

}  // namespace detail

/// Sum over the batch of Tr[J L J^T] using a dense Laplacian.
template <typename Act = Sigmoid, typename Scalar, typename Derived>
Scalar an_penalty(const NetworkParams<Scalar>& params, const Eigen::MatrixBase<Derived>& X,
                  const Matrix<Scalar>& laplacian_matrix) {
  Scalar total = 0;
  for (Index k = 0; k < X.cols(); ++k) {
    const auto trace = forward<Act>(params, X.col(k));
    const Matrix<Scalar> J = jacobian(params, trace);
    total += (J * laplacian_matrix).cwiseProduct(J).sum();
  }
  return total;
}

/// Same penalty through the pair list: sum_k sum_pairs S_ij |J_.i - J_.j|^2.
template <typename Act = Sigmoid, typename Scalar, typename Derived>
Scalar an_penalty(const NetworkParams<Scalar>& params, const Eigen::MatrixBase<Derived>& X, const PairSet& pairs) {
  Scalar total = 0;
  for (Index k = 0; k < X.cols(); ++k) {
    const auto trace = forward<Act>(params, X.col(k));
    const Matrix<Scalar> J = jacobian(params, trace);
    for (const auto& p : pairs) total += static_cast<Scalar>(p.weight) * (J.col(p.i) - J.col(p.j)).squaredNorm();
  }
  return total;
}

/// Penalty and exact parameter gradient through the sensitivity tensors;
/// dense-Laplacian route (cost quadratic in d).
template <typename Act = Sigmoid, typename Scalar, typename Derived>
PenaltyGradient<Scalar> an_gradient(const NetworkParams<Scalar>& params, const Eigen::MatrixBase<Derived>& X,
                                    const Matrix<Scalar>& laplacian_matrix) {
  PenaltyGradient<Scalar> out{Scalar(0), params.zeros_like()};
  for (Index k = 0; k < X.cols(); ++k) {
    const auto trace = forward<Act>(params, X.col(k));
    const auto T = sensitivity_tensors(params, trace);
    const Matrix<Scalar> J = jacobian(params, T.delta);
    const Matrix<Scalar> JL = J * laplacian_matrix;
    out.value += JL.cwiseProduct(J).sum();
    detail::accumulate_jacobian_penalty_gradient(params, trace, T, Matrix<Scalar>(Scalar(2) * JL), out.grad);
  }
  return out;
}

/// Pair-list route (cost linear in the number of pairs).
template <typename Act = Sigmoid, typename Scalar, typename Derived>
PenaltyGradient<Scalar> an_gradient(const NetworkParams<Scalar>& params, const Eigen::MatrixBase<Derived>& X,
                                    const PairSet& pairs) {
  PenaltyGradient<Scalar> out{Scalar(0), params.zeros_like()};
  if (pairs.empty()) return out;
  for (Index k = 0; k < X.cols(); ++k) {
    const auto trace = forward<Act>(params, X.col(k));
    const auto T = sensitivity_tensors(params, trace);
    const Matrix<Scalar> J = jacobian(params, T.delta);
    const Matrix<Scalar> M = detail::pair_penalty_seed(J, pairs, out.value);
    detail::accumulate_jacobian_penalty_gradient(params, trace, T, M, out.grad);
  }
  return out;
}

//
// Stochastic penalty
//

template <typename Scalar>
struct PerturbationQuadruple {
  Scalar lambda_i = 0;
  Scalar lambda_j = 0;
  Scalar lambda_i_prime = 0;
  Scalar lambda_j_prime = 0;
};

/// lambda_i, lambda_j, lambda_i' ~ U(-c, c); lambda_j' closes the sum.
template <typename Scalar = double, typename Rng>
PerturbationQuadruple<Scalar> sample_quadruple(Rng& rng, Scalar c) {
  if (!(c > Scalar(0))) throw ParameterError("neighborhood size must be positive");
  std::uniform_real_distribution<Scalar> dist(-c, c);
  PerturbationQuadruple<Scalar> q;
  q.lambda_i = dist(rng);
  q.lambda_j = dist(rng);
  q.lambda_i_prime = dist(rng);
  q.lambda_j_prime = (q.lambda_i + q.lambda_j) - q.lambda_i_prime;
  return q;
}

/// One augmented instance pair. Only the two touched coordinates are stored;
/// the full vectors are materialised on demand.
template <typename Scalar>
struct PerturbedPair {
  Index instance = 0;  ///< column of the batch it was generated from
  Index i = 0;
  Index j = 0;
  PerturbationQuadruple<Scalar> q;
  Scalar weight = 0;  ///< S_ij

  template <typename Derived>
  Vector<Scalar> plus(const Eigen::MatrixBase<Derived>& x) const {
    Vector<Scalar> out = x;
    out(i) += q.lambda_i;
    out(j) += q.lambda_j;
    return out;
  }
  template <typename Derived>
  Vector<Scalar> minus(const Eigen::MatrixBase<Derived>& x) const {
    Vector<Scalar> out = x;
    out(i) += q.lambda_i_prime;
    out(j) += q.lambda_j_prime;
    return out;
  }
};

/// p perturbed pairs per batch column, each over a feature pair drawn
/// uniformly from `pairs`.
template <typename Scalar = double, typename Rng>
std::vector<PerturbedPair<Scalar>> st_generate(Index batch_size, const PairSet& pairs, int p, Scalar c, Rng& rng) {
  if (pairs.empty()) throw ConfigError("the stochastic penalty needs at least one similar feature pair");
  if (p < 1) throw ParameterError("samples per instance must be positive");
  std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
  std::vector<PerturbedPair<Scalar>> out;
  out.reserve(static_cast<std::size_t>(batch_size * p));
  for (Index k = 0; k < batch_size; ++k)
    for (int s = 0; s < p; ++s) {
      const auto& fp = pairs[pick(rng)];
      PerturbedPair<Scalar> pp;
      pp.instance = k;
      pp.i = fp.i;
      pp.j = fp.j;
      pp.q = sample_quadruple<Scalar>(rng, c);
      pp.weight = static_cast<Scalar>(fp.weight);
      out.push_back(pp);
    }
  return out;
}

/// Penalty and gradient of the stochastic term over generated pairs. The
/// augmented inputs are constants. Because they differ from the batch column
/// in two coordinates only, the first layer is evaluated from W[0] x once per
/// column plus two column updates per pair. Sigmoid activation.
template <typename Scalar, typename Derived>
PenaltyGradient<Scalar> st_penalty_gradient(const NetworkParams<Scalar>& params, const Eigen::MatrixBase<Derived>& X,
                                            const std::vector<PerturbedPair<Scalar>>& generated) {
  PenaltyGradient<Scalar> out{Scalar(0), params.zeros_like()};
  if (generated.empty()) return out;
  detail::check_input(params, X.rows());
  const auto L = params.layers.size();
  const auto& W0 = params.layers[0].W;
  const Index n = static_cast<Index>(generated.size());

  Matrix<Scalar> base = W0 * X;
  base.colwise() += params.layers[0].b;

  // Stack plus instances in columns [0, n) and minus instances in [n, 2n).
  Matrix<Scalar> pre0(W0.rows(), 2 * n);
  for (Index g = 0; g < n; ++g) {
    const auto& pp = generated[static_cast<std::size_t>(g)];
    pre0.col(g) = base.col(pp.instance) + pp.q.lambda_i * W0.col(pp.i) + pp.q.lambda_j * W0.col(pp.j);
    pre0.col(n + g) =
        base.col(pp.instance) + pp.q.lambda_i_prime * W0.col(pp.i) + pp.q.lambda_j_prime * W0.col(pp.j);
  }
  std::vector<Matrix<Scalar>> act(L + 1);
  act[1] = pre0.unaryExpr([](Scalar v) { return Sigmoid::value(v); });
  for (std::size_t t = 1; t < L; ++t) {
    Matrix<Scalar> a = params.layers[t].W * act[t];
    a.colwise() += params.layers[t].b;
    act[t + 1] = a.unaryExpr([](Scalar v) { return Sigmoid::value(v); });
  }

  const Matrix<Scalar>& phi = act[L];
  Matrix<Scalar> g(phi.rows(), 2 * n);
  for (Index k = 0; k < n; ++k) {
    const Scalar w = generated[static_cast<std::size_t>(k)].weight;
    const Vector<Scalar> diff = phi.col(k) - phi.col(n + k);
    out.value += w * diff.squaredNorm();
    g.col(k) = Scalar(2) * w * diff;
    g.col(n + k) = -Scalar(2) * w * diff;
  }
  // dE/d pre[L-1]
  g.array() *= phi.array() * (Scalar(1) - phi.array());
  for (std::size_t t = L; t-- > 1;) {
    out.grad.layers[t].W.noalias() = g * act[t].transpose();
    out.grad.layers[t].b = g.rowwise().sum();
    Matrix<Scalar> up = params.layers[t].W.transpose() * g;
    up.array() *= act[t].array() * (Scalar(1) - act[t].array());
    g = std::move(up);
  }
  // First layer: sum_g g_g (x_k + dx_g)^T.
  Matrix<Scalar> per_instance = Matrix<Scalar>::Zero(W0.rows(), X.cols());
  auto& gW0 = out.grad.layers[0].W;
  for (Index k = 0; k < n; ++k) {
    const auto& pp = generated[static_cast<std::size_t>(k)];
    per_instance.col(pp.instance) += g.col(k) + g.col(n + k);
    gW0.col(pp.i) += pp.q.lambda_i * g.col(k) + pp.q.lambda_i_prime * g.col(n + k);
    gW0.col(pp.j) += pp.q.lambda_j * g.col(k) + pp.q.lambda_j_prime * g.col(n + k);
  }
  gW0.noalias() += per_instance * X.transpose();
  out.grad.layers[0].b = per_instance.rowwise().sum();
  return out;
}

/// Reference evaluation of the stochastic penalty by materialising every
/// augmented instance. Any activation.
template <typename Act = Sigmoid, typename Scalar, typename Derived>
PenaltyGradient<Scalar> st_penalty_gradient_materialised(const NetworkParams<Scalar>& params,
                                                         const Eigen::MatrixBase<Derived>& X,
                                                         const std::vector<PerturbedPair<Scalar>>& generated) {
  PenaltyGradient<Scalar> out{Scalar(0), params.zeros_like()};
  for (const auto& pp : generated) {
    const auto plus = forward<Act>(params, pp.plus(X.col(pp.instance)));
    const auto minus = forward<Act>(params, pp.minus(X.col(pp.instance)));
    const Vector<Scalar> diff = plus.output() - minus.output();
    out.value += pp.weight * diff.squaredNorm();
    axpy(Scalar(1), backprop(params, plus, Vector<Scalar>(Scalar(2) * pp.weight * diff)), out.grad);
    axpy(Scalar(1), backprop(params, minus, Vector<Scalar>(-Scalar(2) * pp.weight * diff)), out.grad);
  }
  return out;
}

//
// Baselines
//

/// sum_k |W_k|_F^2, biases excluded.
template <typename Scalar>
PenaltyGradient<Scalar> l2_penalty_gradient(const NetworkParams<Scalar>& params) {
  PenaltyGradient<Scalar> out{Scalar(0), params.zeros_like()};
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    out.value += params.layers[k].W.squaredNorm();
    out.grad.layers[k].W = Scalar(2) * params.layers[k].W;
  }
  return out;
}

/// Keep-scale vectors for every hidden layer: 0 with probability `rate`,
/// 1/(1-rate) otherwise.
template <typename Scalar = double, typename Rng>
std::vector<Vector<Scalar>> dropout_masks(const std::vector<Index>& dims, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate <= 0.9)) throw ParameterError("dropout rate must lie in [0, 0.9]");
  std::vector<Vector<Scalar>> keep;
  std::bernoulli_distribution survive(1.0 - rate);
  const Scalar scale_up = Scalar(1) / Scalar(1.0 - rate);
  for (std::size_t k = 1; k + 1 < dims.size(); ++k) {
    Vector<Scalar> v(dims[k]);
    for (Index i = 0; i < v.size(); ++i) v(i) = survive(rng) ? scale_up : Scalar(0);
    keep.push_back(std::move(v));
  }
  return keep;
}

template <typename Scalar = double, typename Rng>
std::vector<Matrix<Scalar>> dropout_masks_batch(const std::vector<Index>& dims, Index batch, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate <= 0.9)) throw ParameterError("dropout rate must lie in [0, 0.9]");
  std::vector<Matrix<Scalar>> keep;
  std::bernoulli_distribution survive(1.0 - rate);
  const Scalar scale_up = Scalar(1) / Scalar(1.0 - rate);
  for (std::size_t k = 1; k + 1 < dims.size(); ++k) {
    Matrix<Scalar> v(dims[k], batch);
    for (Index c = 0; c < batch; ++c)
      for (Index i = 0; i < v.rows(); ++i) v(i, c) = survive(rng) ? scale_up : Scalar(0);
    keep.push_back(std::move(v));
  }
  return keep;
}

/// Training-time pass with inverted dropout on the hidden activations. The
/// masks travel in the trace so backprop and loss_gradients honour them.
template <typename Scalar, typename Derived, typename Rng>
ActivationTrace<Scalar> dropout_forward(const NetworkParams<Scalar>& params, const Eigen::MatrixBase<Derived>& x,
                                        double rate, Rng& rng) {
  if (rate == 0.0) return forward(params, x);
  return forward(params, x, dropout_masks<Scalar>(params.dims(), rate, rng));
}

}  // namespace featreg
