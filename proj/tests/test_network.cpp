#include <doctest.h>

#include <cmath>
#include <random>

#include "featreg/error.hpp"
#include "featreg/network.hpp"
#include "oracles.hpp"

using namespace featreg;
using oracle::MatrixXd;
using oracle::VectorXd;

namespace {

std::vector<Index> random_dims(std::mt19937_64& rng, Index max_d, Index max_h, Index max_m, int max_hidden) {
  std::vector<Index> dims{oracle::uniform_int(rng, 2, max_d)};
  const auto hidden = oracle::uniform_int(rng, 1, max_hidden);
  for (Index k = 0; k < hidden; ++k) dims.push_back(oracle::uniform_int(rng, 1, max_h));
  dims.push_back(oracle::uniform_int(rng, 1, max_m));
  return dims;
}

}  // namespace

TEST_CASE("glorot_init is deterministic, bounded, with zero biases") {
  const std::vector<Index> dims{4, 3, 2};
  const auto a = glorot_init(dims, 11), b = glorot_init(dims, 11), c = glorot_init(dims, 12);
  CHECK(oracle::flatten(a) == oracle::flatten(b));
  CHECK(oracle::flatten(a) != oracle::flatten(c));
  CHECK(a.layers[0].W.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 7.0));
  CHECK(a.layers[1].W.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 5.0));
  for (const auto& layer : a.layers) CHECK(layer.b.isZero(0.0));
}

TEST_CASE("forward: hand-evaluated cases") {
  auto zero = NetworkParams<double>::zeros({3, 4, 2});
  const auto t = forward(zero, VectorXd::Constant(3, 0.7));
  for (std::size_t k = 1; k < t.act.size(); ++k) CHECK(t.act[k].isApproxToConstant(0.5));

  auto p = NetworkParams<double>::zeros({1, 1});
  p.layers[0].W(0, 0) = 1.0;
  CHECK(forward(p, VectorXd::Zero(1)).output()(0) == doctest::Approx(0.5));
  p.layers[0].W(0, 0) = 2.0;
  p.layers[0].b(0) = -1.0;
  CHECK(forward(p, VectorXd::Ones(1)).output()(0) == doctest::Approx(0.731059).epsilon(1e-6));

  CHECK_THROWS_AS(forward(p, VectorXd::Ones(2)), ShapeError);
}

TEST_CASE("forward trace round trip and agreement with the scratch oracle") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const auto dims = random_dims(rng, 10, 8, 4, 3);
    const auto p = oracle::random_params(dims, rng);
    const VectorXd x = oracle::random_inputs(dims[0], 1, rng);
    const auto t = forward(p, x);
    for (std::size_t k = 0; k < t.pre.size(); ++k) {
      const VectorXd z = t.pre[k].unaryExpr([](double a) { return Sigmoid::value(a); });
      CHECK(z == t.act[k + 1]);
    }
    CHECK((t.output() - oracle::output(p, x)).cwiseAbs().maxCoeff() < 1e-15);
  }
}

TEST_CASE("jacobian matches finite differences on random nets") {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const auto dims = random_dims(rng, 10, 8, 4, 2);
    const auto p = oracle::random_params(dims, rng);
    const VectorXd x = oracle::random_inputs(dims[0], 1, rng);
    const MatrixXd J = jacobian(p, forward(p, x));
    const MatrixXd Jfd = oracle::fd_jacobian([&](const VectorXd& v) { return oracle::output(p, v); }, x);
    worst = std::max(worst, oracle::max_rel_error(J, Jfd));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("jacobian: identity activation gives W; tied columns give equal columns") {
  std::mt19937_64 rng(6);
  const auto p = oracle::random_params({5, 3}, rng);
  const auto t = forward<testing::Identity>(p, VectorXd(oracle::random_inputs(5, 1, rng)));
  CHECK((jacobian(p, t) - p.layers[0].W).cwiseAbs().maxCoeff() == 0.0);

  auto q = oracle::random_params({4, 6, 3}, rng);
  q.layers[0].W.col(2) = q.layers[0].W.col(1);
  const MatrixXd J = jacobian(q, forward(q, VectorXd(oracle::random_inputs(4, 1, rng))));
  CHECK(J.col(1) == J.col(2));
}

TEST_CASE("sensitivity tensors agree with the product-of-Jacobians oracles") {
  std::mt19937_64 rng(7);
  double worst_delta = 0.0, worst_g = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const auto dims = random_dims(rng, 10, 8, 4, 3);
    const auto p = oracle::random_params(dims, rng);
    const auto t = forward(p, VectorXd(oracle::random_inputs(dims[0], 1, rng)));
    const auto T = sensitivity_tensors(p, t);
    const auto delta = oracle::delta_by_products(p, t.pre);
    const auto G = oracle::g_by_products(p, t.pre);
    CHECK(T.G[0] == MatrixXd::Identity(dims[1], dims[1]));
    for (std::size_t k = 0; k < delta.size(); ++k) {
      worst_delta = std::max(worst_delta, oracle::max_rel_error(T.delta[k], delta[k]));
      worst_g = std::max(worst_g, oracle::max_rel_error(T.G[k], G[k]));
    }
    const MatrixXd last = t.slope.back().asDiagonal();
    CHECK(T.delta.back() == last);
    CHECK((T.delta[0].transpose() * p.layers[0].W - jacobian(p, t)).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(worst_delta <= 1e-10);
  CHECK(worst_g <= 1e-10);
}

TEST_CASE("delta^1 matches finite differences of the output w.r.t. a^1") {
  std::mt19937_64 rng(8);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const auto dims = random_dims(rng, 10, 8, 4, 1);
    const auto p = oracle::random_params(dims, rng);
    const auto t = forward(p, VectorXd(oracle::random_inputs(dims[0], 1, rng)));
    const MatrixXd fd =
        oracle::fd_jacobian([&](const VectorXd& a1) { return oracle::output_from_first_pre(p, a1); }, t.pre[0]);
    worst = std::max(worst, oracle::max_rel_error(MatrixXd(sensitivity_tensors(p, t).delta[0]), MatrixXd(fd.transpose())));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("B tensors match finite differences of delta w.r.t. a^1") {
  std::mt19937_64 rng(9);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const auto dims = random_dims(rng, 8, 6, 4, 3);
    const auto p = oracle::random_params(dims, rng);
    const auto t = forward(p, VectorXd(oracle::random_inputs(dims[0], 1, rng)));
    const auto T = sensitivity_tensors(p, t);
    const Index m = dims.back();
    for (std::size_t k = 0; k < p.layers.size(); ++k)
      for (Index j = 0; j < m; ++j) {
        // Column g of the FD matrix is d(delta^k_.j)/d a^1_g.
        const auto f = [&](const VectorXd& a1) {
          return VectorXd(oracle::delta_by_products(p, oracle::pre_from_first(p, a1))[k].col(j));
        };
        const MatrixXd fd = oracle::fd_jacobian(f, t.pre[0]);
        worst = std::max(worst, oracle::max_rel_error(T.B[k][static_cast<std::size_t>(j)], fd));
      }
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("B tensors vanish for the identity activation") {
  std::mt19937_64 rng(10);
  const auto p = oracle::random_params({4, 5, 3, 2}, rng);
  const auto T = sensitivity_tensors(p, forward<testing::Identity>(p, VectorXd(oracle::random_inputs(4, 1, rng))));
  for (const auto& layer : T.B)
    for (const auto& b : layer) CHECK(b.isZero(0.0));
}

TEST_CASE("cross-entropy: values and gradients") {
  VectorXd y(1);
  y << 1.0;
  VectorXd phi(1);
  phi << 0.5;
  CHECK(cross_entropy_loss(y, phi) == doctest::Approx(0.693147).epsilon(1e-6));
  VectorXd y3(3), phi3(3);
  y3 << 0, 1, 0;
  phi3 << 0, 1, 0;
  CHECK(cross_entropy_loss(y3, phi3) <= 1e-10 * 3);
  VectorXd bad(3);
  bad << 1, 1, 0;
  CHECK_THROWS_AS(cross_entropy_loss(bad, phi3), DataError);

  std::mt19937_64 rng(12);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    auto dims = random_dims(rng, 10, 8, 4, 2);
    dims.back() = std::max<Index>(dims.back(), 2);
    const auto p = oracle::random_params(dims, rng);
    const VectorXd x = oracle::random_inputs(dims[0], 1, rng);
    const int label = static_cast<int>(oracle::uniform_int(rng, 0, dims.back() - 1));
    VectorXd target = VectorXd::Zero(dims.back());
    target(label) = 1.0;
    const auto g = loss_gradients(p, forward(p, x), target);
    const auto fd = oracle::fd_gradient_4th(p, [&](const oracle::Params& q) {
      return oracle::cross_entropy(oracle::output(q, x), label);
    });
    worst = std::max(worst, oracle::max_rel_error(g, fd));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("batched loss gradients equal the sum of per-instance gradients") {
  std::mt19937_64 rng(13);
  const auto p = oracle::random_params({6, 5, 4, 3}, rng);
  const MatrixXd X = oracle::random_inputs(6, 7, rng);
  std::vector<int> labels{0, 1, 2, 0, 1, 2, 2};
  auto [loss, g] = loss_gradients_batch(p, forward_batch(p, X), labels);
  double loss_ref = 0.0;
  auto g_ref = p.zeros_like();
  for (Index c = 0; c < X.cols(); ++c) {
    const auto t = forward(p, X.col(c));
    VectorXd y = VectorXd::Zero(3);
    y(labels[static_cast<std::size_t>(c)]) = 1.0;
    loss_ref += cross_entropy_loss(y, t.output());
    axpy(1.0, loss_gradients(p, t, y), g_ref);
  }
  CHECK(oracle::rel_diff(loss, loss_ref) <= 1e-12);
  CHECK(oracle::max_rel_error(g, g_ref) <= 1e-10);
}

TEST_CASE("argmax ties go to the lowest index") {
  MatrixXd out(3, 2);
  out << 0.2, 0.5, 0.7, 0.5, 0.7, 0.1;
  const auto a = argmax_columns(out);
  CHECK(a[0] == 1);
  CHECK(a[1] == 0);
}
