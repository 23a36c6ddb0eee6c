#include <doctest.h>

#include <cmath>
#include <random>

#include "featreg/error.hpp"
#include "featreg/trainer.hpp"
#include "oracles.hpp"

using namespace featreg;
using Eigen::MatrixXd;

namespace {

/// Two classes split by a hyperplane with a margin.
LabeledData separable(Index n, Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(d, 1.0, -0.5);
  LabeledData out{MatrixXd(n, d), {}, 2};
  for (Index r = 0; r < n;) {
    Eigen::RowVectorXd x(d);
    for (Index c = 0; c < d; ++c) x(c) = unit(rng);
    const double s = x.dot(w.transpose());
    if (std::abs(s) < 0.2) continue;
    out.X.row(r++) = x;
    out.labels.push_back(s > 0 ? 1 : 0);
  }
  return out;
}

LabeledData three_class(Index n, Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  LabeledData out{MatrixXd(n, d), {}, 3};
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < d; ++c) out.X(r, c) = unit(rng);
    const double a = out.X(r, 0) + out.X(r, 1), b = out.X(r, 2) - out.X(r, 3);
    out.labels.push_back(a > 0.3 ? 0 : (b > 0 ? 1 : 2));
  }
  return out;
}

}  // namespace

TEST_CASE("Adam: first step by hand, zero gradient, non-finite gradient") {
  auto p = NetworkParams<double>::zeros({1, 1});
  p.layers[0].W(0, 0) = 0.3;
  auto g = p.zeros_like();
  g.layers[0].W(0, 0) = 4.0;
  auto state = AdamState::init(p);
  adam_step(state, p, g);
  // m_hat = 4, v_hat = 16.
  const double expected = 0.3 - 0.001 * 4.0 / (std::sqrt(16.0) + 1e-8);
  CHECK(std::abs(p.layers[0].W(0, 0) - expected) <= 1e-12);
  CHECK(state.t == 1);
  CHECK(p.layers[0].b(0) == 0.0);

  // Second step by hand.
  adam_step(state, p, g);
  const double m = 0.9 * 0.4 + 0.1 * 4.0, v = 0.999 * 0.016 + 0.001 * 16.0;
  const double m_hat = m / (1 - 0.81), v_hat = v / (1 - 0.999 * 0.999);
  CHECK(std::abs(p.layers[0].W(0, 0) - (expected - 0.001 * m_hat / (std::sqrt(v_hat) + 1e-8))) <= 1e-12);

  std::mt19937_64 rng(1);
  auto q = oracle::random_params({3, 4, 2}, rng);
  const auto before = oracle::flatten(q);
  auto s2 = AdamState::init(q);
  for (int k = 0; k < 5; ++k) adam_step(s2, q, q.zeros_like());
  CHECK(oracle::flatten(q) == before);

  auto bad = q.zeros_like();
  bad.layers[1].b(0) = std::nan("");
  CHECK_THROWS_AS(adam_step(s2, q, bad), TrainingError);
  CHECK(oracle::flatten(q) == before);
  CHECK(s2.t == 5);
}

TEST_CASE("early stopping fires at exactly ten consecutive increases") {
  EarlyStopping stop(10);
  CHECK_FALSE(stop.observe(50.0));
  for (int k = 1; k <= 9; ++k) CHECK_FALSE(stop.observe(50.0 + k));
  CHECK(stop.consecutive_increases() == 9);
  CHECK(stop.observe(60.0));

  EarlyStopping reset(10);
  reset.observe(10.0);
  for (int k = 1; k <= 9; ++k) reset.observe(10.0 + k);
  CHECK_FALSE(reset.observe(19.0));  // equal value resets
  CHECK(reset.consecutive_increases() == 0);
  for (int k = 1; k <= 9; ++k) CHECK_FALSE(reset.observe(19.0 + k));
  CHECK(reset.observe(29.0));
}

TEST_CASE("config validation and reference defaults") {
  CHECK(TrainConfig::defaults_for(RegKind::Analytical).batch_size == 5);
  CHECK(TrainConfig::defaults_for(RegKind::Analytical).max_iterations == 5000);
  CHECK(TrainConfig::defaults_for(RegKind::Stochastic).batch_size == 20);
  CHECK(TrainConfig::defaults_for(RegKind::Stochastic, 2).max_iterations == 20000);
  CHECK(TrainConfig::defaults_for(RegKind::L2).batch_size == 20);
  TrainConfig c;
  c.validation_fraction = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.patience = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.reg.strength = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("separable toy data reaches zero training error") {
  const auto data = separable(200, 5, 3);
  TrainConfig c = TrainConfig::defaults_for(RegKind::None);
  c.hidden = {10};
  c.max_iterations = 2000;
  c.seed = 5;
  const auto r = train(c, data, {});
  CHECK(error_rate(r.params, data) == 0.0);
}

TEST_CASE("training is deterministic and returns the best checkpoint") {
  const auto data = three_class(300, 6, 7);
  TrainConfig c = TrainConfig::defaults_for(RegKind::L2);
  c.hidden = {8};
  c.max_iterations = 600;
  c.reg.strength = 0.001;
  c.seed = 11;
  const auto a = train(c, data, {});
  const auto b = train(c, data, {});
  CHECK(oracle::flatten(a.params) == oracle::flatten(b.params));
  REQUIRE(a.history.records.size() == b.history.records.size());
  for (std::size_t k = 0; k < a.history.records.size(); ++k)
    CHECK(a.history.records[k].validation_error == b.history.records[k].validation_error);

  // 600 updates, evaluations every 5.
  CHECK(a.history.records.size() == 120);
  CHECK(a.history.updates == 600);
  for (std::size_t k = 1; k < a.history.records.size(); ++k)
    CHECK(a.history.records[k].update > a.history.records[k - 1].update);
  double best = 1e300;
  std::size_t best_k = 0;
  for (std::size_t k = 0; k < a.history.records.size(); ++k)
    if (a.history.records[k].validation_error < best) {
      best = a.history.records[k].validation_error;
      best_k = k;
    }
  CHECK(a.history.best_index == best_k);

  const auto [tr, val] = validation_split(data, c.validation_fraction, derive_seed(c.seed, 2));
  CHECK(error_rate(a.params, val) == best);
  CHECK(tr.size() + val.size() == data.size());

  c.seed = 12;
  CHECK(oracle::flatten(train(c, data, {}).params) != oracle::flatten(a.params));
}

TEST_CASE("zero-strength feature penalties follow the unregularised trajectory") {
  const auto data = three_class(200, 6, 8);
  SimilarityStructure sim{6, {{0, 1, 1.0}, {2, 3, 0.5}}};
  TrainConfig none = TrainConfig::defaults_for(RegKind::None);
  none.hidden = {5};
  none.max_iterations = 200;
  none.seed = 3;
  TrainConfig st = none;
  st.reg.kind = RegKind::Stochastic;
  st.reg.strength = 0.0;
  const auto a = train(none, data, sim), b = train(st, data, sim);
  CHECK(oracle::flatten(a.params) == oracle::flatten(b.params));

  TrainConfig an = none;
  an.reg.kind = RegKind::Analytical;
  an.reg.strength = 5.0;
  const auto c = train(an, data, SimilarityStructure{6, {}});
  CHECK(oracle::flatten(a.params) == oracle::flatten(c.params));
}

TEST_CASE("history CSV has one row per evaluation") {
  const auto data = three_class(100, 4, 9);
  TrainConfig c;
  c.hidden = {4};
  c.max_iterations = 23;
  const auto r = train(c, data, {});
  const std::string csv = r.history.to_csv();
  CHECK(csv.rfind("update_index,train_loss,validation_error\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 5);  // 5, 10, 15, 20, 23
  CHECK(r.history.records.back().update == 23);
}

TEST_CASE("training-split class check and stochastic pair requirement") {
  auto data = three_class(100, 4, 10);
  LabeledData tr = data, val = data;
  for (auto& y : tr.labels)
    if (y == 2) y = 1;
  TrainConfig c;
  c.hidden = {3};
  c.max_iterations = 5;
  CHECK_THROWS_AS(fit(c, tr, val, {}), DataError);
  c.reg.kind = RegKind::Stochastic;
  c.reg.strength = 1.0;
  CHECK_THROWS_AS(fit(c, data, val, SimilarityStructure{4, {}}), ConfigError);
}

TEST_CASE("early stop on a diverging run") {
  // Huge learning rate drives the validation error around; patience 1 stops
  // at the first increase.
  const auto data = three_class(200, 4, 11);
  TrainConfig c;
  c.hidden = {4};
  c.max_iterations = 5000;
  c.patience = 1;
  c.adam.alpha = 0.5;
  const auto r = train(c, data, {});
  if (r.history.stop_reason == StopReason::EarlyStop) {
    const auto& rec = r.history.records;
    REQUIRE(rec.size() >= 2);
    CHECK(rec.back().validation_error > rec[rec.size() - 2].validation_error);
    CHECK(r.history.updates < 5000);
  }
  CHECK(r.history.updates == r.history.records.back().update);
}
