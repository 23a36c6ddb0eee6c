#include <doctest.h>

#include <atomic>
#include <cmath>
#include <set>

#include "featreg/error.hpp"
#include "featreg/eval.hpp"

using namespace featreg;
using namespace featreg::eval;

TEST_CASE("classification error") {
  CHECK(classification_error({0, 1, 2, 1}, {0, 1, 1, 1}) == 25.0);
  CHECK(classification_error({1, 1}, {1, 1}) == 0.0);
  CHECK(classification_error({0, 0}, {1, 1}) == 100.0);
  CHECK_THROWS_AS(classification_error({0, 1}, {0}), ShapeError);
  CHECK(mark(Direction::Better) == '+');
  CHECK(mark(Direction::Worse) == '-');
  CHECK(mark(Direction::Equal) == '=');
}

TEST_CASE("chi-square critical value") {
  CHECK(std::abs(chi2_critical(0.05) - 3.841459) < 1e-6);
  CHECK(std::abs(chi2_critical(0.01) - 6.634897) < 1e-6);
}

TEST_CASE("McNemar with continuity correction") {
  const auto big = mcnemar_counts(10, 0);
  CHECK(big.statistic == doctest::Approx(8.1));
  CHECK(big.significant);
  CHECK(big.direction == Direction::Better);
  const auto flipped = mcnemar_counts(0, 10);
  CHECK(flipped.statistic == big.statistic);
  CHECK(flipped.direction == Direction::Worse);

  const auto close = mcnemar_counts(5, 4);
  CHECK(close.statistic == 0.0);
  CHECK_FALSE(close.significant);
  CHECK(close.direction == Direction::Equal);
  CHECK(mcnemar_counts(0, 0).direction == Direction::Equal);
  CHECK(mcnemar_counts(1, 0).statistic == 0.0);

  // |b - c| = 1 for b + c odd is clamped at zero, not negative.
  CHECK(mcnemar_counts(0, 1).statistic >= 0.0);
}

TEST_CASE("McNemar from predictions is antisymmetric") {
  std::vector<int> y, a, b;
  for (int k = 0; k < 60; ++k) {
    y.push_back(k % 3);
    a.push_back(k < 50 ? k % 3 : (k + 1) % 3);  // wrong on 10
    b.push_back(k < 30 ? k % 3 : (k + 2) % 3);  // wrong on 30
  }
  const auto ab = mcnemar(a, b, y), ba = mcnemar(b, a, y);
  CHECK(ab.b == 20);
  CHECK(ab.c == 0);
  CHECK(ba.b == ab.c);
  CHECK(ba.c == ab.b);
  CHECK(ab.statistic == ba.statistic);
  CHECK(ab.direction == Direction::Better);
  CHECK(ba.direction == Direction::Worse);
  const auto self = mcnemar(a, a, y);
  CHECK(self.direction == Direction::Equal);
  CHECK(self.statistic == 0.0);
  CHECK_THROWS_AS(mcnemar(a, {1, 2}, y), ShapeError);
}

TEST_CASE("exact binomial variant") {
  const auto r = mcnemar_counts(10, 0, 0.05, McNemarMethod::ExactBinomial);
  CHECK(r.p_value == doctest::Approx(2.0 * std::pow(0.5, 10)));
  CHECK(r.significant);
  CHECK(r.direction == Direction::Better);
  const auto s = mcnemar_counts(6, 2, 0.05, McNemarMethod::ExactBinomial);
  CHECK(s.p_value == doctest::Approx(2.0 * (1 + 8 + 28) / 256.0));
  CHECK_FALSE(s.significant);
  CHECK(mcnemar_counts(3, 3, 0.05, McNemarMethod::ExactBinomial).p_value == doctest::Approx(1.0));
}

TEST_CASE("grid defaults and validation") {
  CHECK(GridSpec::synthetic_default(RegKind::Stochastic).candidates.size() == 7);
  CHECK(GridSpec::synthetic_default(RegKind::Dropout).candidates.front() == doctest::Approx(0.1));
  CHECK(GridSpec::corpus_default(RegKind::Analytical).candidates.size() == 5);
  GridSpec empty;
  CHECK_THROWS_AS(empty.validate(), ConfigError);
  GridSpec neg{{-1.0}, 3};
  CHECK_THROWS_AS(neg.validate(), ConfigError);
}

TEST_CASE("select: minimum, ties, failures") {
  GridSpec grid{{0.001, 0.01, 0.1, 1.0, 10.0}, 3};
  const std::vector<double> rigged{30.0, 12.0, 25.0, 12.0, 40.0};
  for (int threads : {1, 3}) {
    std::atomic<int> calls{0};
    const auto out = select(grid, [&](std::size_t k, double) {
      ++calls;
      return rigged[k];
    }, threads);
    CHECK(calls == 5);
    CHECK(out.best_index == 1);
    CHECK(out.best == 0.01);
    REQUIRE(out.scores.size() == 5);
    CHECK(*out.scores[3] == 12.0);
  }

  const auto skipped = select(grid, [&](std::size_t k, double) -> double {
    if (k == 1) throw TrainingError("diverged");
    return rigged[k];
  });
  CHECK(skipped.best_index == 3);
  CHECK_FALSE(skipped.scores[1].has_value());
  CHECK(skipped.warnings.size() == 1);

  CHECK_THROWS_AS(select(grid, [](std::size_t, double) -> double { throw TrainingError("no"); }), TrainingError);
}

TEST_CASE("candidate fields and seeds") {
  TrainConfig c;
  c.reg.kind = RegKind::Dropout;
  apply_candidate(c, 0.3);
  CHECK(c.reg.dropout_rate == 0.3);
  c.reg.kind = RegKind::L2;
  apply_candidate(c, 5.0);
  CHECK(c.reg.strength == 5.0);
  std::set<std::uint64_t> seeds;
  for (std::size_t k = 0; k < 7; ++k) seeds.insert(candidate_seed(9, k));
  CHECK(seeds.size() == 7);
  CHECK(candidate_seed(9, 2) == candidate_seed(9, 2));
}
