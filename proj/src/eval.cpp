#include "featreg/eval.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "featreg/data.hpp"
#include "featreg/error.hpp"

namespace featreg::eval {

namespace {

constexpr std::uint64_t kTune = 6;

template <typename Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const auto workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) fn(k);
    });
  for (auto& t : pool) t.join();
}

}  // namespace

double classification_error(const std::vector<int>& preds, const std::vector<int>& y) {
  if (preds.size() != y.size())
    throw ShapeError("prediction count " + std::to_string(preds.size()) + " differs from label count " +
                     std::to_string(y.size()));
  if (y.empty()) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t k = 0; k < y.size(); ++k)
    if (preds[k] != y[k]) ++wrong;
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(y.size());
}

char mark(Direction direction) {
  switch (direction) {
    case Direction::Better: return '+';
    case Direction::Worse: return '-';
    case Direction::Equal: return '=';
  }
  return '?';
}

double chi2_critical(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (0, 1)");
  return boost::math::quantile(boost::math::complement(boost::math::chi_squared_distribution<double>(1.0), alpha));
}

ComparisonResult mcnemar_counts(long b, long c, double alpha, McNemarMethod method) {
  if (b < 0 || c < 0) throw ParameterError("discordant counts must be nonnegative");
  ComparisonResult r;
  r.b = b;
  r.c = c;
  if (b + c == 0) return r;
  if (method == McNemarMethod::ContinuityCorrected) {
    const double diff = std::max(0.0, std::abs(static_cast<double>(b - c)) - 1.0);
    r.statistic = diff * diff / static_cast<double>(b + c);
    r.p_value = boost::math::cdf(
        boost::math::complement(boost::math::chi_squared_distribution<double>(1.0), r.statistic));
    r.significant = r.statistic > chi2_critical(alpha);
  } else {
    const long n = b + c, k = std::min(b, c);
    r.statistic = static_cast<double>(k);
    const boost::math::binomial_distribution<double> dist(static_cast<double>(n), 0.5);
    r.p_value = std::min(1.0, 2.0 * boost::math::cdf(dist, static_cast<double>(k)));
    r.significant = r.p_value < alpha;
  }
  if (r.significant) r.direction = b > c ? Direction::Better : Direction::Worse;
  return r;
}

ComparisonResult mcnemar(const std::vector<int>& preds_a, const std::vector<int>& preds_b, const std::vector<int>& y,
                         double alpha, McNemarMethod method) {
  if (preds_a.size() != y.size() || preds_b.size() != y.size())
    throw ShapeError("McNemar needs both prediction vectors on the same test set");
  long b = 0, c = 0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const bool a_ok = preds_a[k] == y[k], b_ok = preds_b[k] == y[k];
    if (a_ok && !b_ok) ++b;
    if (!a_ok && b_ok) ++c;
  }
  return mcnemar_counts(b, c, alpha, method);
}

GridSpec GridSpec::synthetic_default(RegKind kind) {
  if (kind == RegKind::Dropout) return {{0.1, 0.2, 0.3, 0.4, 0.5}, 3};
  if (kind == RegKind::None) return {{0.0}, 3};
  return {{1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0}, 3};
}

GridSpec GridSpec::corpus_default(RegKind kind) {
  if (kind == RegKind::Dropout) return {{0.1, 0.2, 0.3, 0.4, 0.5}, 3};
  if (kind == RegKind::None) return {{0.0}, 3};
  return {{0.001, 0.01, 0.1, 1.0, 10.0}, 3};
}

void GridSpec::validate() const {
  if (candidates.empty()) throw ConfigError("tuning grid is empty");
  for (double v : candidates)
    if (!std::isfinite(v) || v < 0.0) throw ConfigError("grid candidates must be finite and nonnegative");
  if (inner_folds < 2) throw ConfigError("inner_folds must be at least 2");
}

TuneOutcome select(const GridSpec& grid, const Scorer& scorer, int threads) {
  grid.validate();
  const std::size_t n = grid.candidates.size();
  TuneOutcome out;
  out.scores.assign(n, std::nullopt);
  std::vector<std::string> failures(n);
  parallel_for(n, threads, [&](std::size_t k) {
    try {
      out.scores[k] = scorer(k, grid.candidates[k]);
    } catch (const std::exception& e) {
      failures[k] = e.what();
    }
  });
  std::optional<std::size_t> best;
  for (std::size_t k = 0; k < n; ++k) {
    if (!out.scores[k]) {
      out.warnings.push_back("candidate " + std::to_string(grid.candidates[k]) + " failed: " + failures[k]);
      continue;
    }
    if (!best) {
      best = k;
      continue;
    }
    const double s = *out.scores[k], sb = *out.scores[*best];
    if (s < sb || (s == sb && grid.candidates[k] < grid.candidates[*best])) best = k;
  }
  if (!best) throw TrainingError("every tuning candidate failed");
  out.best_index = *best;
  out.best = grid.candidates[*best];
  return out;
}

void apply_candidate(TrainConfig& config, double value) {
  if (config.reg.kind == RegKind::Dropout)
    config.reg.dropout_rate = value;
  else
    config.reg.strength = value;
}

std::uint64_t candidate_seed(std::uint64_t seed, std::size_t index) { return derive_seed(seed, kTune, index); }

ValidationTuned tune_by_validation(const GridSpec& grid, const TrainConfig& base, const LabeledData& data,
                                   const SimilarityStructure& similarity, int threads) {
  std::vector<std::optional<TrainResult>> models(grid.candidates.size());
  auto outcome = select(
      grid,
      [&](std::size_t k, double value) {
        TrainConfig config = base;
        apply_candidate(config, value);
        config.seed = candidate_seed(base.seed, k);
        models[k] = train(config, data, similarity);
        return models[k]->history.best_validation_error();
      },
      threads);
  return {outcome, std::move(*models[outcome.best_index])};
}

TuneOutcome tune_by_inner_cv(const GridSpec& grid, const TrainConfig& base, const LabeledData& data,
                             const SimilarityStructure& similarity, int threads) {
  grid.validate();
  const auto plan = data::kfold(data.size(), grid.inner_folds, derive_seed(base.seed, kTune, 1u << 20), data.labels);
  auto outcome = select(
      grid,
      [&](std::size_t k, double value) {
        TrainConfig config = base;
        apply_candidate(config, value);
        double total = 0.0;
        for (std::size_t f = 0; f < plan.folds.size(); ++f) {
          config.seed = derive_seed(candidate_seed(base.seed, k), kTune, f);
          const auto model = train(config, data.subset(plan.complement(f)), similarity);
          total += error_rate(model.params, data.subset(plan.folds[f]));
        }
        return total / static_cast<double>(plan.folds.size());
      },
      threads);
  outcome.warnings.insert(outcome.warnings.begin(), plan.warnings.begin(), plan.warnings.end());
  return outcome;
}

}  // namespace featreg::eval
