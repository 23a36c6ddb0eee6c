#pragma once

// Error rates, paired significance tests and hyperparameter selection.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "featreg/regularisers.hpp"
#include "featreg/similarity.hpp"
#include "featreg/trainer.hpp"

namespace featreg::eval {

/// 100 * mismatches / n. Throws ShapeError on a length mismatch.
double classification_error(const std::vector<int>& preds, const std::vector<int>& y);

enum class Direction { Better, Worse, Equal };

/// '+', '-' or '='.
char mark(Direction direction);

enum class McNemarMethod { ContinuityCorrected, ExactBinomial };

struct ComparisonResult {
  double statistic = 0.0;  ///< chi-square value, or min(b, c) for the exact variant
  double p_value = 1.0;
  bool significant = false;
  Direction direction = Direction::Equal;
  long b = 0;  ///< a correct, b wrong
  long c = 0;  ///< a wrong, b correct
};

/// Upper alpha quantile of chi-square with one degree of freedom.
double chi2_critical(double alpha);

ComparisonResult mcnemar(const std::vector<int>& preds_a, const std::vector<int>& preds_b, const std::vector<int>& y,
                         double alpha = 0.05, McNemarMethod method = McNemarMethod::ContinuityCorrected);

/// From the discordant counts alone.
ComparisonResult mcnemar_counts(long b, long c, double alpha = 0.05,
                                McNemarMethod method = McNemarMethod::ContinuityCorrected);

struct GridSpec {
  std::vector<double> candidates;  ///< lambda values, or dropout rates for RegKind::Dropout
  int inner_folds = 3;

  /// {1e-3 .. 1e3} for the feature penalties and l2 on synthetic data,
  /// {0.001, 0.01, 0.1, 1, 10} on corpora, {0.1 .. 0.5} for dropout.
  static GridSpec synthetic_default(RegKind kind);
  static GridSpec corpus_default(RegKind kind);
  void validate() const;
};

struct TuneOutcome {
  std::size_t best_index = 0;
  double best = 0.0;
  std::vector<std::optional<double>> scores;  ///< empty for failed candidates
  std::vector<std::string> warnings;
};

/// Error of one candidate; throwing marks the candidate as failed.
using Scorer = std::function<double(std::size_t index, double candidate)>;

/// Evaluates every candidate (up to `threads` at a time) and returns the
/// lowest score, ties going to the smaller candidate. Throws TrainingError
/// when every candidate fails.
TuneOutcome select(const GridSpec& grid, const Scorer& scorer, int threads = 1);

/// Writes `value` into the field the grid is over.
void apply_candidate(TrainConfig& config, double value);

/// Seed used for candidate `index` of a tuning run.
std::uint64_t candidate_seed(std::uint64_t seed, std::size_t index);

/// Every candidate is trained with `train` (its own validation split and
/// early stopping); the one with the lowest validation error wins. The
/// winning model is returned alongside.
struct ValidationTuned {
  TuneOutcome outcome;
  TrainResult model;
};
ValidationTuned tune_by_validation(const GridSpec& grid, const TrainConfig& base, const LabeledData& data,
                                   const SimilarityStructure& similarity, int threads = 1);

/// Mean error over `grid.inner_folds` stratified inner folds.
TuneOutcome tune_by_inner_cv(const GridSpec& grid, const TrainConfig& base, const LabeledData& data,
                             const SimilarityStructure& similarity, int threads = 1);

}  // namespace featreg::eval
