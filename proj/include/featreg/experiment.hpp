#pragma once

// End-to-end runs behind the command-line tool: data preparation, training,
// tuning and regulariser comparisons with significance marks.

#include <optional>
#include <string>
#include <vector>

#include "featreg/config.hpp"
#include "featreg/eval.hpp"
#include "featreg/similarity.hpp"
#include "featreg/trainer.hpp"

namespace featreg {

struct PreparedData {
  std::string name;
  LabeledData train;
  std::optional<LabeledData> test;  ///< absent: cross-validate on `train`
  SimilarityStructure similarity;
  std::vector<std::string> notes;   ///< filtering counts, bandwidth warnings, ...
};

/// Loads or generates the data configured in `config` and builds the
/// matching similarity structure.
PreparedData prepare(const ExperimentConfig& config);

struct TrainReport {
  TrainResult result;
  double train_error = 0.0;
  std::optional<double> test_error;
};

TrainReport run_train(const ExperimentConfig& config, const PreparedData& data);

struct ColumnResult {
  RegKind kind = RegKind::None;
  bool failed = false;
  std::string failure;
  std::vector<double> fold_errors;
  std::vector<double> chosen;                 ///< selected lambda / rate per fold
  std::vector<int> predictions;               ///< pooled over test folds, per instance
  std::vector<TrainingHistory> histories;     ///< selected model per fold
  std::vector<std::string> warnings;
  std::string stored_marks;  ///< filled by read_results_csv

  double mean_error() const;
};

struct CompareResult {
  std::string dataset;
  std::vector<int> labels;  ///< pooled test labels
  std::vector<ColumnResult> columns;
  /// pairwise[a][b] compares column a against column b; empty if either failed.
  std::vector<std::vector<std::optional<eval::ComparisonResult>>> pairwise;

  /// Mark of column `a` against each column in order, '.' at `a` itself and
  /// '?' where a comparison is missing.
  std::string marks(std::size_t a) const;
};

/// Tunes and evaluates every regulariser in config.compare on the same
/// folds (or train/test split) and runs McNemar on the pooled predictions.
CompareResult run_compare(const ExperimentConfig& config, const PreparedData& data, int threads = 1);

/// One row per result: "dataset,regulariser,status,mean_error,fold_errors,chosen,marks".
std::string results_csv(const std::vector<CompareResult>& results);
/// "dataset,a,b,b_count,c_count,statistic,p_value,mark".
std::string pairwise_csv(const CompareResult& result);
/// Dataset rows, regulariser columns, "error marks" cells.
std::string results_table(const std::vector<CompareResult>& results);

/// Parses files written by results_csv back (marks kept, pairwise detail dropped).
std::vector<CompareResult> read_results_csv(const std::string& path);

/// Reproducibility record: the effective config plus a [run] section with
/// the command, thread count and library versions.
std::string manifest(const ExperimentConfig& config, const std::string& command, int threads);

}  // namespace featreg
