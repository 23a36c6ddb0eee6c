#pragma once

// Mini-batch Adam with validation-based early stopping.

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "featreg/network.hpp"
#include "featreg/regularisers.hpp"
#include "featreg/similarity.hpp"

namespace featreg {

using Params = NetworkParams<double>;
using Grads = Gradients<double>;

/// Dense instances (rows) with 0-based labels.
struct LabeledData {
  Eigen::MatrixXd X;
  std::vector<int> labels;
  int num_classes = 0;

  Index size() const { return X.rows(); }
  Index features() const { return X.cols(); }
  LabeledData subset(const std::vector<Index>& rows) const;
  void validate() const;
};

struct AdamConfig {
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Grads m;
  Grads v;
  long t = 0;
  AdamConfig hyper;

  static AdamState init(const Params& params, const AdamConfig& hyper = {});
};

/// One bias-corrected Adam update in place. Throws TrainingError when the
/// gradient has non-finite entries; params and state are left untouched then.
void adam_step(AdamState& state, Params& params, const Grads& grads);

struct TrainConfig {
  std::vector<Index> hidden = {100};
  Index batch_size = 20;
  long max_iterations = 10000;
  int eval_every = 5;
  int patience = 10;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
  RegConfig reg;
  AdamConfig adam;

  /// Batch size and iteration budget used in the reference experiments:
  /// AN 5 / 5000, ST 20 / 10000 (20000 with more than one hidden layer),
  /// baselines 20 / 10000.
  static TrainConfig defaults_for(RegKind kind, std::size_t hidden_layers = 1);
  void validate() const;
};

/// Counts consecutive strict increases of the validation error; a value that
/// does not exceed its predecessor resets the count.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  /// Returns true once `patience` consecutive increases have been observed.
  bool observe(double validation_error);
  int consecutive_increases() const { return count_; }

 private:
  int patience_;
  int count_ = 0;
  double previous_ = 0.0;
  bool has_previous_ = false;
};

enum class StopReason { MaxIterations, EarlyStop };
std::string to_string(StopReason reason);

struct HistoryRecord {
  long update = 0;
  double train_loss = 0.0;
  double validation_error = 0.0;
};

struct TrainingHistory {
  std::vector<HistoryRecord> records;
  StopReason stop_reason = StopReason::MaxIterations;
  std::size_t best_index = 0;  ///< first record with the minimum validation error
  long updates = 0;

  double best_validation_error() const { return records.at(best_index).validation_error; }
  /// "update_index,train_loss,validation_error" rows with a header line.
  std::string to_csv() const;
};

struct TrainResult {
  Params params;  ///< parameters at the best validation checkpoint
  TrainingHistory history;
};

/// Shuffles once with `seed` and moves `fraction` of the rows to the second
/// element.
std::pair<LabeledData, LabeledData> validation_split(const LabeledData& data, double fraction, std::uint64_t seed);

/// Trains on `train`, early-stops on `validation`. `similarity` supplies the
/// pairs used by AN and ST.
TrainResult fit(const TrainConfig& config, const LabeledData& train, const LabeledData& validation,
                const SimilarityStructure& similarity);

/// validation_split followed by fit.
TrainResult train(const TrainConfig& config, const LabeledData& data, const SimilarityStructure& similarity);

/// Classification error (%) of `params` on `data`.
double error_rate(const Params& params, const LabeledData& data);
std::vector<int> predict(const Params& params, const LabeledData& data);

/// Deterministic 64-bit stream seed derived from a master seed and tags.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index = 0);

}  // namespace featreg
