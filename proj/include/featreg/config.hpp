#pragma once

// Experiment configuration: an INI file with typed keys.
//
//   [experiment]  name, seed
//   [data]        source = synthetic | bow, plus the keys of that source
//   [similarity]  source = synthetic | side_info | pairs
//   [network]     hidden = 100 (comma separated for more layers)
//   [train]       batch_size, max_iterations, eval_every, patience,
//                 validation_fraction, alpha, beta1, beta2, epsilon
//   [regulariser] kind, strength, dropout_rate, neighborhood, samples_per_instance
//   [tune]        mode = validation | inner_cv, grid, inner_folds
//   [compare]     regularisers, folds, alpha, exact
//
// Unset batch_size / max_iterations follow TrainConfig::defaults_for, so
// each regulariser keeps its reference batch size in a comparison.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "featreg/eval.hpp"
#include "featreg/regularisers.hpp"
#include "featreg/synth.hpp"
#include "featreg/trainer.hpp"

namespace featreg {

RegKind parse_reg_kind(const std::string& name);
std::string to_string(RegKind kind);

struct DataSection {
  enum class Source { Synthetic, Bow };
  Source source = Source::Synthetic;
  std::string name;

  synth::SyntheticSpec synthetic;
  std::optional<std::uint64_t> synthetic_seed;  ///< unset: the experiment seed
  double test_fraction = 0.2;      ///< synthetic hold-out; 0 selects cross-validation

  std::string train_path;  ///< bag-of-words corpus
  std::string test_path;   ///< optional; without it compare cross-validates
  std::string vocab_path;
  std::string stop_list_path;
  long min_count = 0;
};

struct SimilaritySection {
  enum class Source { Synthetic, SideInfo, Pairs };
  Source source = Source::Synthetic;
  std::string path;
  std::optional<double> sigma;  ///< unset: calibrated
  double target_fraction = 0.2;
  double band_low = 0.8;
  double band_high = 1.0;
  double sparsify = 0.2;
};

struct TrainSection {
  std::optional<Index> batch_size;
  std::optional<long> max_iterations;
  int eval_every = 5;
  int patience = 10;
  double validation_fraction = 0.2;
  AdamConfig adam;
};

struct TuneSection {
  enum class Mode { Validation, InnerCV };
  Mode mode = Mode::Validation;
  std::vector<double> grid;  ///< empty: default grid of the kind
  int inner_folds = 3;
};

struct CompareSection {
  std::vector<RegKind> regularisers{RegKind::Stochastic, RegKind::Analytical, RegKind::L2, RegKind::Dropout};
  int folds = 5;
  double alpha = 0.05;
  bool exact = false;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 1;
  DataSection data;
  SimilaritySection similarity;
  std::vector<Index> hidden{100};
  TrainSection train;
  RegConfig reg{RegKind::Analytical, 1.0};
  TuneSection tune;
  CompareSection compare;

  /// Training settings for `kind` with this file's overrides applied.
  TrainConfig train_config(RegKind kind) const;
  eval::GridSpec grid_for(RegKind kind) const;
  void validate() const;
  /// Round-trips through parse_config.
  std::string to_ini() const;
};

/// Throws ConfigError on unknown sections or keys and on malformed values.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

}  // namespace featreg
