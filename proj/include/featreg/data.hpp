#pragma once

// Bag-of-words corpora: loading, vocabulary filtering and fold plans.

#include <Eigen/Sparse>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "featreg/similarity.hpp"
#include "featreg/trainer.hpp"

namespace featreg::data {

using Eigen::Index;

struct Dataset {
  Eigen::SparseMatrix<double, Eigen::RowMajor> X;  ///< n x d raw term counts
  std::vector<int> labels;                         ///< 0-based (files are 1-based)
  std::vector<std::string> vocab;                  ///< d names, may be generated
  std::string name;
  int num_classes = 0;

  Index size() const { return X.rows(); }
  Index features() const { return X.cols(); }

  LabeledData to_labeled() const;
  Dataset subset(const std::vector<Index>& rows) const;
};

/// One document per line: "label idx:count idx:count ...", 1-based label and
/// feature indices, positive integer counts. `features` fixes d; otherwise
/// d is the largest index seen.
Dataset load_bow(const std::string& path, std::optional<Index> features = std::nullopt);
Dataset parse_bow(std::istream& in, std::optional<Index> features = std::nullopt);
void save_bow(const std::string& path, const Dataset& dataset);

/// One word per line.
std::vector<std::string> read_vocab(const std::string& path);
/// "label_id<TAB>name" per line.
std::vector<std::string> read_label_names(const std::string& path);
/// Whitespace-separated words; '#' starts a comment.
std::vector<std::string> read_stop_list(const std::string& path);

struct FilterResult {
  Dataset dataset;
  std::optional<SideInfoMatrix> side_info;
  std::vector<Index> kept_features;  ///< original index of each remaining feature
  Index dropped_instances = 0;       ///< documents left without any word
};

/// Removes features whose corpus-wide count is <= min_count, reindexing the
/// vocabulary and the side-information rows together.
FilterResult frequency_filter(const Dataset& dataset, long min_count,
                              const std::optional<SideInfoMatrix>& side_info = std::nullopt);

/// Keeps only the listed features (ascending original indices).
FilterResult restrict_features(const Dataset& dataset, const std::vector<Index>& kept,
                               const std::optional<SideInfoMatrix>& side_info = std::nullopt);

/// Removes the features whose vocabulary entry is in `stop_words`.
FilterResult remove_words(const Dataset& dataset, const std::vector<std::string>& stop_words,
                          const std::optional<SideInfoMatrix>& side_info = std::nullopt);

struct FoldPlan {
  std::vector<std::vector<Index>> folds;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  /// Every index outside fold `k`, ascending.
  std::vector<Index> complement(std::size_t k) const;
};

/// k disjoint folds covering 0..n-1 with sizes differing by at most one.
/// With labels, each class is spread across the folds as evenly as possible.
FoldPlan kfold(Index n, int k, std::uint64_t seed, const std::vector<int>& stratify_labels = {});

}  // namespace featreg::data
