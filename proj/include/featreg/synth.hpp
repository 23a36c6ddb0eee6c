#pragma once

// Artificial datasets whose labels depend on the input only through sums of
// clustered features, with the matching binary feature similarity.

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "featreg/similarity.hpp"

namespace featreg::synth {

enum class Scheme { A1, A2, A3 };

Scheme parse_scheme(const std::string& name);
std::string to_string(Scheme scheme);

struct SyntheticSpec {
  Eigen::Index d = 3000;
  Eigen::Index n = 5000;
  Eigen::Index q = 5;
  Scheme scheme = Scheme::A1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticDataset {
  Eigen::MatrixXd X;         ///< n x d, entries U(-1, 1)
  std::vector<int> labels;   ///< 0-based class of each row
  std::vector<Eigen::Index> cluster;  ///< latent factor of each feature
  Eigen::Index latent_dim = 0;
  SimilarityStructure similarity;     ///< S_ij = 1 for i != j in one cluster
};

/// A1 clusters all d features into d/2 factors; A2 clusters a random half
/// into d/4 factors and passes the rest through; A3 clusters a random quarter
/// into d/8 factors. Every factor gets one seed feature, the remaining
/// clustered features pick a factor uniformly. Latent values are the sums of
/// each factor's features, labels the argmax of sigmoid(latent * P) for a
/// standard-normal P.
SyntheticDataset generate(const SyntheticSpec& spec);

/// Binary similarity implied by a feature -> factor map.
SimilarityStructure similarity_from_clusters(const std::vector<Eigen::Index>& cluster);

struct SparsityStats {
  double nonzero_fraction = 0.0;     ///< off-diagonal nonzeros over d(d-1)
  double mean_similar_per_feature = 0.0;
};

SparsityStats sparsity_stats(const SimilarityStructure& S);
SparsityStats sparsity_stats(const Eigen::MatrixXd& S);

/// X.csv, labels.txt (1-based), similarity.csv and clusters.txt in `dir`.
void write_dataset(const std::string& dir, const SyntheticDataset& data);

}  // namespace featreg::synth
