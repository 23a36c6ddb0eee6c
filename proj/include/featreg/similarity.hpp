#pragma once

// Feature similarity from side-information: heat kernel, bandwidth
// calibration, top-fraction sparsification and the graph Laplacian.
//
// Penalties use the identity
//
//   u^T L u = 1/2 sum_{i,j} S_ij (u_i - u_j)^2 = sum_{i<j} S_ij (u_i - u_j)^2,
//
// so a pair list (i < j, S_ij) and the dense Laplacian describe the same
// quadratic form.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <iosfwd>
#include <string>
#include <vector>

#include "featreg/error.hpp"

namespace featreg {

/// d x c matrix whose row i describes feature i.
class SideInfoMatrix {
 public:
  SideInfoMatrix() = default;
  explicit SideInfoMatrix(Eigen::MatrixXd values);

  Eigen::Index features() const { return values_.rows(); }
  Eigen::Index dims() const { return values_.cols(); }
  const Eigen::MatrixXd& values() const { return values_; }

  /// Rows listed in `keep`, in that order.
  SideInfoMatrix select_rows(const std::vector<Eigen::Index>& keep) const;

 private:
  Eigen::MatrixXd values_;
};

struct SimilarPair {
  Eigen::Index i = 0;  ///< always i < j
  Eigen::Index j = 0;
  double weight = 0.0;

  friend bool operator==(const SimilarPair&, const SimilarPair&) = default;
};

using PairSet = std::vector<SimilarPair>;

/// Sparsified similarity: the retained pairs, sorted by (i, j).
struct SimilarityStructure {
  Eigen::Index features = 0;
  PairSet pairs;

  /// Symmetric sparse S with zero diagonal.
  Eigen::SparseMatrix<double> sparse() const;
  Eigen::MatrixXd dense() const;
};

/// S_ij = exp(-|z_i - z_j|^2 / (2 sigma^2)); diagonal exactly 1.
Eigen::MatrixXd heat_kernel(const SideInfoMatrix& Z, double sigma);

struct BandwidthResult {
  double sigma = 0.0;
  double fraction = 0.0;  ///< achieved fraction of upper-triangle entries in the band
  bool warning = false;   ///< target not reached within tolerance
  std::string message;
};

/// Bisection on sigma so that `target_fraction` (+-0.02) of the
/// upper-triangle entries of the heat kernel fall in [band_low, band_high].
BandwidthResult calibrate_bandwidth(const SideInfoMatrix& Z, double target_fraction = 0.2,
                                    double band_low = 0.8, double band_high = 1.0);

/// Fraction of the upper-triangle squared distances whose kernel value lies in
/// [band_low, band_high] at bandwidth sigma. `sq_dist` must be sorted.
double band_fraction(const std::vector<double>& sq_dist, double sigma, double band_low, double band_high);

/// sigma at which two features `sq_dist` apart have similarity `s`.
double bandwidth_for_similarity(double sq_dist, double s);

/// Keeps the ceil(fraction * d(d-1)/2) largest positive upper-triangle
/// entries. Ties at the threshold go to the lexicographically smaller (i, j).
SimilarityStructure sparsify_top(const Eigen::MatrixXd& S, double fraction = 0.2);

/// L = D - S for a dense symmetric nonnegative S.
Eigen::MatrixXd laplacian(const Eigen::MatrixXd& S);
Eigen::MatrixXd laplacian(const SimilarityStructure& sim);

/// Side-info text file: whitespace-separated floats, one feature per line,
/// optional "# d c" header.
SideInfoMatrix read_side_info(const std::string& path);
SideInfoMatrix parse_side_info(std::istream& in);
void write_side_info(const std::string& path, const SideInfoMatrix& Z);

/// "i,j,s_ij" per line, 0-based, i < j.
void write_similarity_csv(const std::string& path, const SimilarityStructure& sim);
SimilarityStructure read_similarity_csv(const std::string& path, Eigen::Index features);

}  // namespace featreg
