#include "featreg/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "featreg/io.hpp"

namespace featreg {

using Eigen::Index;

SideInfoMatrix::SideInfoMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() < 2) throw DataError("side-information needs at least two features");
  if (values_.cols() < 1) throw DataError("side-information needs at least one column");
  if (!values_.allFinite()) throw DataError("side-information contains non-finite entries");
}

SideInfoMatrix SideInfoMatrix::select_rows(const std::vector<Index>& keep) const {
  Eigen::MatrixXd out(static_cast<Index>(keep.size()), values_.cols());
  for (std::size_t r = 0; r < keep.size(); ++r) out.row(static_cast<Index>(r)) = values_.row(keep[r]);
  return SideInfoMatrix(std::move(out));
}

Eigen::SparseMatrix<double> SimilarityStructure::sparse() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(2 * pairs.size());
  for (const auto& p : pairs) {
    triplets.emplace_back(p.i, p.j, p.weight);
    triplets.emplace_back(p.j, p.i, p.weight);
  }
  Eigen::SparseMatrix<double> S(features, features);
  S.setFromTriplets(triplets.begin(), triplets.end());
  return S;
}

Eigen::MatrixXd SimilarityStructure::dense() const {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(features, features);
  for (const auto& p : pairs) {
    S(p.i, p.j) = p.weight;
    S(p.j, p.i) = p.weight;
  }
  return S;
}

namespace {

// Upper-triangle squared distances in (i, j) lexicographic order.
std::vector<double> pairwise_sq_distances(const Eigen::MatrixXd& Z) {
  const Index d = Z.rows();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(d * (d - 1) / 2));
  for (Index i = 0; i < d; ++i)
    for (Index j = i + 1; j < d; ++j) out.push_back((Z.row(i) - Z.row(j)).squaredNorm());
  return out;
}

}  // namespace

Eigen::MatrixXd heat_kernel(const SideInfoMatrix& Z, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ParameterError("heat kernel bandwidth must be positive");
  const auto& V = Z.values();
  const Index d = V.rows();
  const double scale_factor = 1.0 / (2.0 * sigma * sigma);
  Eigen::MatrixXd S(d, d);
  for (Index i = 0; i < d; ++i) {
    S(i, i) = 1.0;
    for (Index j = i + 1; j < d; ++j) {
      const double s = std::exp(-scale_factor * (V.row(i) - V.row(j)).squaredNorm());
      S(i, j) = s;
      S(j, i) = s;
    }
  }
  return S;
}

double band_fraction(const std::vector<double>& sq_dist, double sigma, double band_low, double band_high) {
  if (sq_dist.empty()) return 0.0;
  // exp(-r / (2 sigma^2)) in [lo, hi]  <=>  r in [-2 sigma^2 ln hi, -2 sigma^2 ln lo]
  const double two_s2 = 2.0 * sigma * sigma;
  const double r_min = band_high >= 1.0 ? -std::numeric_limits<double>::infinity() : -two_s2 * std::log(band_high);
  const double r_max = band_low <= 0.0 ? std::numeric_limits<double>::infinity() : -two_s2 * std::log(band_low);
  const auto first = std::lower_bound(sq_dist.begin(), sq_dist.end(), r_min);
  const auto last = std::upper_bound(sq_dist.begin(), sq_dist.end(), r_max);
  const auto count = last > first ? last - first : 0;
  return static_cast<double>(count) / static_cast<double>(sq_dist.size());
}

double bandwidth_for_similarity(double sq_dist, double s) {
  if (!(s > 0.0 && s < 1.0)) throw ParameterError("target similarity must lie in (0, 1)");
  if (!(sq_dist > 0.0)) throw ParameterError("squared distance must be positive");
  return std::sqrt(sq_dist / (-2.0 * std::log(s)));
}

BandwidthResult calibrate_bandwidth(const SideInfoMatrix& Z, double target_fraction, double band_low,
                                    double band_high) {
  if (!(target_fraction > 0.0 && target_fraction < 1.0)) throw ParameterError("target fraction must lie in (0, 1)");
  if (!(band_low > 0.0 && band_low < band_high && band_high <= 1.0))
    throw ParameterError("similarity band must satisfy 0 < low < high <= 1");
  constexpr double kTolerance = 0.02;

  std::vector<double> sq = pairwise_sq_distances(Z.values());
  std::sort(sq.begin(), sq.end());
  BandwidthResult result;

  const auto positive = std::upper_bound(sq.begin(), sq.end(), 0.0);
  if (positive == sq.end()) {
    result.sigma = 1.0;
    result.fraction = band_fraction(sq, 1.0, band_low, band_high);
    result.warning = true;
    result.message = "all side-information rows coincide; every bandwidth gives the same similarities";
    return result;
  }

  // Bracket in log(sigma): at lo_sigma every positive distance is below the
  // band, at hi_sigma every one is inside it (when band_high == 1).
  const double smallest = *positive;
  const double largest = sq.back();
  double lo = std::log(bandwidth_for_similarity(smallest, std::min(band_low, 0.999999)) * 1e-3);
  double hi = std::log(bandwidth_for_similarity(largest, std::max(band_low, 1e-12)) * 1e3);

  auto fraction_at = [&](double log_sigma) { return band_fraction(sq, std::exp(log_sigma), band_low, band_high); };

  double best_sigma = std::exp(hi);
  double best_gap = std::abs(fraction_at(hi) - target_fraction);
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    const double f = fraction_at(mid);
    const double gap = std::abs(f - target_fraction);
    if (gap < best_gap) {
      best_gap = gap;
      best_sigma = std::exp(mid);
    }
    if (gap <= kTolerance && iter > 0) break;
    if (f < target_fraction)
      lo = mid;
    else
      hi = mid;
  }
  result.sigma = best_sigma;
  result.fraction = band_fraction(sq, best_sigma, band_low, band_high);
  if (std::abs(result.fraction - target_fraction) > kTolerance) {
    result.warning = true;
    std::ostringstream msg;
    msg << "target fraction " << target_fraction << " unreachable; closest achievable is " << result.fraction;
    result.message = msg.str();
  }
  return result;
}

SimilarityStructure sparsify_top(const Eigen::MatrixXd& S, double fraction) {
  if (S.rows() != S.cols()) throw ShapeError("similarity matrix must be square");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ParameterError("sparsification fraction must lie in (0, 1]");
  const Index d = S.rows();
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, S.cwiseAbs().maxCoeff()))
    throw ContractError("similarity matrix is not symmetric");

  PairSet candidates;
  for (Index i = 0; i < d; ++i)
    for (Index j = i + 1; j < d; ++j)
      if (S(i, j) > 0.0) candidates.push_back({i, j, 0.5 * (S(i, j) + S(j, i))});

  const double total = static_cast<double>(d) * static_cast<double>(d - 1) / 2.0;
  const auto keep = std::min<std::size_t>(candidates.size(), static_cast<std::size_t>(std::ceil(fraction * total - 1e-9)));
  // Candidates are already in (i, j) order, so a stable sort on weight alone
  // resolves ties towards the smaller pair.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const SimilarPair& a, const SimilarPair& b) { return a.weight > b.weight; });
  candidates.resize(keep);
  std::sort(candidates.begin(), candidates.end(),
            [](const SimilarPair& a, const SimilarPair& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
  return {d, std::move(candidates)};
}

Eigen::MatrixXd laplacian(const Eigen::MatrixXd& S) {
  if (S.rows() != S.cols()) throw ShapeError("similarity matrix must be square");
  const double tol = 1e-12 * std::max(1.0, S.cwiseAbs().maxCoeff());
  if ((S - S.transpose()).cwiseAbs().maxCoeff() > tol) throw ContractError("similarity matrix is not symmetric");
  if (S.minCoeff() < 0.0) throw ContractError("similarity matrix has negative entries");
  Eigen::MatrixXd L = -S;
  L.diagonal() += S.rowwise().sum();
  return L;
}

Eigen::MatrixXd laplacian(const SimilarityStructure& sim) {
  const Index d = sim.features;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(d, d);
  for (const auto& p : sim.pairs) {
    L(p.i, p.j) -= p.weight;
    L(p.j, p.i) -= p.weight;
    L(p.i, p.i) += p.weight;
    L(p.j, p.j) += p.weight;
  }
  return L;
}

SideInfoMatrix parse_side_info(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  Index expected_rows = -1, expected_cols = -1;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      if (rows.empty() && expected_rows < 0) {
        std::istringstream hs(line.substr(first + 1));
        Index r = 0, c = 0;
        if (hs >> r >> c) {
          expected_rows = r;
          expected_cols = c;
        }
      }
      continue;
    }
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw DataError("side-info line " + std::to_string(line_no) + ": cannot parse '" + tok + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw DataError("side-info line " + std::to_string(line_no) + ": expected " +
                      std::to_string(rows.front().size()) + " columns");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("side-info file has no rows");
  const auto c = static_cast<Index>(rows.front().size());
  if (expected_rows >= 0 && (expected_rows != static_cast<Index>(rows.size()) || expected_cols != c))
    throw DataError("side-info header disagrees with the file contents");
  Eigen::MatrixXd Z(static_cast<Index>(rows.size()), c);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (Index k = 0; k < c; ++k) Z(static_cast<Index>(r), k) = rows[r][static_cast<std::size_t>(k)];
  return SideInfoMatrix(std::move(Z));
}

SideInfoMatrix read_side_info(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open side-info file " + path);
  return parse_side_info(in);
}

void write_side_info(const std::string& path, const SideInfoMatrix& Z) {
  std::ostringstream out;
  out << "# " << Z.features() << ' ' << Z.dims() << '\n' << std::setprecision(17);
  for (Index i = 0; i < Z.features(); ++i) {
    for (Index k = 0; k < Z.dims(); ++k) out << (k ? " " : "") << Z.values()(i, k);
    out << '\n';
  }
  io::write_file_atomic(path, out.str());
}

void write_similarity_csv(const std::string& path, const SimilarityStructure& sim) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (const auto& p : sim.pairs) out << p.i << ',' << p.j << ',' << p.weight << '\n';
  io::write_file_atomic(path, out.str());
}

SimilarityStructure read_similarity_csv(const std::string& path, Index features) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open similarity file " + path);
  SimilarityStructure sim{features, {}};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    SimilarPair p;
    if (!(ls >> p.i >> p.j >> p.weight)) throw DataError("similarity line " + std::to_string(line_no) + " malformed");
    if (p.i > p.j) std::swap(p.i, p.j);
    if (p.i == p.j || p.i < 0 || p.j >= features)
      throw DataError("similarity line " + std::to_string(line_no) + ": invalid pair");
    sim.pairs.push_back(p);
  }
  std::sort(sim.pairs.begin(), sim.pairs.end(),
            [](const SimilarPair& a, const SimilarPair& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
  for (std::size_t k = 1; k < sim.pairs.size(); ++k)
    if (sim.pairs[k].i == sim.pairs[k - 1].i && sim.pairs[k].j == sim.pairs[k - 1].j)
      throw DataError("similarity file lists a pair twice");
  return sim;
}

}  // namespace featreg
