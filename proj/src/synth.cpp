#include "featreg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "featreg/error.hpp"
#include "featreg/io.hpp"

namespace featreg::synth {

using Eigen::Index;

Scheme parse_scheme(const std::string& name) {
  if (name == "A1" || name == "a1") return Scheme::A1;
  if (name == "A2" || name == "a2") return Scheme::A2;
  if (name == "A3" || name == "a3") return Scheme::A3;
  throw ConfigError("unknown synthetic scheme '" + name + "' (expected A1, A2 or A3)");
}

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::A1: return "A1";
    case Scheme::A2: return "A2";
    case Scheme::A3: return "A3";
  }
  return "?";
}

namespace {

Index divisor(Scheme scheme) {
  switch (scheme) {
    case Scheme::A1: return 2;
    case Scheme::A2: return 4;
    case Scheme::A3: return 8;
  }
  return 1;
}

}  // namespace

void SyntheticSpec::validate() const {
  const Index div = divisor(scheme);
  if (d < div || d % div != 0)
    throw ConfigError(to_string(scheme) + " needs d divisible by " + std::to_string(div) + ", got " +
                      std::to_string(d));
  if (q < 2) throw ConfigError("q must be at least 2");
  if (n < q) throw ConfigError("n must be at least q");
}

SyntheticDataset generate(const SyntheticSpec& spec) {
  spec.validate();
  const Index d = spec.d, n = spec.n, q = spec.q;
  std::mt19937_64 rng(spec.seed);

  // Which features are clustered and into how many factors.
  Index clustered = d, factors = d / 2;
  if (spec.scheme == Scheme::A2) {
    clustered = d / 2;
    factors = d / 4;
  } else if (spec.scheme == Scheme::A3) {
    clustered = d / 4;
    factors = d / 8;
  }
  std::vector<Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);

  SyntheticDataset out;
  out.cluster.assign(static_cast<std::size_t>(d), -1);
  // order[0, factors) seed the factors, order[factors, clustered) join one
  // uniformly, order[clustered, d) are passed through.
  std::uniform_int_distribution<Index> pick(0, factors - 1);
  for (Index k = 0; k < factors; ++k) out.cluster[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = k;
  for (Index k = factors; k < clustered; ++k)
    out.cluster[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = pick(rng);
  Index next = factors;
  for (Index k = clustered; k < d; ++k) out.cluster[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = next++;
  out.latent_dim = next;

  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  out.X.resize(n, d);
  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < d; ++c) out.X(r, c) = unit(rng);

  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd P(out.latent_dim, q);
  for (Index r = 0; r < P.rows(); ++r)
    for (Index c = 0; c < q; ++c) P(r, c) = normal(rng);

  Eigen::MatrixXd latent = Eigen::MatrixXd::Zero(n, out.latent_dim);
  for (Index c = 0; c < d; ++c) latent.col(out.cluster[static_cast<std::size_t>(c)]) += out.X.col(c);
  const Eigen::MatrixXd scores = (latent * P).unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  out.labels.resize(static_cast<std::size_t>(n));
  for (Index r = 0; r < n; ++r) {
    Index best = 0;
    for (Index c = 1; c < q; ++c)
      if (scores(r, c) > scores(r, best)) best = c;
    out.labels[static_cast<std::size_t>(r)] = static_cast<int>(best);
  }
  out.similarity = similarity_from_clusters(out.cluster);
  return out;
}

SimilarityStructure similarity_from_clusters(const std::vector<Index>& cluster) {
  std::map<Index, std::vector<Index>> members;
  for (std::size_t f = 0; f < cluster.size(); ++f) members[cluster[f]].push_back(static_cast<Index>(f));
  SimilarityStructure sim{static_cast<Index>(cluster.size()), {}};
  for (const auto& [id, feats] : members)
    for (std::size_t a = 0; a < feats.size(); ++a)
      for (std::size_t b = a + 1; b < feats.size(); ++b) sim.pairs.push_back({feats[a], feats[b], 1.0});
  std::sort(sim.pairs.begin(), sim.pairs.end(),
            [](const SimilarPair& x, const SimilarPair& y) { return x.i != y.i ? x.i < y.i : x.j < y.j; });
  return sim;
}

SparsityStats sparsity_stats(const SimilarityStructure& S) {
  const double d = static_cast<double>(S.features);
  Index nonzero = 0;
  for (const auto& p : S.pairs)
    if (p.weight != 0.0) ++nonzero;
  if (S.features < 2) return {};
  return {2.0 * static_cast<double>(nonzero) / (d * (d - 1.0)), 2.0 * static_cast<double>(nonzero) / d};
}

SparsityStats sparsity_stats(const Eigen::MatrixXd& S) {
  const Index d = S.rows();
  if (d < 2) return {};
  Index nonzero = 0;
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j)
      if (i != j && S(i, j) != 0.0) ++nonzero;
  const double dd = static_cast<double>(d);
  return {static_cast<double>(nonzero) / (dd * (dd - 1.0)), static_cast<double>(nonzero) / dd};
}

void write_dataset(const std::string& dir, const SyntheticDataset& data) {
  io::ensure_directory(dir);
  {
    std::ostringstream x;
    x << std::setprecision(17);
    for (Index r = 0; r < data.X.rows(); ++r) {
      for (Index c = 0; c < data.X.cols(); ++c) x << (c ? "," : "") << data.X(r, c);
      x << '\n';
    }
    io::write_file_atomic(dir + "/X.csv", x.str());
  }
  {
    std::ostringstream y;
    for (int label : data.labels) y << label + 1 << '\n';
    io::write_file_atomic(dir + "/labels.txt", y.str());
  }
  write_similarity_csv(dir + "/similarity.csv", data.similarity);
  {
    std::ostringstream c;
    for (std::size_t f = 0; f < data.cluster.size(); ++f) c << f << ' ' << data.cluster[f] << '\n';
    io::write_file_atomic(dir + "/clusters.txt", c.str());
  }
}

}  // namespace featreg::synth
