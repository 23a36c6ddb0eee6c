#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "featreg/error.hpp"
#include "featreg/synth.hpp"

using namespace featreg;
using namespace featreg::synth;

TEST_CASE("scheme parsing and divisibility") {
  CHECK(parse_scheme("A2") == Scheme::A2);
  CHECK_THROWS_AS(parse_scheme("A4"), ConfigError);
  SyntheticSpec s;
  s.scheme = Scheme::A3;
  s.d = 300;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.d = 320;
  CHECK_NOTHROW(s.validate());
  s.scheme = Scheme::A1;
  s.d = 301;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s.d = 300;
  s.q = 1;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("cluster structure per scheme") {
  for (auto scheme : {Scheme::A1, Scheme::A2, Scheme::A3}) {
    SyntheticSpec s;
    s.scheme = scheme;
    s.d = 320;
    s.n = 300;
    s.seed = 3;
    const auto ds = generate(s);
    const Eigen::Index expected_latent = scheme == Scheme::A1 ? 160 : scheme == Scheme::A2 ? 240 : 280;
    CHECK(ds.latent_dim == expected_latent);
    std::map<Eigen::Index, int> sizes;
    for (auto c : ds.cluster) ++sizes[c];
    CHECK(static_cast<Eigen::Index>(sizes.size()) == expected_latent);  // every factor nonempty
    CHECK(ds.similarity.pairs == similarity_from_clusters(ds.cluster).pairs);
    for (const auto& p : ds.similarity.pairs) {
      CHECK(p.i < p.j);
      CHECK(ds.cluster[static_cast<std::size_t>(p.i)] == ds.cluster[static_cast<std::size_t>(p.j)]);
      CHECK(p.weight == 1.0);
    }
    CHECK(ds.X.minCoeff() >= -1.0);
    CHECK(ds.X.maxCoeff() <= 1.0);
  }
}

TEST_CASE("labels follow the argmax of the projected latent sums") {
  SyntheticSpec s;
  s.d = 40;
  s.n = 250;
  s.q = 5;
  s.seed = 9;
  const auto ds = generate(s);
  std::set<int> seen(ds.labels.begin(), ds.labels.end());
  CHECK(seen.size() == 5);
  for (int y : ds.labels) CHECK((y >= 0 && y < 5));
}

TEST_CASE("every class appears for n >= 50 q over 20 seeds") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SyntheticSpec s;
    s.d = 300;
    s.n = 250;
    s.q = 5;
    s.seed = seed;
    const auto ds = generate(s);
    CHECK(std::set<int>(ds.labels.begin(), ds.labels.end()).size() == 5);
  }
}

TEST_CASE("generation is deterministic and sparsity is ordered A1 > A2 > A3") {
  SyntheticSpec s;
  s.d = 320;
  s.n = 50;
  s.seed = 4;
  const auto a = generate(s), b = generate(s);
  CHECK(a.X == b.X);
  CHECK(a.labels == b.labels);
  CHECK(a.cluster == b.cluster);
  double previous = 1.0;
  for (auto scheme : {Scheme::A1, Scheme::A2, Scheme::A3}) {
    s.scheme = scheme;
    const double f = sparsity_stats(generate(s).similarity).nonzero_fraction;
    CHECK(f < previous);
    previous = f;
  }
}

TEST_CASE("sparsity_stats by hand") {
  CHECK(sparsity_stats(Eigen::MatrixXd(Eigen::MatrixXd::Zero(4, 4))).nonzero_fraction == 0.0);
  SimilarityStructure one{4, {{1, 3, 1.0}}};
  const auto st = sparsity_stats(one);
  CHECK(st.nonzero_fraction == doctest::Approx(2.0 / 12.0));
  CHECK(st.mean_similar_per_feature == doctest::Approx(0.5));
  const auto dense = sparsity_stats(one.dense());
  CHECK(dense.nonzero_fraction == st.nonzero_fraction);
  CHECK(dense.mean_similar_per_feature == st.mean_similar_per_feature);
}

TEST_CASE("write_dataset writes four files") {
  SyntheticSpec s;
  s.d = 20;
  s.n = 30;
  s.seed = 1;
  const auto dir = (std::filesystem::temp_directory_path() / "featreg_synth_test").string();
  write_dataset(dir, generate(s));
  for (const char* f : {"X.csv", "labels.txt", "similarity.csv", "clusters.txt"})
    CHECK(std::filesystem::exists(dir + "/" + f));
  std::ifstream labels(dir + "/labels.txt");
  int y = 0, count = 0;
  while (labels >> y) {
    CHECK((y >= 1 && y <= 5));
    ++count;
  }
  CHECK(count == 30);
  std::filesystem::remove_all(dir);
}
