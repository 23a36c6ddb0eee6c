#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "featreg/data.hpp"
#include "featreg/error.hpp"

using namespace featreg;
using namespace featreg::data;

namespace {

Dataset parse(const std::string& text, std::optional<Index> d = std::nullopt) {
  std::istringstream in(text);
  return parse_bow(in, d);
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("parse a bag-of-words line") {
  const auto ds = parse("2 1:3 5:1\n1 2:4\n");
  CHECK(ds.size() == 2);
  CHECK(ds.features() == 5);
  CHECK(ds.labels == std::vector<int>{1, 0});
  CHECK(ds.num_classes == 2);
  CHECK(ds.X.coeff(0, 0) == 3.0);
  CHECK(ds.X.coeff(0, 4) == 1.0);
  CHECK(ds.X.coeff(0, 1) == 0.0);
  CHECK(ds.X.coeff(1, 1) == 4.0);
  CHECK(ds.vocab.size() == 5);
  CHECK(ds.vocab[0] == "f1");
  const auto dense = ds.to_labeled();
  CHECK(dense.X(0, 4) == 1.0);
  CHECK(dense.num_classes == 2);
}

TEST_CASE("malformed corpora") {
  CHECK_THROWS_WITH_AS(parse(""), doctest::Contains("no instances"), DataError);
  CHECK_THROWS_AS(parse("1 0:3\n"), DataError);      // 0-based index
  CHECK_THROWS_AS(parse("1 2:0\n"), DataError);      // zero count
  CHECK_THROWS_AS(parse("1 2:1.5\n"), DataError);    // fractional count
  CHECK_THROWS_AS(parse("1 2:1 2:3\n"), DataError);  // duplicate feature
  CHECK_THROWS_AS(parse("x 2:1\n"), DataError);
  CHECK_THROWS_AS(parse("1 9:1\n", 5), DataError);   // beyond the vocabulary
  CHECK_THROWS_AS(parse("1 2:1\n3 1:1\n"), DataError);  // label 2 never used
  CHECK_THROWS_WITH_AS(parse("1 1:1\n2 1:x\n"), doctest::Contains("line 2"), DataError);
}

TEST_CASE("corpus file round trip") {
  const auto ds = parse("2 1:3 5:1\n1 2:4 3:1\n3 4:2\n");
  const auto path = temp_path("featreg_roundtrip.bow");
  save_bow(path, ds);
  const auto back = load_bow(path, 5);
  CHECK(back.labels == ds.labels);
  CHECK(Eigen::MatrixXd(back.X) == Eigen::MatrixXd(ds.X));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_bow(path), DataError);
}

TEST_CASE("vocabulary, label names and stop lists") {
  const auto dir = temp_path("featreg_lists");
  std::filesystem::create_directories(dir);
  std::ofstream(dir + "/vocab.txt") << "apple\nbanana\ncherry\n";
  std::ofstream(dir + "/labels.txt") << "1\tsport\n2\tpolitics\n";
  std::ofstream(dir + "/bad_labels.txt") << "1\tsport\n3\tpolitics\n";
  std::ofstream(dir + "/stop.txt") << "# common words\nthe a\nof # trailing\n";
  CHECK(read_vocab(dir + "/vocab.txt") == std::vector<std::string>{"apple", "banana", "cherry"});
  CHECK(read_label_names(dir + "/labels.txt") == std::vector<std::string>{"sport", "politics"});
  CHECK_THROWS_AS(read_label_names(dir + "/bad_labels.txt"), DataError);
  CHECK(read_stop_list(dir + "/stop.txt") == std::vector<std::string>{"the", "a", "of"});
  std::filesystem::remove_all(dir);
}

TEST_CASE("frequency filter") {
  // Totals: f1 = 3, f2 = 1, f3 = 5, f4 = 2.
  const auto ds = parse("1 1:2 2:1\n2 1:1 3:5\n1 4:2\n");
  SideInfoMatrix side(Eigen::MatrixXd((Eigen::MatrixXd(4, 2) << 1, 1, 2, 2, 3, 3, 4, 4).finished()));

  const auto r = frequency_filter(ds, 1, side);
  CHECK(r.kept_features == std::vector<Index>{0, 2, 3});
  CHECK(r.dataset.features() == 3);
  CHECK(r.dataset.vocab == std::vector<std::string>{"f1", "f3", "f4"});
  REQUIRE(r.side_info.has_value());
  CHECK(r.side_info->values()(1, 0) == 3.0);
  CHECK(r.side_info->values()(2, 1) == 4.0);
  CHECK(r.dropped_instances == 0);

  const auto again = frequency_filter(r.dataset, 1);
  CHECK(again.kept_features == std::vector<Index>{0, 1, 2});

  // min_count 2 removes f4 and empties document 3.
  const auto r2 = frequency_filter(ds, 2, side);
  CHECK(r2.kept_features == std::vector<Index>{0, 2});
  CHECK(r2.dropped_instances == 1);
  CHECK(r2.dataset.size() == 2);
  CHECK(r2.dataset.labels == std::vector<int>{0, 1});

  CHECK(frequency_filter(ds, 0).kept_features.size() == 4);
  CHECK_THROWS_AS(frequency_filter(ds, 100), DataError);
}

TEST_CASE("stop-word removal") {
  auto ds = parse("1 1:2 2:1\n2 1:1 3:5\n");
  ds.vocab = {"the", "goal", "vote"};
  const auto r = remove_words(ds, {"the", "unused"});
  CHECK(r.dataset.vocab == std::vector<std::string>{"goal", "vote"});
  CHECK(r.dataset.X.coeff(1, 1) == 5.0);
}

TEST_CASE("k-fold plans") {
  std::vector<int> labels;
  for (int k = 0; k < 103; ++k) labels.push_back(k % 7 == 0 ? 2 : k % 3 == 0 ? 1 : 0);
  const auto plan = kfold(103, 5, 42, labels);
  REQUIRE(plan.folds.size() == 5);
  std::set<Index> all;
  std::size_t lo = 1000, hi = 0;
  for (const auto& f : plan.folds) {
    lo = std::min(lo, f.size());
    hi = std::max(hi, f.size());
    CHECK(std::is_sorted(f.begin(), f.end()));
    all.insert(f.begin(), f.end());
  }
  CHECK(all.size() == 103);
  CHECK(hi - lo <= 1);
  for (int c = 0; c < 3; ++c) {
    const auto total = std::count(labels.begin(), labels.end(), c);
    for (const auto& f : plan.folds) {
      const auto in_fold = std::count_if(f.begin(), f.end(), [&](Index i) { return labels[i] == c; });
      CHECK(std::abs(static_cast<double>(in_fold) - total / 5.0) < 1.0 + 1e-9);
    }
  }
  const auto comp = plan.complement(2);
  CHECK(comp.size() + plan.folds[2].size() == 103);
  CHECK(std::is_sorted(comp.begin(), comp.end()));

  CHECK(kfold(103, 5, 42, labels).folds == plan.folds);
  CHECK(kfold(103, 5, 43, labels).folds != plan.folds);
  CHECK(plan.warnings.empty());

  std::vector<int> rare(20, 0);
  rare[3] = 1;
  CHECK_FALSE(kfold(20, 5, 1, rare).warnings.empty());
  CHECK_THROWS(kfold(3, 5, 1));
}
