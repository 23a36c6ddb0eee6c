#include "featreg/data.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "featreg/error.hpp"
#include "featreg/io.hpp"

namespace featreg::data {

namespace {

std::string at_line(std::size_t line_no) { return "line " + std::to_string(line_no) + ": "; }

long parse_long(const std::string& tok, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const long v = std::stol(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DataError(at_line(line_no) + "cannot parse '" + tok + "'");
  }
}

std::vector<std::string> default_vocab(Index d) {
  std::vector<std::string> v;
  v.reserve(static_cast<std::size_t>(d));
  for (Index k = 0; k < d; ++k) v.push_back("f" + std::to_string(k + 1));
  return v;
}

}  // namespace

FilterResult restrict_features(const Dataset& dataset, const std::vector<Index>& kept,
                               const std::optional<SideInfoMatrix>& side_info) {
  if (side_info && side_info->features() != dataset.features())
    throw DataError("side-information has " + std::to_string(side_info->features()) + " rows, vocabulary has " +
                    std::to_string(dataset.features()));
  if (kept.empty()) throw DataError("feature filtering removed every feature");
  std::vector<Index> new_index(static_cast<std::size_t>(dataset.features()), -1);
  for (Index k : kept)
    if (k < 0 || k >= dataset.features()) throw ShapeError("feature index out of range");
  for (std::size_t k = 0; k < kept.size(); ++k) new_index[static_cast<std::size_t>(kept[k])] = static_cast<Index>(k);

  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<int> labels;
  Index row = 0, dropped = 0;
  for (Index r = 0; r < dataset.X.outerSize(); ++r) {
    std::vector<Eigen::Triplet<double>> doc;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(dataset.X, r); it; ++it) {
      const Index c = new_index[static_cast<std::size_t>(it.col())];
      if (c >= 0) doc.emplace_back(row, c, it.value());
    }
    if (doc.empty()) {
      ++dropped;
      continue;
    }
    triplets.insert(triplets.end(), doc.begin(), doc.end());
    labels.push_back(dataset.labels[static_cast<std::size_t>(r)]);
    ++row;
  }
  if (row == 0) throw DataError("feature filtering left every document empty");
  FilterResult out;
  out.dataset.X.resize(row, static_cast<Index>(kept.size()));
  out.dataset.X.setFromTriplets(triplets.begin(), triplets.end());
  out.dataset.labels = std::move(labels);
  out.dataset.name = dataset.name;
  out.dataset.num_classes = dataset.num_classes;
  for (Index k : kept) out.dataset.vocab.push_back(dataset.vocab[static_cast<std::size_t>(k)]);
  if (side_info && kept.size() >= 2) out.side_info = side_info->select_rows(kept);
  out.kept_features = kept;
  out.dropped_instances = dropped;
  return out;
}

LabeledData Dataset::to_labeled() const {
  return {Eigen::MatrixXd(X), labels, num_classes};
}

Dataset Dataset::subset(const std::vector<Index>& rows) const {
  std::vector<Eigen::Triplet<double>> triplets;
  Dataset out;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(X, rows[k]); it; ++it)
      triplets.emplace_back(static_cast<Index>(k), it.col(), it.value());
    out.labels.push_back(labels[static_cast<std::size_t>(rows[k])]);
  }
  out.X.resize(static_cast<Index>(rows.size()), X.cols());
  out.X.setFromTriplets(triplets.begin(), triplets.end());
  out.vocab = vocab;
  out.name = name;
  out.num_classes = num_classes;
  return out;
}

Dataset parse_bow(std::istream& in, std::optional<Index> features) {
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  Index max_index = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    const long label = parse_long(tok, line_no);
    if (label < 1) throw DataError(at_line(line_no) + "labels start at 1");
    const auto row = static_cast<Index>(labels.size());
    std::set<Index> seen;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw DataError(at_line(line_no) + "expected idx:count, got '" + tok + "'");
      const long idx = parse_long(tok.substr(0, colon), line_no);
      const long count = parse_long(tok.substr(colon + 1), line_no);
      if (idx < 1) throw DataError(at_line(line_no) + "feature indices start at 1");
      if (features && idx > *features)
        throw DataError(at_line(line_no) + "feature index " + std::to_string(idx) + " exceeds vocabulary size " +
                        std::to_string(*features));
      if (count < 1) throw DataError(at_line(line_no) + "counts must be positive integers");
      if (!seen.insert(idx - 1).second) throw DataError(at_line(line_no) + "feature " + std::to_string(idx) + " repeated");
      triplets.emplace_back(row, idx - 1, static_cast<double>(count));
      max_index = std::max<Index>(max_index, idx);
    }
    if (seen.empty()) throw DataError(at_line(line_no) + "document has no features");
    labels.push_back(static_cast<int>(label - 1));
  }
  if (labels.empty()) throw DataError("no instances");
  const Index d = features.value_or(max_index);
  Dataset out;
  out.X.resize(static_cast<Index>(labels.size()), d);
  out.X.setFromTriplets(triplets.begin(), triplets.end());
  out.num_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<int> present(static_cast<std::size_t>(out.num_classes), 0);
  for (int y : labels) present[static_cast<std::size_t>(y)] = 1;
  for (int c = 0; c < out.num_classes; ++c)
    if (!present[static_cast<std::size_t>(c)])
      throw DataError("labels are not contiguous: class " + std::to_string(c + 1) + " never occurs");
  out.labels = std::move(labels);
  out.vocab = default_vocab(d);
  return out;
}

Dataset load_bow(const std::string& path, std::optional<Index> features) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    auto ds = parse_bow(in, features);
    ds.name = path;
    return ds;
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void save_bow(const std::string& path, const Dataset& dataset) {
  std::ostringstream out;
  for (Index r = 0; r < dataset.X.outerSize(); ++r) {
    out << dataset.labels[static_cast<std::size_t>(r)] + 1;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(dataset.X, r); it; ++it)
      out << ' ' << it.col() + 1 << ':' << static_cast<long>(it.value());
    out << '\n';
  }
  io::write_file_atomic(path, out.str());
}

std::vector<std::string> read_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open vocabulary " + path);
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    words.push_back(line);
  }
  return words;
}

std::vector<std::string> read_label_names(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open label names " + path);
  std::map<long, std::string> names;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("label names " + at_line(line_no) + "expected label_id<TAB>name");
    names[parse_long(line.substr(0, tab), line_no)] = line.substr(tab + 1);
  }
  std::vector<std::string> out;
  long expect = 1;
  for (const auto& [id, name] : names) {
    if (id != expect++) throw DataError("label names are not contiguous from 1");
    out.push_back(name);
  }
  return out;
}

std::vector<std::string> read_stop_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open stop list " + path);
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    line = line.substr(0, line.find('#'));
    std::istringstream ls(line);
    std::string w;
    while (ls >> w) words.push_back(w);
  }
  return words;
}

FilterResult frequency_filter(const Dataset& dataset, long min_count, const std::optional<SideInfoMatrix>& side_info) {
  if (min_count < 0) throw ParameterError("min_count must be nonnegative");
  Eigen::VectorXd totals = Eigen::VectorXd::Zero(dataset.features());
  for (Index r = 0; r < dataset.X.outerSize(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(dataset.X, r); it; ++it)
      totals(it.col()) += it.value();
  std::vector<Index> kept;
  for (Index c = 0; c < dataset.features(); ++c)
    if (totals(c) > static_cast<double>(min_count)) kept.push_back(c);
  return restrict_features(dataset, kept, side_info);
}

FilterResult remove_words(const Dataset& dataset, const std::vector<std::string>& stop_words,
                          const std::optional<SideInfoMatrix>& side_info) {
  const std::set<std::string> stop(stop_words.begin(), stop_words.end());
  std::vector<Index> kept;
  for (Index c = 0; c < dataset.features(); ++c)
    if (!stop.count(dataset.vocab[static_cast<std::size_t>(c)])) kept.push_back(c);
  return restrict_features(dataset, kept, side_info);
}

std::vector<Index> FoldPlan::complement(std::size_t k) const {
  std::vector<Index> out;
  for (std::size_t f = 0; f < folds.size(); ++f)
    if (f != k) out.insert(out.end(), folds[f].begin(), folds[f].end());
  std::sort(out.begin(), out.end());
  return out;
}

FoldPlan kfold(Index n, int k, std::uint64_t seed, const std::vector<int>& stratify_labels) {
  if (k < 2) throw ParameterError("k-fold needs k >= 2");
  if (n < k) throw ParameterError("k-fold needs at least k instances");
  if (!stratify_labels.empty() && static_cast<Index>(stratify_labels.size()) != n)
    throw ShapeError("stratification labels must cover every instance");
  FoldPlan plan;
  plan.seed = seed;
  std::mt19937_64 rng(seed);

  // Instances grouped by class, shuffled within each class, then dealt
  // round-robin so both fold sizes and per-class counts differ by <= 1.
  std::vector<Index> order;
  if (stratify_labels.empty()) {
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
  } else {
    std::map<int, std::vector<Index>> by_class;
    for (Index i = 0; i < n; ++i) by_class[stratify_labels[static_cast<std::size_t>(i)]].push_back(i);
    for (auto& [label, members] : by_class) {
      if (static_cast<Index>(members.size()) < k)
        plan.warnings.push_back("class " + std::to_string(label + 1) + " has only " + std::to_string(members.size()) +
                                " instances for " + std::to_string(k) + " folds");
      std::shuffle(members.begin(), members.end(), rng);
      order.insert(order.end(), members.begin(), members.end());
    }
  }
  plan.folds.assign(static_cast<std::size_t>(k), {});
  for (std::size_t p = 0; p < order.size(); ++p) plan.folds[p % static_cast<std::size_t>(k)].push_back(order[p]);
  for (auto& fold : plan.folds) std::sort(fold.begin(), fold.end());
  return plan;
}

}  // namespace featreg::data
