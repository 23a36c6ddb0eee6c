#include "featreg/experiment.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "featreg/data.hpp"
#include "featreg/error.hpp"
#include "featreg/synth.hpp"

#ifndef FEATREG_VERSION
#define FEATREG_VERSION "0.0.0"
#endif

namespace featreg {

namespace {

constexpr std::uint64_t kTestSplit = 7;
constexpr std::uint64_t kOuterFolds = 8;

std::string fmt2(double v) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(2) << v;
  return o.str();
}

std::string fmt_g(double v) {
  std::ostringstream o;
  o << std::setprecision(10) << v;
  return o.str();
}

std::string join(const std::vector<double>& v, const std::string& sep) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? sep : "") + fmt_g(v[k]);
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

SimilarityStructure remap_pairs(const SimilarityStructure& sim, const std::vector<Index>& kept) {
  std::vector<Index> index(static_cast<std::size_t>(sim.features), -1);
  for (std::size_t k = 0; k < kept.size(); ++k) index[static_cast<std::size_t>(kept[k])] = static_cast<Index>(k);
  SimilarityStructure out{static_cast<Index>(kept.size()), {}};
  for (const auto& p : sim.pairs) {
    const Index a = index[static_cast<std::size_t>(p.i)], b = index[static_cast<std::size_t>(p.j)];
    if (a >= 0 && b >= 0) out.pairs.push_back({std::min(a, b), std::max(a, b), p.weight});
  }
  std::sort(out.pairs.begin(), out.pairs.end(),
            [](const SimilarPair& x, const SimilarPair& y) { return x.i != y.i ? x.i < y.i : x.j < y.j; });
  return out;
}

PreparedData prepare_synthetic(const ExperimentConfig& config) {
  synth::SyntheticSpec spec = config.data.synthetic;
  spec.seed = config.data.synthetic_seed.value_or(config.seed);
  auto ds = synth::generate(spec);
  PreparedData out;
  out.name = config.data.name.empty()
                 ? synth::to_string(spec.scheme) + "-d" + std::to_string(spec.d) + "-n" + std::to_string(spec.n)
                 : config.data.name;
  LabeledData all{std::move(ds.X), std::move(ds.labels), static_cast<int>(spec.q)};
  out.similarity = std::move(ds.similarity);
  const auto stats = synth::sparsity_stats(out.similarity);
  out.notes.push_back("similarity nonzero fraction " + fmt_g(100.0 * stats.nonzero_fraction) + "%, " +
                      fmt_g(stats.mean_similar_per_feature) + " similar features per feature");
  if (config.data.test_fraction > 0.0) {
    std::vector<Index> order(static_cast<std::size_t>(all.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::mt19937_64 rng(derive_seed(config.seed, kTestSplit));
    std::shuffle(order.begin(), order.end(), rng);
    const auto held = static_cast<std::size_t>(std::llround(config.data.test_fraction * static_cast<double>(all.size())));
    if (held < 1 || held >= order.size()) throw DataError("test split leaves no instances on one side");
    std::vector<Index> te(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(held));
    std::vector<Index> tr(order.begin() + static_cast<std::ptrdiff_t>(held), order.end());
    std::sort(te.begin(), te.end());
    std::sort(tr.begin(), tr.end());
    out.test = all.subset(te);
    out.train = all.subset(tr);
  } else {
    out.train = std::move(all);
  }
  return out;
}

PreparedData prepare_bow(const ExperimentConfig& config) {
  const auto& dc = config.data;
  const auto& sc = config.similarity;
  std::optional<SideInfoMatrix> side_info;
  std::optional<Index> features;
  std::vector<std::string> vocab;
  if (!dc.vocab_path.empty()) {
    vocab = data::read_vocab(dc.vocab_path);
    features = static_cast<Index>(vocab.size());
  }
  if (sc.source == SimilaritySection::Source::SideInfo) {
    side_info = read_side_info(sc.path);
    if (features && *features != side_info->features())
      throw DataError("vocabulary has " + std::to_string(*features) + " words, side-information " +
                      std::to_string(side_info->features()) + " rows");
    features = side_info->features();
  }
  auto train = data::load_bow(dc.train_path, features);
  if (!vocab.empty()) train.vocab = vocab;
  std::optional<data::Dataset> test;
  if (!dc.test_path.empty()) {
    test = data::load_bow(dc.test_path, train.features());
    if (test->num_classes > train.num_classes) throw DataError("test set has classes unseen in training");
    test->num_classes = train.num_classes;
  }
  const Index original_d = train.features();

  PreparedData out;
  out.name = dc.name.empty() ? config.name : dc.name;

  // Stop words, then the frequency cutoff; both reindex vocab and side-info.
  std::vector<Index> kept(static_cast<std::size_t>(original_d));
  std::iota(kept.begin(), kept.end(), Index{0});
  Index dropped = 0;
  if (!dc.stop_list_path.empty()) {
    auto r = data::remove_words(train, data::read_stop_list(dc.stop_list_path), side_info);
    train = std::move(r.dataset);
    side_info = std::move(r.side_info);
    kept = r.kept_features;
    dropped += r.dropped_instances;
  }
  if (dc.min_count > 0) {
    auto r = data::frequency_filter(train, dc.min_count, side_info);
    train = std::move(r.dataset);
    side_info = std::move(r.side_info);
    std::vector<Index> composed;
    for (Index k : r.kept_features) composed.push_back(kept[static_cast<std::size_t>(k)]);
    kept = std::move(composed);
    dropped += r.dropped_instances;
  }
  if (train.features() < 2) throw DataError("fewer than two features survive filtering");
  if (dropped > 0) out.notes.push_back(std::to_string(dropped) + " documents left empty by filtering were dropped");
  out.notes.push_back(std::to_string(train.features()) + " of " + std::to_string(original_d) + " features kept");
  if (test && static_cast<Index>(kept.size()) != original_d) {
    auto r = data::restrict_features(*test, kept);
    if (r.dropped_instances > 0)
      out.notes.push_back(std::to_string(r.dropped_instances) + " test documents left empty by filtering were dropped");
    test = std::move(r.dataset);
  }

  if (sc.source == SimilaritySection::Source::SideInfo) {
    double sigma = 0.0;
    if (sc.sigma) {
      sigma = *sc.sigma;
    } else {
      const auto bw = calibrate_bandwidth(*side_info, sc.target_fraction, sc.band_low, sc.band_high);
      sigma = bw.sigma;
      if (bw.warning) out.notes.push_back("bandwidth: " + bw.message);
    }
    out.notes.push_back("heat-kernel bandwidth " + fmt_g(sigma));
    out.similarity = sparsify_top(heat_kernel(*side_info, sigma), sc.sparsify);
  } else {
    out.similarity = remap_pairs(read_similarity_csv(sc.path, original_d), kept);
  }
  out.notes.push_back(std::to_string(out.similarity.pairs.size()) + " similar feature pairs");

  out.train = train.to_labeled();
  if (test) out.test = test->to_labeled();
  if (out.train.num_classes < 2) throw DataError("corpus has a single class");
  return out;
}

struct SplitOutcome {
  double error = 0.0;
  double chosen = 0.0;
  std::vector<int> predictions;
  TrainingHistory history;
  std::vector<std::string> warnings;
};

SplitOutcome evaluate_split(const ExperimentConfig& config, RegKind kind, const LabeledData& train,
                            const LabeledData& test, const SimilarityStructure& similarity, std::uint64_t seed,
                            int threads) {
  TrainConfig base = config.train_config(kind);
  base.seed = seed;
  const auto grid = config.grid_for(kind);
  SplitOutcome out;
  TrainResult model;
  if (config.tune.mode == TuneSection::Mode::Validation) {
    auto tuned = eval::tune_by_validation(grid, base, train, similarity, threads);
    out.chosen = tuned.outcome.best;
    out.warnings = tuned.outcome.warnings;
    model = std::move(tuned.model);
  } else {
    const auto outcome = eval::tune_by_inner_cv(grid, base, train, similarity, threads);
    out.chosen = outcome.best;
    out.warnings = outcome.warnings;
    eval::apply_candidate(base, outcome.best);
    model = featreg::train(base, train, similarity);
  }
  out.predictions = predict(model.params, test);
  out.error = eval::classification_error(out.predictions, test.labels);
  out.history = std::move(model.history);
  return out;
}

}  // namespace

PreparedData prepare(const ExperimentConfig& config) {
  config.validate();
  return config.data.source == DataSection::Source::Synthetic ? prepare_synthetic(config) : prepare_bow(config);
}

TrainReport run_train(const ExperimentConfig& config, const PreparedData& data) {
  const TrainConfig tc = config.train_config(config.reg.kind);
  TrainReport report{featreg::train(tc, data.train, data.similarity), 0.0, std::nullopt};
  report.train_error = error_rate(report.result.params, data.train);
  if (data.test) report.test_error = error_rate(report.result.params, *data.test);
  return report;
}

double ColumnResult::mean_error() const {
  if (fold_errors.empty()) return 0.0;
  return std::accumulate(fold_errors.begin(), fold_errors.end(), 0.0) / static_cast<double>(fold_errors.size());
}

std::string CompareResult::marks(std::size_t a) const {
  if (pairwise.empty()) return columns.at(a).stored_marks;
  std::string s;
  for (std::size_t b = 0; b < columns.size(); ++b) {
    if (a == b)
      s += '.';
    else if (pairwise[a][b])
      s += eval::mark(pairwise[a][b]->direction);
    else
      s += '?';
  }
  return s;
}

CompareResult run_compare(const ExperimentConfig& config, const PreparedData& data, int threads) {
  const auto& kinds = config.compare.regularisers;
  CompareResult result;
  result.dataset = data.name;

  // (train, test) index pairs into data.train, or the given split.
  std::vector<std::pair<std::vector<Index>, std::vector<Index>>> splits;
  std::vector<std::string> fold_warnings;
  if (!data.test) {
    const auto plan = data::kfold(data.train.size(), config.compare.folds, derive_seed(config.seed, kOuterFolds),
                                  data.train.labels);
    for (std::size_t f = 0; f < plan.folds.size(); ++f) splits.emplace_back(plan.complement(f), plan.folds[f]);
    result.labels = data.train.labels;
    fold_warnings = plan.warnings;
  } else {
    result.labels = data.test->labels;
  }

  for (RegKind kind : kinds) {
    ColumnResult col;
    col.kind = kind;
    col.warnings = fold_warnings;
    col.predictions.assign(result.labels.size(), -1);
    try {
      if (data.test) {
        auto o = evaluate_split(config, kind, data.train, *data.test, data.similarity, config.seed, threads);
        col.fold_errors.push_back(o.error);
        col.chosen.push_back(o.chosen);
        col.predictions = std::move(o.predictions);
        col.histories.push_back(std::move(o.history));
        col.warnings.insert(col.warnings.end(), o.warnings.begin(), o.warnings.end());
      } else {
        for (std::size_t f = 0; f < splits.size(); ++f) {
          const auto& [tr, te] = splits[f];
          auto o = evaluate_split(config, kind, data.train.subset(tr), data.train.subset(te), data.similarity,
                                  derive_seed(config.seed, kOuterFolds, f + 1), threads);
          col.fold_errors.push_back(o.error);
          col.chosen.push_back(o.chosen);
          for (std::size_t k = 0; k < te.size(); ++k)
            col.predictions[static_cast<std::size_t>(te[k])] = o.predictions[k];
          col.histories.push_back(std::move(o.history));
          col.warnings.insert(col.warnings.end(), o.warnings.begin(), o.warnings.end());
        }
      }
    } catch (const Error& e) {
      col.failed = true;
      col.failure = e.what();
    }
    result.columns.push_back(std::move(col));
  }

  const std::size_t n = result.columns.size();
  result.pairwise.assign(n, std::vector<std::optional<eval::ComparisonResult>>(n));
  const auto method =
      config.compare.exact ? eval::McNemarMethod::ExactBinomial : eval::McNemarMethod::ContinuityCorrected;
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (a != b && !result.columns[a].failed && !result.columns[b].failed)
        result.pairwise[a][b] = eval::mcnemar(result.columns[a].predictions, result.columns[b].predictions,
                                              result.labels, config.compare.alpha, method);
  return result;
}

std::string results_csv(const std::vector<CompareResult>& results) {
  std::ostringstream o;
  o << "dataset,regulariser,status,mean_error,fold_errors,chosen,marks\n";
  for (const auto& r : results)
    for (std::size_t a = 0; a < r.columns.size(); ++a) {
      const auto& c = r.columns[a];
      o << r.dataset << ',' << to_string(c.kind) << ',' << (c.failed ? "failed" : "ok") << ','
        << (c.failed ? "" : fmt_g(c.mean_error())) << ',' << join(c.fold_errors, ";") << ',' << join(c.chosen, ";")
        << ',' << r.marks(a) << '\n';
    }
  return o.str();
}

std::string pairwise_csv(const CompareResult& result) {
  std::ostringstream o;
  o << "dataset,a,b,b_count,c_count,statistic,p_value,mark\n";
  for (std::size_t a = 0; a < result.columns.size(); ++a)
    for (std::size_t b = 0; b < result.columns.size(); ++b) {
      if (result.pairwise.empty() || !result.pairwise[a][b]) continue;
      const auto& p = *result.pairwise[a][b];
      o << result.dataset << ',' << to_string(result.columns[a].kind) << ',' << to_string(result.columns[b].kind)
        << ',' << p.b << ',' << p.c << ',' << fmt_g(p.statistic) << ',' << fmt_g(p.p_value) << ','
        << eval::mark(p.direction) << '\n';
    }
  return o.str();
}

std::string results_table(const std::vector<CompareResult>& results) {
  std::vector<std::string> header{"dataset"};
  if (!results.empty())
    for (const auto& c : results.front().columns) header.push_back(to_string(c.kind));
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : results) {
    std::vector<std::string> row{r.dataset};
    for (std::size_t a = 0; a < r.columns.size(); ++a)
      row.push_back(r.columns[a].failed ? "failed" : fmt2(r.columns[a].mean_error()) + " " + r.marks(a));
    rows.push_back(std::move(row));
  }
  std::vector<std::size_t> width(header.size(), 0);
  auto widen = [&](const std::vector<std::string>& row) {
    if (row.size() > width.size()) width.resize(row.size(), 0);
    for (std::size_t k = 0; k < row.size(); ++k) width[k] = std::max(width[k], row[k].size());
  };
  widen(header);
  for (const auto& row : rows) widen(row);
  std::ostringstream o;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t k = 0; k < row.size(); ++k)
      o << std::left << std::setw(static_cast<int>(width[k])) << row[k] << (k + 1 < row.size() ? "  " : "");
    o << '\n';
  };
  emit(header);
  for (const auto& row : rows) emit(row);
  o << "\nerror in %; marks compare the column with each column in order:\n"
       "+ significantly better, - significantly worse, = no significant difference, . itself\n";
  return o.str();
}

std::vector<CompareResult> read_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open results " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("dataset,regulariser", 0) != 0)
    throw DataError(path + ": not a results file");
  std::vector<CompareResult> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 7) throw DataError(path + ": line " + std::to_string(line_no) + ": expected 7 fields");
    if (out.empty() || out.back().dataset != f[0]) out.push_back({f[0], {}, {}, {}});
    ColumnResult c;
    c.kind = parse_reg_kind(f[1]);
    c.failed = f[2] == "failed";
    try {
      if (!f[4].empty())
        for (const auto& v : split(f[4], ';')) c.fold_errors.push_back(std::stod(v));
      if (!f[5].empty())
        for (const auto& v : split(f[5], ';')) c.chosen.push_back(std::stod(v));
    } catch (const std::exception&) {
      throw DataError(path + ": line " + std::to_string(line_no) + ": bad number");
    }
    c.stored_marks = f[6];
    out.back().columns.push_back(std::move(c));
  }
  return out;
}

std::string manifest(const ExperimentConfig& config, const std::string& command, int threads) {
  std::ostringstream o;
  o << config.to_ini() << "\n[run]\ncommand = " << command << "\nthreads = " << threads
    << "\nfeatreg = " << FEATREG_VERSION << "\neigen = " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.'
    << EIGEN_MINOR_VERSION << "\nboost = " << BOOST_VERSION / 100000 << '.' << BOOST_VERSION / 100 % 1000 << '.'
    << BOOST_VERSION % 100 << "\ncompiler = " << __VERSION__ << '\n';
  return o.str();
}

}  // namespace featreg
