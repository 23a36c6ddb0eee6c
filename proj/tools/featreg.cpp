// featreg: synth | train | tune | compare | report

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "featreg/checkpoint.hpp"
#include "featreg/config.hpp"
#include "featreg/error.hpp"
#include "featreg/experiment.hpp"
#include "featreg/io.hpp"
#include "featreg/synth.hpp"

namespace fs = std::filesystem;
using namespace featreg;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kTraining = 4 };

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "featreg-out";
  std::optional<int> threads;
};

int resolve_threads(const Globals& g) {
  if (g.threads) return *g.threads;
  if (const char* env = std::getenv("FEATREG_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw ConfigError("FEATREG_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  return 1;
}

ExperimentConfig load(const Globals& g) {
  ExperimentConfig c = g.config_path.empty() ? ExperimentConfig{} : load_config(g.config_path);
  if (g.seed) c.seed = *g.seed;
  return c;
}

std::string command_line(int argc, char** argv) {
  std::string s;
  for (int k = 0; k < argc; ++k) s += (k ? " " : "") + std::string(argv[k]);
  return s;
}

void print_notes(const PreparedData& data) {
  for (const auto& n : data.notes) std::cerr << "note: " << n << '\n';
}

std::string percent(double v) {
  std::ostringstream o;
  o << std::fixed << std::setprecision(2) << v;
  return o.str();
}

int cmd_synth(const Globals& g, const std::string& command, const std::optional<std::string>& scheme,
              const std::optional<Eigen::Index>& d, const std::optional<Eigen::Index>& n,
              const std::optional<Eigen::Index>& q) {
  auto config = load(g);
  config.data.source = DataSection::Source::Synthetic;
  config.similarity.source = SimilaritySection::Source::Synthetic;
  if (scheme) config.data.synthetic.scheme = synth::parse_scheme(*scheme);
  if (d) config.data.synthetic.d = *d;
  if (n) config.data.synthetic.n = *n;
  if (q) config.data.synthetic.q = *q;
  synth::SyntheticSpec spec = config.data.synthetic;
  spec.seed = config.data.synthetic_seed.value_or(config.seed);
  const auto ds = synth::generate(spec);
  synth::write_dataset(g.out, ds);
  io::write_file_atomic(g.out + "/manifest.ini", manifest(config, command, resolve_threads(g)));
  const auto stats = synth::sparsity_stats(ds.similarity);
  std::cout << synth::to_string(spec.scheme) << " d=" << spec.d << " n=" << spec.n << " q=" << spec.q
            << " seed=" << spec.seed << ": nonzero_fraction=" << std::setprecision(4)
            << 100.0 * stats.nonzero_fraction << "% mean_similar_per_feature=" << stats.mean_similar_per_feature
            << " pairs=" << ds.similarity.pairs.size() << '\n';
  return kOk;
}

int cmd_train(const Globals& g, const std::string& command) {
  const auto config = load(g);
  const auto data = prepare(config);
  print_notes(data);
  io::ensure_directory(g.out);
  const auto report = run_train(config, data);
  save_checkpoint(g.out + "/checkpoint.txt", {report.result.params, config.seed});
  io::write_file_atomic(g.out + "/history.csv", report.result.history.to_csv());
  std::ostringstream summary;
  const auto& h = report.result.history;
  summary << "regulariser " << to_string(config.reg.kind) << "\nupdates " << h.updates << "\nstop_reason "
          << to_string(h.stop_reason) << "\nbest_update " << h.records.at(h.best_index).update
          << "\nvalidation_error " << percent(h.best_validation_error()) << "\ntrain_error "
          << percent(report.train_error) << "\ntest_error "
          << (report.test_error ? percent(*report.test_error) : std::string("n/a")) << '\n';
  io::write_file_atomic(g.out + "/summary.txt", summary.str());
  io::write_file_atomic(g.out + "/manifest.ini", manifest(config, command, resolve_threads(g)));
  std::cout << summary.str();
  return kOk;
}

int cmd_tune(const Globals& g, const std::string& command) {
  const auto config = load(g);
  const auto data = prepare(config);
  print_notes(data);
  io::ensure_directory(g.out);
  const int threads = resolve_threads(g);
  const auto grid = config.grid_for(config.reg.kind);
  const auto base = config.train_config(config.reg.kind);
  const auto outcome = config.tune.mode == TuneSection::Mode::Validation
                           ? eval::tune_by_validation(grid, base, data.train, data.similarity, threads).outcome
                           : eval::tune_by_inner_cv(grid, base, data.train, data.similarity, threads);
  std::ostringstream csv;
  csv << "candidate,score\n" << std::setprecision(10);
  for (std::size_t k = 0; k < grid.candidates.size(); ++k) {
    csv << grid.candidates[k] << ',';
    if (outcome.scores[k])
      csv << *outcome.scores[k];
    else
      csv << "failed";
    csv << '\n';
  }
  io::write_file_atomic(g.out + "/tune.csv", csv.str());
  io::write_file_atomic(g.out + "/manifest.ini", manifest(config, command, threads));
  for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << csv.str() << "best " << outcome.best << '\n';
  return kOk;
}

int cmd_compare(const Globals& g, const std::string& command) {
  const auto config = load(g);
  const auto data = prepare(config);
  print_notes(data);
  io::ensure_directory(g.out);
  io::ensure_directory(g.out + "/curves");
  const int threads = resolve_threads(g);
  const auto result = run_compare(config, data, threads);
  for (const auto& col : result.columns) {
    for (const auto& w : col.warnings) std::cerr << "warning: " << to_string(col.kind) << ": " << w << '\n';
    if (col.failed) std::cerr << "error: " << to_string(col.kind) << " failed: " << col.failure << '\n';
    for (std::size_t f = 0; f < col.histories.size(); ++f)
      io::write_file_atomic(g.out + "/curves/" + to_string(col.kind) + "_fold" + std::to_string(f + 1) + ".csv",
                            col.histories[f].to_csv());
  }
  io::write_file_atomic(g.out + "/results.csv", results_csv({result}));
  io::write_file_atomic(g.out + "/pairwise.csv", pairwise_csv(result));
  const auto table = results_table({result});
  io::write_file_atomic(g.out + "/results.txt", table);
  io::write_file_atomic(g.out + "/manifest.ini", manifest(config, command, threads));
  std::cout << table;
  return kOk;
}

int cmd_report(const Globals& g, const std::vector<std::string>& inputs) {
  if (inputs.empty()) throw ConfigError("report needs at least one results file or compare directory");
  std::vector<CompareResult> all;
  for (const auto& in : inputs) {
    const std::string path = fs::is_directory(in) ? in + "/results.csv" : in;
    auto rs = read_results_csv(path);
    all.insert(all.end(), rs.begin(), rs.end());
  }
  for (const auto& r : all)
    if (r.columns.size() != all.front().columns.size())
      throw DataError("results disagree on the regulariser columns (" + r.dataset + ")");
  io::ensure_directory(g.out);
  io::write_file_atomic(g.out + "/report.csv", results_csv(all));
  const auto table = results_table(all);
  io::write_file_atomic(g.out + "/report.txt", table);
  std::cout << table;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature side-information regularisation for feed-forward networks"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Experiment config (INI)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Master seed, overrides [experiment] seed");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (env FEATREG_THREADS)")->check(CLI::PositiveNumber);

  auto* synth_cmd = app.add_subcommand("synth", "Write an artificial dataset A1, A2 or A3");
  std::optional<std::string> scheme;
  std::optional<Eigen::Index> d, n, q;
  synth_cmd->add_option("--scheme", scheme, "A1, A2 or A3");
  synth_cmd->add_option("--d", d, "Feature count");
  synth_cmd->add_option("--n", n, "Instance count");
  synth_cmd->add_option("--q", q, "Classes");
  auto* train_cmd = app.add_subcommand("train", "Train one network with the configured regulariser");
  auto* tune_cmd = app.add_subcommand("tune", "Grid-search the configured regulariser's strength");
  auto* compare_cmd = app.add_subcommand("compare", "Compare regularisers with McNemar marks");
  auto* report_cmd = app.add_subcommand("report", "Merge compare results into one table");
  std::vector<std::string> inputs;
  report_cmd->add_option("inputs", inputs, "results.csv files or compare output directories");
  for (auto* sub : {synth_cmd, train_cmd, tune_cmd, compare_cmd, report_cmd}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  const std::string command = command_line(argc, argv);
  try {
    if (*synth_cmd) return cmd_synth(g, command, scheme, d, n, q);
    if (*train_cmd) return cmd_train(g, command);
    if (*tune_cmd) return cmd_tune(g, command);
    if (*compare_cmd) return cmd_compare(g, command);
    if (*report_cmd) return cmd_report(g, inputs);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const TrainingError& e) {
    std::cerr << "training failure: " << e.what() << '\n';
    return kTraining;
  } catch (const Error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
