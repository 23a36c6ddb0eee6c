#include "featreg/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "featreg/error.hpp"

namespace featreg {

namespace pt = boost::property_tree;

RegKind parse_reg_kind(const std::string& name) {
  std::string k;
  for (char ch : name) k += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  if (k == "an" || k == "analytical") return RegKind::Analytical;
  if (k == "st" || k == "stochastic") return RegKind::Stochastic;
  if (k == "l2") return RegKind::L2;
  if (k == "dropout") return RegKind::Dropout;
  if (k == "none") return RegKind::None;
  throw ConfigError("unknown regulariser '" + name + "' (expected AN, ST, L2, Dropout or None)");
}

std::string to_string(RegKind kind) {
  switch (kind) {
    case RegKind::Analytical: return "AN";
    case RegKind::Stochastic: return "ST";
    case RegKind::L2: return "L2";
    case RegKind::Dropout: return "Dropout";
    case RegKind::None: return "None";
  }
  return "?";
}

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"experiment", {"name", "seed"}},
      {"data",
       {"source", "name", "scheme", "d", "n", "q", "seed", "test_fraction", "train", "test", "vocab", "stop_list",
        "min_count"}},
      {"similarity", {"source", "path", "sigma", "target_fraction", "band_low", "band_high", "sparsify"}},
      {"network", {"hidden"}},
      {"train",
       {"batch_size", "max_iterations", "eval_every", "patience", "validation_fraction", "alpha", "beta1", "beta2",
        "epsilon"}},
      {"regulariser", {"kind", "strength", "dropout_rate", "neighborhood", "samples_per_instance"}},
      {"tune", {"mode", "grid", "inner_folds"}},
      {"compare", {"regularisers", "folds", "alpha", "exact"}},
      {"run", {}},  // written into manifests, ignored on read
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return trim(*v);
  }

  template <typename T>
  void get(const std::string& section, const std::string& key, T& target) const {
    const auto v = raw(section, key);
    if (!v) return;
    target = parse<T>(section, key, *v);
  }

  template <typename T>
  void get(const std::string& section, const std::string& key, std::optional<T>& target) const {
    const auto v = raw(section, key);
    if (!v) return;
    target = parse<T>(section, key, *v);
  }

  template <typename T>
  static T parse(const std::string& section, const std::string& key, const std::string& text) {
    const auto fail = [&] { return ConfigError("[" + section + "] " + key + ": cannot parse '" + text + "'"); };
    if constexpr (std::is_same_v<T, std::string>) {
      return text;
    } else if constexpr (std::is_same_v<T, bool>) {
      if (text == "true" || text == "1" || text == "yes") return true;
      if (text == "false" || text == "0" || text == "no") return false;
      throw fail();
    } else {
      std::istringstream in(text);
      T value{};
      if (!(in >> value) || !(in >> std::ws).eof()) throw fail();
      if constexpr (std::is_unsigned_v<T>)
        if (text.find('-') != std::string::npos) throw fail();
      return value;
    }
  }

 private:
  const pt::ptree& tree_;
};

// Shortest text that reads back to the same double.
std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? "," : "") + fmt(v[k]);
  return s;
}

}  // namespace

TrainConfig ExperimentConfig::train_config(RegKind kind) const {
  TrainConfig c = TrainConfig::defaults_for(kind, hidden.size());
  c.hidden = hidden;
  if (train.batch_size) c.batch_size = *train.batch_size;
  if (train.max_iterations) c.max_iterations = *train.max_iterations;
  c.eval_every = train.eval_every;
  c.patience = train.patience;
  c.validation_fraction = train.validation_fraction;
  c.adam = train.adam;
  c.seed = seed;
  c.reg = reg;
  c.reg.kind = kind;
  if (kind != reg.kind) {
    c.reg.strength = 0.0;
    c.reg.dropout_rate = 0.0;
  }
  return c;
}

eval::GridSpec ExperimentConfig::grid_for(RegKind kind) const {
  eval::GridSpec g = data.source == DataSection::Source::Synthetic ? eval::GridSpec::synthetic_default(kind)
                                                                    : eval::GridSpec::corpus_default(kind);
  if (!tune.grid.empty() && kind == reg.kind) g.candidates = tune.grid;
  g.inner_folds = tune.inner_folds;
  return g;
}

void ExperimentConfig::validate() const {
  if (data.source == DataSection::Source::Synthetic) {
    synth::SyntheticSpec spec = data.synthetic;
    spec.validate();
    if (!(data.test_fraction >= 0.0 && data.test_fraction < 1.0))
      throw ConfigError("[data] test_fraction must lie in [0, 1)");
    if (similarity.source != SimilaritySection::Source::Synthetic)
      throw ConfigError("synthetic data brings its own similarity; set [similarity] source = synthetic");
  } else {
    if (data.train_path.empty()) throw ConfigError("[data] train is required for source = bow");
    if (!std::filesystem::exists(data.train_path)) throw ConfigError("[data] train: no such file " + data.train_path);
    for (const auto* p : {&data.test_path, &data.vocab_path, &data.stop_list_path})
      if (!p->empty() && !std::filesystem::exists(*p)) throw ConfigError("no such file " + *p);
    if (data.min_count < 0) throw ConfigError("[data] min_count must be nonnegative");
    if (similarity.source == SimilaritySection::Source::Synthetic)
      throw ConfigError("corpus data needs [similarity] source = side_info or pairs");
    if (similarity.path.empty()) throw ConfigError("[similarity] path is required");
    if (!std::filesystem::exists(similarity.path)) throw ConfigError("[similarity] path: no such file " + similarity.path);
    if (!data.stop_list_path.empty() && data.vocab_path.empty())
      throw ConfigError("[data] stop_list needs a vocab file");
  }
  if (similarity.sigma && !(*similarity.sigma > 0.0)) throw ConfigError("[similarity] sigma must be positive");
  if (!(similarity.target_fraction > 0.0 && similarity.target_fraction < 1.0))
    throw ConfigError("[similarity] target_fraction must lie in (0, 1)");
  if (!(similarity.band_low < similarity.band_high)) throw ConfigError("[similarity] band_low must be below band_high");
  if (!(similarity.sparsify > 0.0 && similarity.sparsify <= 1.0))
    throw ConfigError("[similarity] sparsify must lie in (0, 1]");
  if (hidden.empty()) throw ConfigError("[network] hidden needs at least one layer");
  train_config(reg.kind).validate();
  grid_for(reg.kind).validate();
  if (compare.regularisers.size() < 2) throw ConfigError("[compare] needs at least two regularisers");
  if (compare.folds < 2) throw ConfigError("[compare] folds must be at least 2");
  if (!(compare.alpha > 0.0 && compare.alpha < 1.0)) throw ConfigError("[compare] alpha must lie in (0, 1)");
}

ExperimentConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) {
      if (body.empty()) throw ConfigError("key '" + section + "' outside any section");
      throw ConfigError("unknown config section [" + section + "]");
    }
    if (section == "run") continue;
    for (const auto& [key, value] : body)
      if (!it->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
  }

  ExperimentConfig c;
  const Reader r(tree);
  r.get("experiment", "name", c.name);
  r.get("experiment", "seed", c.seed);

  if (const auto src = r.raw("data", "source")) {
    if (*src == "synthetic")
      c.data.source = DataSection::Source::Synthetic;
    else if (*src == "bow")
      c.data.source = DataSection::Source::Bow;
    else
      throw ConfigError("[data] source must be synthetic or bow");
  }
  r.get("data", "name", c.data.name);
  if (const auto s = r.raw("data", "scheme")) c.data.synthetic.scheme = synth::parse_scheme(*s);
  r.get("data", "d", c.data.synthetic.d);
  r.get("data", "n", c.data.synthetic.n);
  r.get("data", "q", c.data.synthetic.q);
  r.get("data", "seed", c.data.synthetic_seed);
  r.get("data", "test_fraction", c.data.test_fraction);
  r.get("data", "train", c.data.train_path);
  r.get("data", "test", c.data.test_path);
  r.get("data", "vocab", c.data.vocab_path);
  r.get("data", "stop_list", c.data.stop_list_path);
  r.get("data", "min_count", c.data.min_count);
  if (c.data.source == DataSection::Source::Bow) c.similarity.source = SimilaritySection::Source::SideInfo;

  if (const auto src = r.raw("similarity", "source")) {
    if (*src == "synthetic")
      c.similarity.source = SimilaritySection::Source::Synthetic;
    else if (*src == "side_info")
      c.similarity.source = SimilaritySection::Source::SideInfo;
    else if (*src == "pairs")
      c.similarity.source = SimilaritySection::Source::Pairs;
    else
      throw ConfigError("[similarity] source must be synthetic, side_info or pairs");
  }
  r.get("similarity", "path", c.similarity.path);
  if (const auto s = r.raw("similarity", "sigma"); s && *s != "auto")
    c.similarity.sigma = Reader::parse<double>("similarity", "sigma", *s);
  r.get("similarity", "target_fraction", c.similarity.target_fraction);
  r.get("similarity", "band_low", c.similarity.band_low);
  r.get("similarity", "band_high", c.similarity.band_high);
  r.get("similarity", "sparsify", c.similarity.sparsify);

  if (const auto h = r.raw("network", "hidden")) {
    c.hidden.clear();
    for (const auto& item : split_list(*h)) c.hidden.push_back(Reader::parse<Index>("network", "hidden", item));
  }

  r.get("train", "batch_size", c.train.batch_size);
  r.get("train", "max_iterations", c.train.max_iterations);
  r.get("train", "eval_every", c.train.eval_every);
  r.get("train", "patience", c.train.patience);
  r.get("train", "validation_fraction", c.train.validation_fraction);
  r.get("train", "alpha", c.train.adam.alpha);
  r.get("train", "beta1", c.train.adam.beta1);
  r.get("train", "beta2", c.train.adam.beta2);
  r.get("train", "epsilon", c.train.adam.epsilon);

  if (const auto k = r.raw("regulariser", "kind")) c.reg.kind = parse_reg_kind(*k);
  r.get("regulariser", "strength", c.reg.strength);
  r.get("regulariser", "dropout_rate", c.reg.dropout_rate);
  r.get("regulariser", "neighborhood", c.reg.neighborhood);
  r.get("regulariser", "samples_per_instance", c.reg.samples_per_instance);

  if (const auto m = r.raw("tune", "mode")) {
    if (*m == "validation")
      c.tune.mode = TuneSection::Mode::Validation;
    else if (*m == "inner_cv")
      c.tune.mode = TuneSection::Mode::InnerCV;
    else
      throw ConfigError("[tune] mode must be validation or inner_cv");
  }
  if (const auto g = r.raw("tune", "grid")) {
    c.tune.grid.clear();
    for (const auto& item : split_list(*g)) c.tune.grid.push_back(Reader::parse<double>("tune", "grid", item));
  }
  r.get("tune", "inner_folds", c.tune.inner_folds);

  if (const auto regs = r.raw("compare", "regularisers")) {
    c.compare.regularisers.clear();
    for (const auto& item : split_list(*regs)) c.compare.regularisers.push_back(parse_reg_kind(item));
  }
  r.get("compare", "folds", c.compare.folds);
  r.get("compare", "alpha", c.compare.alpha);
  r.get("compare", "exact", c.compare.exact);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  auto c = parse_config(in);
  // Relative paths are taken relative to the config file.
  const auto base = std::filesystem::absolute(path).parent_path();
  for (auto* p : {&c.data.train_path, &c.data.test_path, &c.data.vocab_path, &c.data.stop_list_path, &c.similarity.path})
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  return c;
}

std::string ExperimentConfig::to_ini() const {
  std::ostringstream o;
  o << "[experiment]\nname = " << name << "\nseed = " << seed << "\n\n[data]\n";
  if (data.source == DataSection::Source::Synthetic) {
    o << "source = synthetic\nscheme = " << synth::to_string(data.synthetic.scheme) << "\nd = " << data.synthetic.d
      << "\nn = " << data.synthetic.n << "\nq = " << data.synthetic.q << "\n";
    if (data.synthetic_seed) o << "seed = " << *data.synthetic_seed << "\n";
    o << "test_fraction = " << fmt(data.test_fraction) << "\n";
  } else {
    o << "source = bow\ntrain = " << data.train_path << "\n";
    if (!data.test_path.empty()) o << "test = " << data.test_path << "\n";
    if (!data.vocab_path.empty()) o << "vocab = " << data.vocab_path << "\n";
    if (!data.stop_list_path.empty()) o << "stop_list = " << data.stop_list_path << "\n";
    o << "min_count = " << data.min_count << "\n";
  }
  if (!data.name.empty()) o << "name = " << data.name << "\n";

  o << "\n[similarity]\nsource = ";
  switch (similarity.source) {
    case SimilaritySection::Source::Synthetic: o << "synthetic\n"; break;
    case SimilaritySection::Source::SideInfo: o << "side_info\n"; break;
    case SimilaritySection::Source::Pairs: o << "pairs\n"; break;
  }
  if (!similarity.path.empty()) o << "path = " << similarity.path << "\n";
  o << "sigma = " << (similarity.sigma ? fmt(*similarity.sigma) : "auto") << "\ntarget_fraction = "
    << fmt(similarity.target_fraction) << "\nband_low = " << fmt(similarity.band_low)
    << "\nband_high = " << fmt(similarity.band_high) << "\nsparsify = " << fmt(similarity.sparsify) << "\n";

  o << "\n[network]\nhidden = ";
  for (std::size_t k = 0; k < hidden.size(); ++k) o << (k ? "," : "") << hidden[k];
  o << "\n\n[train]\n";
  if (train.batch_size) o << "batch_size = " << *train.batch_size << "\n";
  if (train.max_iterations) o << "max_iterations = " << *train.max_iterations << "\n";
  o << "eval_every = " << train.eval_every << "\npatience = " << train.patience
    << "\nvalidation_fraction = " << fmt(train.validation_fraction) << "\nalpha = " << fmt(train.adam.alpha)
    << "\nbeta1 = " << fmt(train.adam.beta1) << "\nbeta2 = " << fmt(train.adam.beta2)
    << "\nepsilon = " << fmt(train.adam.epsilon) << "\n";

  o << "\n[regulariser]\nkind = " << to_string(reg.kind) << "\nstrength = " << fmt(reg.strength)
    << "\ndropout_rate = " << fmt(reg.dropout_rate) << "\nneighborhood = " << fmt(reg.neighborhood)
    << "\nsamples_per_instance = " << reg.samples_per_instance << "\n";

  o << "\n[tune]\nmode = " << (tune.mode == TuneSection::Mode::Validation ? "validation" : "inner_cv") << "\n";
  if (!tune.grid.empty()) o << "grid = " << join(tune.grid) << "\n";
  o << "inner_folds = " << tune.inner_folds << "\n";

  o << "\n[compare]\nregularisers = ";
  for (std::size_t k = 0; k < compare.regularisers.size(); ++k) o << (k ? "," : "") << to_string(compare.regularisers[k]);
  o << "\nfolds = " << compare.folds << "\nalpha = " << fmt(compare.alpha)
    << "\nexact = " << (compare.exact ? "true" : "false") << "\n";
  return o.str();
}

}  // namespace featreg
