#include "featreg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "featreg/error.hpp"

namespace featreg {

namespace {

enum StreamTag : std::uint64_t { kInit = 1, kSplit = 2, kShuffle = 3, kAugment = 4, kDropout = 5 };

std::vector<Index> iota_indices(Index n) {
  std::vector<Index> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), Index{0});
  return v;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

LabeledData LabeledData::subset(const std::vector<Index>& rows) const {
  LabeledData out;
  out.num_classes = num_classes;
  out.X.resize(static_cast<Index>(rows.size()), X.cols());
  out.labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.X.row(static_cast<Index>(r)) = X.row(rows[r]);
    out.labels.push_back(labels[static_cast<std::size_t>(rows[r])]);
  }
  return out;
}

void LabeledData::validate() const {
  if (static_cast<Index>(labels.size()) != X.rows()) throw DataError("label count differs from instance count");
  if (num_classes < 2) throw DataError("at least two classes are required");
  for (int y : labels)
    if (y < 0 || y >= num_classes) throw DataError("label out of range");
  if (!X.allFinite()) throw DataError("instances contain non-finite values");
}

AdamState AdamState::init(const Params& params, const AdamConfig& hyper) {
  return {params.zeros_like(), params.zeros_like(), 0, hyper};
}

void adam_step(AdamState& state, Params& params, const Grads& grads) {
  if (!all_finite(grads)) throw TrainingError("non-finite gradient at Adam step " + std::to_string(state.t + 1));
  const auto& h = state.hyper;
  ++state.t;
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.t));
  auto update = [&](auto& theta, auto& m, auto& v, const auto& g) {
    m = h.beta1 * m + (1.0 - h.beta1) * g;
    v = h.beta2 * v + (1.0 - h.beta2) * g.cwiseAbs2();
    theta.array() -= h.alpha * (m.array() / c1) / ((v.array() / c2).sqrt() + h.epsilon);
  };
  for (std::size_t k = 0; k < params.layers.size(); ++k) {
    update(params.layers[k].W, state.m.layers[k].W, state.v.layers[k].W, grads.layers[k].W);
    update(params.layers[k].b, state.m.layers[k].b, state.v.layers[k].b, grads.layers[k].b);
  }
}

TrainConfig TrainConfig::defaults_for(RegKind kind, std::size_t hidden_layers) {
  TrainConfig c;
  c.reg.kind = kind;
  switch (kind) {
    case RegKind::Analytical:
      c.batch_size = 5;
      c.max_iterations = 5000;
      break;
    case RegKind::Stochastic:
      c.batch_size = 20;
      c.max_iterations = hidden_layers > 1 ? 20000 : 10000;
      break;
    default:
      c.batch_size = 20;
      c.max_iterations = 10000;
  }
  return c;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (max_iterations < 1) throw ConfigError("max_iterations must be at least 1");
  if (eval_every < 1) throw ConfigError("eval_every must be at least 1");
  if (patience < 1) throw ConfigError("patience must be at least 1");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
    throw ConfigError("validation_fraction must lie in (0, 1)");
  for (Index h : hidden)
    if (h < 1) throw ConfigError("hidden layer sizes must be positive");
  if (!(adam.alpha > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
      !(adam.epsilon > 0.0))
    throw ConfigError("invalid Adam hyperparameters");
  try {
    reg.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  if (reg.kind == RegKind::Dropout && reg.dropout_rate > 0.9) throw ConfigError("dropout rate must be at most 0.9");
}

bool EarlyStopping::observe(double validation_error) {
  if (has_previous_ && validation_error > previous_)
    ++count_;
  else
    count_ = 0;
  previous_ = validation_error;
  has_previous_ = true;
  return count_ >= patience_;
}

std::string to_string(StopReason reason) {
  return reason == StopReason::EarlyStop ? "early_stop" : "max_iterations";
}

std::string TrainingHistory::to_csv() const {
  std::ostringstream out;
  out << "update_index,train_loss,validation_error\n";
  out.precision(10);
  for (const auto& r : records) out << r.update << ',' << r.train_loss << ',' << r.validation_error << '\n';
  return out.str();
}

std::pair<LabeledData, LabeledData> validation_split(const LabeledData& data, double fraction, std::uint64_t seed) {
  const Index n = data.size();
  const auto held = static_cast<Index>(std::llround(fraction * static_cast<double>(n)));
  if (held < 1 || held >= n) throw DataError("not enough instances for a validation split");
  auto order = iota_indices(n);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Index> val(order.begin(), order.begin() + held);
  std::vector<Index> tr(order.begin() + held, order.end());
  return {data.subset(tr), data.subset(val)};
}

std::vector<int> predict(const Params& params, const LabeledData& data) {
  return featreg::predict(params, data.X.transpose());
}

double error_rate(const Params& params, const LabeledData& data) {
  if (data.size() == 0) return 0.0;
  const auto preds = predict(params, data);
  Index wrong = 0;
  for (std::size_t k = 0; k < preds.size(); ++k)
    if (preds[k] != data.labels[k]) ++wrong;
  return 100.0 * static_cast<double>(wrong) / static_cast<double>(data.size());
}

TrainResult fit(const TrainConfig& config, const LabeledData& train_set, const LabeledData& validation,
                const SimilarityStructure& similarity) {
  config.validate();
  train_set.validate();
  const int m = train_set.num_classes;
  {
    std::vector<int> seen(static_cast<std::size_t>(m), 0);
    for (int y : train_set.labels) seen[static_cast<std::size_t>(y)] = 1;
    for (int c = 0; c < m; ++c)
      if (!seen[static_cast<std::size_t>(c)])
        throw DataError("class " + std::to_string(c + 1) + " has no instance in the training split");
  }
  if (validation.size() == 0) throw DataError("validation split is empty");
  const auto& reg = config.reg;
  const bool active = reg.strength > 0.0 || reg.kind == RegKind::Dropout;
  if ((reg.kind == RegKind::Analytical || reg.kind == RegKind::Stochastic) && active &&
      similarity.features != train_set.features())
    throw ConfigError("similarity covers " + std::to_string(similarity.features) + " features, data has " +
                      std::to_string(train_set.features()));
  if (reg.kind == RegKind::Stochastic && active && similarity.pairs.empty())
    throw ConfigError("the stochastic penalty needs at least one similar feature pair");

  std::vector<Index> dims{train_set.features()};
  dims.insert(dims.end(), config.hidden.begin(), config.hidden.end());
  dims.push_back(m);

  Params params = glorot_init(dims, derive_seed(config.seed, kInit));
  AdamState adam = AdamState::init(params, config.adam);
  std::mt19937_64 augment_rng(derive_seed(config.seed, kAugment));
  std::mt19937_64 dropout_rng(derive_seed(config.seed, kDropout));

  const Eigen::MatrixXd Xt = train_set.X.transpose();  // instances as columns
  const Eigen::MatrixXd Xv = validation.X.transpose();
  auto validation_error = [&](const Params& p) {
    const auto preds = featreg::predict(p, Xv);
    Index wrong = 0;
    for (std::size_t k = 0; k < preds.size(); ++k)
      if (preds[k] != validation.labels[k]) ++wrong;
    return 100.0 * static_cast<double>(wrong) / static_cast<double>(preds.size());
  };

  const Index n = train_set.size();
  auto order = iota_indices(n);
  std::size_t cursor = static_cast<std::size_t>(n);
  std::uint64_t epoch = 0;

  TrainResult result{params, {}};
  EarlyStopping stopper(config.patience);
  double loss_accum = 0.0;
  Index loss_count = 0;
  double best_error = std::numeric_limits<double>::infinity();

  Eigen::MatrixXd batch(train_set.features(), 0);
  std::vector<int> batch_labels;
  for (long update = 1; update <= config.max_iterations; ++update) {
    if (cursor >= order.size()) {
      std::mt19937_64 shuffle_rng(derive_seed(config.seed, kShuffle, epoch++));
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      cursor = 0;
    }
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), order.size() - cursor);
    batch.resize(train_set.features(), static_cast<Index>(take));
    batch_labels.resize(take);
    for (std::size_t k = 0; k < take; ++k) {
      batch.col(static_cast<Index>(k)) = Xt.col(order[cursor + k]);
      batch_labels[k] = train_set.labels[static_cast<std::size_t>(order[cursor + k])];
    }
    cursor += take;
    const double inv_b = 1.0 / static_cast<double>(take);

    BatchTrace<double> trace;
    if (reg.kind == RegKind::Dropout && reg.dropout_rate > 0.0)
      trace = forward_batch(params, batch,
                            dropout_masks_batch<double>(dims, static_cast<Index>(take), reg.dropout_rate, dropout_rng));
    else
      trace = forward_batch(params, batch);
    auto [loss, grad] = loss_gradients_batch(params, trace, batch_labels);
    scale(inv_b, grad);
    loss_accum += loss;
    loss_count += static_cast<Index>(take);

    if (reg.strength > 0.0) {
      switch (reg.kind) {
        case RegKind::Analytical: {
          const auto pg = an_gradient(params, batch, similarity.pairs);
          axpy(reg.strength * inv_b, pg.grad, grad);
          break;
        }
        case RegKind::Stochastic: {
          const auto generated = st_generate<double>(static_cast<Index>(take), similarity.pairs,
                                                     reg.samples_per_instance, reg.neighborhood, augment_rng);
          const auto pg = st_penalty_gradient(params, batch, generated);
          axpy(reg.strength * inv_b, pg.grad, grad);
          break;
        }
        case RegKind::L2: {
          const auto pg = l2_penalty_gradient(params);
          axpy(reg.strength, pg.grad, grad);
          break;
        }
        default:
          break;
      }
    }
    adam_step(adam, params, grad);

    const bool last = update == config.max_iterations;
    if (update % config.eval_every == 0 || last) {
      const double err = validation_error(params);
      result.history.records.push_back({update, loss_count ? loss_accum / static_cast<double>(loss_count) : 0.0, err});
      loss_accum = 0.0;
      loss_count = 0;
      if (err < best_error) {
        best_error = err;
        result.history.best_index = result.history.records.size() - 1;
        result.params = params;
      }
      result.history.updates = update;
      if (stopper.observe(err)) {
        result.history.stop_reason = StopReason::EarlyStop;
        break;
      }
    }
  }
  return result;
}

TrainResult train(const TrainConfig& config, const LabeledData& data, const SimilarityStructure& similarity) {
  config.validate();
  data.validate();
  auto [tr, val] = validation_split(data, config.validation_fraction, derive_seed(config.seed, kSplit));
  return fit(config, tr, val, similarity);
}

}  // namespace featreg
