#include "palg/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "palg/error.hpp"
#include "palg/texts.hpp"

namespace palg {

void TrainConfig::validate() const {
  require(epochs >= 1, ErrorKind::Config, "train config: epochs must be at least 1");
  require(batch_size >= 1, ErrorKind::Config, "train config: batch_size must be at least 1");
  require(learning_rate > 0.0, ErrorKind::Config, "train config: learning_rate must be positive");
  require(dropout_rate >= 0.0 && dropout_rate < 1.0, ErrorKind::Config,
          "train config: dropout_rate must lie in [0, 1)");
  require(energy_fraction > 0.0 && energy_fraction <= 1.0, ErrorKind::Config,
          "train config: energy_fraction must lie in (0, 1]");
  require(logit_scale > 0.0, ErrorKind::Config, "train config: logit_scale must be positive");
  require(reg_weight >= 0.0, ErrorKind::Config, "train config: reg_weight must be non-negative");
  require(init_sigma >= 0.0, ErrorKind::Config, "train config: init_sigma must be non-negative");
}

ClassificationTask view_task(const MultiViewDataset& data, std::size_t view, Split split) {
  require(view < data.view_count(), ErrorKind::Config, "view index out of range");
  std::vector<std::size_t> all(data.views[view].size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  auto task = subset_task(data, view, all, split);
  task.name = data.views[view].view_name;
  return task;
}

ClassificationTask subset_task(const MultiViewDataset& data, std::size_t view,
                               std::span<const std::size_t> classes, Split split) {
  require(view < data.view_count(), ErrorKind::Config, "view index out of range");
  const auto& space = data.views[view];
  ClassificationTask task;
  task.name = space.view_name;
  std::vector<std::size_t> local(space.size(), classes.size());
  for (std::size_t i = 0; i < classes.size(); ++i) {
    require(classes[i] < space.size(), ErrorKind::Config, "class index out of range");
    local[classes[i]] = i;
    task.class_tokens.push_back(space.class_token_ids[classes[i]]);
  }
  for (std::size_t row = 0; row < data.size(); ++row) {
    if (data.split[row] != split) continue;
    const std::size_t l = local[data.label(row, view)];
    if (l == classes.size()) continue;
    task.rows.push_back(row);
    task.labels.push_back(l);
  }
  return task;
}

LossAndGrad ce_loss_and_grad(std::span<const double> prompt, const TextBank& class_texts,
                             const Matrix& images, std::span<const std::size_t> rows,
                             std::span<const std::size_t> labels, double scale, Exec exec) {
  require(!rows.empty(), ErrorKind::Input, "cross-entropy batch is empty");
  require(rows.size() == labels.size(), ErrorKind::Dimension, "rows and labels differ in length");
  CandidateSets sets;
  std::vector<std::size_t> all(class_texts.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  for (std::size_t label : labels) sets.add(all, label);

  const auto features = class_texts.encode(prompt);
  const auto ce = candidate_cross_entropy(images, rows, sets, features.unit, scale, exec);
  return {ce.loss, class_texts.prompt_gradient(features, ce.text_grad, exec), ce.correct};
}

std::vector<double> dropout_mask(std::size_t n, double rate, Rng& rng) {
  require(rate >= 0.0 && rate < 1.0, ErrorKind::Config, "dropout rate must lie in [0, 1)");
  std::vector<double> mask(n, 1.0);
  if (rate == 0.0) return mask;
  const double keep = 1.0 / (1.0 - rate);
  for (double& m : mask) m = uniform01(rng) < rate ? 0.0 : keep;
  return mask;
}

std::vector<double> apply_dropout(std::span<const double> values, double rate, Rng& rng) {
  const auto mask = dropout_mask(values.size(), rate, rng);
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] * mask[i];
  return out;
}

namespace {

enum Stream : std::uint64_t { kInit = 11, kOrder, kDropout };

}  // namespace

TrainResult train_on_task(const MultiViewDataset& data, const ClassificationTask& task,
                          std::size_t own_view, const TrainConfig& config, const TextModel& model,
                          const ProjectionBasis* basis, const TrainOptions& options) {
  config.validate();
  require(config.use_projection == (basis != nullptr), ErrorKind::Config,
          "a projection basis must be given exactly when use_projection is set");
  require(!task.rows.empty(), ErrorKind::Input, "training split of '" + task.name + "' is empty");
  require(task.rows.size() == task.labels.size(), ErrorKind::Dimension, "task rows and labels differ");
  const std::size_t d = model.dim();
  if (basis) require(basis->ambient_dim == d, ErrorKind::Dimension, "basis dimension does not match the model");

  const TextBank class_texts(model, class_sequences(model, task.class_tokens), true);
  std::optional<Regularizer> reg;
  if (config.reg) reg.emplace(*config.reg, model, data, own_view);

  Rng init_rng(derive_seed(config.seed, kInit));
  Rng order_rng(derive_seed(config.seed, kOrder));
  Rng dropout_rng(derive_seed(config.seed, kDropout));

  std::vector<double> v(d);
  for (double& x : v) x = config.init_sigma * standard_normal(init_rng);
  if (basis) v = project(*basis, v);

  const std::size_t n = task.rows.size();
  const std::size_t batch = std::min(config.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::size_t> rows;
  std::vector<std::size_t> labels;

  TrainResult result;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(std::span<std::size_t>(order), order_rng);
    double loss_sum = 0.0;
    double reg_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t stop = std::min(n, start + batch);
      rows.clear();
      labels.clear();
      for (std::size_t i = start; i < stop; ++i) {
        rows.push_back(task.rows[order[i]]);
        labels.push_back(task.labels[order[i]]);
      }
      const auto mask = dropout_mask(d, config.dropout_rate, dropout_rng);
      std::vector<double> dropped(d);
      for (std::size_t i = 0; i < d; ++i) dropped[i] = v[i] * mask[i];

      auto step = ce_loss_and_grad(dropped, class_texts, data.features, rows, labels,
                                   config.logit_scale, options.exec);
      const auto count = static_cast<double>(rows.size());
      loss_sum += step.loss * count;
      correct += step.correct;
      if (reg) {
        const auto term = reg->evaluate(dropped, rows, epoch, config.logit_scale, options.exec);
        axpy(config.reg_weight, term.grad, step.grad);
        reg_sum += term.loss * count;
      }
      for (std::size_t i = 0; i < d; ++i) v[i] -= config.learning_rate * mask[i] * step.grad[i];
      if (basis) v = project(*basis, v);
      if (options.on_step) options.on_step(v);
    }
    const auto total = static_cast<double>(n);
    result.log.push_back({epoch, loss_sum / total, reg_sum / total, static_cast<double>(correct) / total});
  }

  result.prompt.values = std::move(v);
  result.prompt.trained_with_projection = basis != nullptr;
  result.prompt.basis_fingerprint = basis ? basis->fingerprint() : 0;
  result.prompt.source_task = task.name;
  return result;
}

TrainResult train_prompt(const MultiViewDataset& data, std::size_t view, const TrainConfig& config,
                         const TextModel& model, const ProjectionBasis* basis,
                         const TrainOptions& options) {
  return train_on_task(data, view_task(data, view, Split::Train), view, config, model, basis, options);
}

}  // namespace palg
