#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "palg/data.hpp"
#include "palg/kernels.hpp"
#include "palg/linalg.hpp"
#include "palg/random.hpp"
#include "palg/regularize.hpp"
#include "palg/vlm.hpp"

namespace palg {

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 512;  // capped at the number of training images
  double learning_rate = 0.01;
  double dropout_rate = 0.3;
  bool use_projection = false;
  double energy_fraction = 0.90;
  double logit_scale = 100.0;
  std::optional<RegularizerSpec> reg;
  double reg_weight = 1.0;
  std::uint64_t seed = 0;
  double init_sigma = 0.02;

  void validate() const;
};

// Images and local labels of one classification problem; class texts are
// [common, prompt, class tokens].
struct ClassificationTask {
  std::string name;
  std::vector<std::vector<TokenId>> class_tokens;
  std::vector<std::size_t> rows;
  std::vector<std::size_t> labels;  // index into class_tokens, per row
};

ClassificationTask view_task(const MultiViewDataset& data, std::size_t view, Split split);
// Only images whose view label is in `classes`; labels are positions in `classes`.
ClassificationTask subset_task(const MultiViewDataset& data, std::size_t view,
                               std::span<const std::size_t> classes, Split split);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
  std::size_t correct = 0;
};

// Mean cross-entropy of the prompted class texts over (rows, labels) and its
// exact gradient with respect to the prompt.
LossAndGrad ce_loss_and_grad(std::span<const double> prompt, const TextBank& class_texts,
                             const Matrix& images, std::span<const std::size_t> rows,
                             std::span<const std::size_t> labels, double scale,
                             Exec exec = Exec::Parallel);

// Inverted dropout multipliers: 0 with probability `rate`, else 1/(1-rate).
std::vector<double> dropout_mask(std::size_t n, double rate, Rng& rng);
std::vector<double> apply_dropout(std::span<const double> values, double rate, Rng& rng);

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0.0;
  double reg_loss = 0.0;
  double accuracy = 0.0;  // on the dropped-out forward passes of the epoch
};

struct TrainResult {
  Prompt prompt;
  std::vector<EpochLog> log;
};

struct TrainOptions {
  Exec exec = Exec::Parallel;
  // Called with the parameter after every SGD step (post projection).
  std::function<void(std::span<const double>)> on_step;
};

// `own_view` is the view the task labels come from (used by MV regularization).
TrainResult train_on_task(const MultiViewDataset& data, const ClassificationTask& task,
                          std::size_t own_view, const TrainConfig& config, const TextModel& model,
                          const ProjectionBasis* basis, const TrainOptions& options = {});

TrainResult train_prompt(const MultiViewDataset& data, std::size_t view, const TrainConfig& config,
                         const TextModel& model, const ProjectionBasis* basis,
                         const TrainOptions& options = {});

}  // namespace palg
