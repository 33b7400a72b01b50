#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "palg/data.hpp"
#include "palg/kernels.hpp"
#include "palg/linalg.hpp"
#include "palg/tuning.hpp"
#include "palg/vlm.hpp"

namespace palg {

// Metric name → value. Ordered so every serialization is deterministic.
using Metrics = std::map<std::string, double>;

struct EvalBundle {
  const MultiViewDataset* data = nullptr;
  const TextModel* model = nullptr;
  double scale = 100.0;
  Exec exec = Exec::Parallel;
};

// `prompt == nullptr` evaluates the prompt-free (zero-shot) model.
double task_accuracy(const Prompt* prompt, const ClassificationTask& task,
                     const MultiViewDataset& data, const TextModel& model,
                     Exec exec = Exec::Parallel);
// Test-split accuracy over all classes of one view.
double view_accuracy(const Prompt* prompt, const MultiViewDataset& data, std::size_t view,
                     const TextModel& model, Exec exec = Exec::Parallel);

struct PairScoreTable {
  std::vector<std::size_t> rows;  // dataset rows of the test images
  Matrix scores;                  // rows × pairs, scaled cosine similarity
  std::vector<bool> seen_mask;    // per pair column
  std::vector<std::size_t> true_pair;
};

// Closed-set table over every (view0, view1) pair for the test images.
PairScoreTable pair_scores(const Prompt* prompt, const MultiViewDataset& data,
                           const TextModel& model, double scale, Exec exec = Exec::Parallel);

struct CurvePoint {
  double bias;
  double seen;
  double unseen;
};

struct AucResult {
  double best_seen = 0.0;
  double best_unseen = 0.0;
  double auc = 0.0;
  std::vector<CurvePoint> curve;  // ascending bias
};

// Seen/unseen accuracy when `bias` is added to every unseen column.
CurvePoint accuracy_at_bias(const PairScoreTable& table, double bias);

// Exact calibration sweep: accuracies are piecewise constant in the bias and
// change only where an image's best unseen column overtakes its best seen
// column, so one point per regime traces the whole curve.
AucResult auc_seen_unseen(const PairScoreTable& table);

// acc/<view> for every view, acc/mean, and for two-view datasets with both
// seen and unseen test images pair/seen, pair/unseen, pair/auc.
Metrics evaluate(const Prompt* prompt, const EvalBundle& bundle);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single trial
  std::size_t trials = 0;
};

std::map<std::string, MetricSummary> summarize(std::span<const Metrics> trials);

struct ContinualConfig {
  std::size_t n_classes = 100;
  std::size_t n_steps = 10;
  std::size_t classes_per_step = 10;
  std::size_t view = 0;
  TrainConfig train;

  void validate() const;
};

struct ContinualResult {
  double average_acc = 0.0;
  double last_acc = 0.0;
  std::vector<double> per_step;
  std::vector<Prompt> step_prompts;
  Prompt final_composite;
  // The first step's prompt alone, scored over all n_classes.
  double first_prompt_union_acc = 0.0;
};

ContinualResult continual_run(const ContinualConfig& config, const MultiViewDataset& data,
                              const TextModel& model, const ProjectionBasis* basis,
                              Exec exec = Exec::Parallel);

}  // namespace palg
