#include "palg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "palg/algebra.hpp"
#include "palg/error.hpp"
#include "palg/texts.hpp"

namespace palg {

namespace {

std::span<const double> prompt_values(const Prompt* prompt) {
  return prompt ? std::span<const double>(prompt->values) : std::span<const double>{};
}

std::size_t row_argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c)
    if (row[c] > row[best]) best = c;
  return best;
}

}  // namespace

double task_accuracy(const Prompt* prompt, const ClassificationTask& task,
                     const MultiViewDataset& data, const TextModel& model, Exec exec) {
  require(!task.rows.empty(), ErrorKind::Input, "evaluation split of '" + task.name + "' is empty");
  const TextBank bank(model, class_sequences(model, task.class_tokens), prompt != nullptr);
  const auto texts = bank.encode(prompt_values(prompt));
  const Matrix scores = score_table(data.features, task.rows, texts.unit, 1.0, exec);
  std::size_t correct = 0;
  for (std::size_t n = 0; n < task.rows.size(); ++n)
    correct += row_argmax(scores.row(n)) == task.labels[n] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(task.rows.size());
}

double view_accuracy(const Prompt* prompt, const MultiViewDataset& data, std::size_t view,
                     const TextModel& model, Exec exec) {
  return task_accuracy(prompt, view_task(data, view, Split::Test), data, model, exec);
}

PairScoreTable pair_scores(const Prompt* prompt, const MultiViewDataset& data,
                           const TextModel& model, double scale, Exec exec) {
  require(data.view_count() == 2, ErrorKind::Config, "pair scores need a two-view dataset");
  const TextBank bank(model, pair_sequences(model, data), prompt != nullptr);
  const auto texts = bank.encode(prompt_values(prompt));
  PairScoreTable table;
  table.rows = data.rows(Split::Test);
  table.scores = score_table(data.features, table.rows, texts.unit, scale, exec);
  table.seen_mask = data.pair_seen;
  for (std::size_t row : table.rows) table.true_pair.push_back(data.pair_of(row));
  return table;
}

CurvePoint accuracy_at_bias(const PairScoreTable& table, double bias) {
  std::size_t n_seen = 0, n_unseen = 0, seen_ok = 0, unseen_ok = 0;
  std::vector<double> biased(table.scores.cols());
  for (std::size_t n = 0; n < table.scores.rows(); ++n) {
    const auto row = table.scores.row(n);
    for (std::size_t c = 0; c < row.size(); ++c) biased[c] = row[c] + (table.seen_mask[c] ? 0.0 : bias);
    const bool hit = row_argmax(biased) == table.true_pair[n];
    if (table.seen_mask[table.true_pair[n]]) {
      ++n_seen;
      seen_ok += hit ? 1 : 0;
    } else {
      ++n_unseen;
      unseen_ok += hit ? 1 : 0;
    }
  }
  return {bias, n_seen ? static_cast<double>(seen_ok) / static_cast<double>(n_seen) : 0.0,
          n_unseen ? static_cast<double>(unseen_ok) / static_cast<double>(n_unseen) : 0.0};
}

AucResult auc_seen_unseen(const PairScoreTable& table) {
  const std::size_t n_rows = table.scores.rows();
  const std::size_t n_cols = table.scores.cols();
  require(table.true_pair.size() == n_rows && table.seen_mask.size() == n_cols, ErrorKind::Dimension,
          "pair score table is inconsistent");
  require(table.scores.all_finite(), ErrorKind::Numeric, "pair score table has non-finite scores");

  struct Flip {
    double gap;       // bias at which the best unseen column overtakes the best seen one
    bool is_seen;     // true pair is a seen pair
    bool seen_hit;    // correct while the seen side wins
    bool unseen_hit;  // correct once the unseen side wins
  };
  std::vector<Flip> flips;
  std::size_t n_seen = 0;
  std::size_t seen_ok = 0;
  for (std::size_t n = 0; n < n_rows; ++n) {
    const auto row = table.scores.row(n);
    std::size_t best_seen = n_cols, best_unseen = n_cols;
    for (std::size_t c = 0; c < n_cols; ++c) {
      std::size_t& best = table.seen_mask[c] ? best_seen : best_unseen;
      if (best == n_cols || row[c] > row[best]) best = c;
    }
    require(best_seen < n_cols && best_unseen < n_cols, ErrorKind::Protocol,
            "pair table needs both seen and unseen candidate pairs");
    const std::size_t truth = table.true_pair[n];
    const bool is_seen = table.seen_mask[truth];
    Flip f{row[best_seen] - row[best_unseen], is_seen, best_seen == truth, best_unseen == truth};
    n_seen += is_seen ? 1 : 0;
    seen_ok += f.seen_hit ? 1 : 0;
    flips.push_back(f);
  }
  const std::size_t n_unseen = n_rows - n_seen;
  require(n_seen > 0 && n_unseen > 0, ErrorKind::Protocol,
          "seen/unseen evaluation needs test images of both kinds");

  std::stable_sort(flips.begin(), flips.end(), [](const Flip& a, const Flip& b) { return a.gap < b.gap; });

  const auto seen_den = static_cast<double>(n_seen);
  const auto unseen_den = static_cast<double>(n_unseen);
  AucResult out;
  std::size_t unseen_ok = 0;
  out.curve.push_back({flips.front().gap - 1.0, static_cast<double>(seen_ok) / seen_den, 0.0});
  for (std::size_t i = 0; i < flips.size();) {
    const double gap = flips[i].gap;
    for (; i < flips.size() && flips[i].gap == gap; ++i) {
      if (flips[i].is_seen && flips[i].seen_hit) --seen_ok;
      if (!flips[i].is_seen && flips[i].unseen_hit) ++unseen_ok;
    }
    const double bias = i < flips.size() ? 0.5 * (gap + flips[i].gap) : gap + 1.0;
    out.curve.push_back({bias, static_cast<double>(seen_ok) / seen_den,
                         static_cast<double>(unseen_ok) / unseen_den});
  }

  out.best_seen = out.curve.front().seen;
  out.best_unseen = out.curve.back().unseen;
  for (std::size_t k = 0; k + 1 < out.curve.size(); ++k) {
    const auto& p = out.curve[k];
    const auto& q = out.curve[k + 1];
    out.auc += (p.seen - q.seen) * (p.unseen + q.unseen) * 0.5;
  }
  return out;
}

Metrics evaluate(const Prompt* prompt, const EvalBundle& bundle) {
  require(bundle.data && bundle.model, ErrorKind::Contract, "evaluation bundle is incomplete");
  const auto& data = *bundle.data;
  Metrics m;
  double sum = 0.0;
  for (std::size_t v = 0; v < data.view_count(); ++v) {
    const double acc = view_accuracy(prompt, data, v, *bundle.model, bundle.exec);
    m["acc/" + data.views[v].view_name] = acc;
    sum += acc;
  }
  m["acc/mean"] = sum / static_cast<double>(data.view_count());

  if (data.view_count() == 2) {
    const auto table = pair_scores(prompt, data, *bundle.model, bundle.scale, bundle.exec);
    bool any_seen = false, any_unseen = false;
    for (std::size_t p : table.true_pair) (table.seen_mask[p] ? any_seen : any_unseen) = true;
    if (any_seen && any_unseen) {
      const auto auc = auc_seen_unseen(table);
      m["pair/seen"] = auc.best_seen;
      m["pair/unseen"] = auc.best_unseen;
      m["pair/auc"] = auc.auc;
    }
  }
  return m;
}

std::map<std::string, MetricSummary> summarize(std::span<const Metrics> trials) {
  std::map<std::string, std::vector<double>> values;
  for (const auto& t : trials)
    for (const auto& [name, v] : t) values[name].push_back(v);
  std::map<std::string, MetricSummary> out;
  for (const auto& [name, vs] : values) {
    MetricSummary s;
    s.trials = vs.size();
    s.mean = std::accumulate(vs.begin(), vs.end(), 0.0) / static_cast<double>(vs.size());
    if (vs.size() > 1) {
      double ss = 0.0;
      for (double v : vs) ss += (v - s.mean) * (v - s.mean);
      s.stddev = std::sqrt(ss / static_cast<double>(vs.size() - 1));
    }
    out[name] = s;
  }
  return out;
}

void ContinualConfig::validate() const {
  require(n_steps >= 1 && classes_per_step >= 1, ErrorKind::Config,
          "continual config: n_steps and classes_per_step must be at least 1");
  require(n_steps * classes_per_step == n_classes, ErrorKind::Config,
          "continual config: n_steps * classes_per_step must equal n_classes");
  train.validate();
}

ContinualResult continual_run(const ContinualConfig& config, const MultiViewDataset& data,
                              const TextModel& model, const ProjectionBasis* basis, Exec exec) {
  config.validate();
  require(config.view < data.view_count(), ErrorKind::Config, "continual config: view out of range");
  require(config.n_classes <= data.views[config.view].size(), ErrorKind::Config,
          "continual config: dataset view has fewer classes than n_classes");

  ContinualResult result;
  std::vector<std::size_t> seen_classes;
  const TrainOptions options{exec, {}};
  for (std::size_t step = 0; step < config.n_steps; ++step) {
    std::vector<std::size_t> group(config.classes_per_step);
    std::iota(group.begin(), group.end(), step * config.classes_per_step);
    seen_classes.insert(seen_classes.end(), group.begin(), group.end());

    auto train_task = subset_task(data, config.view, group, Split::Train);
    train_task.name = data.views[config.view].view_name + "-step" + std::to_string(step);
    TrainConfig cfg = config.train;
    // The first step is an ordinary training run; later steps get derived seeds.
    cfg.seed = step == 0 ? config.train.seed : derive_seed(config.train.seed, step);
    result.step_prompts.push_back(
        train_on_task(data, train_task, config.view, cfg, model, basis, options).prompt);

    const auto weights = equal_weights(result.step_prompts.size());
    result.final_composite = compose(result.step_prompts, weights, basis);
    const auto test_task = subset_task(data, config.view, seen_classes, Split::Test);
    result.per_step.push_back(task_accuracy(&result.final_composite, test_task, data, model, exec));
  }
  result.average_acc = std::accumulate(result.per_step.begin(), result.per_step.end(), 0.0) /
                       static_cast<double>(result.per_step.size());
  result.last_acc = result.per_step.back();
  const auto union_task = subset_task(data, config.view, seen_classes, Split::Test);
  result.first_prompt_union_acc = task_accuracy(&result.step_prompts.front(), union_task, data, model, exec);
  return result;
}

}  // namespace palg
