#include "palg/regularize.hpp"

#include <algorithm>
#include <numeric>

#include "palg/error.hpp"
#include "palg/random.hpp"
#include "palg/texts.hpp"

namespace palg {

std::vector<SupportClass> resolve_support(const Vocabulary& vocab, std::span<const std::string> names) {
  require(!names.empty(), ErrorKind::Config, "support class list is empty");
  std::vector<SupportClass> out;
  for (const auto& name : names) {
    const auto id = vocab.find(name);
    require(id.has_value(), ErrorKind::Config,
            "support class '" + name + "' is not in the vocabulary");
    out.push_back({name, {*id}});
  }
  return out;
}

std::vector<std::string> support_overlap(const RegularizerSpec& spec, const MultiViewDataset& data) {
  std::vector<std::string> out;
  for (const auto& s : spec.support)
    for (const auto& view : data.views)
      if (std::find(view.class_names.begin(), view.class_names.end(), s.name) != view.class_names.end())
        out.push_back(s.name);
  return out;
}

std::size_t pseudo_label(std::span<const double> image, std::span<const TextInput> candidates,
                         const TextModel& model) {
  require(!candidates.empty(), ErrorKind::Input, "pseudo_label: no candidates");
  std::vector<std::vector<double>> texts;
  texts.reserve(candidates.size());
  for (const auto& c : candidates) {
    require(!c.prompt.has_value(), ErrorKind::Contract,
            "pseudo_label: candidate texts must not contain the prompt");
    texts.push_back(encode_text(model, c));
  }
  return classify(image, texts);
}

namespace {

std::vector<std::vector<TokenId>> regularizer_sequences(const RegularizerSpec& spec,
                                                        const TextModel& model,
                                                        const MultiViewDataset& data) {
  if (spec.kind == RegularizerKind::MultiView) {
    require(data.view_count() == 2, ErrorKind::Config,
            "multi-view regularization needs a two-view dataset");
    return pair_sequences(model, data);
  }
  require(!spec.support.empty(), ErrorKind::Config, "class-agnostic regularization has no support classes");
  std::vector<std::vector<TokenId>> tokens;
  for (const auto& s : spec.support) tokens.push_back(s.tokens);
  return class_sequences(model, tokens);
}

}  // namespace

Regularizer::Regularizer(RegularizerSpec spec, const TextModel& model, const MultiViewDataset& data,
                         std::size_t own_view)
    : spec_(std::move(spec)),
      model_(&model),
      data_(&data),
      own_view_(own_view),
      prompted_(model, regularizer_sequences(spec_, model, data), true),
      frozen_(TextBank(model, regularizer_sequences(spec_, model, data), false).encode({})) {
  require(own_view < data.view_count(), ErrorKind::Config, "regularizer: own view out of range");
  if (spec_.kind == RegularizerKind::MultiView) {
    const std::size_t n_other = data.views[1 - own_view].size();
    k_ = spec_.k == 0 ? std::min<std::size_t>(n_other, 16) : std::min(spec_.k, n_other);
    require(k_ >= 2, ErrorKind::Config, "multi-view regularization needs k >= 2 candidate labels");
  } else {
    k_ = spec_.support.size();
  }
}

std::vector<std::size_t> Regularizer::sample_other(std::size_t row, std::uint64_t epoch) const {
  const std::size_t n_other = data_->views[1 - own_view_].size();
  std::vector<std::size_t> labels(n_other);
  std::iota(labels.begin(), labels.end(), std::size_t{0});
  if (k_ < n_other) {
    Rng rng(derive_seed(spec_.seed, epoch, row));
    for (std::size_t i = 0; i < k_; ++i) {
      const auto j = i + static_cast<std::size_t>(uniform_index(rng, n_other - i));
      std::swap(labels[i], labels[j]);
    }
    labels.resize(k_);
    std::sort(labels.begin(), labels.end());
  }
  return labels;
}

CandidateSets Regularizer::candidates(std::span<const std::size_t> rows, std::uint64_t epoch) const {
  CandidateSets sets;
  std::vector<std::size_t> texts;
  for (std::size_t row : rows) {
    require(row < data_->size(), ErrorKind::Dimension, "regularizer: image row out of range");
    texts.clear();
    if (spec_.kind == RegularizerKind::MultiView) {
      const std::size_t own = data_->label(row, own_view_);
      for (std::size_t other : sample_other(row, epoch))
        texts.push_back(own_view_ == 0 ? data_->pair_index(own, other) : data_->pair_index(other, own));
    } else {
      texts.resize(frozen_.unit.rows());
      std::iota(texts.begin(), texts.end(), std::size_t{0});
    }
    const auto image = data_->features.row(row);
    std::size_t best = 0;
    double best_sim = dot(image, frozen_.unit.row(texts[0]));
    for (std::size_t c = 1; c < texts.size(); ++c) {
      const double sim = dot(image, frozen_.unit.row(texts[c]));
      if (sim > best_sim) {
        best_sim = sim;
        best = c;
      }
    }
    sets.add(texts, best);
  }
  return sets;
}

RegularizerTerm Regularizer::evaluate(std::span<const double> prompt, std::span<const std::size_t> rows,
                                      std::uint64_t epoch, double scale, Exec exec) const {
  const auto sets = candidates(rows, epoch);
  const auto features = prompted_.encode(prompt);
  const auto ce = candidate_cross_entropy(data_->features, rows, sets, features.unit, scale, exec);
  RegularizerTerm term;
  term.loss = ce.loss;
  term.grad = prompted_.prompt_gradient(features, ce.text_grad, exec);
  term.agree = ce.correct;
  term.images = rows.size();
  return term;
}

double Regularizer::agreement(std::span<const double> prompt, std::span<const std::size_t> rows,
                              std::uint64_t epoch) const {
  require(!rows.empty(), ErrorKind::Input, "regularizer agreement: no rows");
  const auto sets = candidates(rows, epoch);
  const auto features = prompted_.encode(prompt);
  const auto ce = candidate_cross_entropy(data_->features, rows, sets, features.unit, 1.0);
  return static_cast<double>(ce.correct) / static_cast<double>(rows.size());
}

}  // namespace palg
