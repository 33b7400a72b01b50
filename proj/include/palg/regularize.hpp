#pragma once

// Pseudo-label regularizers. A frozen, prompt-free pass picks the label the
// pretrained model prefers among a candidate set; the prompted model is then
// trained with cross-entropy toward that same label.
//
//  * class-agnostic (CA): candidates are generic support classes,
//    texts [common, v, support_l].
//  * multi-view (MV): candidates are k sampled labels of the other view paired
//    with the image's own label, texts [common, v, attribute, object].

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "palg/data.hpp"
#include "palg/kernels.hpp"
#include "palg/vlm.hpp"

namespace palg {

enum class RegularizerKind { MultiView, ClassAgnostic };

struct SupportClass {
  std::string name;
  std::vector<TokenId> tokens;
};

struct RegularizerSpec {
  RegularizerKind kind = RegularizerKind::ClassAgnostic;
  std::vector<SupportClass> support;  // class-agnostic only
  std::size_t k = 0;                  // multi-view only; 0 = all labels up to 16
  std::uint64_t seed = 0;
};

// Looks up single-token support classes by name.
std::vector<SupportClass> resolve_support(const Vocabulary& vocab, std::span<const std::string> names);

// Support class names that collide with classifier class names. The support
// set should differ from the classifier classes; callers report these.
std::vector<std::string> support_overlap(const RegularizerSpec& spec, const MultiViewDataset& data);

// Nearest prompt-free candidate text; ties go to the lowest index.
std::size_t pseudo_label(std::span<const double> image, std::span<const TextInput> candidates,
                         const TextModel& model);

struct RegularizerTerm {
  double loss = 0.0;        // mean −log p(pseudo label) under the prompted softmax
  std::vector<double> grad; // d loss / d prompt
  std::size_t agree = 0;    // images whose prompted argmax equals the pseudo label
  std::size_t images = 0;
};

class Regularizer {
 public:
  Regularizer(RegularizerSpec spec, const TextModel& model, const MultiViewDataset& data,
              std::size_t own_view);

  const RegularizerSpec& spec() const noexcept { return spec_; }
  std::size_t k() const noexcept { return k_; }

  // Candidate texts and pseudo-label target for each row. Sampling for MV is
  // seeded by (spec seed, epoch, row).
  CandidateSets candidates(std::span<const std::size_t> rows, std::uint64_t epoch) const;

  RegularizerTerm evaluate(std::span<const double> prompt, std::span<const std::size_t> rows,
                           std::uint64_t epoch, double scale, Exec exec = Exec::Parallel) const;

  // Fraction of rows where the prompted argmax equals the prompt-free one.
  double agreement(std::span<const double> prompt, std::span<const std::size_t> rows,
                   std::uint64_t epoch = 0) const;

 private:
  std::vector<std::size_t> sample_other(std::size_t row, std::uint64_t epoch) const;

  RegularizerSpec spec_;
  const TextModel* model_;
  const MultiViewDataset* data_;
  std::size_t own_view_;
  std::size_t k_ = 0;
  TextBank prompted_;
  TextFeatures frozen_;
};

}  // namespace palg
