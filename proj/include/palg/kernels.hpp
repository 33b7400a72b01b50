#pragma once

// Data-parallel scoring kernels. Every kernel has a serial reference in
// palg::serial and an OpenMP version in palg::omp; both perform the same
// floating-point operations in the same order per output element, so their
// results are bit-identical for any thread count.

#include <cstddef>
#include <span>
#include <vector>

#include "palg/linalg.hpp"

namespace palg {

enum class Exec { Serial, Parallel };

// Per-image candidate lists in CSR form. Image n scores the texts
// candidates[offsets[n] .. offsets[n+1]) and its target is the position
// targets[n] inside that range.
struct CandidateSets {
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> candidates;
  std::vector<std::size_t> targets;

  std::size_t images() const noexcept { return targets.size(); }
  void add(std::span<const std::size_t> texts, std::size_t target);
};

struct CrossEntropyResult {
  double loss = 0.0;           // mean over images
  std::size_t correct = 0;     // images whose argmax equals the target
  std::vector<double> per_image_loss;
  Matrix text_grad;            // dLoss/dTextFeature, one row per text
};

// Mean softmax cross-entropy over scale·(image·text) logits.
// `image_rows[n]` selects the feature row of image n.
CrossEntropyResult candidate_cross_entropy(const Matrix& images,
                                           std::span<const std::size_t> image_rows,
                                           const CandidateSets& sets, const Matrix& texts,
                                           double scale, Exec exec = Exec::Parallel);

// scale·(image·text) for every selected image against every text.
Matrix score_table(const Matrix& images, std::span<const std::size_t> image_rows,
                   const Matrix& texts, double scale, Exec exec = Exec::Parallel);

// Column sums with a fixed pairwise tree per column.
std::vector<double> column_sums(const Matrix& rows, Exec exec = Exec::Parallel);

namespace serial {
CrossEntropyResult candidate_cross_entropy(const Matrix& images,
                                           std::span<const std::size_t> image_rows,
                                           const CandidateSets& sets, const Matrix& texts,
                                           double scale);
Matrix score_table(const Matrix& images, std::span<const std::size_t> image_rows,
                   const Matrix& texts, double scale);
std::vector<double> column_sums(const Matrix& rows);
}  // namespace serial

namespace omp {
CrossEntropyResult candidate_cross_entropy(const Matrix& images,
                                           std::span<const std::size_t> image_rows,
                                           const CandidateSets& sets, const Matrix& texts,
                                           double scale);
Matrix score_table(const Matrix& images, std::span<const std::size_t> image_rows,
                   const Matrix& texts, double scale);
std::vector<double> column_sums(const Matrix& rows);
}  // namespace omp

namespace detail {
// Shared per-element work so the two back ends cannot drift apart.
void image_softmax(const Matrix& images, std::span<const std::size_t> image_rows,
                   const CandidateSets& sets, const Matrix& texts, double scale,
                   std::size_t n, std::span<double> coef, double& loss, bool& correct);
// Texts → list of (image, coefficient slot) in increasing image order.
struct Transpose {
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> image;
  std::vector<std::size_t> slot;
};
Transpose transpose_sets(const CandidateSets& sets, std::size_t n_texts);
void accumulate_text_grad(const Matrix& images, std::span<const std::size_t> image_rows,
                          const Transpose& tr, std::span<const double> coef, std::size_t t,
                          std::span<double> out);
void finish(CrossEntropyResult& result, const CandidateSets& sets,
            std::span<const std::size_t> image_rows);
}  // namespace detail

}  // namespace palg
