#include <cmath>
#include <sstream>

#include "palg/error.hpp"
#include "palg/kernels.hpp"

namespace palg {

void CandidateSets::add(std::span<const std::size_t> texts, std::size_t target) {
  require(!texts.empty(), ErrorKind::Input, "candidate set is empty");
  require(target < texts.size(), ErrorKind::Input, "candidate target out of range");
  candidates.insert(candidates.end(), texts.begin(), texts.end());
  offsets.push_back(candidates.size());
  targets.push_back(target);
}

namespace {

void check_shapes(const Matrix& images, std::span<const std::size_t> image_rows,
                  const CandidateSets& sets, const Matrix& texts) {
  require(image_rows.size() == sets.images(), ErrorKind::Dimension,
          "candidate sets and image rows differ in length");
  require(!image_rows.empty(), ErrorKind::Input, "cross-entropy batch is empty");
  require(images.cols() == texts.cols(), ErrorKind::Dimension,
          "image and text features differ in dimension");
  for (std::size_t r : image_rows)
    require(r < images.rows(), ErrorKind::Dimension, "image row out of range");
  for (std::size_t c : sets.candidates)
    require(c < texts.rows(), ErrorKind::Dimension, "candidate text out of range");
}

}  // namespace

namespace detail {

void image_softmax(const Matrix& images, std::span<const std::size_t> image_rows,
                   const CandidateSets& sets, const Matrix& texts, double scale,
                   std::size_t n, std::span<double> coef, double& loss, bool& correct) {
  const auto x = images.row(image_rows[n]);
  const std::size_t begin = sets.offsets[n];
  const std::size_t count = sets.offsets[n + 1] - begin;
  const std::size_t target = sets.targets[n];
  auto logit = coef.subspan(begin, count);

  double best = -INFINITY;
  std::size_t arg = 0;
  for (std::size_t c = 0; c < count; ++c) {
    logit[c] = scale * dot(x, texts.row(sets.candidates[begin + c]));
    if (logit[c] > best) {
      best = logit[c];
      arg = c;
    }
  }
  double z = 0.0;
  for (std::size_t c = 0; c < count; ++c) z += std::exp(logit[c] - best);
  const double lse = best + std::log(z);
  loss = lse - logit[target];
  correct = arg == target;

  const double weight = scale / static_cast<double>(sets.images());
  for (std::size_t c = 0; c < count; ++c) {
    const double p = std::exp(logit[c] - lse);
    logit[c] = weight * (p - (c == target ? 1.0 : 0.0));
  }
}

Transpose transpose_sets(const CandidateSets& sets, std::size_t n_texts) {
  Transpose tr;
  tr.offsets.assign(n_texts + 1, 0);
  for (std::size_t c : sets.candidates) ++tr.offsets[c + 1];
  for (std::size_t t = 0; t < n_texts; ++t) tr.offsets[t + 1] += tr.offsets[t];
  tr.image.resize(sets.candidates.size());
  tr.slot.resize(sets.candidates.size());
  std::vector<std::size_t> fill(tr.offsets.begin(), tr.offsets.end() - 1);
  for (std::size_t n = 0; n < sets.images(); ++n)
    for (std::size_t s = sets.offsets[n]; s < sets.offsets[n + 1]; ++s) {
      const std::size_t t = sets.candidates[s];
      tr.image[fill[t]] = n;
      tr.slot[fill[t]] = s;
      ++fill[t];
    }
  return tr;
}

void accumulate_text_grad(const Matrix& images, std::span<const std::size_t> image_rows,
                          const Transpose& tr, std::span<const double> coef, std::size_t t,
                          std::span<double> out) {
  for (std::size_t e = tr.offsets[t]; e < tr.offsets[t + 1]; ++e)
    axpy(coef[tr.slot[e]], images.row(image_rows[tr.image[e]]), out);
}

void finish(CrossEntropyResult& result, const CandidateSets& sets,
            std::span<const std::size_t> image_rows) {
  for (std::size_t n = 0; n < result.per_image_loss.size(); ++n)
    if (!std::isfinite(result.per_image_loss[n])) {
      std::ostringstream msg;
      msg << "non-finite cross-entropy for image row " << image_rows[n];
      fail(ErrorKind::Numeric, msg.str());
    }
  result.loss = pairwise_sum(result.per_image_loss) / static_cast<double>(sets.images());
}

}  // namespace detail

CrossEntropyResult candidate_cross_entropy(const Matrix& images,
                                           std::span<const std::size_t> image_rows,
                                           const CandidateSets& sets, const Matrix& texts,
                                           double scale, Exec exec) {
  check_shapes(images, image_rows, sets, texts);
  return exec == Exec::Serial ? serial::candidate_cross_entropy(images, image_rows, sets, texts, scale)
                              : omp::candidate_cross_entropy(images, image_rows, sets, texts, scale);
}

Matrix score_table(const Matrix& images, std::span<const std::size_t> image_rows,
                   const Matrix& texts, double scale, Exec exec) {
  require(images.cols() == texts.cols(), ErrorKind::Dimension,
          "image and text features differ in dimension");
  for (std::size_t r : image_rows)
    require(r < images.rows(), ErrorKind::Dimension, "image row out of range");
  return exec == Exec::Serial ? serial::score_table(images, image_rows, texts, scale)
                              : omp::score_table(images, image_rows, texts, scale);
}

std::vector<double> column_sums(const Matrix& rows, Exec exec) {
  return exec == Exec::Serial ? serial::column_sums(rows) : omp::column_sums(rows);
}

}  // namespace palg
