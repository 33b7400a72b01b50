#include "palg/kernels.hpp"

namespace palg::omp {

CrossEntropyResult candidate_cross_entropy(const Matrix& images,
                                           std::span<const std::size_t> image_rows,
                                           const CandidateSets& sets, const Matrix& texts,
                                           double scale) {
  const auto n_images = static_cast<std::ptrdiff_t>(sets.images());
  CrossEntropyResult result;
  result.per_image_loss.resize(sets.images());
  std::vector<double> coef(sets.candidates.size());
  std::vector<char> hits(sets.images(), 0);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t n = 0; n < n_images; ++n) {
    bool hit = false;
    const auto i = static_cast<std::size_t>(n);
    detail::image_softmax(images, image_rows, sets, texts, scale, i, coef,
                          result.per_image_loss[i], hit);
    hits[i] = hit ? 1 : 0;
  }
  for (char h : hits) result.correct += static_cast<std::size_t>(h);

  const auto tr = detail::transpose_sets(sets, texts.rows());
  result.text_grad = Matrix(texts.rows(), texts.cols());
  const auto n_texts = static_cast<std::ptrdiff_t>(texts.rows());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t t = 0; t < n_texts; ++t) {
    const auto i = static_cast<std::size_t>(t);
    detail::accumulate_text_grad(images, image_rows, tr, coef, i, result.text_grad.row(i));
  }
  detail::finish(result, sets, image_rows);
  return result;
}

Matrix score_table(const Matrix& images, std::span<const std::size_t> image_rows,
                   const Matrix& texts, double scale) {
  Matrix out(image_rows.size(), texts.rows());
  const auto n_rows = static_cast<std::ptrdiff_t>(image_rows.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t n = 0; n < n_rows; ++n) {
    const auto i = static_cast<std::size_t>(n);
    const auto x = images.row(image_rows[i]);
    for (std::size_t t = 0; t < texts.rows(); ++t) out(i, t) = scale * dot(x, texts.row(t));
  }
  return out;
}

std::vector<double> column_sums(const Matrix& rows) {
  std::vector<double> out(rows.cols());
  const auto n_cols = static_cast<std::ptrdiff_t>(rows.cols());
#pragma omp parallel
  {
    std::vector<double> column(rows.rows());
#pragma omp for schedule(static)
    for (std::ptrdiff_t j = 0; j < n_cols; ++j) {
      const auto c = static_cast<std::size_t>(j);
      for (std::size_t i = 0; i < rows.rows(); ++i) column[i] = rows(i, c);
      out[c] = pairwise_sum(column);
    }
  }
  return out;
}

}  // namespace palg::omp
