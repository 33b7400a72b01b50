#include "palg/kernels.hpp"

namespace palg::serial {

CrossEntropyResult candidate_cross_entropy(const Matrix& images,
                                           std::span<const std::size_t> image_rows,
                                           const CandidateSets& sets, const Matrix& texts,
                                           double scale) {
  const std::size_t n_images = sets.images();
  CrossEntropyResult result;
  result.per_image_loss.resize(n_images);
  std::vector<double> coef(sets.candidates.size());
  for (std::size_t n = 0; n < n_images; ++n) {
    bool hit = false;
    detail::image_softmax(images, image_rows, sets, texts, scale, n, coef,
                          result.per_image_loss[n], hit);
    result.correct += hit ? 1 : 0;
  }
  const auto tr = detail::transpose_sets(sets, texts.rows());
  result.text_grad = Matrix(texts.rows(), texts.cols());
  for (std::size_t t = 0; t < texts.rows(); ++t)
    detail::accumulate_text_grad(images, image_rows, tr, coef, t, result.text_grad.row(t));
  detail::finish(result, sets, image_rows);
  return result;
}

Matrix score_table(const Matrix& images, std::span<const std::size_t> image_rows,
                   const Matrix& texts, double scale) {
  Matrix out(image_rows.size(), texts.rows());
  for (std::size_t n = 0; n < image_rows.size(); ++n) {
    const auto x = images.row(image_rows[n]);
    for (std::size_t t = 0; t < texts.rows(); ++t) out(n, t) = scale * dot(x, texts.row(t));
  }
  return out;
}

std::vector<double> column_sums(const Matrix& rows) {
  std::vector<double> out(rows.cols());
  std::vector<double> column(rows.rows());
  for (std::size_t j = 0; j < rows.cols(); ++j) {
    for (std::size_t i = 0; i < rows.rows(); ++i) column[i] = rows(i, j);
    out[j] = pairwise_sum(column);
  }
  return out;
}

}  // namespace palg::serial
