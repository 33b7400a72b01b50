#include "palg/linalg.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include "palg/error.hpp"

namespace palg {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require(data_.size() == rows_ * cols_, ErrorKind::Dimension,
          "matrix data length does not match rows*cols");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

Matrix multiply(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), ErrorKind::Dimension, "multiply: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

Matrix gram(const Matrix& a) {
  const std::size_t d = a.cols();
  Matrix g(d, d);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto row = a.row(r);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) g(i, j) += row[i] * row[j];
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
  return g;
}

double frobenius_norm(const Matrix& m) { return norm(m.data()); }

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::Dimension, "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

std::vector<double> matvec(const Matrix& m, std::span<const double> x) {
  require(m.cols() == x.size(), ErrorKind::Dimension, "matvec: length mismatch");
  std::vector<double> y(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) y[r] = dot(m.row(r), x);
  return y;
}

std::vector<double> matvec_transposed(const Matrix& m, std::span<const double> x) {
  require(m.rows() == x.size(), ErrorKind::Dimension, "matvec_transposed: length mismatch");
  std::vector<double> y(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) axpy(x[r], m.row(r), y);
  return y;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  require(x.size() == y.size(), ErrorKind::Dimension, "axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

namespace {

void rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
  const double apq = a(p, q);
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  double t;
  if (std::abs(theta) > 1e150) {
    t = 0.5 / theta;
  } else {
    t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  }
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;
  const std::size_t n = a.rows();
  for (std::size_t k = 0; k < n; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double apk = a(p, k);
    const double aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

EigenDecomposition sym_eig(const Matrix& m) {
  require(m.rows() == m.cols(), ErrorKind::Dimension, "sym_eig: matrix is not square");
  require(m.all_finite(), ErrorKind::Numeric, "sym_eig: matrix has non-finite entries");
  const std::size_t n = m.rows();

  double max_abs = 0.0;
  for (double x : m.data()) max_abs = std::max(max_abs, std::abs(x));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-9 * max_abs) {
        std::ostringstream msg;
        msg << "sym_eig: matrix is not symmetric at (" << i << "," << j << ")";
        fail(ErrorKind::Dimension, msg.str());
      }

  Matrix a = m;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i) = 0.5 * (m(i, j) + m(j, i));
  Matrix v = Matrix::identity(n);

  const double target = 1e-12 * frobenius_norm(m);
  constexpr int kMaxSweeps = 100;
  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a) <= target) break;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q)
        if (a(p, q) != 0.0) rotate(a, v, p, q);
  }
  require(sweep < kMaxSweeps, ErrorKind::Numeric, "sym_eig: Jacobi iteration did not converge");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  EigenDecomposition out{std::vector<double>(n), Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.values[j] = a(src, src);
    // Sign convention: the first entry of largest magnitude is positive.
    std::size_t pivot = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(v(k, src)) > std::abs(v(pivot, src))) pivot = k;
    const double sign = v(pivot, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = sign * v(k, src);
  }
  return out;
}

Matrix orthonormalize_columns(const Matrix& a) {
  require(a.rows() >= a.cols(), ErrorKind::Dimension,
          "orthonormalize_columns: more columns than rows");
  Matrix q = a;
  const std::size_t n = a.rows();
  for (std::size_t j = 0; j < a.cols(); ++j) {
    // Two Gram-Schmidt passes keep orthogonality at machine precision.
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t k = 0; k < j; ++k) {
        double proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) proj += q(i, k) * q(i, j);
        for (std::size_t i = 0; i < n; ++i) q(i, j) -= proj * q(i, k);
      }
    double len = 0.0;
    for (std::size_t i = 0; i < n; ++i) len += q(i, j) * q(i, j);
    len = std::sqrt(len);
    require(len > 1e-12, ErrorKind::Numeric, "orthonormalize_columns: rank deficient input");
    for (std::size_t i = 0; i < n; ++i) q(i, j) /= len;
  }
  return q;
}

std::uint64_t ProjectionBasis::fingerprint() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t word) {
    for (int b = 0; b < 8; ++b) {
      h ^= (word >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  mix(ambient_dim);
  mix(m);
  for (double x : basis.data()) mix(std::bit_cast<std::uint64_t>(x));
  return h == 0 ? 1 : h;
}

double ProjectionBasis::retained_energy() const {
  const double total = std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0);
  const double kept = std::accumulate(eigenvalues.begin(),
                                      eigenvalues.begin() + static_cast<std::ptrdiff_t>(m), 0.0);
  return total > 0.0 ? kept / total : 0.0;
}

ProjectionBasis spectral_basis(const Matrix& vocab, double energy) {
  require(energy > 0.0 && energy <= 1.0, ErrorKind::Config,
          "spectral_basis: energy fraction must lie in (0, 1]");
  require(vocab.rows() >= 1 && vocab.cols() >= 1, ErrorKind::Input,
          "spectral_basis: vocabulary is empty");
  auto eig = sym_eig(gram(vocab));
  for (double& lambda : eig.values) lambda = std::max(lambda, 0.0);

  const std::size_t d = vocab.cols();
  const double total = std::accumulate(eig.values.begin(), eig.values.end(), 0.0);
  require(total > 0.0, ErrorKind::Numeric, "spectral_basis: vocabulary has no spectral energy");

  std::size_t m = 0;
  double kept = 0.0;
  while (m < d) {
    kept += eig.values[m];
    ++m;
    if (kept >= energy * total) break;
  }

  ProjectionBasis out;
  out.ambient_dim = d;
  out.m = m;
  out.energy_fraction = energy;
  out.eigenvalues = std::move(eig.values);
  out.basis = Matrix(d, m);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < m; ++j) out.basis(i, j) = eig.vectors(i, j);
  return out;
}

std::vector<double> project(const ProjectionBasis& basis, std::span<const double> x) {
  require(x.size() == basis.ambient_dim, ErrorKind::Dimension,
          "project: vector length does not match basis dimension");
  const auto coeffs = matvec_transposed(basis.basis, x);
  return matvec(basis.basis, coeffs);
}

}  // namespace palg
