#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace palg {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  Matrix transpose() const;
  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix multiply(const Matrix& a, const Matrix& b);
// aᵀ·a, the d×d correlation of the rows of a.
Matrix gram(const Matrix& a);
double frobenius_norm(const Matrix& m);

double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
// y = M·x
std::vector<double> matvec(const Matrix& m, std::span<const double> x);
// y = Mᵀ·x
std::vector<double> matvec_transposed(const Matrix& m, std::span<const double> x);
// y += alpha·x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// Pairwise (cascade) summation. The tree shape depends only on the length, so
// the result is reproducible regardless of how the inputs were produced.
double pairwise_sum(std::span<const double> values);

struct EigenDecomposition {
  std::vector<double> values;  // descending
  Matrix vectors;              // column j pairs with values[j]
};

// Cyclic Jacobi eigensolver for real symmetric matrices.
EigenDecomposition sym_eig(const Matrix& m);

// Orthonormalizes the columns of a (rows ≥ cols) by modified Gram-Schmidt.
Matrix orthonormalize_columns(const Matrix& a);

struct ProjectionBasis {
  std::size_t ambient_dim = 0;
  std::size_t m = 0;
  Matrix basis;                      // ambient_dim × m, orthonormal columns
  std::vector<double> eigenvalues;   // all ambient_dim of them, descending
  double energy_fraction = 1.0;

  // Stable 64-bit hash of the retained subspace; never 0.
  std::uint64_t fingerprint() const;
  double retained_energy() const;
};

// Top eigenvectors of vocabᵀ·vocab holding at least `energy` of the spectral mass.
ProjectionBasis spectral_basis(const Matrix& vocab, double energy);

// E·(Eᵀ·x)
std::vector<double> project(const ProjectionBasis& basis, std::span<const double> x);

}  // namespace palg
