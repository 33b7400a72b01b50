#include <cmath>
#include <numeric>

#include "doctest.h"
#include "oracles.hpp"
#include "palg/error.hpp"
#include "palg/linalg.hpp"
#include "test_util.hpp"

using namespace palg;
using testutil::kind_of;

namespace {

Matrix reconstruct(const EigenDecomposition& e) {
  const std::size_t n = e.values.size();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += e.vectors(i, k) * e.values[k] * e.vectors(j, k);
      out(i, j) = s;
    }
  return out;
}

double frob_diff(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) s += std::pow(a.data()[i] - b.data()[i], 2);
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("sym_eig on a diagonal matrix") {
  Matrix m(2, 2, std::vector<double>{2, 0, 0, 1});
  const auto e = sym_eig(m);
  CHECK(e.values[0] == doctest::Approx(2.0));
  CHECK(e.values[1] == doctest::Approx(1.0));
  CHECK(e.vectors == Matrix::identity(2));
}

TEST_CASE("sym_eig on the 2x2 swap matrix") {
  Matrix m(2, 2, std::vector<double>{0, 1, 1, 0});
  const auto e = sym_eig(m);
  CHECK(e.values[0] == doctest::Approx(1.0));
  CHECK(e.values[1] == doctest::Approx(-1.0));
  const double r = 1.0 / std::sqrt(2.0);
  CHECK(e.vectors(0, 0) == doctest::Approx(r));
  CHECK(e.vectors(1, 0) == doctest::Approx(r));
  // Sign convention makes the first largest entry positive.
  CHECK(e.vectors(0, 1) == doctest::Approx(r));
  CHECK(e.vectors(1, 1) == doctest::Approx(-r));
}

TEST_CASE("sym_eig reconstructs random symmetric matrices") {
  Rng rng(7);
  for (std::size_t n = 1; n <= 16; ++n) {
    const Matrix m = oracle::random_symmetric(n, rng);
    const auto e = sym_eig(m);
    CHECK(frob_diff(reconstruct(e), m) <= 1e-7 * frobenius_norm(m));
    CHECK(std::is_sorted(e.values.rbegin(), e.values.rend()));
    const Matrix qtq = multiply(e.vectors.transpose(), e.vectors);
    CHECK(frob_diff(qtq, Matrix::identity(n)) <= 1e-10 * static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = e.vectors(i, k);
      const auto mv = matvec(m, v);
      for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(mv[i] - e.values[k] * v[i]) <= 1e-7 * frobenius_norm(m));
    }
  }
}

TEST_CASE("sym_eig keeps index order for equal eigenvalues") {
  const auto e = sym_eig(Matrix::identity(4));
  CHECK(e.vectors == Matrix::identity(4));
}

TEST_CASE("sym_eig rejects bad input") {
  CHECK(kind_of([] { sym_eig(Matrix(2, 3)); }) == ErrorKind::Dimension);
  CHECK(kind_of([] { sym_eig(Matrix(2, 2, std::vector<double>{1, 2, 0, 1})); }) == ErrorKind::Dimension);
  CHECK(kind_of([] { sym_eig(Matrix(2, 2, std::vector<double>{NAN, 0, 0, 1})); }) == ErrorKind::Numeric);
}

TEST_CASE("spectral_basis hand examples") {
  const Matrix vocab(2, 2, std::vector<double>{2, 0, 0, 1});
  const auto b90 = spectral_basis(vocab, 0.9);
  CHECK(b90.m == 2);
  const auto b75 = spectral_basis(vocab, 0.75);
  CHECK(b75.m == 1);
  CHECK(b75.basis(0, 0) == doctest::Approx(1.0));
  CHECK(b75.basis(1, 0) == doctest::Approx(0.0));
  CHECK(b75.eigenvalues[0] == doctest::Approx(4.0));
  CHECK(b75.eigenvalues[1] == doctest::Approx(1.0));

  Rng rng(3);
  const auto full = spectral_basis(oracle::random_matrix(12, 6, rng), 1.0);
  CHECK(full.m == 6);
  CHECK(kind_of([&] { spectral_basis(vocab, 0.0); }) == ErrorKind::Config);
  CHECK(kind_of([&] { spectral_basis(vocab, 1.5); }) == ErrorKind::Config);
}

TEST_CASE("spectral_basis picks the minimal count") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 2 + static_cast<std::size_t>(uniform_index(rng, 12));
    const Matrix vocab = oracle::random_matrix(3 * d, d, rng);
    const double energy = 0.5 + 0.5 * uniform01(rng);
    const auto b = spectral_basis(vocab, energy);
    // Eigenvalues from the oracle reconstruction of VᵀV.
    const Matrix g = gram(vocab);
    double total = 0.0;
    for (std::size_t i = 0; i < d; ++i) total += g(i, i);
    double kept = 0.0;
    for (std::size_t i = 0; i < b.m; ++i) kept += b.eigenvalues[i];
    CHECK(kept >= energy * total * (1 - 1e-12));
    CHECK(kept - b.eigenvalues[b.m - 1] < energy * total);
    const Matrix btb = multiply(b.basis.transpose(), b.basis);
    CHECK(frob_diff(btb, Matrix::identity(b.m)) <= 1e-8);
  }
}

TEST_CASE("project hand examples and properties") {
  const auto axis = spectral_basis(Matrix(2, 2, std::vector<double>{2, 0, 0, 1}), 0.75);
  const auto p = project(axis, std::vector<double>{3, 4});
  CHECK(p[0] == doctest::Approx(3.0));
  CHECK(p[1] == doctest::Approx(0.0));
  CHECK(kind_of([&] { project(axis, std::vector<double>{1, 2, 3}); }) == ErrorKind::Dimension);

  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 3 + static_cast<std::size_t>(uniform_index(rng, 20));
    const auto b = spectral_basis(oracle::random_matrix(d + 4, d, rng), 0.8);
    std::vector<double> x(d);
    for (auto& v : x) v = standard_normal(rng);
    const auto px = project(b, x);
    const auto ppx = project(b, px);
    CHECK(oracle::max_abs_diff(px, ppx) <= 1e-9 * norm(x));
    CHECK(norm(px) <= norm(x) + 1e-9);
    // A vector built from basis columns is left unchanged.
    std::vector<double> in_span(d, 0.0);
    for (std::size_t k = 0; k < b.m; ++k)
      for (std::size_t i = 0; i < d; ++i) in_span[i] += (k + 1.0) * b.basis(i, k);
    CHECK(oracle::max_abs_diff(project(b, in_span), in_span) <= 1e-9 * norm(in_span));
  }
}

TEST_CASE("basis fingerprint tracks the subspace") {
  Rng rng(9);
  const Matrix vocab = oracle::random_matrix(20, 8, rng);
  const auto a = spectral_basis(vocab, 0.9);
  const auto b = spectral_basis(vocab, 0.9);
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.fingerprint() != 0);
  const auto c = spectral_basis(vocab, 0.5);
  if (c.m != a.m) {
    CHECK(a.fingerprint() != c.fingerprint());
  }
}

TEST_CASE("pairwise_sum matches a long double accumulation") {
  Rng rng(1);
  for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 100u, 1001u}) {
    std::vector<double> v(n);
    long double ref = 0.0L;
    for (auto& x : v) {
      x = standard_normal(rng);
      ref += x;
    }
    CHECK(pairwise_sum(v) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-12));
  }
}

TEST_CASE("orthonormalize_columns yields orthonormal columns spanning the input") {
  Rng rng(2);
  const Matrix a = oracle::random_matrix(10, 4, rng);
  const Matrix q = orthonormalize_columns(a);
  CHECK(frob_diff(multiply(q.transpose(), q), Matrix::identity(4)) <= 1e-12);
  // Each input column is reproduced by its projection onto span(Q).
  for (std::size_t c = 0; c < 4; ++c) {
    std::vector<double> col(10);
    for (std::size_t i = 0; i < 10; ++i) col[i] = a(i, c);
    const auto coeff = matvec_transposed(q, col);
    const auto back = matvec(q, coeff);
    CHECK(oracle::max_abs_diff(back, col) <= 1e-10);
  }
}
