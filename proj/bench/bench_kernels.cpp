#include <benchmark/benchmark.h>

#include <numeric>

#include "palg/kernels.hpp"
#include "palg/random.hpp"

namespace {

palg::Matrix random_unit_rows(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  palg::Rng rng(seed);
  palg::Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    auto r = m.row(i);
    for (auto& x : r) x = palg::standard_normal(rng);
    const double n = palg::norm(r);
    for (auto& x : r) x /= n;
  }
  return m;
}

struct Problem {
  palg::Matrix images;
  palg::Matrix texts;
  std::vector<std::size_t> rows;
  palg::CandidateSets sets;
};

Problem make_problem(std::size_t n_images, std::size_t n_texts, std::size_t dim) {
  Problem p{random_unit_rows(n_images, dim, 1), random_unit_rows(n_texts, dim, 2), {}, {}};
  p.rows.resize(n_images);
  std::iota(p.rows.begin(), p.rows.end(), 0);
  std::vector<std::size_t> all(n_texts);
  std::iota(all.begin(), all.end(), 0);
  for (std::size_t n = 0; n < n_images; ++n) p.sets.add(all, n % n_texts);
  return p;
}

template <palg::Exec E>
void BM_CrossEntropy(benchmark::State& state) {
  const auto p = make_problem(static_cast<std::size_t>(state.range(0)), 48, 64);
  for (auto _ : state) {
    auto r = palg::candidate_cross_entropy(p.images, p.rows, p.sets, p.texts, 100.0, E);
    benchmark::DoNotOptimize(r.loss);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <palg::Exec E>
void BM_ScoreTable(benchmark::State& state) {
  const auto p = make_problem(static_cast<std::size_t>(state.range(0)), 48, 64);
  for (auto _ : state) {
    auto t = palg::score_table(p.images, p.rows, p.texts, 100.0, E);
    benchmark::DoNotOptimize(t.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <palg::Exec E>
void BM_ColumnSums(benchmark::State& state) {
  const auto m = random_unit_rows(static_cast<std::size_t>(state.range(0)), 64, 3);
  for (auto _ : state) {
    auto s = palg::column_sums(m, E);
    benchmark::DoNotOptimize(s.data());
  }
}

}  // namespace

BENCHMARK_TEMPLATE(BM_CrossEntropy, palg::Exec::Serial)->Arg(512)->Arg(4096);
BENCHMARK_TEMPLATE(BM_CrossEntropy, palg::Exec::Parallel)->Arg(512)->Arg(4096);
BENCHMARK_TEMPLATE(BM_ScoreTable, palg::Exec::Serial)->Arg(512)->Arg(4096);
BENCHMARK_TEMPLATE(BM_ScoreTable, palg::Exec::Parallel)->Arg(512)->Arg(4096);
BENCHMARK_TEMPLATE(BM_ColumnSums, palg::Exec::Serial)->Arg(4096);
BENCHMARK_TEMPLATE(BM_ColumnSums, palg::Exec::Parallel)->Arg(4096);

BENCHMARK_MAIN();
