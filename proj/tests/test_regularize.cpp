#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "references.hpp"
#include "palg/data.hpp"
#include "palg/regularize.hpp"
#include "palg/tuning.hpp"
#include "test_util.hpp"

using namespace palg;
using testutil::kind_of;
using oracle::ca_spec;
using oracle::mv_spec;
using oracle::oracle_term;

TEST_CASE("pseudo_label examples") {
  const TextModel m = testutil::model_from_rows(Matrix::identity(5));
  std::vector<TextInput> cands;
  for (TokenId t = 0; t < 5; ++t) cands.push_back({{}, std::nullopt, {t}});
  CHECK(pseudo_label(std::vector<double>{0, 0, 0, 1, 0}, cands, m) == 3);
  CHECK(pseudo_label(std::vector<double>{0, 0, 0, 1, 0}, std::span(cands).first(1), m) == 0);
  cands[2].prompt = std::vector<double>(5, 0.0);
  CHECK(kind_of([&] { pseudo_label(std::vector<double>{1, 0, 0, 0, 0}, cands, m); }) == ErrorKind::Contract);
}

TEST_CASE("regularizer losses and gradients match the oracle") {
  Rng rng(31);
  int configs = 0;
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    SyntheticSpec s;
    s.d = 24;
    s.n_objects = 4 + seed % 3;
    s.n_attributes = 3 + seed % 3;
    s.samples_per_pair = 2;
    s.noise_sigma = 0.1 + 0.2 * static_cast<double>(seed % 3);
    s.orthogonal_encoder = seed % 4 == 3;
    s.seed = seed;
    const auto b = generate_synthetic(s);
    const std::size_t own = seed % 2;
    const bool ca = seed % 2 == 0;
    const Regularizer reg(ca ? ca_spec(b.model) : mv_spec(2 + seed % 3, seed), b.model, b.dataset, own);
    const auto rows = b.dataset.rows(Split::Train);
    const double scale = std::vector<double>{1.0, 10.0, 30.0}[seed % 3];
    std::vector<double> v(s.d);
    for (auto& x : v) x = 0.5 * standard_normal(rng);

    const auto term = reg.evaluate(v, rows, 0, scale);
    const auto want = oracle_term(reg, b, own, rows, v, scale);
    CHECK(term.loss >= 0.0);
    CHECK(term.loss == doctest::Approx(want.loss).epsilon(1e-10));
    const auto sets = reg.candidates(rows, 0);
    CHECK(sets.targets == want.pseudo);
    const auto fd = oracle::fd_gradient(
        [&](const std::vector<double>& x) { return oracle_term(reg, b, own, rows, x, scale).loss; }, v, 1e-4);
    CHECK(oracle::gradient_rel_error(term.grad, fd) <= 1e-4);
    CHECK(reg.evaluate(v, rows, 0, scale, Exec::Serial).grad == term.grad);
    ++configs;
  }
  CHECK(configs >= 10);
}

TEST_CASE("a zero prompt agrees with the prompt-free ranking") {
  SyntheticSpec s;
  s.noise_sigma = 0.5;
  const auto b = generate_synthetic(s);
  const auto rows = b.dataset.rows(Split::Train);
  const std::vector<double> zero(s.d, 0.0);
  for (const auto& spec : {ca_spec(b.model), mv_spec(0, 1)}) {
    const Regularizer reg(spec, b.model, b.dataset, 0);
    CHECK(reg.agreement(zero, rows) == 1.0);
    const auto term = reg.evaluate(zero, rows, 0, 100.0);
    CHECK(term.agree == rows.size());
    CHECK(term.loss == doctest::Approx(oracle_term(reg, b, 0, rows, zero, 100.0).loss).epsilon(1e-10));
  }
}

TEST_CASE("zero-noise multi-view pseudo labels recover the other view") {
  SyntheticSpec s;
  const auto b = generate_synthetic(s);
  const auto rows = b.dataset.rows(Split::Train);
  const Regularizer reg(mv_spec(0, 0), b.model, b.dataset, 0);
  CHECK(reg.k() == s.n_attributes);
  const auto sets = reg.candidates(rows, 3);
  for (std::size_t n = 0; n < rows.size(); ++n) {
    const std::size_t pair = sets.candidates[sets.offsets[n] + sets.targets[n]];
    CHECK(pair == b.dataset.pair_of(rows[n]));
  }
}

TEST_CASE("uniform candidates give ln k") {
  // Two attributes share a token, so each pair of MV candidates is identical.
  SyntheticSpec s;
  s.n_attributes = 2;
  s.unseen_fraction = 0.0;
  auto b = generate_synthetic(s);
  b.dataset.views[1].class_token_ids[1] = b.dataset.views[1].class_token_ids[0];
  const Regularizer mv(mv_spec(2, 0), b.model, b.dataset, 0);
  const auto rows = b.dataset.rows(Split::Train);
  std::vector<double> v(s.d, 0.1);
  CHECK(mv.evaluate(v, rows, 0, 100.0).loss == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  // An image orthogonal to every support text scores them all at zero.
  TextModel m = testutil::model_from_rows(Matrix::identity(10));
  const Regularizer& unused = mv;
  (void)unused;
  RegularizerSpec ca;
  ca.kind = RegularizerKind::ClassAgnostic;
  for (TokenId t = 0; t < 8; ++t) ca.support.push_back({"s" + std::to_string(t), {t}});
  MultiViewDataset ds;
  ds.features = Matrix(1, 10);
  ds.features(0, 9) = 1.0;
  ds.views = {{"v", {"a"}, {{0}}}};
  ds.labels = {0};
  ds.split = {Split::Test};
  ds.sample_ids = {"x"};
  const Regularizer creg(ca, m, ds, 0);
  std::vector<double> p(10, 0.0);
  p[3] = 0.7;
  // The prompt moves every support text equally off the image, logits stay 0.
  CHECK(creg.evaluate(p, std::vector<std::size_t>{0}, 0, 100.0).loss == doctest::Approx(std::log(8.0)).epsilon(1e-14));
}

TEST_CASE("pseudo labels do not depend on the prompt") {
  SyntheticSpec s;
  s.noise_sigma = 0.4;
  const auto b = generate_synthetic(s);
  const auto rows = b.dataset.rows(Split::Train);
  const Regularizer reg(mv_spec(3, 4), b.model, b.dataset, 1);
  const auto before = reg.candidates(rows, 2);
  TrainConfig c;
  c.reg = reg.spec();
  c.epochs = 3;
  c.batch_size = 64;
  const auto r = train_prompt(b.dataset, 1, c, b.model, nullptr);
  (void)r;
  const auto after = reg.candidates(rows, 2);
  CHECK(before.targets == after.targets);
  CHECK(before.candidates == after.candidates);
  // Resampling for another epoch changes the candidates but keeps them sorted and distinct.
  const auto other = reg.candidates(rows, 5);
  CHECK_FALSE(other.candidates == before.candidates);
  for (std::size_t n = 0; n < rows.size(); ++n)
    for (std::size_t k = other.offsets[n] + 1; k < other.offsets[n + 1]; ++k)
      CHECK(other.candidates[k - 1] < other.candidates[k]);
}

TEST_CASE("regularizer configuration errors") {
  SyntheticSpec s;
  const auto b = generate_synthetic(s);
  CHECK(kind_of([&] { resolve_support(b.model.vocab, std::vector<std::string>{"unicorn"}); }) == ErrorKind::Config);
  CHECK(kind_of([&] { resolve_support(b.model.vocab, std::vector<std::string>{}); }) == ErrorKind::Config);
  s.n_attributes = 0;
  const auto single = generate_synthetic(s);
  CHECK(kind_of([&] { Regularizer(mv_spec(2, 0), single.model, single.dataset, 0); }) == ErrorKind::Config);
  s = {};
  s.n_attributes = 1;
  s.unseen_fraction = 0.0;
  const auto narrow = generate_synthetic(s);
  CHECK(kind_of([&] { Regularizer(mv_spec(0, 0), narrow.model, narrow.dataset, 0); }) == ErrorKind::Config);
}

TEST_CASE("support overlap is reported") {
  SyntheticSpec s;
  auto b = generate_synthetic(s);
  auto spec = ca_spec(b.model);
  CHECK(support_overlap(spec, b.dataset).empty());
  b.dataset.views[0].class_names[2] = "animal";
  CHECK(support_overlap(spec, b.dataset) == std::vector<std::string>{"animal"});
}
