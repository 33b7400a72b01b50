#include "palg/data.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "palg/error.hpp"
#include "palg/random.hpp"

namespace palg {

std::size_t MultiViewDataset::find_view(std::string_view name) const {
  for (std::size_t v = 0; v < views.size(); ++v)
    if (views[v].view_name == name) return v;
  fail(ErrorKind::Config, "dataset has no view named '" + std::string(name) + "'");
}

std::vector<std::size_t> MultiViewDataset::rows(Split which) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size(); ++i)
    if (split[i] == which) out.push_back(i);
  return out;
}

void MultiViewDataset::validate(const Vocabulary& vocab) const {
  const std::size_t n = size();
  require(views.size() == 1 || views.size() == 2, ErrorKind::Input,
          "dataset must have one or two views");
  require(features.cols() == vocab.dim(), ErrorKind::Dimension,
          "image feature dimension does not match vocabulary dimension");
  require(labels.size() == n * views.size() && split.size() == n && sample_ids.size() == n,
          ErrorKind::Dimension, "dataset labels, split tags and ids must cover every image");
  for (const auto& view : views) {
    require(!view.class_names.empty(), ErrorKind::Input, "view '" + view.view_name + "' has no classes");
    require(view.class_token_ids.size() == view.class_names.size(), ErrorKind::Input,
            "view '" + view.view_name + "' class tokens do not match class names");
    std::set<std::string_view> names;
    for (std::size_t c = 0; c < view.size(); ++c) {
      require(names.insert(view.class_names[c]).second, ErrorKind::Input,
              "duplicate class '" + view.class_names[c] + "' in view '" + view.view_name + "'");
      require(!view.class_token_ids[c].empty(), ErrorKind::Input,
              "class '" + view.class_names[c] + "' has no tokens");
      for (TokenId id : view.class_token_ids[c])
        require(id < vocab.size(), ErrorKind::Input,
                "class '" + view.class_names[c] + "' references a token outside the vocabulary");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t v = 0; v < views.size(); ++v)
      require(label(i, v) < views[v].size(), ErrorKind::Input,
              "label out of range for image '" + sample_ids[i] + "'");
    require(std::abs(norm(features.row(i)) - 1.0) <= 1e-6, ErrorKind::Input,
            "image feature '" + sample_ids[i] + "' is not unit norm");
  }
  if (views.size() == 2) {
    require(pair_seen.size() == views[0].size() * views[1].size(), ErrorKind::Dimension,
            "seen-pair mask has the wrong size");
    for (std::size_t i = 0; i < n; ++i)
      require(split[i] != Split::Train || image_pair_seen(i), ErrorKind::Input,
              "training image '" + sample_ids[i] + "' belongs to an unseen pair");
  }
  require(std::find(split.begin(), split.end(), Split::Test) != split.end(), ErrorKind::Input,
          "dataset has no test images");
}

void SyntheticSpec::validate() const {
  const std::size_t needed = n_objects + n_attributes + default_common_template().size();
  if (d < needed) {
    std::ostringstream msg;
    msg << "synthetic spec: d=" << d << " cannot hold " << needed
        << " orthogonal concept and template directions";
    fail(ErrorKind::Config, msg.str());
  }
  require(n_objects >= 1, ErrorKind::Config, "synthetic spec: n_objects must be at least 1");
  require(samples_per_pair >= 1, ErrorKind::Config, "synthetic spec: samples_per_pair must be at least 1");
  require(noise_sigma >= 0.0, ErrorKind::Config, "synthetic spec: noise_sigma must be non-negative");
  require(alpha != 0.0 || beta != 0.0, ErrorKind::Config, "synthetic spec: alpha and beta are both zero");
  require(unseen_fraction >= 0.0 && unseen_fraction < 1.0, ErrorKind::Config,
          "synthetic spec: unseen_fraction must lie in [0, 1)");
  require(test_fraction > 0.0 && test_fraction < 1.0, ErrorKind::Config,
          "synthetic spec: test_fraction must lie in (0, 1)");
}

namespace {

enum Stream : std::uint64_t { kDirections = 1, kSupport, kDistractors, kPairs, kSamples, kNoise };

std::vector<double> unit_gaussian(Rng& rng, std::size_t d) {
  std::vector<double> v(d);
  for (double& x : v) x = standard_normal(rng);
  const double len = norm(v);
  for (double& x : v) x /= len;
  return v;
}

// Marks pairs unseen so that every object and attribute keeps a seen pair.
std::vector<bool> choose_seen_pairs(const SyntheticSpec& spec) {
  const std::size_t no = spec.n_objects;
  const std::size_t na = spec.n_attributes;
  const std::size_t total = no * na;
  const auto unseen = static_cast<std::size_t>(std::llround(spec.unseen_fraction * static_cast<double>(total)));
  Rng rng(derive_seed(spec.seed, kPairs));
  std::vector<std::size_t> order(total);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(std::span<std::size_t>(order), rng);
    std::vector<bool> seen(total, true);
    for (std::size_t k = 0; k < unseen; ++k) seen[order[k]] = false;
    bool covered = true;
    for (std::size_t o = 0; o < no && covered; ++o) {
      bool any = false;
      for (std::size_t a = 0; a < na; ++a) any = any || seen[o * na + a];
      covered = any;
    }
    for (std::size_t a = 0; a < na && covered; ++a) {
      bool any = false;
      for (std::size_t o = 0; o < no; ++o) any = any || seen[o * na + a];
      covered = any;
    }
    if (covered) return seen;
  }
  fail(ErrorKind::Config, "synthetic spec: unseen_fraction leaves some class without a seen pair");
}

}  // namespace

SyntheticBundle generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t d = spec.d;
  const std::size_t no = spec.n_objects;
  const std::size_t na = spec.n_attributes;
  const auto& common = default_common_template();
  const auto& support = default_support_classes();

  Rng dir_rng(derive_seed(spec.seed, kDirections));
  Matrix draws(d, no + na + common.size());
  for (double& x : draws.data()) x = standard_normal(dir_rng);
  const Matrix q = orthonormalize_columns(draws);

  SyntheticBundle out;
  TextModel& model = out.model;
  model.encoder = spec.orthogonal_encoder ? TextEncoder::orthogonal(d, spec.seed)
                                          : TextEncoder::identity();

  std::vector<std::vector<double>> rows;
  auto add_token = [&](std::string name, std::vector<double> embedding) {
    model.vocab.token_names.push_back(std::move(name));
    rows.push_back(std::move(embedding));
    return static_cast<TokenId>(rows.size() - 1);
  };
  auto column = [&](std::size_t c) {
    std::vector<double> v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = q(i, c);
    return v;
  };

  for (std::size_t w = 0; w < common.size(); ++w)
    model.common_tokens.push_back(add_token(common[w], column(no + na + w)));

  ViewLabelSpace objects{"object", {}, {}};
  for (std::size_t o = 0; o < no; ++o) {
    objects.class_names.push_back("obj" + std::to_string(o));
    objects.class_token_ids.push_back({add_token(objects.class_names.back(), column(o))});
  }
  ViewLabelSpace attributes{"attribute", {}, {}};
  for (std::size_t a = 0; a < na; ++a) {
    attributes.class_names.push_back("attr" + std::to_string(a));
    attributes.class_token_ids.push_back({add_token(attributes.class_names.back(), column(no + a))});
  }

  Rng support_rng(derive_seed(spec.seed, kSupport));
  for (const auto& name : support) add_token(name, unit_gaussian(support_rng, d));

  Rng distractor_rng(derive_seed(spec.seed, kDistractors));
  const double distractor_scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t t = 0; t < spec.distractor_tokens; ++t) {
    std::vector<double> v(d);
    for (double& x : v) x = distractor_scale * standard_normal(distractor_rng);
    add_token("tok" + std::to_string(t), std::move(v));
  }

  model.vocab.embeddings = Matrix(rows.size(), d);
  for (std::size_t r = 0; r < rows.size(); ++r)
    std::copy(rows[r].begin(), rows[r].end(), model.vocab.embeddings.row(r).begin());

  // Concept directions as seen by the image side: W applied to the token directions.
  GroundTruth& truth = out.truth;
  truth.object_directions = Matrix(no, d);
  truth.attribute_directions = Matrix(na, d);
  for (std::size_t o = 0; o < no; ++o) {
    const auto mapped = model.encoder.apply(column(o));
    std::copy(mapped.begin(), mapped.end(), truth.object_directions.row(o).begin());
  }
  for (std::size_t a = 0; a < na; ++a) {
    const auto mapped = model.encoder.apply(column(no + a));
    std::copy(mapped.begin(), mapped.end(), truth.attribute_directions.row(a).begin());
  }

  MultiViewDataset& data = out.dataset;
  data.views.push_back(std::move(objects));
  const bool two_view = na > 0;
  if (two_view) {
    data.views.push_back(std::move(attributes));
    data.pair_seen = choose_seen_pairs(spec);
  }

  const std::size_t spp = spec.samples_per_pair;
  const std::size_t n_test_seen =
      spp < 2 ? spp : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(spec.test_fraction * static_cast<double>(spp))));
  const std::size_t n_pairs = two_view ? no * na : no;
  const std::size_t n_images = n_pairs * spp;

  data.features = Matrix(n_images, d);
  data.labels.reserve(n_images * data.views.size());
  Rng sample_rng(derive_seed(spec.seed, kSamples));
  Rng noise_rng(derive_seed(spec.seed, kNoise));
  std::vector<std::size_t> order(spp);
  std::size_t row = 0;
  for (std::size_t p = 0; p < n_pairs; ++p) {
    const std::size_t o = two_view ? p / na : p;
    const std::size_t a = two_view ? p % na : 0;
    const bool seen = !two_view || data.pair_seen[p];

    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(std::span<std::size_t>(order), sample_rng);
    std::vector<bool> is_test(spp, !seen);
    if (seen)
      for (std::size_t k = 0; k < n_test_seen; ++k) is_test[order[k]] = true;

    for (std::size_t s = 0; s < spp; ++s, ++row) {
      auto f = data.features.row(row);
      for (std::size_t i = 0; i < d; ++i) {
        double x = spec.alpha * truth.object_directions(o, i);
        if (two_view) x += spec.beta * truth.attribute_directions(a, i);
        f[i] = x + spec.noise_sigma * standard_normal(noise_rng);
      }
      const double len = norm(f);
      require(len > 0.0, ErrorKind::Numeric, "synthetic image has zero norm");
      for (double& x : f) x /= len;

      std::ostringstream id;
      id << "o" << o;
      if (two_view) id << "a" << a;
      id << "s" << s;
      data.sample_ids.push_back(id.str());
      data.labels.push_back(o);
      if (two_view) data.labels.push_back(a);
      data.split.push_back(is_test[s] ? Split::Test : Split::Train);
    }
  }

  model.vocab.validate();
  data.validate(model.vocab);
  return out;
}

}  // namespace palg
