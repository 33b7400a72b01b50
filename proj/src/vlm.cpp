#include "palg/vlm.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "palg/error.hpp"
#include "palg/random.hpp"

namespace palg {

std::optional<TokenId> Vocabulary::find(std::string_view name) const {
  const auto it = std::find(token_names.begin(), token_names.end(), name);
  if (it == token_names.end()) return std::nullopt;
  return static_cast<TokenId>(it - token_names.begin());
}

void Vocabulary::validate() const {
  require(embeddings.rows() >= 1, ErrorKind::Input, "vocabulary is empty");
  require(token_names.size() == embeddings.rows(), ErrorKind::Dimension,
          "vocabulary names and embedding rows differ in count");
  std::set<std::string_view> seen;
  for (const auto& name : token_names)
    require(seen.insert(name).second, ErrorKind::Input, "duplicate vocabulary token '" + name + "'");
  require(embeddings.all_finite(), ErrorKind::Numeric, "vocabulary has non-finite embeddings");
}

TextEncoder TextEncoder::identity() { return {}; }

TextEncoder TextEncoder::orthogonal(std::size_t dim, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x454e43ULL));
  Matrix g(dim, dim);
  for (double& x : g.data()) x = standard_normal(rng);
  TextEncoder enc;
  enc.kind = Kind::Orthogonal;
  enc.seed = seed;
  enc.weight = orthonormalize_columns(g);
  return enc;
}

std::vector<double> TextEncoder::apply(std::span<const double> x) const {
  if (kind == Kind::Identity) return {x.begin(), x.end()};
  return matvec(weight, x);
}

std::vector<double> TextEncoder::apply_transposed(std::span<const double> x) const {
  if (kind == Kind::Identity) return {x.begin(), x.end()};
  return matvec_transposed(weight, x);
}

namespace {

void add_token(const Vocabulary& vocab, TokenId id, std::span<double> sum) {
  if (id >= vocab.size()) {
    std::ostringstream msg;
    msg << "token id " << id << " is outside the vocabulary (size " << vocab.size() << ")";
    fail(ErrorKind::Input, msg.str());
  }
  axpy(1.0, vocab.embeddings.row(id), sum);
}

}  // namespace

std::vector<double> encode_text(const TextModel& model, const TextInput& input) {
  const std::size_t d = model.dim();
  const std::size_t count = input.common_tokens.size() + input.class_tokens.size() +
                            (input.prompt ? 1 : 0);
  require(count > 0, ErrorKind::Input, "encode_text: empty token sequence");
  std::vector<double> sum(d, 0.0);
  for (TokenId id : input.common_tokens) add_token(model.vocab, id, sum);
  if (input.prompt) {
    require(input.prompt->size() == d, ErrorKind::Dimension,
            "encode_text: prompt length does not match embedding dimension");
    axpy(1.0, *input.prompt, sum);
  }
  for (TokenId id : input.class_tokens) add_token(model.vocab, id, sum);
  for (double& x : sum) x /= static_cast<double>(count);

  auto z = model.encoder.apply(sum);
  const double len = norm(z);
  require(len > 0.0 && std::isfinite(len), ErrorKind::Input,
          "encode_text: degenerate input, pooled text vector is zero");
  for (double& x : z) x /= len;
  return z;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  require(std::abs(norm(a) - 1.0) <= 1e-5 && std::abs(norm(b) - 1.0) <= 1e-5,
          ErrorKind::Contract, "cosine_distance: inputs must be unit vectors");
  return 1.0 - dot(a, b);
}

std::size_t classify(std::span<const double> image, std::span<const std::vector<double>> class_texts) {
  require(!class_texts.empty(), ErrorKind::Input, "classify: no class texts");
  std::size_t best = 0;
  double best_distance = cosine_distance(image, class_texts[0]);
  for (std::size_t i = 1; i < class_texts.size(); ++i) {
    const double dist = cosine_distance(image, class_texts[i]);
    if (dist < best_distance) {
      best_distance = dist;
      best = i;
    }
  }
  return best;
}

std::vector<double> logits(std::span<const double> image,
                           std::span<const std::vector<double>> class_texts, double scale) {
  require(!class_texts.empty(), ErrorKind::Input, "logits: no class texts");
  require(scale > 0.0, ErrorKind::Config, "logits: scale must be positive");
  std::vector<double> out;
  out.reserve(class_texts.size());
  for (const auto& t : class_texts) out.push_back(scale * dot(image, t));
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) z += p[i] = std::exp(logits[i] - top);
  for (double& x : p) x /= z;
  return p;
}

TextBank::TextBank(const TextModel& model, std::vector<std::vector<TokenId>> fixed_tokens,
                   bool prompt_slot)
    : model_(&model),
      base_(fixed_tokens.size(), model.dim()),
      counts_(fixed_tokens.size()),
      prompt_slot_(prompt_slot) {
  for (std::size_t t = 0; t < fixed_tokens.size(); ++t) {
    const std::size_t count = fixed_tokens[t].size() + (prompt_slot ? 1 : 0);
    require(count > 0, ErrorKind::Input, "text bank: empty token sequence");
    counts_[t] = static_cast<double>(count);
    std::vector<double> sum(model.dim(), 0.0);
    for (TokenId id : fixed_tokens[t]) add_token(model.vocab, id, sum);
    const auto mapped = model.encoder.apply(sum);
    std::copy(mapped.begin(), mapped.end(), base_.row(t).begin());
  }
}

TextFeatures TextBank::encode(std::span<const double> prompt) const {
  const std::size_t d = model_->dim();
  std::vector<double> mapped_prompt;
  if (prompt_slot_) {
    require(prompt.size() == d, ErrorKind::Dimension,
            "text bank: prompt length does not match embedding dimension");
    mapped_prompt = model_->encoder.apply(prompt);
  } else {
    require(prompt.empty(), ErrorKind::Contract, "text bank: prompt given to a prompt-free bank");
  }

  TextFeatures out{Matrix(size(), d), std::vector<double>(size())};
  for (std::size_t t = 0; t < size(); ++t) {
    auto f = out.unit.row(t);
    const auto b = base_.row(t);
    for (std::size_t i = 0; i < d; ++i)
      f[i] = (prompt_slot_ ? b[i] + mapped_prompt[i] : b[i]) / counts_[t];
    const double len = norm(f);
    require(len > 0.0 && std::isfinite(len), ErrorKind::Input,
            "text bank: degenerate input, pooled text vector is zero");
    for (double& x : f) x /= len;
    out.pooled_norm[t] = len;
  }
  return out;
}

std::vector<double> TextBank::prompt_gradient(const TextFeatures& features,
                                              const Matrix& feature_grad, Exec exec) const {
  require(prompt_slot_, ErrorKind::Contract, "text bank: no prompt slot to differentiate");
  require(feature_grad.rows() == size() && feature_grad.cols() == model_->dim(),
          ErrorKind::Dimension, "text bank: feature gradient has the wrong shape");
  Matrix per_text(size(), model_->dim());
  for (std::size_t t = 0; t < size(); ++t) {
    const auto f = features.unit.row(t);
    const auto g = feature_grad.row(t);
    const double radial = dot(f, g);
    const double inv = 1.0 / (features.pooled_norm[t] * counts_[t]);
    auto r = per_text.row(t);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = (g[i] - radial * f[i]) * inv;
  }
  return model_->encoder.apply_transposed(column_sums(per_text, exec));
}

}  // namespace palg
