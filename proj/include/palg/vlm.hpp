#pragma once

// Minimal differentiable vision-language scorer. Text features are
// normalize(W · mean(token embeddings)), with the task prompt entering as one
// extra pseudo-token. Image features are supplied, never computed.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "palg/kernels.hpp"
#include "palg/linalg.hpp"

namespace palg {

using TokenId = std::uint32_t;

struct Vocabulary {
  std::vector<std::string> token_names;
  Matrix embeddings;  // one row per token

  std::size_t size() const noexcept { return embeddings.rows(); }
  std::size_t dim() const noexcept { return embeddings.cols(); }
  std::optional<TokenId> find(std::string_view name) const;
  // Unique names, n ≥ 1, finite rows.
  void validate() const;
};

struct TextEncoder {
  enum class Kind { Identity, Orthogonal };
  Kind kind = Kind::Identity;
  std::uint64_t seed = 0;  // only meaningful for Orthogonal
  Matrix weight;           // d×d; empty for Identity

  static TextEncoder identity();
  // Random orthogonal map, reproducible from the seed.
  static TextEncoder orthogonal(std::size_t dim, std::uint64_t seed);

  std::vector<double> apply(std::span<const double> x) const;
  std::vector<double> apply_transposed(std::span<const double> x) const;
};

struct TextModel {
  Vocabulary vocab;
  TextEncoder encoder;
  std::vector<TokenId> common_tokens;  // the class-agnostic "image of a" template

  std::size_t dim() const noexcept { return vocab.dim(); }
};

struct Prompt {
  std::vector<double> values;
  bool trained_with_projection = false;
  std::string source_task;
  std::uint64_t basis_fingerprint = 0;  // 0 when unconstrained
  std::uint64_t config_hash = 0;

  friend bool operator==(const Prompt&, const Prompt&) = default;
};

struct TextInput {
  std::vector<TokenId> common_tokens;
  std::optional<std::vector<double>> prompt;
  std::vector<TokenId> class_tokens;
};

std::vector<double> encode_text(const TextModel& model, const TextInput& input);

double cosine_distance(std::span<const double> a, std::span<const double> b);

// Index of the nearest class text; ties go to the lowest index.
std::size_t classify(std::span<const double> image, std::span<const std::vector<double>> class_texts);

// scale · (image · text_i)
std::vector<double> logits(std::span<const double> image,
                           std::span<const std::vector<double>> class_texts, double scale);

std::vector<double> softmax(std::span<const double> logits);

struct TextFeatures {
  Matrix unit;                     // one unit-norm feature per text
  std::vector<double> pooled_norm; // ‖W·mean‖ before normalization
};

// A fixed set of token sequences that share one optional prompt slot. The
// fixed part of each sequence is reduced once to W·Σ(embeddings), so encoding
// for a new prompt costs one W·v plus O(T·d).
class TextBank {
 public:
  TextBank(const TextModel& model, std::vector<std::vector<TokenId>> fixed_tokens,
           bool prompt_slot);

  std::size_t size() const noexcept { return counts_.size(); }
  bool has_prompt_slot() const noexcept { return prompt_slot_; }

  // `prompt` must be empty iff the bank has no prompt slot.
  TextFeatures encode(std::span<const double> prompt) const;

  // Chains dLoss/dFeature (one row per text) back to dLoss/dPrompt.
  std::vector<double> prompt_gradient(const TextFeatures& features, const Matrix& feature_grad,
                                      Exec exec = Exec::Parallel) const;

 private:
  const TextModel* model_;
  Matrix base_;                 // W·Σ fixed embeddings, per text
  std::vector<double> counts_;  // pooled sequence length, prompt included
  bool prompt_slot_;
};

}  // namespace palg
