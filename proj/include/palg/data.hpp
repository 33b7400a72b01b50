#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "palg/linalg.hpp"
#include "palg/vlm.hpp"

namespace palg {

struct ViewLabelSpace {
  std::string view_name;
  std::vector<std::string> class_names;
  std::vector<std::vector<TokenId>> class_token_ids;

  std::size_t size() const noexcept { return class_names.size(); }
};

enum class Split : std::uint8_t { Train, Test };

// Image features with one label per view. For two views, (view0, view1)
// label pairs are either seen (may appear in training) or unseen (test only).
struct MultiViewDataset {
  Matrix features;  // one unit-norm row per image
  std::vector<std::string> sample_ids;
  std::vector<ViewLabelSpace> views;
  std::vector<std::size_t> labels;  // images × views, row-major
  std::vector<Split> split;
  std::vector<bool> pair_seen;      // views[0].size() × views[1].size()

  std::size_t size() const noexcept { return features.rows(); }
  std::size_t view_count() const noexcept { return views.size(); }
  std::size_t label(std::size_t image, std::size_t view) const {
    return labels[image * views.size() + view];
  }
  std::size_t pair_index(std::size_t label0, std::size_t label1) const {
    return label0 * views[1].size() + label1;
  }
  std::size_t pair_of(std::size_t image) const { return pair_index(label(image, 0), label(image, 1)); }
  bool image_pair_seen(std::size_t image) const { return pair_seen[pair_of(image)]; }
  std::size_t find_view(std::string_view name) const;

  std::vector<std::size_t> rows(Split which) const;
  void validate(const Vocabulary& vocab) const;
};

struct SyntheticSpec {
  std::size_t d = 64;
  std::size_t n_objects = 8;
  std::size_t n_attributes = 6;  // 0 gives a single-view dataset
  std::size_t samples_per_pair = 20;
  double noise_sigma = 0.0;
  double alpha = 1.0;
  double beta = 1.0;
  std::size_t distractor_tokens = 32;
  std::uint64_t seed = 0;
  double unseen_fraction = 0.3;
  double test_fraction = 0.25;
  bool orthogonal_encoder = false;

  void validate() const;
};

// Generic support classes for class-agnostic regularization.
inline const std::vector<std::string>& default_support_classes() {
  static const std::vector<std::string> names{"material", "animal", "food",    "dress",
                                              "place",    "vehicle", "plant", "object"};
  return names;
}

inline const std::vector<std::string>& default_common_template() {
  static const std::vector<std::string> words{"image", "of", "a"};
  return words;
}

struct GroundTruth {
  Matrix object_directions;     // n_objects × d, in encoder output space
  Matrix attribute_directions;  // n_attributes × d
};

struct SyntheticBundle {
  TextModel model;
  MultiViewDataset dataset;
  GroundTruth truth;
};

SyntheticBundle generate_synthetic(const SyntheticSpec& spec);

}  // namespace palg
