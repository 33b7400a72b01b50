#pragma once

// Token sequences for the three kinds of class text (without the prompt slot,
// which TextBank inserts).

#include <span>
#include <vector>

#include "palg/data.hpp"
#include "palg/vlm.hpp"

namespace palg {

// [common, class] for each class.
std::vector<std::vector<TokenId>> class_sequences(const TextModel& model,
                                                  std::span<const std::vector<TokenId>> classes);

// [common, view1 label, view0 label] ("image of a <attribute> <object>") for
// every pair, indexed by MultiViewDataset::pair_index.
std::vector<std::vector<TokenId>> pair_sequences(const TextModel& model, const MultiViewDataset& data);

}  // namespace palg
