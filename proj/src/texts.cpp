#include "palg/texts.hpp"

#include "palg/error.hpp"

namespace palg {

std::vector<std::vector<TokenId>> class_sequences(const TextModel& model,
                                                  std::span<const std::vector<TokenId>> classes) {
  std::vector<std::vector<TokenId>> out;
  out.reserve(classes.size());
  for (const auto& tokens : classes) {
    auto seq = model.common_tokens;
    seq.insert(seq.end(), tokens.begin(), tokens.end());
    out.push_back(std::move(seq));
  }
  return out;
}

std::vector<std::vector<TokenId>> pair_sequences(const TextModel& model, const MultiViewDataset& data) {
  require(data.view_count() == 2, ErrorKind::Config, "pair texts need a two-view dataset");
  const auto& first = data.views[0];
  const auto& second = data.views[1];
  std::vector<std::vector<TokenId>> out(first.size() * second.size());
  for (std::size_t a = 0; a < first.size(); ++a)
    for (std::size_t b = 0; b < second.size(); ++b) {
      auto seq = model.common_tokens;
      seq.insert(seq.end(), second.class_token_ids[b].begin(), second.class_token_ids[b].end());
      seq.insert(seq.end(), first.class_token_ids[a].begin(), first.class_token_ids[a].end());
      out[data.pair_index(a, b)] = std::move(seq);
    }
  return out;
}

}  // namespace palg
