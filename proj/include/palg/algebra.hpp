#pragma once

#include <span>
#include <string>
#include <vector>

#include "palg/eval.hpp"
#include "palg/linalg.hpp"
#include "palg/vlm.hpp"

namespace palg {

// Σ θᵢ·vᵢ, projected through `basis` when given. Weights are used as given.
Prompt compose(std::span<const Prompt> prompts, std::span<const double> weights,
               const ProjectionBasis* basis);

// θᵢ = 1/n
std::vector<double> equal_weights(std::size_t n);

struct SweepRow {
  double theta = 0.0;
  Metrics metrics;
};

// Evaluates compose((a, b), (θ, 1−θ)) for every θ in the grid.
std::vector<SweepRow> weight_sweep(const Prompt& a, const Prompt& b, std::span<const double> grid,
                                   const EvalBundle& bundle, const ProjectionBasis* basis);

// Columns theta, metric, value; one line per (θ, metric).
std::string sweep_tsv(std::span<const SweepRow> rows);

}  // namespace palg
