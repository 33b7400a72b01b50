#include "palg/algebra.hpp"

#include <sstream>

#include "palg/error.hpp"
#include "palg/format.hpp"

namespace palg {

Prompt compose(std::span<const Prompt> prompts, std::span<const double> weights,
               const ProjectionBasis* basis) {
  require(!prompts.empty(), ErrorKind::Input, "compose: no prompts");
  require(prompts.size() == weights.size(), ErrorKind::Dimension,
          "compose: weights and prompts differ in count");
  bool any_positive = false;
  for (double w : weights) {
    require(w >= 0.0 && std::isfinite(w), ErrorKind::Input, "compose: weights must be non-negative");
    any_positive = any_positive || w > 0.0;
  }
  require(any_positive, ErrorKind::Input, "compose: all weights are zero");

  const std::size_t d = prompts.front().values.size();
  const std::uint64_t expected = basis ? basis->fingerprint() : 0;
  std::uint64_t common = 0;
  for (const auto& p : prompts) {
    require(p.values.size() == d, ErrorKind::Dimension, "compose: prompts differ in dimension");
    if (basis) {
      if (p.basis_fingerprint != expected)
        fail(ErrorKind::Compatibility, "compose: prompt '" + p.source_task +
                                           "' was not trained with the given projection basis");
    } else if (p.basis_fingerprint != 0) {
      if (common != 0 && p.basis_fingerprint != common)
        fail(ErrorKind::Compatibility, "compose: prompts were trained with different projection bases");
      common = p.basis_fingerprint;
    }
  }
  if (basis) require(basis->ambient_dim == d, ErrorKind::Dimension, "compose: basis dimension mismatch");

  Prompt out;
  out.values.assign(d, 0.0);
  for (std::size_t i = 0; i < prompts.size(); ++i) axpy(weights[i], prompts[i].values, out.values);
  if (basis) out.values = project(*basis, out.values);
  out.trained_with_projection = basis != nullptr;
  out.basis_fingerprint = expected;

  std::ostringstream task;
  for (std::size_t i = 0; i < prompts.size(); ++i) task << (i ? "+" : "") << prompts[i].source_task;
  out.source_task = task.str();
  return out;
}

std::vector<double> equal_weights(std::size_t n) {
  require(n > 0, ErrorKind::Input, "equal_weights: no prompts");
  return std::vector<double>(n, 1.0 / static_cast<double>(n));
}

std::vector<SweepRow> weight_sweep(const Prompt& a, const Prompt& b, std::span<const double> grid,
                                   const EvalBundle& bundle, const ProjectionBasis* basis) {
  require(!grid.empty(), ErrorKind::Input, "weight_sweep: empty grid");
  for (double theta : grid)
    require(theta >= 0.0 && theta <= 1.0, ErrorKind::Input, "weight_sweep: grid values must lie in [0, 1]");
  const std::vector<Prompt> pair{a, b};
  std::vector<SweepRow> rows;
  for (double theta : grid) {
    const double weights[] = {theta, 1.0 - theta};
    const Prompt composite = compose(pair, weights, basis);
    rows.push_back({theta, evaluate(&composite, bundle)});
  }
  return rows;
}

std::string sweep_tsv(std::span<const SweepRow> rows) {
  std::ostringstream out;
  out << "theta\tmetric\tvalue\n";
  for (const auto& row : rows)
    for (const auto& [name, value] : row.metrics)
      out << format_number(row.theta) << '\t' << name << '\t' << format_number(value) << '\n';
  return out.str();
}

}  // namespace palg
