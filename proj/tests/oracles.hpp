#pragma once

// Reference computations used only by the tests. Each one is written the
// slow, obvious way and shares no code paths with the library beyond the
// plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include "palg/linalg.hpp"
#include "palg/random.hpp"
#include "palg/vlm.hpp"

namespace oracle {

inline palg::Matrix random_matrix(std::size_t rows, std::size_t cols, palg::Rng& rng) {
  palg::Matrix m(rows, cols);
  for (auto& x : m.data()) x = palg::standard_normal(rng);
  return m;
}

inline palg::Matrix random_symmetric(std::size_t n, palg::Rng& rng) {
  palg::Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) m(i, j) = m(j, i) = palg::standard_normal(rng);
  return m;
}

inline std::vector<double> random_unit(std::size_t d, palg::Rng& rng) {
  std::vector<double> v(d);
  double s = 0.0;
  for (auto& x : v) {
    x = palg::standard_normal(rng);
    s += x * x;
  }
  for (auto& x : v) x /= std::sqrt(s);
  return v;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// normalize(W · mean(rows)), with W applied as a dense matrix product.
inline std::vector<double> encode(const palg::TextModel& model, const std::vector<palg::TokenId>& common,
                                  const std::vector<double>* prompt,
                                  const std::vector<palg::TokenId>& class_tokens) {
  const std::size_t d = model.dim();
  std::vector<double> mean(d, 0.0);
  std::size_t count = 0;
  auto add = [&](std::span<const double> row) {
    for (std::size_t i = 0; i < d; ++i) mean[i] += row[i];
    ++count;
  };
  for (auto t : common) add(model.vocab.embeddings.row(t));
  if (prompt) add(*prompt);
  for (auto t : class_tokens) add(model.vocab.embeddings.row(t));
  for (auto& x : mean) x /= static_cast<double>(count);
  std::vector<double> out(d, 0.0);
  if (model.encoder.kind == palg::TextEncoder::Kind::Identity) {
    out = mean;
  } else {
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) out[i] += model.encoder.weight(i, j) * mean[j];
  }
  double s = 0.0;
  for (double x : out) s += x * x;
  for (auto& x : out) x /= std::sqrt(s);
  return out;
}

// Mean softmax cross-entropy, summed naively with log-sum-exp.
inline double cross_entropy(const std::vector<std::vector<double>>& logits,
                            const std::vector<std::size_t>& targets) {
  double total = 0.0;
  for (std::size_t n = 0; n < logits.size(); ++n) {
    const double mx = *std::max_element(logits[n].begin(), logits[n].end());
    double z = 0.0;
    for (double l : logits[n]) z += std::exp(l - mx);
    total += -(logits[n][targets[n]] - mx - std::log(z));
  }
  return total / static_cast<double>(logits.size());
}

// Central differences, one coordinate at a time.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// Relative agreement of two gradients, measured per coordinate against the
// larger of the coordinate magnitude and a floor tied to the gradient norm.
inline double gradient_rel_error(std::span<const double> analytic, std::span<const double> numeric) {
  double scale = 0.0;
  for (double x : numeric) scale = std::max(scale, std::abs(x));
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-3 * scale, 1e-12});
    worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / denom);
  }
  return worst;
}

struct DenseTable {
  std::vector<std::vector<double>> scores;
  std::vector<bool> seen;
  std::vector<std::size_t> truth;
};

struct DenseAuc {
  double best_seen = 0.0;
  double best_unseen = 0.0;
  double auc = 0.0;
};

// Uniform bias grid over a range wide enough to reach both extremes.
inline DenseAuc dense_auc(const DenseTable& t, std::size_t points) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& row : t.scores)
    for (double s : row) {
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
  const double span = hi - lo + 1.0;
  std::vector<std::pair<double, double>> curve;
  for (std::size_t k = 0; k < points; ++k) {
    const double b = -span + 2.0 * span * static_cast<double>(k) / static_cast<double>(points - 1);
    double ns = 0, nu = 0, cs = 0, cu = 0;
    for (std::size_t n = 0; n < t.scores.size(); ++n) {
      std::size_t best = 0;
      double best_v = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < t.scores[n].size(); ++c) {
        const double v = t.scores[n][c] + (t.seen[c] ? 0.0 : b);
        if (v > best_v) {
          best_v = v;
          best = c;
        }
      }
      const bool ok = best == t.truth[n];
      if (t.seen[t.truth[n]]) {
        ns += 1;
        cs += ok;
      } else {
        nu += 1;
        cu += ok;
      }
    }
    curve.push_back({cs / ns, cu / nu});
  }
  DenseAuc r;
  for (const auto& [s, u] : curve) {
    r.best_seen = std::max(r.best_seen, s);
    r.best_unseen = std::max(r.best_unseen, u);
  }
  for (std::size_t k = 0; k + 1 < curve.size(); ++k)
    r.auc += (curve[k].first - curve[k + 1].first) * (curve[k].second + curve[k + 1].second) / 2.0;
  return r;
}

// Three-sigma binomial band around p for n trials.
inline bool within_binomial(double observed, double p, std::size_t n, double sigmas = 3.0) {
  return std::abs(observed - p) <= sigmas * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

}  // namespace oracle
