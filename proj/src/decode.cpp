#include "congraph/decode.hpp"

#include <algorithm>
#include <numeric>

#include "congraph/error.hpp"

namespace congraph {

std::string to_string(DecodeMethod m) {
  switch (m) {
    case DecodeMethod::scores: return "scores";
    case DecodeMethod::topological: return "topo";
    case DecodeMethod::pairwise_sum: return "pairsum";
  }
  return "scores";
}

DecodeMethod parse_decoder(const std::string& s) {
  if (s == "scores") return DecodeMethod::scores;
  if (s == "topo") return DecodeMethod::topological;
  if (s == "pairsum") return DecodeMethod::pairwise_sum;
  throw ArgumentError("decoder must be scores, topo or pairsum, got '" + s + "'");
}

PredictedOrder order_by_scores(std::span<const double> scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return {std::move(idx), DecodeMethod::scores};
}

PredictedOrder topological_decode(const ConstraintGraph& g) {
  const std::size_t n = g.n;
  const auto& m = g.adjacency;
  std::vector<bool> placed(n, false);
  std::vector<std::size_t> order;
  order.reserve(n);
  while (order.size() < n) {
    std::size_t best = n;
    double best_out = -1.0;
    std::size_t fallback = n;
    double fallback_in = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      if (placed[v]) continue;
      double in = 0.0, out = 0.0;
      std::size_t in_edges = 0;
      for (std::size_t u = 0; u < n; ++u) {
        if (placed[u] || u == v) continue;
        if (m(u, v) > 0.0) {
          in += m(u, v);
          ++in_edges;
        }
        if (m(v, u) > 0.0) out += m(v, u);
      }
      if (in_edges == 0 && out > best_out) {
        best = v;
        best_out = out;
      }
      if (fallback == n || in < fallback_in) {
        fallback = v;
        fallback_in = in;
      }
    }
    const std::size_t pick = best != n ? best : fallback;
    placed[pick] = true;
    order.push_back(pick);
  }
  return {std::move(order), DecodeMethod::topological};
}

PredictedOrder pairwise_sum_decode(const ConstraintGraph& g) {
  std::vector<double> sums(g.n, 0.0);
  for (std::size_t i = 0; i < g.n; ++i)
    for (std::size_t j = 0; j < g.n; ++j)
      if (i != j) sums[i] += g.adjacency(i, j);
  auto out = order_by_scores(sums);
  out.method = DecodeMethod::pairwise_sum;
  return out;
}

}  // namespace congraph
