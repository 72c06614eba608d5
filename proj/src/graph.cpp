#include "congraph/graph.hpp"

#include <map>
#include <memory>

#include <fmt/core.h>

#include "congraph/error.hpp"
#include "congraph/random.hpp"

namespace congraph {

std::size_t ConstraintGraph::edge_count() const {
  std::size_t c = 0;
  for (double v : adjacency.data())
    if (v > 0.0) ++c;
  return c;
}

ConstraintGraph ConstraintGraph::relabeled(std::span<const std::size_t> perm) const {
  return {n, d, permute_square(adjacency, perm)};
}

ConstraintGraph build_graph(std::span<const PairPrediction> predictions, std::size_t n, std::size_t d) {
  ConstraintGraph g{n, d, Matrix(n, n)};
  Matrix seen(n, n);
  for (const auto& pr : predictions) {
    if (pr.i >= n || pr.j >= n) {
      throw ArgumentError(fmt::format("prediction ({}, {}) out of range for n = {}", pr.i, pr.j, n));
    }
    if (pr.i == pr.j) throw ArgumentError(fmt::format("self pair ({}, {}) in predictions", pr.i, pr.j));
    if (!(pr.p >= 0.0 && pr.p <= 1.0)) {
      throw ArgumentError(fmt::format("prediction ({}, {}) has p = {} outside [0, 1]", pr.i, pr.j, pr.p));
    }
    if (seen(pr.i, pr.j) != 0.0 && g.adjacency(pr.i, pr.j) != pr.p) {
      throw ArgumentError(fmt::format("conflicting duplicate predictions for pair ({}, {})", pr.i, pr.j));
    }
    seen(pr.i, pr.j) = 1.0;
    g.adjacency(pr.i, pr.j) = pr.p;
  }
  return g;
}

ConstraintGraph to_presentation(const ConstraintGraph& sentence_graph, const Paragraph& paragraph) {
  if (sentence_graph.n != paragraph.size()) {
    throw DataError(fmt::format("graph for paragraph '{}' has {} nodes, paragraph has {} sentences",
                                paragraph.id, sentence_graph.n, paragraph.size()));
  }
  return sentence_graph.relabeled(paragraph.presentation_order);
}

ConstraintGraph ground_truth_graph(const Paragraph& paragraph, std::size_t d) {
  const std::size_t n = paragraph.size();
  const auto pos = paragraph.gold_positions();
  ConstraintGraph g{n, d, Matrix(n, n)};
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      if (pos[b] > pos[a] && pos[b] - pos[a] <= d) g.adjacency(a, b) = 1.0;
  return to_presentation(g, paragraph);
}

std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

GraphProvider ground_truth_provider(std::vector<std::size_t> distances) {
  return [distances = std::move(distances)](const Paragraph& p) {
    std::vector<ConstraintGraph> out;
    for (auto d : distances) out.push_back(ground_truth_graph(p, d));
    return out;
  };
}

std::uint64_t oracle_seed(std::uint64_t seed, std::string_view paragraph_id, std::size_t d) {
  return mix_seed(mix_seed(seed, stable_hash(paragraph_id)), d);
}

GraphProvider oracle_provider(std::vector<std::size_t> distances, double accuracy, std::uint64_t seed) {
  if (!(accuracy > 0.0 && accuracy <= 1.0)) {
    throw ArgumentError(fmt::format("oracle accuracy must lie in (0, 1], got {}", accuracy));
  }
  return [distances = std::move(distances), accuracy, seed](const Paragraph& p) {
    std::vector<ConstraintGraph> out;
    for (auto d : distances) {
      const auto preds = noisy_oracle(p, d, accuracy, oracle_seed(seed, p.id, d));
      out.push_back(to_presentation(build_graph(preds, p.size(), d), p));
    }
    return out;
  };
}

GraphProvider records_provider(std::span<const PairPredictionRecord> records,
                               std::vector<std::size_t> distances) {
  auto index = std::make_shared<std::map<std::pair<std::string, std::size_t>, std::vector<PairPrediction>>>();
  for (const auto& r : records) {
    auto [it, inserted] = index->emplace(std::make_pair(r.paragraph_id, r.d), r.pairs);
    if (!inserted) throw DataError(fmt::format("duplicate pair record for paragraph '{}' d = {}", r.paragraph_id, r.d));
  }
  return [index, distances = std::move(distances)](const Paragraph& p) {
    std::vector<ConstraintGraph> out;
    for (auto d : distances) {
      auto it = index->find({p.id, d});
      if (it == index->end()) {
        throw DataError(fmt::format("no pair predictions for paragraph '{}' at d = {}", p.id, d));
      }
      try {
        out.push_back(to_presentation(build_graph(it->second, p.size(), d), p));
      } catch (const ArgumentError& e) {
        throw DataError(fmt::format("paragraph '{}': {}", p.id, e.what()));
      }
    }
    return out;
  };
}

std::size_t min_layers(std::size_t n, std::size_t d) {
  if (n < 1 || d < 1) throw ArgumentError("min_layers requires n >= 1 and d >= 1");
  return (n - 1 + d - 1) / d;
}

std::size_t distance_for_layers(std::size_t max_n, std::size_t layers) {
  if (layers < 2) throw ArgumentError("distance_for_layers requires at least 2 layers");
  if (max_n < 2) throw ArgumentError("distance_for_layers requires max_n >= 2");
  return (max_n - 1 + layers - 2) / (layers - 1);
}

}  // namespace congraph
