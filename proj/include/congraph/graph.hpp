#pragma once

#include <cstdint>
#include <functional>
#include <string_view>
#include <span>
#include <vector>

#include "congraph/data.hpp"
#include "congraph/matrix.hpp"
#include "congraph/pairwise.hpp"

namespace congraph {

/// Directed graph over n sentences; adjacency(i, j) is the thresholded
/// probability that i precedes j within distance d. Diagonal is zero.
struct ConstraintGraph {
  std::size_t n = 0;
  std::size_t d = 1;
  Matrix adjacency;

  std::size_t edge_count() const;
  /// out(a, b) = adjacency(perm[a], perm[b]).
  ConstraintGraph relabeled(std::span<const std::size_t> perm) const;

  friend bool operator==(const ConstraintGraph&, const ConstraintGraph&) = default;
};

/// Places each prediction's p at (i, j). Repeated pairs must agree on p;
/// out-of-range or self pairs throw ArgumentError.
ConstraintGraph build_graph(std::span<const PairPrediction> predictions, std::size_t n, std::size_t d);

/// Sentence-indexed graph relabeled into the paragraph's presentation order.
ConstraintGraph to_presentation(const ConstraintGraph& sentence_graph, const Paragraph& paragraph);

/// Exact distance-d constraints of the gold order, in presentation order.
ConstraintGraph ground_truth_graph(const Paragraph& paragraph, std::size_t d);

/// Supplies the constraint graphs of a paragraph, one per GIN stack, in
/// presentation order.
using GraphProvider = std::function<std::vector<ConstraintGraph>(const Paragraph&)>;

GraphProvider ground_truth_provider(std::vector<std::size_t> distances);
/// Oracle seed of one paragraph and distance under experiment seed `seed`.
std::uint64_t oracle_seed(std::uint64_t seed, std::string_view paragraph_id, std::size_t d);

/// Noisy-oracle graphs; the oracle seed depends on (seed, paragraph id, d) only.
GraphProvider oracle_provider(std::vector<std::size_t> distances, double accuracy, std::uint64_t seed);
/// Graphs from pair-prediction records. Paragraphs without a record for some
/// distance throw DataError.
GraphProvider records_provider(std::span<const PairPredictionRecord> records,
                               std::vector<std::size_t> distances);

/// Deterministic 64-bit FNV-1a hash of a string.
std::uint64_t stable_hash(std::string_view s);

/// ceil((n - 1) / d): hops needed along distance-d constraints to connect
/// the first sentence to the last.
std::size_t min_layers(std::size_t n, std::size_t d);

/// ceil((max_n - 1) / (layers - 1)). Requires layers >= 2.
std::size_t distance_for_layers(std::size_t max_n, std::size_t layers);

}  // namespace congraph
