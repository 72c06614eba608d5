#pragma once

#include <span>
#include <string>
#include <vector>

#include "congraph/graph.hpp"

namespace congraph {

enum class DecodeMethod { scores, topological, pairwise_sum };

std::string to_string(DecodeMethod m);
/// Accepts the CLI spellings "scores", "topo" and "pairsum".
DecodeMethod parse_decoder(const std::string& s);

/// order[k] is the node placed k-th.
struct PredictedOrder {
  std::vector<std::size_t> order;
  DecodeMethod method = DecodeMethod::scores;
};

/// Descending score; equal scores keep ascending index.
PredictedOrder order_by_scores(std::span<const double> scores);

/// Kahn's algorithm over edges with weight > 0. Among sources, the node with
/// the largest outgoing weight (to unplaced nodes) goes first; when only
/// cycles remain, the node with the smallest weighted in-degree is placed.
/// Ties resolve to the lower index.
PredictedOrder topological_decode(const ConstraintGraph& g);

/// Sorts nodes by row sum of the adjacency (total "precedes" confidence).
PredictedOrder pairwise_sum_decode(const ConstraintGraph& g);

}  // namespace congraph
