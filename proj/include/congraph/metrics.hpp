#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "congraph/data.hpp"
#include "congraph/decode.hpp"
#include "congraph/graph.hpp"
#include "congraph/model.hpp"
#include "congraph/report.hpp"

namespace congraph {

/// Number of pairs i < j with seq[i] > seq[j], by merge sort.
std::uint64_t count_inversions(std::span<const std::size_t> seq);

/// 1 - 2I / C(n, 2) where I counts sentence pairs ordered differently in
/// `pred` and `gold` (both position sequences). Empty when n < 2.
std::optional<double> kendall_tau(std::span<const std::size_t> pred, std::span<const std::size_t> gold);

using OrderList = std::vector<std::vector<std::size_t>>;

/// Fraction of exact matches. Requires equal, non-zero lengths.
double pmr(const OrderList& preds, const OrderList& golds);

/// Fractions whose predicted first (resp. last) element matches gold.
std::pair<double, double> first_last_accuracy(const OrderList& preds, const OrderList& golds);

/// Aggregates predicted sentence orders (one per paragraph, sentence indices).
EvalReport summarize(const Dataset& dataset, const OrderList& predicted);

/// Eval-mode forward + score sort per paragraph. Empty datasets throw ArgumentError.
EvalReport evaluate(OrderingModel& model, const Dataset& dataset, const GraphProvider& graphs);

/// Graph-only baselines decoded from graph `graph_index` of the provider.
EvalReport evaluate_decoder(const Dataset& dataset, const GraphProvider& graphs, DecodeMethod method,
                            std::size_t graph_index = 0);

/// Node-index order mapped back to sentence indices.
std::vector<std::size_t> to_sentence_order(const PredictedOrder& pred, const Paragraph& paragraph);

}  // namespace congraph
