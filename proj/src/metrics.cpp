#include "congraph/metrics.hpp"

#include <fmt/core.h>

#include "congraph/error.hpp"

namespace congraph {

namespace {

std::uint64_t merge_count(std::vector<std::size_t>& v, std::vector<std::size_t>& tmp, std::size_t lo,
                          std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inv = merge_count(v, tmp, lo, mid) + merge_count(v, tmp, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += mid - i;
      tmp[k++] = v[j++];
    } else {
      tmp[k++] = v[i++];
    }
  }
  while (i < mid) tmp[k++] = v[i++];
  while (j < hi) tmp[k++] = v[j++];
  std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo), tmp.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

void check_lists(const OrderList& preds, const OrderList& golds) {
  if (preds.size() != golds.size()) {
    throw ArgumentError(fmt::format("{} predictions for {} gold orders", preds.size(), golds.size()));
  }
  if (preds.empty()) throw ArgumentError("no orders to score");
}

}  // namespace

std::uint64_t count_inversions(std::span<const std::size_t> seq) {
  std::vector<std::size_t> v(seq.begin(), seq.end()), tmp(seq.size());
  return merge_count(v, tmp, 0, v.size());
}

std::optional<double> kendall_tau(std::span<const std::size_t> pred, std::span<const std::size_t> gold) {
  if (pred.size() != gold.size()) {
    throw ArgumentError(fmt::format("kendall_tau: lengths {} and {} differ", pred.size(), gold.size()));
  }
  const std::size_t n = gold.size();
  if (!is_permutation_of_range(pred, n) || !is_permutation_of_range(gold, n)) {
    throw ArgumentError("kendall_tau: inputs must be permutations of 0..n-1");
  }
  if (n < 2) return std::nullopt;
  const auto pos = invert_permutation(gold);
  std::vector<std::size_t> seq(n);
  for (std::size_t k = 0; k < n; ++k) seq[k] = pos[pred[k]];
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return 1.0 - 2.0 * static_cast<double>(count_inversions(seq)) / pairs;
}

double pmr(const OrderList& preds, const OrderList& golds) {
  check_lists(preds, golds);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == golds[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

std::pair<double, double> first_last_accuracy(const OrderList& preds, const OrderList& golds) {
  check_lists(preds, golds);
  std::size_t first = 0, last = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].size() != golds[i].size() || preds[i].empty()) {
      throw ArgumentError(fmt::format("order {} has mismatched or empty lengths", i));
    }
    if (preds[i].front() == golds[i].front()) ++first;
    if (preds[i].back() == golds[i].back()) ++last;
  }
  const double n = static_cast<double>(preds.size());
  return {static_cast<double>(first) / n, static_cast<double>(last) / n};
}

EvalReport summarize(const Dataset& dataset, const OrderList& predicted) {
  if (dataset.paragraphs.empty()) throw ArgumentError("nothing to evaluate: dataset is empty");
  if (predicted.size() != dataset.paragraphs.size()) {
    throw ArgumentError(fmt::format("{} predictions for {} paragraphs", predicted.size(),
                                    dataset.paragraphs.size()));
  }
  EvalReport r;
  OrderList golds;
  double tau_sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const auto& p = dataset.paragraphs[i];
    golds.push_back(p.gold_order);
    ParagraphResult pr;
    pr.id = p.id;
    pr.order = predicted[i];
    pr.tau = kendall_tau(predicted[i], p.gold_order);
    pr.exact = predicted[i] == p.gold_order;
    pr.first_correct = predicted[i].front() == p.gold_order.front();
    pr.last_correct = predicted[i].back() == p.gold_order.back();
    if (pr.tau) {
      tau_sum += *pr.tau;
      ++r.n_evaluated;
    } else {
      ++r.n_skipped;
    }
    r.per_paragraph.push_back(std::move(pr));
  }
  r.tau_mean = r.n_evaluated ? tau_sum / static_cast<double>(r.n_evaluated) : 0.0;
  r.pmr = pmr(predicted, golds);
  std::tie(r.first_acc, r.last_acc) = first_last_accuracy(predicted, golds);
  return r;
}

std::vector<std::size_t> to_sentence_order(const PredictedOrder& pred, const Paragraph& paragraph) {
  std::vector<std::size_t> out(pred.order.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = paragraph.presentation_order[pred.order[k]];
  return out;
}

EvalReport evaluate(OrderingModel& model, const Dataset& dataset, const GraphProvider& graphs) {
  if (dataset.paragraphs.empty()) throw ArgumentError("nothing to evaluate: dataset is empty");
  OrderList predicted;
  for (const auto& p : dataset.paragraphs) {
    const auto g = graphs(p);
    const auto scores = predict_scores(model, p.presented_embeddings(), g);
    predicted.push_back(to_sentence_order(order_by_scores(scores), p));
  }
  return summarize(dataset, predicted);
}

EvalReport evaluate_decoder(const Dataset& dataset, const GraphProvider& graphs, DecodeMethod method,
                            std::size_t graph_index) {
  if (dataset.paragraphs.empty()) throw ArgumentError("nothing to evaluate: dataset is empty");
  if (method == DecodeMethod::scores) throw ArgumentError("score decoding needs a model");
  OrderList predicted;
  for (const auto& p : dataset.paragraphs) {
    const auto g = graphs(p);
    if (graph_index >= g.size()) throw ArgumentError("graph index out of range for decoder");
    const auto order = method == DecodeMethod::topological ? topological_decode(g[graph_index])
                                                           : pairwise_sum_decode(g[graph_index]);
    predicted.push_back(to_sentence_order(order, p));
  }
  return summarize(dataset, predicted);
}

}  // namespace congraph
