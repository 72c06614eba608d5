#pragma once

// Listwise training of the ordering model.

#include <span>
#include <vector>

#include "congraph/autodiff.hpp"
#include "congraph/data.hpp"
#include "congraph/error.hpp"
#include "congraph/graph.hpp"
#include "congraph/model.hpp"
#include "congraph/optim.hpp"

namespace congraph {

/// Negative log-likelihood of `gold` under a sequential softmax (ListMLE):
/// sum over positions j of logsumexp(z[gold[j..]]) - z[gold[j]].
double listmle(std::span<const double> scores, std::span<const std::size_t> gold);

/// Differentiable ListMLE over rows of an N x 1 score tensor. `rows` lists
/// the score rows of one paragraph in gold order.
Tensor listmle_loss(const Tensor& scores, std::span<const std::size_t> rows);

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> val_tau;
  std::vector<double> val_pmr;
  /// Epoch whose parameters were kept; empty when no epoch ran.
  std::optional<std::size_t> best_epoch;

  std::size_t epochs() const noexcept { return train_loss.size(); }
  friend bool operator==(const TrainHistory&, const TrainHistory&) = default;
};

class TrainingDivergedError : public NumericError {
 public:
  TrainingDivergedError(const std::string& what, TrainHistory history)
      : NumericError(what), history_(std::move(history)) {}
  const TrainHistory& history() const noexcept { return history_; }

 private:
  TrainHistory history_;
};

struct TrainResult {
  OrderingModel model;
  TrainHistory history;
};

/// Mini-batch AdamW on mean ListMLE over paragraphs. After every epoch the
/// model is scored on `val`; the parameters of the best epoch (by the
/// configured metric, earliest on ties) are returned. Deterministic per seed.
TrainResult train(const Dataset& train_set, const Dataset& val_set, const GraphProvider& graphs,
                  OrderingModel model, const TrainConfig& config);

/// history CSV: epoch,loss,val_tau,val_pmr
std::string history_to_csv(const TrainHistory& h);

}  // namespace congraph
