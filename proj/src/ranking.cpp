#include "congraph/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <fmt/core.h>

#include "congraph/log.hpp"
#include "congraph/metrics.hpp"
#include "congraph/random.hpp"

namespace congraph {

namespace {

// suffix[j] = log sum_{k >= j} exp(z[k]) over scores already in gold order.
std::vector<double> suffix_logsumexp(std::span<const double> z) {
  std::vector<double> s(z.size());
  if (z.empty()) return s;
  s.back() = z.back();
  for (std::size_t j = z.size() - 1; j-- > 0;) {
    const double a = z[j], b = s[j + 1];
    const double hi = std::max(a, b);
    s[j] = hi + std::log1p(std::exp(std::min(a, b) - hi));
  }
  return s;
}

}  // namespace

double listmle(std::span<const double> scores, std::span<const std::size_t> gold) {
  if (scores.size() != gold.size()) throw ArgumentError("listmle: scores and order lengths differ");
  std::vector<double> z(gold.size());
  for (std::size_t j = 0; j < gold.size(); ++j) z[j] = scores[gold[j]];
  const auto s = suffix_logsumexp(z);
  double loss = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) loss += s[j] - z[j];
  return loss;
}

Tensor listmle_loss(const Tensor& scores, std::span<const std::size_t> rows) {
  const auto& sv = scores.value();
  if (sv.cols() != 1) throw ShapeError("listmle_loss: scores must be a column, got " + sv.shape_string());
  for (auto r : rows)
    if (r >= sv.rows()) throw ShapeError("listmle_loss: row index out of range");
  std::vector<double> z(rows.size());
  for (std::size_t j = 0; j < rows.size(); ++j) z[j] = sv[rows[j]];
  auto s = suffix_logsumexp(z);
  double loss = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) loss += s[j] - z[j];
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return scores.tape().record(
      "listmle", Matrix(1, 1, loss), {scores},
      [scores, idx, z = std::move(z), s = std::move(s)](Tape& t, const Matrix& g) {
        // d/dz_k = sum_{j <= k} exp(z_k - s_j) - 1
        Matrix gs(scores.rows(), 1);
        for (std::size_t k = 0; k < z.size(); ++k) {
          double acc = 0.0;
          for (std::size_t j = 0; j <= k; ++j) acc += std::exp(z[k] - s[j]);
          gs[idx[k]] += g[0] * (acc - 1.0);
        }
        t.accumulate(scores, gs);
      });
}

std::string history_to_csv(const TrainHistory& h) {
  std::string s = "epoch,loss,val_tau,val_pmr\n";
  for (std::size_t e = 0; e < h.epochs(); ++e)
    s += fmt::format("{},{:.6f},{:.6f},{:.6f}\n", e, h.train_loss[e], h.val_tau[e], h.val_pmr[e]);
  return s;
}

TrainResult train(const Dataset& train_set, const Dataset& val_set, const GraphProvider& graphs,
                  OrderingModel model, const TrainConfig& config) {
  config.validate();
  TrainResult result{std::move(model), {}};
  if (config.epochs == 0) return result;
  if (train_set.paragraphs.empty()) throw ArgumentError("train: training set is empty");
  if (val_set.paragraphs.empty()) throw ArgumentError("train: validation set is empty");

  OrderingModel& m = result.model;
  auto& history = result.history;

  // Graphs and inputs are fixed for the run; build them once.
  const std::size_t count = train_set.paragraphs.size();
  std::vector<Matrix> inputs;
  std::vector<std::vector<ConstraintGraph>> train_graphs;
  std::vector<std::vector<std::size_t>> gold_nodes;
  inputs.reserve(count);
  for (const auto& p : train_set.paragraphs) {
    inputs.push_back(p.presented_embeddings());
    train_graphs.push_back(graphs(p));
    gold_nodes.push_back(p.gold_order_in_nodes());
  }
  std::map<std::string, std::vector<ConstraintGraph>> val_graphs;
  for (const auto& p : val_set.paragraphs) val_graphs.emplace(p.id, graphs(p));
  const GraphProvider cached_val = [&val_graphs](const Paragraph& p) { return val_graphs.at(p.id); };

  auto params = m.parameters();
  AdamW opt(params, config);
  Rng rng(mix_seed(config.seed, 7));
  std::vector<std::size_t> order = identity_order(count);
  std::vector<NamedTensor> best_state = m.state();
  double best_metric = -std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(std::span<std::size_t>(order), rng);
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t start = 0, batch_no = 0; start < count; start += config.batch_size, ++batch_no) {
      const std::size_t stop = std::min(count, start + config.batch_size);
      std::vector<const Matrix*> emb;
      std::vector<const std::vector<ConstraintGraph>*> gs;
      std::size_t nodes = 0;
      for (std::size_t r = start; r < stop; ++r) {
        emb.push_back(&inputs[order[r]]);
        gs.push_back(&train_graphs[order[r]]);
        nodes += inputs[order[r]].rows();
      }
      // Batch norm needs at least two nodes.
      if (nodes < 2) continue;
      const GraphBatch batch = make_batch(emb, gs);

      opt.zero_grad();
      Tape tape;
      Tensor scores;
      try {
        scores = forward(tape, batch, m, Mode::train, mix_seed(mix_seed(config.seed, epoch), batch_no));
      } catch (const NumericError& e) {
        throw TrainingDivergedError(fmt::format("epoch {}: {}", epoch, e.what()), history);
      }
      Tensor total;
      for (std::size_t b = 0; b < emb.size(); ++b) {
        std::vector<std::size_t> rows = gold_nodes[order[start + b]];
        for (auto& r : rows) r += batch.graphs.front().offsets[b];
        Tensor l = listmle_loss(scores, rows);
        total = total.valid() ? add(total, l) : l;
      }
      Tensor loss = scale(total, 1.0 / static_cast<double>(emb.size()));
      if (!std::isfinite(loss.item())) {
        throw TrainingDivergedError(fmt::format("epoch {}: non-finite loss", epoch), history);
      }
      tape.backward(loss);
      if (config.max_grad_norm > 0.0) clip_grad_norm(params, config.max_grad_norm);
      try {
        opt.step();
      } catch (const NumericError& e) {
        throw TrainingDivergedError(fmt::format("epoch {}: {}", epoch, e.what()), history);
      }
      loss_sum += loss.item() * static_cast<double>(emb.size());
      loss_count += emb.size();
    }

    EvalReport rep;
    try {
      rep = evaluate(m, val_set, cached_val);
    } catch (const NumericError& e) {
      throw TrainingDivergedError(fmt::format("epoch {} validation: {}", epoch, e.what()), history);
    }
    history.train_loss.push_back(loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0);
    history.val_tau.push_back(rep.tau_mean);
    history.val_pmr.push_back(rep.pmr);
    const double metric = config.validation_metric == ValidationMetric::tau ? rep.tau_mean : rep.pmr;
    if (metric > best_metric) {
      best_metric = metric;
      best_state = m.state();
      history.best_epoch = epoch;
    }
  }
  m.load_state(best_state);
  return result;
}

}  // namespace congraph
