#pragma once

// Phase one: relative-order constraints between sentence pairs within a
// distance d, a feature-based classifier for them, and a noisy oracle that
// stands in for a trained classifier of known accuracy.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "congraph/autodiff.hpp"
#include "congraph/data.hpp"
#include "congraph/optim.hpp"

namespace congraph {

/// Ordered sentence pair (sentence indices). y = 1 iff 0 < pos(j) - pos(i) <= d.
struct LabeledPair {
  std::size_t i = 0;
  std::size_t j = 0;
  int y = 0;
  std::size_t d = 1;

  friend bool operator==(const LabeledPair&, const LabeledPair&) = default;
};

/// q is the raw probability that i precedes j within d; p is q thresholded.
struct PairPrediction {
  std::size_t i = 0;
  std::size_t j = 0;
  double q = 0.0;
  double p = 0.0;

  friend bool operator==(const PairPrediction&, const PairPrediction&) = default;
};

/// p = q if q > 0.5, else 0 (strict: q == 0.5 maps to 0).
double threshold(double q) noexcept;
PairPrediction make_prediction(std::size_t i, std::size_t j, double q) noexcept;

/// Labels for every ordered pair (a, b), a != b, in row-major order.
std::vector<LabeledPair> build_constraint_labels(const Paragraph& paragraph, std::size_t d);

/// [emb(a); emb(b)].
std::vector<double> pair_features(const Sentence& a, const Sentence& b);

/// Binary cross entropy of one prediction: -y log q - (1 - y) log(1 - q).
double bce(double q, double y);

/// Mean BCE over rows of an n x 1 logit tensor, computed from logits for stability.
Tensor bce_with_logits(const Tensor& logits, std::span<const double> labels);

/// MLP feature -> hidden (ReLU) -> scalar logit.
class PairClassifier {
 public:
  PairClassifier() = default;
  PairClassifier(std::size_t feature_dim, std::size_t hidden, std::uint64_t seed);

  std::size_t feature_dim() const noexcept { return w1_.value.rows(); }
  std::size_t hidden() const noexcept { return w1_.value.cols(); }

  /// Logits for each row of `features` (N x feature_dim) -> N x 1.
  Tensor forward(Tape& tape, const Matrix& features);
  double logit(std::span<const double> features) const;

  std::vector<Parameter*> parameters();

  double final_loss = 0.0;

  Checkpoint to_checkpoint() const;
  static PairClassifier from_checkpoint(const Checkpoint& ckpt);

 private:
  Parameter w1_, b1_, w2_, b2_;
};

PairPrediction predict_pair(const PairClassifier& clf, const Sentence& a, const Sentence& b);
/// Predictions for every ordered pair of the paragraph (sentence indices).
std::vector<PairPrediction> predict_paragraph(const PairClassifier& clf, const Paragraph& paragraph);

struct PairExample {
  std::vector<double> features;
  int y = 0;
};

/// Every ordered pair of every paragraph with its distance-d label.
std::vector<PairExample> pair_examples(const Dataset& dataset, std::size_t d);

/// Minimises mean BCE with AdamW over shuffled mini-batches. Throws
/// ArgumentError on empty input and NumericError when the loss diverges.
PairClassifier train_pair_classifier(std::span<const PairExample> pairs, const TrainConfig& config,
                                     std::size_t hidden = 64);

/// Simulated classifier: keeps the true label with probability `accuracy`,
/// flips it otherwise, and draws q on the predicted side. One prediction per
/// ordered pair, row-major.
std::vector<PairPrediction> noisy_oracle(const Paragraph& paragraph, std::size_t d, double accuracy,
                                         std::uint64_t seed);

/// One line of a pair-prediction file.
struct PairPredictionRecord {
  std::string paragraph_id;
  std::size_t d = 1;
  std::vector<PairPrediction> pairs;

  friend bool operator==(const PairPredictionRecord&, const PairPredictionRecord&) = default;
};

/// Writes JSON Lines {"paragraph_id", "d", "pairs": [[i, j, q], ...]} keeping only p > 0.
void write_pair_predictions(const std::filesystem::path& path,
                            std::span<const PairPredictionRecord> records);
std::vector<PairPredictionRecord> read_pair_predictions(const std::filesystem::path& path);

}  // namespace congraph
