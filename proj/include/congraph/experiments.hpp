#pragma once

// Synthetic paragraphs with a controllable positional signal, and the two
// experiment harnesses built on them: a (distance, layers) sweep over
// constraint graphs and a multi-graph ablation.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "congraph/data.hpp"
#include "congraph/model.hpp"
#include "congraph/optim.hpp"
#include "congraph/report.hpp"

namespace congraph {

/// Embedding of the sentence at gold position t of an n-sentence paragraph:
///   dims 0..7        position_signal * cos(pi * (k + 1) * t / n) + noise * N(0, 1)
///   remaining dims   noise * N(0, 1)
///   last dim         intercept (constant, noise-free)
struct SyntheticConfig {
  std::size_t count = 100;
  std::size_t n_min = 5;
  std::size_t n_max = 5;
  std::size_t embedding_dim = 16;
  double position_signal = 1.0;
  double noise = 0.5;
  double intercept = 1.0;
  /// Oracle accuracy per distance; distances not listed use default_oracle_accuracy.
  std::map<std::size_t, double> oracle_accuracies;
  double default_oracle_accuracy = 0.85;
  std::uint64_t seed = 42;

  void validate() const;
  double oracle_accuracy(std::size_t d) const;
};

inline constexpr std::size_t kSignalDims = 8;

/// Value of positional curve component k at relative position x.
double positional_curve(std::size_t k, double x);

struct Splits {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// 8:1:1 split of `count` paragraphs; gold order is generation order and
/// presentation order is the identity.
Splits generate_dataset(const SyntheticConfig& cfg);

/// Everything a single experiment cell needs besides its graphs.
struct ExperimentSettings {
  SyntheticConfig data;
  ModelConfig model;
  TrainConfig train;
};

struct ExperimentCell {
  /// Configuration fields in column order, e.g. {"d", "4"}, {"L", "1"}.
  std::vector<std::pair<std::string, std::string>> fields;
  std::uint64_t seed = 0;
  double tau = 0.0;
  double pmr = 0.0;
  double runtime_seconds = 0.0;
  bool failed = false;
  std::string error;

  std::string field(const std::string& name) const;
};

struct ExperimentResult {
  std::string name;
  std::vector<ExperimentCell> cells;
  std::vector<std::uint64_t> seeds;
  /// Paragraph length of a layer sweep; 0 for other experiments.
  std::size_t n_fixed = 0;
};

/// For every seed, one dataset of n_fixed-sentence paragraphs is generated;
/// each (d, L) cell trains a single-graph model on it and records test PMR
/// and tau. Failed cells are recorded and the sweep continues.
ExperimentResult layer_sweep(std::size_t n_fixed, const std::vector<std::size_t>& distances,
                             const std::vector<std::size_t>& layer_counts, bool use_ground_truth,
                             const ExperimentSettings& base, const std::vector<std::uint64_t>& seeds);

/// Graphs g1, g2, g3 use L = {2, 3, 5} and the distances derived from the
/// data's maximum paragraph length. Each subset of {0, 1, 2} trains one model
/// per seed on noisy-oracle graphs.
ExperimentResult ablation(const std::vector<std::vector<std::size_t>>& subsets,
                          const ExperimentSettings& base, const std::vector<std::uint64_t>& seeds);

inline const std::vector<std::size_t> kAblationLayers{2, 3, 5};

struct CellSummary {
  std::string label;
  std::size_t runs = 0;
  double mean_tau = 0.0;
  double sd_tau = 0.0;
  double mean_pmr = 0.0;
  double sd_pmr = 0.0;
};

/// Mean and sample standard deviation of successful cells grouped by label
/// (the concatenated field values), in first-appearance order.
std::vector<CellSummary> summarize_cells(const ExperimentResult& result);

/// A sweep cell with L >= min_layers(n, d) that scored a lower PMR than a
/// cell of the same seed with L < min_layers(n, d).
struct DominanceViolation {
  std::uint64_t seed = 0;
  std::string sufficient;
  std::string insufficient;
  double sufficient_pmr = 0.0;
  double insufficient_pmr = 0.0;
};

/// Pairwise per-seed check that sufficient-depth cells dominate the rest.
std::vector<DominanceViolation> layer_dominance_violations(const ExperimentResult& sweep);

std::string subset_label(const std::vector<std::size_t>& subset);

/// One row per cell: config fields, seed, tau, pmr, runtime_seconds, status.
std::string experiment_csv(const ExperimentResult& result);
std::string experiment_summary_json(const ExperimentResult& result,
                                    const std::map<std::string, std::string>& config);

}  // namespace congraph
