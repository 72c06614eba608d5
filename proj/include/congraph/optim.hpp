#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "congraph/autodiff.hpp"

namespace congraph {

enum class ValidationMetric { tau, pmr };

/// Optimisation settings shared by both training phases. Config-file keys are
/// the field names verbatim.
struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::size_t epochs = 20;
  std::uint64_t seed = 42;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  ValidationMetric validation_metric = ValidationMetric::tau;
  /// Global gradient-norm clip; 0 disables clipping.
  double max_grad_norm = 0.0;

  void validate() const;
};

/// Sets one field from its textual value. Unknown keys or bad values throw ArgumentError.
void apply_config_value(TrainConfig& cfg, const std::string& key, const std::string& value);
std::map<std::string, std::string> to_key_values(const TrainConfig& cfg);

/// Parses `key = value` lines; '#' starts a comment. Throws ArgumentError with the line number.
std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path);

/// AdamW with bias correction and decoupled weight decay.
class AdamW {
 public:
  AdamW(std::vector<Parameter*> params, const TrainConfig& cfg);

  /// One update from the gradients currently held by the parameters.
  /// Non-finite gradients throw NumericError before anything is modified.
  void step();
  void zero_grad();
  std::size_t steps_taken() const noexcept { return t_; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  double lr_, beta1_, beta2_, eps_, weight_decay_;
  std::size_t t_ = 0;
};

/// Scales gradients so their global L2 norm is at most max_norm; returns the norm before clipping.
double clip_grad_norm(const std::vector<Parameter*>& params, double max_norm);

}  // namespace congraph
