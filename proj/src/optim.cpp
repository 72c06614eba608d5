#include "congraph/optim.hpp"

#include <cmath>
#include <fstream>

#include <fmt/core.h>

#include "congraph/error.hpp"

namespace congraph {

namespace {

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ArgumentError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const auto u = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw ArgumentError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
  }
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ArgumentError("learning_rate must be positive");
  if (batch_size == 0) throw ArgumentError("batch_size must be positive");
  if (weight_decay < 0.0) throw ArgumentError("weight_decay must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ArgumentError("adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw ArgumentError("adam_eps must be positive");
  if (max_grad_norm < 0.0) throw ArgumentError("max_grad_norm must be non-negative");
}

void apply_config_value(TrainConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "learning_rate") cfg.learning_rate = parse_double(key, value);
  else if (key == "batch_size") cfg.batch_size = parse_uint(key, value);
  else if (key == "epochs") cfg.epochs = parse_uint(key, value);
  else if (key == "seed") cfg.seed = parse_uint(key, value);
  else if (key == "weight_decay") cfg.weight_decay = parse_double(key, value);
  else if (key == "beta1") cfg.beta1 = parse_double(key, value);
  else if (key == "beta2") cfg.beta2 = parse_double(key, value);
  else if (key == "adam_eps") cfg.adam_eps = parse_double(key, value);
  else if (key == "max_grad_norm") cfg.max_grad_norm = parse_double(key, value);
  else if (key == "validation_metric") {
    if (value == "tau") cfg.validation_metric = ValidationMetric::tau;
    else if (value == "pmr") cfg.validation_metric = ValidationMetric::pmr;
    else throw ArgumentError("validation_metric must be 'tau' or 'pmr', got '" + value + "'");
  } else {
    throw ArgumentError("unknown training config key '" + key + "'");
  }
}

std::map<std::string, std::string> to_key_values(const TrainConfig& cfg) {
  return {{"learning_rate", fmt::format("{}", cfg.learning_rate)},
          {"batch_size", std::to_string(cfg.batch_size)},
          {"epochs", std::to_string(cfg.epochs)},
          {"seed", std::to_string(cfg.seed)},
          {"weight_decay", fmt::format("{}", cfg.weight_decay)},
          {"beta1", fmt::format("{}", cfg.beta1)},
          {"beta2", fmt::format("{}", cfg.beta2)},
          {"adam_eps", fmt::format("{}", cfg.adam_eps)},
          {"validation_metric", cfg.validation_metric == ValidationMetric::tau ? "tau" : "pmr"},
          {"max_grad_norm", fmt::format("{}", cfg.max_grad_norm)}};
}

std::map<std::string, std::string> read_key_value_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config file: " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ArgumentError(fmt::format("{}:{}: expected 'key = value'", path.string(), lineno));
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

AdamW::AdamW(std::vector<Parameter*> params, const TrainConfig& cfg)
    : params_(std::move(params)),
      lr_(cfg.learning_rate),
      beta1_(cfg.beta1),
      beta2_(cfg.beta2),
      eps_(cfg.adam_eps),
      weight_decay_(cfg.weight_decay) {
  for (auto* p : params_) {
    m_.emplace_back(p->value.rows(), p->value.cols());
    v_.emplace_back(p->value.rows(), p->value.cols());
  }
}

void AdamW::zero_grad() {
  for (auto* p : params_) p->zero_grad();
}

void AdamW::step() {
  for (auto* p : params_) {
    if (!p->grad.same_shape(p->value)) throw ShapeError("AdamW: gradient shape mismatch for " + p->name);
    if (!p->grad.all_finite()) throw NumericError("AdamW: non-finite gradient for " + p->name);
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& w = params_[k]->value;
    const auto& g = params_[k]->grad;
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < w.size(); ++i) {
      w[i] *= 1.0 - lr_ * weight_decay_;
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      w[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

double clip_grad_norm(const std::vector<Parameter*>& params, double max_norm) {
  double sq = 0.0;
  for (const auto* p : params)
    for (double g : p->grad.data()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / norm;
    for (auto* p : params)
      for (double& g : p->grad.data()) g *= s;
  }
  return norm;
}

}  // namespace congraph
