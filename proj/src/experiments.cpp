#include "congraph/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include <fmt/core.h>

#include "congraph/error.hpp"
#include "congraph/graph.hpp"
#include "congraph/log.hpp"
#include "congraph/metrics.hpp"
#include "congraph/random.hpp"
#include "congraph/ranking.hpp"
#include "json.hpp"

namespace congraph {

void SyntheticConfig::validate() const {
  if (n_min < 1 || n_max < n_min) throw ArgumentError("synthetic n range must satisfy 1 <= n_min <= n_max");
  if (n_max > kMaxSentences) throw ArgumentError(fmt::format("n_max may not exceed {}", kMaxSentences));
  if (embedding_dim < 1) throw ArgumentError("embedding_dim must be positive");
  if (position_signal < 0.0 || noise < 0.0) throw ArgumentError("signal and noise scales must be non-negative");
  for (const auto& [d, a] : oracle_accuracies)
    if (!(a > 0.0 && a <= 1.0) || d < 1) throw ArgumentError("oracle accuracies must lie in (0, 1]");
  if (!(default_oracle_accuracy > 0.0 && default_oracle_accuracy <= 1.0))
    throw ArgumentError("oracle accuracies must lie in (0, 1]");
}

double SyntheticConfig::oracle_accuracy(std::size_t d) const {
  auto it = oracle_accuracies.find(d);
  return it == oracle_accuracies.end() ? default_oracle_accuracy : it->second;
}

double positional_curve(std::size_t k, double x) {
  return std::cos(std::numbers::pi * static_cast<double>(k + 1) * x);
}

Splits generate_dataset(const SyntheticConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const std::size_t dim = cfg.embedding_dim;
  const std::size_t signal_dims = std::min(kSignalDims, dim > 1 ? dim - 1 : 0);
  std::vector<Paragraph> all;
  all.reserve(cfg.count);
  for (std::size_t i = 0; i < cfg.count; ++i) {
    const std::size_t n = cfg.n_min + uniform_index(rng, cfg.n_max - cfg.n_min + 1);
    Paragraph p;
    p.id = fmt::format("p{:06}", i);
    for (std::size_t t = 0; t < n; ++t) {
      Sentence s;
      s.index = t;
      s.embedding.resize(dim);
      const double x = static_cast<double>(t) / static_cast<double>(n);
      for (std::size_t k = 0; k + 1 < dim; ++k) {
        const double signal = k < signal_dims ? cfg.position_signal * positional_curve(k, x) : 0.0;
        s.embedding[k] = signal + cfg.noise * standard_normal(rng);
      }
      s.embedding[dim - 1] = dim > 1 ? cfg.intercept : cfg.noise * standard_normal(rng);
      p.sentences.push_back(std::move(s));
    }
    p.gold_order = identity_order(n);
    p.presentation_order = identity_order(n);
    all.push_back(std::move(p));
  }

  const std::size_t n_train = cfg.count * 8 / 10;
  const std::size_t n_val = cfg.count / 10;
  Splits out;
  for (auto* ds : {&out.train, &out.val, &out.test}) ds->embedding_dim = dim;
  out.train.split = Split::train;
  out.val.split = Split::val;
  out.test.split = Split::test;
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto& dst = i < n_train ? out.train : (i < n_train + n_val ? out.val : out.test);
    dst.paragraphs.push_back(std::move(all[i]));
  }
  return out;
}

std::string ExperimentCell::field(const std::string& name) const {
  for (const auto& [k, v] : fields)
    if (k == name) return v;
  return {};
}

namespace {

struct ShuffledSplits {
  Dataset train, val, test;
};

ShuffledSplits prepare(const SyntheticConfig& data, std::uint64_t seed) {
  SyntheticConfig cfg = data;
  cfg.seed = mix_seed(data.seed, seed);
  auto splits = generate_dataset(cfg);
  return {shuffle_presentation(splits.train, mix_seed(seed, 1)),
          shuffle_presentation(splits.val, mix_seed(seed, 2)),
          shuffle_presentation(splits.test, mix_seed(seed, 3))};
}

ExperimentCell run_cell(std::vector<std::pair<std::string, std::string>> fields, std::uint64_t seed,
                        const ShuffledSplits& data, const GraphProvider& graphs, ModelConfig model_cfg,
                        TrainConfig train_cfg) {
  ExperimentCell cell;
  cell.fields = std::move(fields);
  cell.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    model_cfg.seed = mix_seed(seed, 11);
    train_cfg.seed = mix_seed(seed, 13);
    auto trained = train(data.train, data.val, graphs, OrderingModel(model_cfg), train_cfg);
    const auto rep = evaluate(trained.model, data.test, graphs);
    cell.tau = rep.tau_mean;
    cell.pmr = rep.pmr;
  } catch (const std::exception& e) {
    cell.failed = true;
    cell.error = e.what();
    logging::warn("experiment cell failed (seed {}): {}", seed, e.what());
  }
  cell.runtime_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return cell;
}

std::string cell_label(const ExperimentCell& c) {
  std::string s;
  for (const auto& [k, v] : c.fields) {
    if (!s.empty()) s += " ";
    s += k + "=" + v;
  }
  return s;
}

}  // namespace

ExperimentResult layer_sweep(std::size_t n_fixed, const std::vector<std::size_t>& distances,
                             const std::vector<std::size_t>& layer_counts, bool use_ground_truth,
                             const ExperimentSettings& base, const std::vector<std::uint64_t>& seeds) {
  if (n_fixed < 2) throw ArgumentError("layer_sweep needs paragraphs of at least 2 sentences");
  if (distances.empty() || layer_counts.empty() || seeds.empty())
    throw ArgumentError("layer_sweep needs distances, layer counts and seeds");
  ExperimentResult result{"layer_sweep", {}, seeds, n_fixed};
  SyntheticConfig data_cfg = base.data;
  data_cfg.n_min = data_cfg.n_max = n_fixed;
  for (auto seed : seeds) {
    const auto data = prepare(data_cfg, seed);
    for (auto d : distances) {
      GraphProvider graphs = use_ground_truth
                                 ? ground_truth_provider({d})
                                 : oracle_provider({d}, data_cfg.oracle_accuracy(d), mix_seed(seed, d));
      for (auto layers : layer_counts) {
        ModelConfig mc = base.model;
        mc.input_dim = data_cfg.embedding_dim;
        mc.layers = {layers};
        mc.distances = {d};
        auto cell = run_cell({{"d", std::to_string(d)}, {"L", std::to_string(layers)}}, seed, data,
                             graphs, mc, base.train);
        logging::info("sweep seed={} d={} L={}: pmr={:.4f} tau={:.4f} ({:.1f}s)", seed, d, layers,
                  cell.pmr, cell.tau, cell.runtime_seconds);
        result.cells.push_back(std::move(cell));
      }
    }
  }
  return result;
}

std::vector<DominanceViolation> layer_dominance_violations(const ExperimentResult& sweep) {
  std::vector<DominanceViolation> out;
  if (sweep.n_fixed < 2) return out;
  auto sufficient = [&](const ExperimentCell& c) {
    const auto d = std::stoul(c.field("d"));
    const auto l = std::stoul(c.field("L"));
    return l >= min_layers(sweep.n_fixed, d);
  };
  for (const auto& a : sweep.cells) {
    if (a.failed || !sufficient(a)) continue;
    for (const auto& b : sweep.cells) {
      if (b.failed || b.seed != a.seed || sufficient(b)) continue;
      if (a.pmr < b.pmr) out.push_back({a.seed, cell_label(a), cell_label(b), a.pmr, b.pmr});
    }
  }
  return out;
}

std::string subset_label(const std::vector<std::size_t>& subset) {
  std::string s = "{";
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (i) s += ",";
    s += "g" + std::to_string(subset[i] + 1);
  }
  return s + "}";
}

ExperimentResult ablation(const std::vector<std::vector<std::size_t>>& subsets,
                          const ExperimentSettings& base, const std::vector<std::uint64_t>& seeds) {
  if (subsets.empty() || seeds.empty()) throw ArgumentError("ablation needs subsets and seeds");
  for (const auto& s : subsets) {
    if (s.empty()) throw ArgumentError("ablation: empty graph subset is not a valid configuration");
    for (auto g : s)
      if (g >= kAblationLayers.size()) throw ArgumentError("ablation: graph index must be 0, 1 or 2");
  }
  std::vector<std::size_t> all_distances;
  for (auto l : kAblationLayers) all_distances.push_back(distance_for_layers(base.data.n_max, l));

  ExperimentResult result{"ablation", {}, seeds};
  for (auto seed : seeds) {
    const auto data = prepare(base.data, seed);
    for (const auto& subset : subsets) {
      std::vector<std::size_t> ds, ls;
      for (auto g : subset) {
        ds.push_back(all_distances[g]);
        ls.push_back(kAblationLayers[g]);
      }
      // The oracle seed depends only on (seed, d), so a graph is identical in every subset.
      const std::vector<std::size_t> ds_copy = ds;
      const SyntheticConfig data_cfg = base.data;
      GraphProvider graphs = [ds_copy, data_cfg, seed](const Paragraph& p) {
        std::vector<ConstraintGraph> out;
        for (auto d : ds_copy) {
          auto one = oracle_provider({d}, data_cfg.oracle_accuracy(d), mix_seed(seed, d));
          out.push_back(one(p).front());
        }
        return out;
      };
      ModelConfig mc = base.model;
      mc.input_dim = base.data.embedding_dim;
      mc.layers = ls;
      mc.distances = ds;
      std::string dstr;
      for (auto d : ds) dstr += (dstr.empty() ? "" : " ") + std::to_string(d);
      auto cell = run_cell({{"graphs", subset_label(subset)}, {"distances", dstr}}, seed, data, graphs,
                           mc, base.train);
      logging::info("ablation seed={} {}: tau={:.4f} pmr={:.4f} ({:.1f}s)", seed, subset_label(subset),
                cell.tau, cell.pmr, cell.runtime_seconds);
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

std::vector<CellSummary> summarize_cells(const ExperimentResult& result) {
  std::vector<CellSummary> out;
  std::vector<std::vector<const ExperimentCell*>> groups;
  for (const auto& c : result.cells) {
    const auto label = cell_label(c);
    auto it = std::find_if(out.begin(), out.end(), [&](const CellSummary& s) { return s.label == label; });
    if (it == out.end()) {
      out.push_back({label});
      groups.emplace_back();
      it = out.end() - 1;
    }
    if (!c.failed) groups[static_cast<std::size_t>(it - out.begin())].push_back(&c);
  }
  for (std::size_t g = 0; g < out.size(); ++g) {
    auto& s = out[g];
    const auto& cells = groups[g];
    s.runs = cells.size();
    if (cells.empty()) continue;
    for (const auto* c : cells) {
      s.mean_tau += c->tau;
      s.mean_pmr += c->pmr;
    }
    s.mean_tau /= static_cast<double>(cells.size());
    s.mean_pmr /= static_cast<double>(cells.size());
    if (cells.size() > 1) {
      for (const auto* c : cells) {
        s.sd_tau += (c->tau - s.mean_tau) * (c->tau - s.mean_tau);
        s.sd_pmr += (c->pmr - s.mean_pmr) * (c->pmr - s.mean_pmr);
      }
      s.sd_tau = std::sqrt(s.sd_tau / static_cast<double>(cells.size() - 1));
      s.sd_pmr = std::sqrt(s.sd_pmr / static_cast<double>(cells.size() - 1));
    }
  }
  return out;
}

std::string experiment_csv(const ExperimentResult& result) {
  std::string s;
  if (!result.cells.empty()) {
    for (const auto& [k, v] : result.cells.front().fields) s += k + ",";
  }
  s += "seed,tau,pmr,runtime_seconds,status\n";
  for (const auto& c : result.cells) {
    for (const auto& [k, v] : c.fields) s += "\"" + v + "\",";
    s += fmt::format("{},{:.6f},{:.6f},{:.3f},{}\n", c.seed, c.tau, c.pmr, c.runtime_seconds,
                     c.failed ? "failed" : "ok");
  }
  return s;
}

std::string experiment_summary_json(const ExperimentResult& result,
                                    const std::map<std::string, std::string>& config) {
  nlohmann::ordered_json j;
  j["experiment"] = result.name;
  j["config"] = config;
  j["seeds"] = result.seeds;
  nlohmann::ordered_json groups = nlohmann::ordered_json::array();
  for (const auto& s : summarize_cells(result)) {
    groups.push_back({{"label", s.label},
                      {"runs", s.runs},
                      {"mean_tau", s.mean_tau},
                      {"sd_tau", s.sd_tau},
                      {"mean_pmr", s.mean_pmr},
                      {"sd_pmr", s.sd_pmr}});
  }
  j["summary"] = std::move(groups);
  nlohmann::ordered_json failures = nlohmann::ordered_json::array();
  for (const auto& c : result.cells)
    if (c.failed) failures.push_back({{"cell", cell_label(c)}, {"seed", c.seed}, {"error", c.error}});
  j["failures"] = std::move(failures);
  if (result.n_fixed >= 2) {
    nlohmann::ordered_json v = nlohmann::ordered_json::array();
    for (const auto& x : layer_dominance_violations(result))
      v.push_back({{"seed", x.seed},
                   {"sufficient", x.sufficient},
                   {"insufficient", x.insufficient},
                   {"sufficient_pmr", x.sufficient_pmr},
                   {"insufficient_pmr", x.insufficient_pmr}});
    j["depth_dominance_holds"] = v.empty();
    j["depth_dominance_violations"] = std::move(v);
  }
  return j.dump(2) + "\n";
}

}  // namespace congraph
