#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <fmt/core.h>

#include "CLI11.hpp"
#include "congraph/data.hpp"
#include "congraph/decode.hpp"
#include "congraph/error.hpp"
#include "congraph/experiments.hpp"
#include "congraph/graph.hpp"
#include "congraph/log.hpp"
#include "congraph/metrics.hpp"
#include "congraph/model.hpp"
#include "congraph/optim.hpp"
#include "congraph/pairwise.hpp"
#include "congraph/ranking.hpp"
#include "json.hpp"

namespace congraph::cli {

namespace fs = std::filesystem;

namespace {

using Config = std::map<std::string, std::string>;

/// Every flag any subcommand may use. Each subcommand owns its own instance,
/// so defaults can differ between subcommands.
struct Options {
  std::string dataset, val, pairs, val_pairs, model, out, history, config, format;
  std::string decoder = "scores";
  std::string distances, layers = "2,3,5", seeds, subsets;
  std::string aggregation = "in_edges";
  std::uint64_t seed = 42;
  std::optional<double> oracle_accuracy;
  bool ground_truth = false;
  std::size_t epochs = 20, batch_size = 32, hidden = 512, pair_hidden = 64;
  std::size_t count = 500, n_min = 5, n_max = 5, embedding_dim = 16, n = 5;
  double lr = 1e-3, weight_decay = 0.01, dropout = 0.1, epsilon = 0.0;
  double signal = 1.0, noise = 0.5, intercept = 1.0;
};

std::vector<std::size_t> parse_list(const std::string& text, const std::string& flag) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto b = tok.find_first_not_of(" \t");
    const auto e = tok.find_last_not_of(" \t");
    tok = b == std::string::npos ? "" : tok.substr(b, e - b + 1);
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      if (tok.empty() || tok[0] == '-') throw std::invalid_argument(tok);
      v = std::stoull(tok, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != tok.size())
      throw ArgumentError(fmt::format("--{}: '{}' is not a non-negative integer", flag, tok));
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw ArgumentError(fmt::format("--{} needs at least one value", flag));
  return out;
}

std::vector<std::uint64_t> to_seeds(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

std::string config_header(const Config& c) {
  std::string s = "# config:";
  for (const auto& [k, v] : c) s += " " + k + "=" + v;
  return s + "\n";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed: " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError(fmt::format("cannot create directory {}: {}", dir.string(), ec.message()));
}

fs::path classifier_path(const fs::path& dir, std::size_t d) {
  return dir / fmt::format("classifier_d{}.json", d);
}

/// Effective flag values of the parsed subcommand: given values, else defaults.
Config effective_config(const CLI::App& sub) {
  Config c;
  for (const auto* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const auto& name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    if (opt->count() > 0) {
      std::string v;
      for (const auto& r : opt->reduced_results()) v += (v.empty() ? "" : ",") + r;
      c[name] = v;
    } else if (!opt->get_default_str().empty()) {
      c[name] = opt->get_default_str();
    }
  }
  c["command"] = sub.get_name();
  return c;
}

TrainConfig train_config(const Options& o) {
  TrainConfig tc;
  tc.learning_rate = o.lr;
  tc.batch_size = o.batch_size;
  tc.epochs = o.epochs;
  tc.weight_decay = o.weight_decay;
  tc.seed = o.seed;
  tc.validate();
  return tc;
}

/// Graph source: pair-prediction files, a noisy oracle, or the gold order.
/// Exactly one must be chosen.
GraphProvider graph_source(const Options& o, const std::vector<std::string>& pair_files,
                           const std::vector<std::size_t>& distances) {
  const int sources = (!pair_files.empty()) + o.oracle_accuracy.has_value() + o.ground_truth;
  if (sources != 1)
    throw ArgumentError("choose exactly one graph source: --pairs, --oracle-accuracy or --ground-truth");
  if (o.ground_truth) return ground_truth_provider(distances);
  if (o.oracle_accuracy) return oracle_provider(distances, *o.oracle_accuracy, o.seed);
  std::vector<PairPredictionRecord> records;
  for (const auto& f : pair_files) {
    auto part = read_pair_predictions(f);
    records.insert(records.end(), part.begin(), part.end());
  }
  return records_provider(records, distances);
}

// ---------------------------------------------------------------------------

int cmd_gen(const Options& o, const Config& cfg) {
  SyntheticConfig sc;
  sc.count = o.count;
  sc.n_min = o.n_min;
  sc.n_max = o.n_max;
  sc.embedding_dim = o.embedding_dim;
  sc.position_signal = o.signal;
  sc.noise = o.noise;
  sc.intercept = o.intercept;
  sc.seed = o.seed;
  const auto splits = generate_dataset(sc);
  const fs::path dir = o.out;
  ensure_dir(dir);
  save_dataset(splits.train, dir / "train.jsonl");
  save_dataset(splits.val, dir / "val.jsonl");
  save_dataset(splits.test, dir / "test.jsonl");
  nlohmann::ordered_json manifest{{"config", cfg},
                                  {"train", splits.train.paragraphs.size()},
                                  {"val", splits.val.paragraphs.size()},
                                  {"test", splits.test.paragraphs.size()}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  logging::info("wrote {}/{}/{} paragraphs to {}", splits.train.paragraphs.size(),
                splits.val.paragraphs.size(), splits.test.paragraphs.size(), dir.string());
  return kOk;
}

int cmd_train_pairwise(const Options& o, const Config& cfg) {
  const auto ds = load_dataset(o.dataset);
  const auto distances = parse_list(o.distances, "distances");
  const fs::path dir = o.out;
  ensure_dir(dir);
  std::vector<PairPredictionRecord> records;
  for (auto d : distances) {
    const auto examples = pair_examples(ds, d);
    auto tc = train_config(o);
    tc.seed = mix_seed(o.seed, d);
    const auto clf = train_pair_classifier(examples, tc, o.pair_hidden);
    auto ckpt = clf.to_checkpoint();
    ckpt.header["d"] = d;
    ckpt.header["cli_config"] = cfg;
    save_checkpoint(classifier_path(dir, d), ckpt);
    logging::info("d={}: {} pairs, final loss {:.4f}", d, examples.size(), clf.final_loss);
    for (const auto& p : ds.paragraphs) records.push_back({p.id, d, predict_paragraph(clf, p)});
  }
  write_pair_predictions(dir / "pairs.jsonl", records);
  return kOk;
}

int cmd_predict(const Options& o, const Config&) {
  const auto ds = load_dataset(o.dataset);
  const auto distances = parse_list(o.distances, "distances");
  if (o.model.empty() == !o.oracle_accuracy.has_value())
    throw ArgumentError("predict needs exactly one of --model (classifier directory) or --oracle-accuracy");
  std::vector<PairPredictionRecord> records;
  for (auto d : distances) {
    std::optional<PairClassifier> clf;
    if (!o.model.empty()) clf = PairClassifier::from_checkpoint(load_checkpoint(classifier_path(o.model, d)));
    for (const auto& p : ds.paragraphs) {
      records.push_back({p.id, d,
                         clf ? predict_paragraph(*clf, p)
                             : noisy_oracle(p, d, *o.oracle_accuracy, oracle_seed(o.seed, p.id, d))});
    }
  }
  write_pair_predictions(o.out, records);
  logging::info("wrote {} pair records to {}", records.size(), o.out);
  return kOk;
}

int cmd_train(const Options& o, const Config& cfg) {
  const auto train_ds = shuffle_presentation(load_dataset(o.dataset), mix_seed(o.seed, 1));
  Dataset val_ds;
  if (o.val.empty()) {
    logging::warn("no --val dataset; selecting the epoch on the training set");
    val_ds = train_ds;
  } else {
    val_ds = shuffle_presentation(load_dataset(o.val), mix_seed(o.seed, 2));
  }
  const auto distances = parse_list(o.distances, "distances");
  const auto layers = parse_list(o.layers, "layers");
  if (distances.size() != layers.size())
    throw ArgumentError(fmt::format("--distances has {} entries but --layers has {}", distances.size(),
                                    layers.size()));
  std::vector<std::string> pair_files;
  if (!o.pairs.empty()) {
    pair_files.push_back(o.pairs);
    if (!o.val.empty() && o.val_pairs.empty()) throw ArgumentError("--val needs --val-pairs when --pairs is used");
    if (!o.val_pairs.empty()) pair_files.push_back(o.val_pairs);
  }
  const auto graphs = graph_source(o, pair_files, distances);

  ModelConfig mc;
  mc.input_dim = train_ds.embedding_dim;
  mc.hidden = o.hidden;
  mc.layers = layers;
  mc.distances = distances;
  mc.epsilon = o.epsilon;
  mc.aggregation = parse_aggregation(o.aggregation);
  mc.dropout = o.dropout;
  mc.seed = o.seed;
  mc.validate();

  const fs::path history_path = o.history.empty() ? fs::path(o.out + ".history.csv") : fs::path(o.history);
  TrainResult result;
  try {
    result = train(train_ds, val_ds, graphs, OrderingModel(mc), train_config(o));
  } catch (const TrainingDivergedError& e) {
    write_text(history_path, config_header(cfg) + history_to_csv(e.history()));
    throw;
  }
  auto ckpt = result.model.to_checkpoint();
  ckpt.header["cli_config"] = cfg;
  save_checkpoint(o.out, ckpt);
  write_text(history_path, config_header(cfg) + history_to_csv(result.history));
  if (result.history.best_epoch) {
    const auto b = *result.history.best_epoch;
    logging::info("best epoch {}: val tau {:.4f}, val pmr {:.4f}", b, result.history.val_tau[b],
                  result.history.val_pmr[b]);
  }
  return kOk;
}

int cmd_eval(const Options& o, const Config& cfg) {
  const auto ds = shuffle_presentation(load_dataset(o.dataset), mix_seed(o.seed, 3));
  const auto method = parse_decoder(o.decoder);
  std::optional<OrderingModel> model;
  if (!o.model.empty()) model = OrderingModel::from_checkpoint(load_checkpoint(o.model));
  if (method == DecodeMethod::scores && !model) throw ArgumentError("--decoder scores needs --model");

  std::vector<std::size_t> distances;
  if (!o.distances.empty()) distances = parse_list(o.distances, "distances");
  if (model) {
    if (!distances.empty() && distances != model->config().distances)
      throw ArgumentError("--distances disagrees with the distances the model was trained on");
    distances = model->config().distances;
  }
  if (distances.empty()) throw ArgumentError("--distances is required without --model");
  std::vector<std::string> pair_files;
  if (!o.pairs.empty()) pair_files.push_back(o.pairs);
  const auto graphs = graph_source(o, pair_files, distances);

  auto report = method == DecodeMethod::scores ? evaluate(*model, ds, graphs)
                                               : evaluate_decoder(ds, graphs, method, 0);
  report.config = cfg;
  const bool csv = o.format == "csv" || (o.format.empty() && fs::path(o.out).extension() == ".csv");
  if (!o.format.empty() && o.format != "csv" && o.format != "json")
    throw ArgumentError("--format must be json or csv");
  write_report(report, o.out, csv ? ReportFormat::csv : ReportFormat::json);
  fmt::print("tau={:.4f} pmr={:.4f} first={:.4f} last={:.4f} evaluated={} skipped={}\n", report.tau_mean,
             report.pmr, report.first_acc, report.last_acc, report.n_evaluated, report.n_skipped);
  return kOk;
}

ExperimentSettings experiment_settings(const Options& o) {
  ExperimentSettings s;
  s.data.count = o.count;
  s.data.embedding_dim = o.embedding_dim;
  s.data.position_signal = o.signal;
  s.data.noise = o.noise;
  s.data.intercept = o.intercept;
  s.data.seed = o.seed;
  if (o.oracle_accuracy) s.data.default_oracle_accuracy = *o.oracle_accuracy;
  s.model.hidden = o.hidden;
  s.model.dropout = o.dropout;
  s.model.epsilon = o.epsilon;
  s.model.aggregation = parse_aggregation(o.aggregation);
  s.train = train_config(o);
  return s;
}

int write_experiment(const ExperimentResult& r, const Options& o, const Config& cfg, const std::string& stem) {
  const fs::path dir = o.out;
  ensure_dir(dir);
  write_text(dir / (stem + ".csv"), config_header(cfg) + experiment_csv(r));
  write_text(dir / (stem + "_summary.json"), experiment_summary_json(r, cfg));
  for (const auto& s : summarize_cells(r))
    fmt::print("{:<40} runs={} tau={:.4f}±{:.4f} pmr={:.4f}±{:.4f}\n", s.label, s.runs, s.mean_tau, s.sd_tau,
               s.mean_pmr, s.sd_pmr);
  for (const auto& c : r.cells)
    if (c.failed) return kNumericError;
  return kOk;
}

int cmd_sweep_layers(const Options& o, const Config& cfg) {
  auto s = experiment_settings(o);
  const auto r = layer_sweep(o.n, parse_list(o.distances, "distances"), parse_list(o.layers, "layers"),
                             !o.oracle_accuracy.has_value(), s, to_seeds(parse_list(o.seeds, "seeds")));
  const int code = write_experiment(r, o, cfg, "sweep");
  const auto violations = layer_dominance_violations(r);
  fmt::print("depth dominance: {}\n", violations.empty() ? "holds" : "violated");
  for (const auto& v : violations)
    fmt::print("  seed {}: {} pmr={:.4f} < {} pmr={:.4f}\n", v.seed, v.sufficient, v.sufficient_pmr,
               v.insufficient, v.insufficient_pmr);
  return code;
}

/// "1,2,3,123" -> {g1}, {g2}, {g3}, {g1,g2,g3}.
std::vector<std::vector<std::size_t>> parse_subsets(const std::string& text) {
  std::vector<std::vector<std::size_t>> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::vector<std::size_t> subset;
    for (char c : tok) {
      if (c == ' ') continue;
      if (c < '1' || c > '3') throw ArgumentError(fmt::format("--subsets: bad graph '{}' in '{}'", c, tok));
      subset.push_back(static_cast<std::size_t>(c - '1'));
    }
    if (subset.empty()) throw ArgumentError("--subsets: empty graph subset");
    out.push_back(std::move(subset));
  }
  if (out.empty()) throw ArgumentError("--subsets needs at least one subset");
  return out;
}

int cmd_ablate(const Options& o, const Config& cfg) {
  auto s = experiment_settings(o);
  s.data.n_min = o.n_min;
  s.data.n_max = o.n_max;
  const auto subsets = parse_subsets(o.subsets);
  const auto r = ablation(subsets, s, to_seeds(parse_list(o.seeds, "seeds")));
  const int code = write_experiment(r, o, cfg, "ablation");
  auto mean_tau = [&](const std::vector<std::size_t>& subset) -> std::optional<double> {
    double sum = 0.0;
    std::size_t runs = 0;
    for (const auto& c : r.cells)
      if (!c.failed && c.field("graphs") == subset_label(subset)) sum += c.tau, ++runs;
    if (runs == 0) return std::nullopt;
    return sum / static_cast<double>(runs);
  };
  std::optional<double> full, best_single;
  for (const auto& subset : subsets) {
    const auto m = mean_tau(subset);
    if (!m) continue;
    if (subset.size() == 3) full = m;
    if (subset.size() == 1) best_single = std::max(best_single.value_or(*m), *m);
  }
  if (full && best_single) fmt::print("full set minus best single graph: {:+.4f} tau\n", *full - *best_single);
  return code;
}

// ---------------------------------------------------------------------------

/// Splices `key = value` lines of a --config file in front of the explicit
/// flags, so flags given on the command line win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path || args.empty()) return args;
  std::vector<std::string> out{args.front()};
  for (const auto& [k, v] : read_key_value_file(*path)) out.push_back("--" + k + "=" + v);
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--seed", o.seed, "Random seed");
  sub->add_option("--config", o.config, "File of `flag = value` lines; explicit flags override it");
}

void add_training(CLI::App* sub, Options& o) {
  sub->add_option("--epochs", o.epochs, "Training epochs");
  sub->add_option("--lr", o.lr, "AdamW learning rate");
  sub->add_option("--batch-size", o.batch_size, "Mini-batch size");
  sub->add_option("--weight-decay", o.weight_decay, "AdamW decoupled weight decay");
}

void add_model(CLI::App* sub, Options& o) {
  sub->add_option("--hidden", o.hidden, "Hidden width of the ordering network");
  sub->add_option("--dropout", o.dropout, "Dropout rate on input embeddings");
  sub->add_option("--epsilon", o.epsilon, "GIN self weight");
  sub->add_option("--aggregation", o.aggregation, "Edges aggregated: in_edges, out_edges or both");
}

void add_synthetic(CLI::App* sub, Options& o) {
  sub->add_option("--count", o.count, "Number of synthetic paragraphs");
  sub->add_option("--embedding-dim", o.embedding_dim, "Sentence embedding width");
  sub->add_option("--signal", o.signal, "Scale of the positional component of embeddings");
  sub->add_option("--noise", o.noise, "Standard deviation of embedding noise");
  sub->add_option("--intercept", o.intercept, "Constant value of the last embedding coordinate");
}

void add_graph_source(CLI::App* sub, Options& o) {
  sub->add_option("--pairs", o.pairs, "Pair-prediction JSONL for --dataset");
  sub->add_option("--oracle-accuracy", o.oracle_accuracy, "Use noisy-oracle graphs of this accuracy");
  sub->add_flag("--ground-truth", o.ground_truth, "Use exact constraint graphs from the gold order");
}

}  // namespace

int run(const std::vector<std::string>& raw_args) {
  CLI::App app{"Sentence ordering with multiple constraint graphs", "congraph"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::vector<std::pair<CLI::App*, std::function<int(const Config&)>>> commands;
  std::map<std::string, Options> opts;

  {
    auto& o = opts["gen"];
    auto* sub = app.add_subcommand("gen", "Write a synthetic train/val/test split as JSONL");
    sub->add_option("--out", o.out, "Output directory")->required();
    add_synthetic(sub, o);
    sub->add_option("--n-min", o.n_min, "Fewest sentences per paragraph");
    sub->add_option("--n-max", o.n_max, "Most sentences per paragraph");
    add_common(sub, o);
    commands.emplace_back(sub, [&o](const Config& c) { return cmd_gen(o, c); });
  }
  {
    auto& o = opts["train-pairwise"];
    o.epochs = 5;
    auto* sub = app.add_subcommand("train-pairwise", "Train one pair classifier per distance");
    sub->add_option("--dataset", o.dataset, "Training dataset (JSONL)")->required();
    sub->add_option("--distances", o.distances, "Comma-separated distances, e.g. 14,7,4")->required();
    sub->add_option("--out", o.out, "Output directory for checkpoints and pairs.jsonl")->required();
    sub->add_option("--pair-hidden", o.pair_hidden, "Hidden width of each classifier");
    add_training(sub, o);
    add_common(sub, o);
    commands.emplace_back(sub, [&o](const Config& c) { return cmd_train_pairwise(o, c); });
  }
  {
    auto& o = opts["predict"];
    auto* sub = app.add_subcommand("predict", "Write pair predictions from classifiers or a noisy oracle");
    sub->add_option("--dataset", o.dataset, "Dataset (JSONL)")->required();
    sub->add_option("--distances", o.distances, "Comma-separated distances")->required();
    sub->add_option("--out", o.out, "Output pair-prediction JSONL")->required();
    sub->add_option("--model", o.model, "Directory written by train-pairwise");
    sub->add_option("--oracle-accuracy", o.oracle_accuracy, "Simulate a classifier of this accuracy");
    add_common(sub, o);
    commands.emplace_back(sub, [&o](const Config& c) { return cmd_predict(o, c); });
  }
  {
    auto& o = opts["train"];
    auto* sub = app.add_subcommand("train", "Train the ordering network");
    sub->add_option("--dataset", o.dataset, "Training dataset (JSONL)")->required();
    sub->add_option("--val", o.val, "Validation dataset used to pick the best epoch");
    sub->add_option("--val-pairs", o.val_pairs, "Pair-prediction JSONL for --val");
    add_graph_source(sub, o);
    sub->add_option("--distances", o.distances, "Distance of each constraint graph")->required();
    sub->add_option("--layers", o.layers, "GIN layers per graph, aligned with --distances");
    sub->add_option("--out", o.out, "Model checkpoint path")->required();
    sub->add_option("--history", o.history, "History CSV path (default: <out>.history.csv)");
    add_model(sub, o);
    add_training(sub, o);
    add_common(sub, o);
    commands.emplace_back(sub, [&o](const Config& c) { return cmd_train(o, c); });
  }
  {
    auto& o = opts["eval"];
    auto* sub = app.add_subcommand("eval", "Evaluate a model or a graph decoder");
    sub->add_option("--dataset", o.dataset, "Dataset (JSONL)")->required();
    add_graph_source(sub, o);
    sub->add_option("--model", o.model, "Model checkpoint (required for --decoder scores)");
    sub->add_option("--decoder", o.decoder, "scores, topo or pairsum")
        ->check(CLI::IsMember({"scores", "topo", "pairsum"}));
    sub->add_option("--distances", o.distances, "Graph distances (default: the model's)");
    sub->add_option("--out", o.out, "Report path")->required();
    sub->add_option("--format", o.format, "json or csv (default: from the extension)");
    add_common(sub, o);
    commands.emplace_back(sub, [&o](const Config& c) { return cmd_eval(o, c); });
  }
  {
    auto& o = opts["sweep-layers"];
    o.count = 2500;
    o.signal = 0.0;
    o.hidden = 32;
    o.epochs = 10;
    o.lr = 3e-3;
    o.distances = "1,4";
    o.layers = "1,2,3,4,5";
    o.seeds = "1,2,3";
    auto* sub = app.add_subcommand("sweep-layers", "Train one single-graph model per (distance, layers) cell");
    sub->add_option("--out", o.out, "Output directory")->required();
    sub->add_option("--n", o.n, "Sentences per paragraph");
    sub->add_option("--distances", o.distances, "Distances to sweep");
    sub->add_option("--layers", o.layers, "Layer counts to sweep");
    sub->add_option("--seeds", o.seeds, "Comma-separated seeds");
    sub->add_option("--oracle-accuracy", o.oracle_accuracy, "Use noisy-oracle graphs instead of exact ones");
    add_synthetic(sub, o);
    add_model(sub, o);
    add_training(sub, o);
    add_common(sub, o);
    commands.emplace_back(sub, [&o](const Config& c) { return cmd_sweep_layers(o, c); });
  }
  {
    auto& o = opts["ablate"];
    o.count = 1000;
    o.n_max = 9;
    o.signal = 0.3;
    o.hidden = 32;
    o.epochs = 10;
    o.lr = 3e-3;
    o.seeds = "1,2,3,4,5";
    o.subsets = "1,2,3,123";
    o.oracle_accuracy = 0.85;
    auto* sub = app.add_subcommand("ablate", "Compare subsets of the three constraint graphs");
    sub->add_option("--out", o.out, "Output directory")->required();
    sub->add_option("--subsets", o.subsets, "Graph subsets, e.g. 1,2,3,123 for {g1},{g2},{g3},{g1,g2,g3}");
    sub->add_option("--seeds", o.seeds, "Comma-separated seeds");
    sub->add_option("--oracle-accuracy", o.oracle_accuracy, "Accuracy of the simulated pair classifiers");
    sub->add_option("--n-min", o.n_min, "Fewest sentences per paragraph");
    sub->add_option("--n-max", o.n_max, "Most sentences per paragraph");
    add_synthetic(sub, o);
    add_model(sub, o);
    add_training(sub, o);
    add_common(sub, o);
    commands.emplace_back(sub, [&o](const Config& c) { return cmd_ablate(o, c); });
  }

  try {
    auto args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kConfigError;
  }

  try {
    for (auto& [sub, fn] : commands)
      if (sub->parsed()) return fn(effective_config(*sub));
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kConfigError;
  } catch (const DataError& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return kDataError;
  } catch (const nlohmann::json::exception& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return kDataError;
  } catch (const NumericError& e) {
    fmt::print(stderr, "numeric error: {}\n", e.what());
    return kNumericError;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kConfigError;
  }
}

}  // namespace congraph::cli
