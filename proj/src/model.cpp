#include "congraph/model.hpp"

#include <cmath>

#include <tuple>

#include <fmt/core.h>

#include "congraph/error.hpp"

namespace congraph {

std::string to_string(Aggregation a) {
  switch (a) {
    case Aggregation::in_edges: return "in_edges";
    case Aggregation::out_edges: return "out_edges";
    case Aggregation::both: return "both";
  }
  return "in_edges";
}

Aggregation parse_aggregation(const std::string& s) {
  if (s == "in_edges") return Aggregation::in_edges;
  if (s == "out_edges") return Aggregation::out_edges;
  if (s == "both") return Aggregation::both;
  throw ArgumentError("aggregation must be in_edges, out_edges or both, got '" + s + "'");
}

GinConfig ModelConfig::stack_config(std::size_t t) const {
  return {layers.at(t), hidden, epsilon, aggregation, weighted_edges};
}

void ModelConfig::validate() const {
  if (input_dim == 0 || hidden == 0) throw ArgumentError("model dimensions must be positive");
  if (layers.empty()) throw ArgumentError("model needs at least one GIN stack");
  for (auto l : layers)
    if (l == 0) throw ArgumentError("every GIN stack needs at least one layer");
  if (!distances.empty() && distances.size() != layers.size()) {
    throw ArgumentError(fmt::format("{} distances given for {} GIN stacks", distances.size(),
                                    layers.size()));
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ArgumentError("dropout must lie in [0, 1)");
}

nlohmann::json ModelConfig::to_json() const {
  return {{"input_dim", input_dim},   {"hidden", hidden},
          {"layers", layers},         {"distances", distances},
          {"epsilon", epsilon},       {"aggregation", to_string(aggregation)},
          {"weighted_edges", weighted_edges}, {"dropout", dropout},
          {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  try {
    ModelConfig c;
    c.input_dim = j.at("input_dim").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.layers = j.at("layers").get<std::vector<std::size_t>>();
    c.distances = j.at("distances").get<std::vector<std::size_t>>();
    c.epsilon = j.at("epsilon").get<double>();
    c.aggregation = parse_aggregation(j.at("aggregation").get<std::string>());
    c.weighted_edges = j.at("weighted_edges").get<bool>();
    c.dropout = j.at("dropout").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model config: ") + e.what());
  }
}

// ---------------------------------------------------------------------------

Affine::Affine(const std::string& name, std::size_t in, std::size_t out, Rng& rng)
    : weight(name + ".weight", Matrix(in, out)), bias(name + ".bias", Matrix(1, out)) {
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  for (auto& v : weight.value.data()) v = (2.0 * uniform01(rng) - 1.0) * a;
}

Tensor Affine::operator()(Tape& tape, const Tensor& x) {
  return add_row(matmul(x, tape.parameter(weight)), tape.parameter(bias));
}

BlockAdjacency BlockAdjacency::single(Matrix m) {
  BlockAdjacency b;
  b.append(std::move(m));
  return b;
}

void BlockAdjacency::append(Matrix m) {
  if (m.rows() != m.cols()) throw ShapeError("adjacency must be square, got " + m.shape_string());
  offsets.push_back(offsets.back() + m.rows());
  blocks.push_back(std::move(m));
}

GraphBatch make_batch(std::span<const Matrix* const> embeddings,
                      std::span<const std::vector<ConstraintGraph>* const> graphs) {
  if (embeddings.size() != graphs.size()) throw ArgumentError("make_batch: embeddings/graphs count mismatch");
  if (embeddings.empty()) throw ArgumentError("make_batch: empty batch");
  const std::size_t k = graphs.front()->size();
  const std::size_t dim = embeddings.front()->cols();
  std::size_t total = 0;
  for (std::size_t b = 0; b < embeddings.size(); ++b) {
    if (graphs[b]->size() != k) {
      throw ArgumentError(fmt::format("paragraph {} has {} graphs, expected {}", b, graphs[b]->size(), k));
    }
    if (embeddings[b]->cols() != dim) throw DimensionError("make_batch: embedding dims differ");
    for (const auto& g : *graphs[b]) {
      if (g.n != embeddings[b]->rows() || g.adjacency.rows() != g.n) {
        throw ArgumentError(fmt::format("graph with {} nodes for a paragraph of {} sentences", g.n,
                                        embeddings[b]->rows()));
      }
    }
    total += embeddings[b]->rows();
  }
  GraphBatch batch;
  batch.features = Matrix(total, dim);
  batch.graphs.resize(k);
  std::size_t row = 0;
  for (std::size_t b = 0; b < embeddings.size(); ++b) {
    const auto& e = *embeddings[b];
    std::copy(e.data().begin(), e.data().end(), batch.features.data().begin() + static_cast<std::ptrdiff_t>(row * dim));
    row += e.rows();
    for (std::size_t t = 0; t < k; ++t) batch.graphs[t].append((*graphs[b])[t].adjacency);
  }
  return batch;
}

GraphBatch make_batch(const Matrix& embeddings, std::span<const ConstraintGraph> graphs) {
  const Matrix* e = &embeddings;
  const std::vector<ConstraintGraph> g(graphs.begin(), graphs.end());
  const std::vector<ConstraintGraph>* gp = &g;
  return make_batch(std::span<const Matrix* const>(&e, 1),
                    std::span<const std::vector<ConstraintGraph>* const>(&gp, 1));
}

// ---------------------------------------------------------------------------

OrderingModel::OrderingModel(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  Rng rng(config_.seed);
  const std::size_t m = config_.hidden;
  for (std::size_t t = 0; t < config_.graph_count(); ++t) {
    GinStack stack;
    stack.config = config_.stack_config(t);
    for (std::size_t l = 0; l < stack.config.layers; ++l) {
      const std::string prefix = fmt::format("stack{}.layer{}", t, l);
      const std::size_t in = l == 0 ? config_.input_dim : m;
      stack.layers.push_back(GinLayer{Affine(prefix + ".first", in, m, rng),
                                      BatchNorm(prefix + ".norm", m),
                                      Affine(prefix + ".second", m, m, rng)});
    }
    stack.readout = Affine(fmt::format("stack{}.readout", t),
                           config_.input_dim + stack.config.layers * m, m, rng);
    stacks_.push_back(std::move(stack));
  }
  fusion_ = Affine("fusion", config_.graph_count() * m, m, rng);
  scorer_ = Affine("score", m, 1, rng);
}

namespace {

// Visits parameters in a fixed order; shared by the const and mutable accessors.
template <typename Model, typename F>
void visit_parameters(Model& stacks_fusion_scorer, F&& f) {
  auto& [stacks, fusion, scorer] = stacks_fusion_scorer;
  for (auto& s : stacks) {
    for (auto& l : s.layers) {
      for (auto* p : {&l.first.weight, &l.first.bias, &l.norm.gamma, &l.norm.beta, &l.second.weight,
                      &l.second.bias})
        f(*p);
    }
    f(s.readout.weight);
    f(s.readout.bias);
  }
  for (auto* p : {&fusion.weight, &fusion.bias, &scorer.weight, &scorer.bias}) f(*p);
}

}  // namespace

std::vector<Parameter*> OrderingModel::parameters() {
  std::vector<Parameter*> out;
  auto parts = std::tie(stacks_, fusion_, scorer_);
  visit_parameters(parts, [&](Parameter& p) { out.push_back(&p); });
  return out;
}

std::vector<NamedTensor> OrderingModel::state() const {
  std::vector<NamedTensor> out;
  auto parts = std::tie(stacks_, fusion_, scorer_);
  visit_parameters(parts, [&](const Parameter& p) { out.push_back({p.name, p.value}); });
  for (const auto& s : stacks_)
    for (const auto& l : s.layers) {
      const auto& base = l.norm.gamma.name;
      const auto stem = base.substr(0, base.size() - std::string(".gamma").size());
      out.push_back({stem + ".running_mean", l.norm.running_mean});
      out.push_back({stem + ".running_var", l.norm.running_var});
    }
  return out;
}

void OrderingModel::load_state(const std::vector<NamedTensor>& tensors) {
  Checkpoint lookup;
  lookup.tensors = tensors;
  auto assign = [&](Matrix& dst, const std::string& name) {
    const auto& src = lookup.get(name);
    if (!src.same_shape(dst)) {
      throw DataError(fmt::format("tensor '{}' has shape {}, model expects {}", name,
                                  src.shape_string(), dst.shape_string()));
    }
    dst = src;
  };
  for (auto* p : parameters()) assign(p->value, p->name);
  for (auto& s : stacks_)
    for (auto& l : s.layers) {
      const auto& base = l.norm.gamma.name;
      const auto stem = base.substr(0, base.size() - std::string(".gamma").size());
      assign(l.norm.running_mean, stem + ".running_mean");
      assign(l.norm.running_var, stem + ".running_var");
    }
}

Checkpoint OrderingModel::to_checkpoint() const {
  Checkpoint c;
  c.header = {{"kind", "ordering_model"}, {"config", config_.to_json()}};
  c.tensors = state();
  return c;
}

OrderingModel OrderingModel::from_checkpoint(const Checkpoint& ckpt) {
  if (!ckpt.header.contains("config")) throw DataError("model checkpoint has no config header");
  OrderingModel model(ModelConfig::from_json(ckpt.header["config"]));
  model.load_state(ckpt.tensors);
  return model;
}

// ---------------------------------------------------------------------------

namespace {

// Effective block operator A with out = (1 + eps) h + A h.
Matrix propagation_block(const Matrix& m, const GinConfig& cfg) {
  const std::size_t n = m.rows();
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      auto w = [&](double v) { return cfg.weighted ? v : (v > 0.0 ? 1.0 : 0.0); };
      double v = 0.0;
      if (cfg.aggregation != Aggregation::out_edges) v += w(m(j, i));
      if (cfg.aggregation != Aggregation::in_edges) v += w(m(i, j));
      a(i, j) = v;
    }
  return a;
}

}  // namespace

Tensor aggregate(const Tensor& h, const BlockAdjacency& adj, const GinConfig& cfg) {
  const auto& hv = h.value();
  if (hv.rows() != adj.nodes()) {
    throw ShapeError(fmt::format("aggregate: {} node rows but adjacency covers {} nodes", hv.rows(),
                                 adj.nodes()));
  }
  const std::size_t w = hv.cols();
  const double self = 1.0 + cfg.epsilon;
  std::vector<Matrix> ops;
  ops.reserve(adj.blocks.size());
  for (const auto& b : adj.blocks) ops.push_back(propagation_block(b, cfg));

  Matrix out(hv.rows(), w);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = self * hv[i];
  for (std::size_t b = 0; b < ops.size(); ++b) {
    const std::size_t off = adj.offsets[b];
    const auto& a = ops[b];
    for (std::size_t i = 0; i < a.rows(); ++i) {
      auto orow = out.row(off + i);
      for (std::size_t j = 0; j < a.cols(); ++j) {
        const double aij = a(i, j);
        if (aij == 0.0) continue;
        auto hrow = hv.row(off + j);
        for (std::size_t c = 0; c < w; ++c) orow[c] += aij * hrow[c];
      }
    }
  }
  std::vector<std::size_t> offsets = adj.offsets;
  return h.tape().record("aggregate", std::move(out), {h},
                         [h, ops = std::move(ops), offsets, self](Tape& t, const Matrix& g) {
                           Matrix gh(g.rows(), g.cols());
                           for (std::size_t i = 0; i < g.size(); ++i) gh[i] = self * g[i];
                           for (std::size_t b = 0; b < ops.size(); ++b) {
                             const std::size_t off = offsets[b];
                             const auto& a = ops[b];
                             for (std::size_t i = 0; i < a.rows(); ++i) {
                               auto grow = g.row(off + i);
                               for (std::size_t j = 0; j < a.cols(); ++j) {
                                 const double aij = a(i, j);
                                 if (aij == 0.0) continue;
                                 auto dst = gh.row(off + j);
                                 for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += aij * grow[c];
                               }
                             }
                           }
                           t.accumulate(h, gh);
                         });
}

Tensor gin_layer(const Tensor& h, const BlockAdjacency& adj, const GinConfig& cfg, GinLayer& layer,
                 Mode mode) {
  Tape& tape = h.tape();
  Tensor agg = aggregate(h, adj, cfg);
  Tensor hidden = relu(batch_norm(layer.first(tape, agg), layer.norm, mode));
  return layer.second(tape, hidden);
}

Tensor gin_stack_forward(const Tensor& h0, const BlockAdjacency& adj, GinStack& stack, Mode mode) {
  std::vector<Tensor> reps{h0};
  Tensor h = h0;
  for (auto& layer : stack.layers) {
    h = gin_layer(h, adj, stack.config, layer, mode);
    reps.push_back(h);
  }
  return relu(stack.readout(h0.tape(), concat_cols(reps)));
}

Tensor fuse(std::span<const Tensor> per_graph, Affine& fusion) {
  if (per_graph.empty()) throw ArgumentError("fuse: no graph representations");
  const auto rows = per_graph.front().rows();
  const auto cols = per_graph.front().cols();
  for (const auto& t : per_graph) {
    if (t.rows() != rows || t.cols() != cols) {
      throw ShapeError(fmt::format("fuse: inconsistent representation shapes {} and {}",
                                   per_graph.front().value().shape_string(), t.value().shape_string()));
    }
  }
  return fusion(per_graph.front().tape(), concat_cols(per_graph));
}

Tensor score(const Tensor& h_tilde, Affine& scorer) { return scorer(h_tilde.tape(), relu(h_tilde)); }

Tensor forward(Tape& tape, const GraphBatch& batch, OrderingModel& model, Mode mode,
               std::uint64_t seed) {
  const auto& cfg = model.config();
  if (batch.graphs.size() != cfg.graph_count()) {
    throw ArgumentError(fmt::format("model has {} GIN stacks but {} graphs were supplied",
                                    cfg.graph_count(), batch.graphs.size()));
  }
  if (batch.features.cols() != cfg.input_dim) {
    throw DimensionError(fmt::format("model expects embedding dimension {}, got {}", cfg.input_dim,
                                     batch.features.cols()));
  }
  for (const auto& g : batch.graphs) {
    if (g.nodes() != batch.features.rows()) {
      throw ArgumentError(fmt::format("graph covers {} nodes but batch has {}", g.nodes(),
                                      batch.features.rows()));
    }
  }
  Tensor h0 = dropout(tape.constant(batch.features), cfg.dropout, mode, seed);
  std::vector<Tensor> per_graph;
  for (std::size_t t = 0; t < cfg.graph_count(); ++t)
    per_graph.push_back(gin_stack_forward(h0, batch.graphs[t], model.stacks()[t], mode));
  return score(fuse(per_graph, model.fusion()), model.scorer());
}

std::vector<double> predict_scores(OrderingModel& model, const Matrix& embeddings,
                                   std::span<const ConstraintGraph> graphs) {
  Tape tape;
  Tensor s = forward(tape, make_batch(embeddings, graphs), model, Mode::eval);
  return s.value().data();
}

}  // namespace congraph
