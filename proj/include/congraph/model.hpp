#pragma once

// Ordering network: one GIN stack per constraint graph, per-layer
// concatenation with a readout, cross-graph fusion and per-node scoring.
//
// Paragraphs are batched as a block-diagonal graph: node rows of all
// paragraphs are stacked, and each stack receives one adjacency block per
// paragraph. Batch norm therefore sees every node of the mini-batch.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "congraph/autodiff.hpp"
#include "congraph/graph.hpp"
#include "congraph/random.hpp"

namespace congraph {

/// Which edges a node aggregates from. in_edges: node i sums M(j, i) * h_j
/// over its predecessors j; out_edges: M(i, j) * h_j over successors; both: sum of the two.
enum class Aggregation { in_edges, out_edges, both };

std::string to_string(Aggregation a);
Aggregation parse_aggregation(const std::string& s);

struct GinConfig {
  std::size_t layers = 2;
  std::size_t hidden = 512;
  double epsilon = 0.0;
  Aggregation aggregation = Aggregation::in_edges;
  /// false: every edge with M > 0 counts with weight 1.
  bool weighted = true;
};

struct ModelConfig {
  std::size_t input_dim = 768;
  std::size_t hidden = 512;
  /// Layer count of each GIN stack; one stack per constraint graph.
  std::vector<std::size_t> layers{2, 3, 5};
  /// Distance each stack's graph is built with. Metadata for matching graphs to stacks.
  std::vector<std::size_t> distances;
  double epsilon = 0.0;
  Aggregation aggregation = Aggregation::in_edges;
  bool weighted_edges = true;
  double dropout = 0.1;
  std::uint64_t seed = 42;

  std::size_t graph_count() const noexcept { return layers.size(); }
  GinConfig stack_config(std::size_t t) const;
  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

/// x W + b.
struct Affine {
  Affine() = default;
  Affine(const std::string& name, std::size_t in, std::size_t out, Rng& rng);

  Tensor operator()(Tape& tape, const Tensor& x);
  std::size_t in() const noexcept { return weight.value.rows(); }
  std::size_t out() const noexcept { return weight.value.cols(); }

  Parameter weight;
  Parameter bias;
};

/// affine -> batch norm -> ReLU -> affine.
struct GinLayer {
  Affine first;
  BatchNorm norm;
  Affine second;
};

struct GinStack {
  GinConfig config;
  std::vector<GinLayer> layers;
  /// (input_dim + layers * hidden) -> hidden, followed by ReLU.
  Affine readout;
};

/// Adjacency blocks of one constraint-graph type over a batch of paragraphs.
struct BlockAdjacency {
  std::vector<Matrix> blocks;
  /// offsets[b] is the first node row of block b; offsets.back() is the node total.
  std::vector<std::size_t> offsets{0};

  static BlockAdjacency single(Matrix m);
  void append(Matrix m);
  std::size_t nodes() const noexcept { return offsets.back(); }
};

/// Node features and one BlockAdjacency per stack.
struct GraphBatch {
  Matrix features;
  std::vector<BlockAdjacency> graphs;
  std::size_t paragraphs() const noexcept { return graphs.empty() ? 0 : graphs.front().blocks.size(); }
};

/// Stacks paragraphs into a batch. Each element pairs presented embeddings
/// (n x E) with one graph per stack; all graphs of a paragraph must have n nodes.
GraphBatch make_batch(std::span<const Matrix* const> embeddings,
                      std::span<const std::vector<ConstraintGraph>* const> graphs);
GraphBatch make_batch(const Matrix& embeddings, std::span<const ConstraintGraph> graphs);

class OrderingModel {
 public:
  OrderingModel() = default;
  explicit OrderingModel(ModelConfig config);

  const ModelConfig& config() const noexcept { return config_; }
  std::vector<GinStack>& stacks() noexcept { return stacks_; }
  Affine& fusion() noexcept { return fusion_; }
  Affine& scorer() noexcept { return scorer_; }

  std::vector<Parameter*> parameters();
  /// Parameters plus batch-norm running statistics, by name.
  std::vector<NamedTensor> state() const;
  void load_state(const std::vector<NamedTensor>& tensors);

  Checkpoint to_checkpoint() const;
  static OrderingModel from_checkpoint(const Checkpoint& ckpt);

 private:
  ModelConfig config_;
  std::vector<GinStack> stacks_;
  Affine fusion_;
  Affine scorer_;
};

/// (1 + eps) h_i + sum of weighted neighbour rows, block by block.
Tensor aggregate(const Tensor& h, const BlockAdjacency& adj, const GinConfig& cfg);

Tensor gin_layer(const Tensor& h, const BlockAdjacency& adj, const GinConfig& cfg, GinLayer& layer,
                 Mode mode);

/// Runs every layer, concatenates [h0; h1; ...; hL] per node and applies the readout.
Tensor gin_stack_forward(const Tensor& h0, const BlockAdjacency& adj, GinStack& stack, Mode mode);

/// Per-node concatenation of the stacks' outputs through the fusion affine.
Tensor fuse(std::span<const Tensor> per_graph, Affine& fusion);

/// ReLU then the scoring affine: one score per node (N x 1).
Tensor score(const Tensor& h_tilde, Affine& scorer);

/// dropout(embeddings) -> stacks -> fuse -> score. Returns N x 1.
Tensor forward(Tape& tape, const GraphBatch& batch, OrderingModel& model, Mode mode,
               std::uint64_t seed = 0);

/// Eval-mode scores for one paragraph (rows of `embeddings` are nodes).
std::vector<double> predict_scores(OrderingModel& model, const Matrix& embeddings,
                                   std::span<const ConstraintGraph> graphs);

}  // namespace congraph
