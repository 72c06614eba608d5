#include <cmath>

#include <gtest/gtest.h>

#include "congraph/error.hpp"
#include "congraph/model.hpp"
#include "helpers.hpp"

using namespace congraph;
using congraph::testing::random_permutation;

namespace {

Affine identity_affine(std::size_t m) {
  Affine a;
  a.weight = Parameter("w", Matrix::identity(m));
  a.bias = Parameter("b", Matrix(1, m));
  return a;
}

GinLayer identity_layer(std::size_t m) {
  BatchNorm bn("bn", m, 0.0);
  return GinLayer{identity_affine(m), bn, identity_affine(m)};
}

Matrix run_layer(const Matrix& h, const Matrix& adj, const GinConfig& cfg) {
  auto layer = identity_layer(h.cols());
  Tape tape;
  return gin_layer(tape.constant(h), BlockAdjacency::single(adj), cfg, layer, Mode::eval).value();
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (auto& v : m.data()) v = standard_normal(rng);
  return m;
}

ConstraintGraph random_graph(std::size_t n, std::size_t d, Rng& rng) {
  ConstraintGraph g{n, d, Matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && uniform01(rng) < 0.5) g.adjacency(i, j) = 0.5 + 0.5 * uniform01(rng);
  return g;
}

ModelConfig small_config(std::size_t input_dim, std::uint64_t seed) {
  ModelConfig c;
  c.input_dim = input_dim;
  c.hidden = 6;
  c.layers = {1, 2};
  c.distances = {3, 1};
  c.seed = seed;
  return c;
}

/// Gives BN running statistics and shift/scale non-trivial values.
void perturb_norms(OrderingModel& model, Rng& rng) {
  for (auto& s : model.stacks())
    for (auto& l : s.layers) {
      for (auto& v : l.norm.running_mean.data()) v = 0.3 * standard_normal(rng);
      for (auto& v : l.norm.running_var.data()) v = 0.5 + uniform01(rng);
      for (auto& v : l.norm.gamma.value.data()) v = 1.0 + 0.2 * standard_normal(rng);
      for (auto& v : l.norm.beta.value.data()) v = 0.2 * standard_normal(rng);
    }
}

}  // namespace

TEST(GinLayer, IsolatedNodesPassThroughIdentityMlp) {
  const Matrix h{{1, 2}, {3, 4}, {0.5, 0.25}};
  EXPECT_EQ(run_layer(h, Matrix(3, 3), GinConfig{}), h);
}

TEST(GinLayer, InEdgeAddsPredecessor) {
  const Matrix h{{1, 2}, {3, 4}};
  const Matrix adj{{0, 1}, {0, 0}};  // edge 0 -> 1
  EXPECT_EQ(run_layer(h, adj, GinConfig{}), (Matrix{{1, 2}, {4, 6}}));
}

TEST(GinLayer, EpsilonScalesSelf) {
  GinConfig cfg;
  cfg.epsilon = 0.5;
  EXPECT_EQ(run_layer(Matrix{{2, 4}}, Matrix(1, 1), cfg), (Matrix{{3, 6}}));
}

TEST(GinLayer, AggregationDirectionsAndBinaryEdges) {
  const Matrix h{{1, 0}, {0, 1}};
  const Matrix adj{{0, 0.5}, {0, 0}};
  GinConfig cfg;
  Tape tape;
  auto agg = [&](const GinConfig& c) {
    return aggregate(tape.constant(h), BlockAdjacency::single(adj), c).value();
  };
  EXPECT_EQ(agg(cfg), (Matrix{{1, 0}, {0.5, 1}}));
  cfg.aggregation = Aggregation::out_edges;
  EXPECT_EQ(agg(cfg), (Matrix{{1, 0.5}, {0, 1}}));
  cfg.aggregation = Aggregation::both;
  EXPECT_EQ(agg(cfg), (Matrix{{1, 0.5}, {0.5, 1}}));
  cfg.aggregation = Aggregation::in_edges;
  cfg.weighted = false;
  EXPECT_EQ(agg(cfg), (Matrix{{1, 0}, {1, 1}}));
}

TEST(GinLayer, BlocksDoNotInteract) {
  BlockAdjacency adj;
  adj.append(Matrix{{0, 1}, {0, 0}});
  adj.append(Matrix{{0, 1}, {1, 0}});
  Tape tape;
  const auto out = aggregate(tape.constant(Matrix{{1}, {2}, {3}, {4}}), adj, GinConfig{}).value();
  EXPECT_EQ(out, (Matrix{{1}, {3}, {7}, {7}}));
  EXPECT_THROW(aggregate(tape.constant(Matrix(3, 1)), adj, GinConfig{}), ShapeError);
}

TEST(GinStack, SingleLayerIsReadoutOfConcatenation) {
  Rng rng(1);
  ModelConfig cfg = small_config(3, 4);
  cfg.layers = {1};
  cfg.distances = {1};
  OrderingModel model(cfg);
  auto& stack = model.stacks()[0];
  const Matrix h0 = random_matrix(4, 3, rng);
  const auto adj = BlockAdjacency::single(random_graph(4, 1, rng).adjacency);

  Tape tape;
  const auto out = gin_stack_forward(tape.constant(h0), adj, stack, Mode::eval).value();
  Tape manual;
  Tensor x = manual.constant(h0);
  std::vector<Tensor> parts{x, gin_layer(x, adj, stack.config, stack.layers[0], Mode::eval)};
  const auto expected = relu(stack.readout(manual, concat_cols(parts))).value();
  EXPECT_EQ(out, expected);
}

TEST(GinStack, OutputWidthIsHiddenForAnyDepth) {
  Rng rng(2);
  for (std::size_t layers = 1; layers <= 4; ++layers) {
    ModelConfig cfg = small_config(3, layers);
    cfg.layers = {layers};
    cfg.distances = {1};
    OrderingModel model(cfg);
    EXPECT_EQ(model.stacks()[0].readout.in(), 3 + layers * 6);
    Tape tape;
    const auto out = gin_stack_forward(tape.constant(random_matrix(5, 3, rng)),
                                       BlockAdjacency::single(Matrix(5, 5)), model.stacks()[0], Mode::eval);
    EXPECT_EQ(out.cols(), 6u);
    EXPECT_EQ(out.rows(), 5u);
  }
}

TEST(Fuse, SingleGraphIdentityPassesThrough) {
  auto fusion = identity_affine(3);
  Tape tape;
  const Matrix h{{1, -2, 3}, {4, 5, -6}};
  std::vector<Tensor> parts{tape.constant(h)};
  EXPECT_EQ(fuse(parts, fusion).value(), h);
}

TEST(Fuse, IsPerNode) {
  Rng rng(3);
  Affine fusion("f", 8, 4, rng);
  const Matrix a = random_matrix(3, 4, rng), b = random_matrix(3, 4, rng);
  Matrix a2 = a;
  a2(0, 1) += 1.0;
  Tape tape;
  std::vector<Tensor> p1{tape.constant(a), tape.constant(b)};
  std::vector<Tensor> p2{tape.constant(a2), tape.constant(b)};
  const auto o1 = fuse(p1, fusion).value(), o2 = fuse(p2, fusion).value();
  EXPECT_EQ(o1.cols(), 4u);
  for (std::size_t r = 1; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(o1(r, c), o2(r, c));
  EXPECT_NE(o1.row(0)[0] + o1.row(0)[1] + o1.row(0)[2] + o1.row(0)[3],
            o2.row(0)[0] + o2.row(0)[1] + o2.row(0)[2] + o2.row(0)[3]);
  std::vector<Tensor> bad{tape.constant(a), tape.constant(Matrix(2, 4))};
  EXPECT_THROW(fuse(bad, fusion), ShapeError);
}

TEST(Score, ZeroInputGivesBiasForEveryNode) {
  Rng rng(4);
  Affine scorer("s", 3, 1, rng);
  scorer.bias.value(0, 0) = 0.75;
  Tape tape;
  const auto s = score(tape.constant(Matrix(4, 3)), scorer).value();
  ASSERT_EQ(s.rows(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(s[i], 0.75);
}

TEST(Score, IsPerNode) {
  Rng rng(5);
  Affine scorer("s", 3, 1, rng);
  Matrix h = random_matrix(3, 3, rng);
  Tape tape;
  const auto s1 = score(tape.constant(h), scorer).value();
  h(2, 0) += 2.0;
  const auto s2 = score(tape.constant(h), scorer).value();
  EXPECT_EQ(s1[0], s2[0]);
  EXPECT_EQ(s1[1], s2[1]);
}

TEST(Forward, SingleSentenceParagraph) {
  Rng rng(6);
  OrderingModel model(small_config(3, 1));
  const std::vector<ConstraintGraph> graphs{{1, 3, Matrix(1, 1)}, {1, 1, Matrix(1, 1)}};
  const auto s = predict_scores(model, random_matrix(1, 3, rng), graphs);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_TRUE(std::isfinite(s[0]));
}

TEST(Forward, EvalIsRepeatable) {
  Rng rng(7);
  OrderingModel model(small_config(3, 2));
  const Matrix e = random_matrix(5, 3, rng);
  const std::vector<ConstraintGraph> graphs{random_graph(5, 3, rng), random_graph(5, 1, rng)};
  EXPECT_EQ(predict_scores(model, e, graphs), predict_scores(model, e, graphs));
}

TEST(Forward, RejectsGraphCountAndSizeMismatch) {
  Rng rng(8);
  OrderingModel model(small_config(3, 2));
  const Matrix e = random_matrix(4, 3, rng);
  const std::vector<ConstraintGraph> one{random_graph(4, 3, rng)};
  EXPECT_THROW(predict_scores(model, e, one), ArgumentError);
  const std::vector<ConstraintGraph> wrong_n{random_graph(4, 3, rng), random_graph(3, 1, rng)};
  EXPECT_THROW(predict_scores(model, e, wrong_n), ArgumentError);
  const std::vector<ConstraintGraph> ok{random_graph(4, 3, rng), random_graph(4, 1, rng)};
  EXPECT_THROW(predict_scores(model, random_matrix(4, 5, rng), ok), DimensionError);
}

TEST(Forward, PermutationEquivariantInEvalMode) {
  Rng rng(9);
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = 2 + static_cast<std::size_t>(t) % 9;
    OrderingModel model(small_config(4, static_cast<std::uint64_t>(t)));
    perturb_norms(model, rng);
    const Matrix e = random_matrix(n, 4, rng);
    const std::vector<ConstraintGraph> graphs{random_graph(n, 3, rng), random_graph(n, 1, rng)};
    const auto perm = random_permutation(n, rng);
    std::vector<ConstraintGraph> permuted;
    for (const auto& g : graphs) permuted.push_back(g.relabeled(perm));
    const auto base = predict_scores(model, e, graphs);
    const auto moved = predict_scores(model, permute_rows(e, perm), permuted);
    for (std::size_t a = 0; a < n; ++a) EXPECT_NEAR(moved[a], base[perm[a]], 1e-9);
  }
}

TEST(Forward, BatchedScoresMatchSingleParagraphsInEvalMode) {
  Rng rng(10);
  OrderingModel model(small_config(3, 3));
  perturb_norms(model, rng);
  const Matrix e1 = random_matrix(3, 3, rng), e2 = random_matrix(5, 3, rng);
  const std::vector<ConstraintGraph> g1{random_graph(3, 3, rng), random_graph(3, 1, rng)};
  const std::vector<ConstraintGraph> g2{random_graph(5, 3, rng), random_graph(5, 1, rng)};
  const Matrix* es[] = {&e1, &e2};
  const std::vector<ConstraintGraph>* gs[] = {&g1, &g2};
  Tape tape;
  const auto batched = forward(tape, make_batch(es, gs), model, Mode::eval).value();
  const auto s1 = predict_scores(model, e1, g1), s2 = predict_scores(model, e2, g2);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(batched[i], s1[i], 1e-12);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(batched[3 + i], s2[i], 1e-12);
}

TEST(Forward, FullPipelineGradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(seed);
    ModelConfig cfg = small_config(3, seed);
    cfg.dropout = 0.0;
    OrderingModel model(cfg);
    const Matrix e = random_matrix(5, 3, rng);
    const std::vector<ConstraintGraph> graphs{random_graph(5, 3, rng), random_graph(5, 1, rng)};
    const auto batch = make_batch(e, graphs);
    const Matrix w = random_matrix(5, 1, rng);
    auto params = model.parameters();
    const double err = finite_diff_check(
        [&](Tape& t) { return sum(mul(forward(t, batch, model, Mode::train), t.constant(w))); }, params);
    EXPECT_LT(err, 1e-3) << "seed " << seed;
  }
}

TEST(OrderingModel, CheckpointRoundTripPreservesScores) {
  Rng rng(11);
  OrderingModel model(small_config(3, 5));
  perturb_norms(model, rng);
  const auto back = OrderingModel::from_checkpoint(model.to_checkpoint());
  EXPECT_EQ(back.config().to_json(), model.config().to_json());
  const Matrix e = random_matrix(4, 3, rng);
  const std::vector<ConstraintGraph> graphs{random_graph(4, 3, rng), random_graph(4, 1, rng)};
  auto copy = back;
  EXPECT_EQ(predict_scores(copy, e, graphs), predict_scores(model, e, graphs));
  EXPECT_EQ(copy.state(), model.state());
}

TEST(OrderingModel, LoadStateRejectsWrongShapes) {
  OrderingModel model(small_config(3, 5));
  auto state = model.state();
  state.front().value = Matrix(1, 1);
  EXPECT_THROW(model.load_state(state), DataError);
}

TEST(OrderingModel, ParameterLayout) {
  OrderingModel model(small_config(3, 5));
  // Per layer: two affines (2 tensors each) and the norm's scale and shift.
  EXPECT_EQ(model.parameters().size(), (1 + 2) * 6 + 2 * 2 + 4);
  EXPECT_EQ(model.fusion().in(), 12u);
  EXPECT_EQ(model.scorer().out(), 1u);
  ModelConfig bad = small_config(3, 5);
  bad.distances = {1};
  EXPECT_THROW(OrderingModel{bad}, ArgumentError);
}
