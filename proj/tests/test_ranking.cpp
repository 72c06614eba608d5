#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "congraph/experiments.hpp"
#include "congraph/metrics.hpp"
#include "congraph/ranking.hpp"
#include "helpers.hpp"

using namespace congraph;
using congraph::testing::random_permutation;

namespace {

// Direct product of sequential softmax probabilities, no log-sum-exp tricks.
double naive_listmle(const std::vector<double>& s, const std::vector<std::size_t>& gold) {
  double nll = 0.0;
  for (std::size_t j = 0; j < gold.size(); ++j) {
    double denom = 0.0;
    for (std::size_t k = j; k < gold.size(); ++k) denom += std::exp(s[gold[k]]);
    nll -= std::log(std::exp(s[gold[j]]) / denom);
  }
  return nll;
}

std::vector<double> random_scores(std::size_t n, Rng& rng) {
  std::vector<double> s(n);
  for (auto& v : s) v = 2.0 * standard_normal(rng);
  return s;
}

ExperimentSettings tiny_settings(std::uint64_t seed) {
  ExperimentSettings s;
  s.data.count = 200;
  s.data.n_min = 3;
  s.data.n_max = 5;
  s.data.embedding_dim = 12;
  s.data.position_signal = 1.0;
  s.data.noise = 0.1;
  s.data.seed = seed;
  s.model.input_dim = 12;
  s.model.hidden = 16;
  s.model.layers = {2};
  s.model.distances = {2};
  s.model.dropout = 0.0;
  s.model.seed = seed;
  s.train.epochs = 8;
  s.train.learning_rate = 5e-3;
  s.train.batch_size = 16;
  s.train.seed = seed;
  return s;
}

}  // namespace

TEST(ListMle, KnownValues) {
  const std::vector<double> one{3.0};
  const std::vector<std::size_t> g1{0};
  EXPECT_EQ(listmle(one, g1), 0.0);

  const std::vector<double> equal{0.5, 0.5};
  const std::vector<std::size_t> g2{0, 1};
  EXPECT_NEAR(listmle(equal, g2), std::log(2.0), 1e-12);

  const std::vector<double> apart{10.0, 0.0};
  EXPECT_NEAR(listmle(apart, g2), std::log1p(std::exp(-10.0)), 1e-12);
}

TEST(ListMle, MatchesNaiveProduct) {
  Rng rng(3);
  for (int c = 0; c < 100; ++c) {
    const std::size_t n = 1 + uniform_index(rng, 8);
    const auto s = random_scores(n, rng);
    const auto gold = random_permutation(n, rng);
    EXPECT_NEAR(listmle(s, gold), naive_listmle(s, gold), 1e-10);
  }
}

TEST(ListMle, StableForLargeScores) {
  const std::vector<double> s{1000.0, -1000.0, 0.0};
  const std::vector<std::size_t> g{0, 2, 1};
  const double v = listmle(s, g);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, 0.0, 1e-12);
  const std::vector<std::size_t> rev{1, 2, 0};
  EXPECT_NEAR(listmle(s, rev), 2000.0 + 1000.0, 1e-9);
}

TEST(ListMle, TranslationInvariantAndNonNegative) {
  Rng rng(9);
  for (int c = 0; c < 50; ++c) {
    const std::size_t n = 2 + uniform_index(rng, 7);
    auto s = random_scores(n, rng);
    const auto gold = random_permutation(n, rng);
    const double base = listmle(s, gold);
    EXPECT_GE(base, 0.0);
    for (auto& v : s) v += 37.5;
    EXPECT_NEAR(listmle(s, gold), base, 1e-9);
  }
}

TEST(ListMle, SwappingIntoGoldOrderLowersLoss) {
  // Raising the score of an earlier gold item above a later one reduces the loss.
  Rng rng(12);
  for (int c = 0; c < 100; ++c) {
    const std::size_t n = 2 + uniform_index(rng, 7);
    auto s = random_scores(n, rng);
    const auto gold = random_permutation(n, rng);
    const std::size_t a = uniform_index(rng, n - 1);
    const std::size_t b = a + 1 + uniform_index(rng, n - 1 - a);
    auto& hi = s[gold[a]];
    auto& lo = s[gold[b]];
    if (hi > lo) std::swap(hi, lo);
    if (hi == lo) continue;
    const double before = listmle(s, gold);
    std::swap(hi, lo);
    EXPECT_LT(listmle(s, gold), before);
  }
}

TEST(ListMle, RejectsLengthMismatch) {
  const std::vector<double> s{1.0, 2.0};
  const std::vector<std::size_t> g{0};
  EXPECT_THROW(listmle(s, g), ArgumentError);
}

TEST(ListMleLoss, AgreesWithScalarFormAndGradientsMatch) {
  Rng rng(21);
  for (int c = 0; c < 10; ++c) {
    const std::size_t n = 2 + uniform_index(rng, 7);
    const auto s = random_scores(n, rng);
    const auto gold = random_permutation(n, rng);
    Tape tape;
    EXPECT_NEAR(listmle_loss(tape.constant(Matrix::column(s)), gold).item(), listmle(s, gold), 1e-12);
    const double err =
        finite_diff_check([&](Tape&, const Tensor& x) { return listmle_loss(x, gold); }, Matrix::column(s));
    EXPECT_LT(err, 1e-4);
  }
}

TEST(ListMleLoss, SubsetOfRowsLeavesOthersWithoutGradient) {
  Tape tape;
  auto x = tape.variable(Matrix::column(std::vector<double>{0.1, 0.2, 0.3, 0.4}));
  const std::vector<std::size_t> rows{3, 1};
  tape.backward(listmle_loss(x, rows));
  const Matrix g = x.grad();
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[2], 0.0);
  EXPECT_NE(g[1], 0.0);
  EXPECT_NEAR(g[1] + g[3], 0.0, 1e-15);
}

TEST(Train, ZeroEpochsReturnsInitialModel) {
  auto s = tiny_settings(1);
  s.data.count = 20;
  const auto splits = generate_dataset(s.data);
  OrderingModel model(s.model);
  auto cfg = s.train;
  cfg.epochs = 0;
  const auto result = train(splits.train, splits.val, ground_truth_provider({2}), model, cfg);
  EXPECT_EQ(result.history.epochs(), 0u);
  EXPECT_FALSE(result.history.best_epoch.has_value());
  EXPECT_EQ(result.model.state(), model.state());
}

TEST(Train, SameSeedIsDeterministic) {
  auto s = tiny_settings(4);
  s.data.count = 60;
  s.train.epochs = 2;
  const auto splits = generate_dataset(s.data);
  const auto a = train(splits.train, splits.val, ground_truth_provider({2}), OrderingModel(s.model), s.train);
  const auto b = train(splits.train, splits.val, ground_truth_provider({2}), OrderingModel(s.model), s.train);
  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(a.model.state(), b.model.state());
}

TEST(Train, LearnsSeparablePositions) {
  const auto s = tiny_settings(7);
  const auto splits = generate_dataset(s.data);
  const auto result =
      train(splits.train, splits.val, ground_truth_provider({2}), OrderingModel(s.model), s.train);
  ASSERT_EQ(result.history.epochs(), s.train.epochs);
  EXPECT_LT(result.history.train_loss.back(), result.history.train_loss.front());
  auto model = result.model;
  const auto report = evaluate(model, splits.val, ground_truth_provider({2}));
  EXPECT_GE(report.tau_mean, 0.95);
  // The kept epoch is the best validation tau.
  const auto best = *result.history.best_epoch;
  for (double t : result.history.val_tau) EXPECT_LE(t, result.history.val_tau[best]);
  EXPECT_NEAR(report.tau_mean, result.history.val_tau[best], 1e-12);
}

TEST(Train, RejectsEmptySets) {
  auto s = tiny_settings(1);
  s.data.count = 20;
  const auto splits = generate_dataset(s.data);
  Dataset empty;
  EXPECT_THROW(train(empty, splits.val, ground_truth_provider({2}), OrderingModel(s.model), s.train),
               ArgumentError);
  EXPECT_THROW(train(splits.train, empty, ground_truth_provider({2}), OrderingModel(s.model), s.train),
               ArgumentError);
}

TEST(Train, DivergenceRaisesWithHistory) {
  auto s = tiny_settings(2);
  s.data.count = 40;
  s.train.learning_rate = 1e200;
  s.train.weight_decay = 0.0;
  s.train.epochs = 5;
  const auto splits = generate_dataset(s.data);
  EXPECT_THROW(train(splits.train, splits.val, ground_truth_provider({2}), OrderingModel(s.model), s.train),
               TrainingDivergedError);
}

TEST(History, CsvFormat) {
  TrainHistory h;
  h.train_loss = {1.5, 0.25};
  h.val_tau = {0.1, 0.5};
  h.val_pmr = {0.0, 0.125};
  EXPECT_EQ(history_to_csv(h),
            "epoch,loss,val_tau,val_pmr\n0,1.500000,0.100000,0.000000\n1,0.250000,0.500000,0.125000\n");
}
