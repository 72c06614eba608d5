#include <cmath>

#include <gtest/gtest.h>

#include "congraph/error.hpp"
#include "congraph/experiments.hpp"
#include "congraph/graph.hpp"
#include "json.hpp"

using namespace congraph;

namespace {

ExperimentSettings tiny(std::size_t count) {
  ExperimentSettings s;
  s.data.count = count;
  s.data.embedding_dim = 6;
  s.model.hidden = 4;
  s.model.dropout = 0.0;
  s.train.epochs = 1;
  s.train.batch_size = 8;
  return s;
}

ExperimentCell cell(std::size_t d, std::size_t l, std::uint64_t seed, double pmr, bool failed = false) {
  ExperimentCell c;
  c.fields = {{"d", std::to_string(d)}, {"L", std::to_string(l)}};
  c.seed = seed;
  c.pmr = pmr;
  c.tau = pmr;
  c.failed = failed;
  return c;
}

}  // namespace

TEST(Synthetic, SplitsEightOneOne) {
  SyntheticConfig cfg;
  cfg.count = 100;
  const auto s = generate_dataset(cfg);
  EXPECT_EQ(s.train.paragraphs.size(), 80u);
  EXPECT_EQ(s.val.paragraphs.size(), 10u);
  EXPECT_EQ(s.test.paragraphs.size(), 10u);
  EXPECT_EQ(s.train.split, Split::train);
  EXPECT_EQ(s.test.split, Split::test);
  EXPECT_NO_THROW(validate(s.train));
}

TEST(Synthetic, DeterministicPerSeed) {
  SyntheticConfig cfg;
  cfg.count = 30;
  cfg.n_min = 2;
  cfg.n_max = 9;
  EXPECT_EQ(generate_dataset(cfg).train, generate_dataset(cfg).train);
  auto other = cfg;
  other.seed = 43;
  EXPECT_NE(generate_dataset(cfg).train, generate_dataset(other).train);
}

TEST(Synthetic, EmbeddingLayout) {
  SyntheticConfig cfg;
  cfg.count = 10;
  cfg.n_min = 3;
  cfg.n_max = 7;
  cfg.embedding_dim = 12;
  cfg.noise = 0.0;
  cfg.position_signal = 2.0;
  cfg.intercept = 0.5;
  for (const auto& p : generate_dataset(cfg).train.paragraphs) {
    ASSERT_GE(p.size(), 3u);
    ASSERT_LE(p.size(), 7u);
    EXPECT_EQ(p.gold_order, identity_order(p.size()));
    for (std::size_t t = 0; t < p.size(); ++t) {
      const auto& e = p.sentences[t].embedding;
      const double x = static_cast<double>(t) / static_cast<double>(p.size());
      for (std::size_t k = 0; k < kSignalDims; ++k)
        EXPECT_NEAR(e[k], 2.0 * std::cos(M_PI * static_cast<double>(k + 1) * x), 1e-12);
      for (std::size_t k = kSignalDims; k + 1 < e.size(); ++k) EXPECT_EQ(e[k], 0.0);
      EXPECT_EQ(e.back(), 0.5);
    }
  }
}

TEST(Synthetic, ValidateRejectsBadRanges) {
  SyntheticConfig c;
  c.n_min = 6;
  c.n_max = 5;
  EXPECT_THROW(c.validate(), ArgumentError);
  c = SyntheticConfig{};
  c.n_max = 41;
  EXPECT_THROW(c.validate(), ArgumentError);
  c = SyntheticConfig{};
  c.noise = -1;
  EXPECT_THROW(c.validate(), ArgumentError);
  c = SyntheticConfig{};
  c.oracle_accuracies[2] = 1.5;
  EXPECT_THROW(c.validate(), ArgumentError);
}

TEST(Synthetic, OracleAccuracyLookup) {
  SyntheticConfig c;
  c.oracle_accuracies[4] = 0.7;
  c.default_oracle_accuracy = 0.9;
  EXPECT_EQ(c.oracle_accuracy(4), 0.7);
  EXPECT_EQ(c.oracle_accuracy(1), 0.9);
}

TEST(LayerSweep, RecordsOneCellPerConfiguration) {
  const auto r = layer_sweep(4, {1, 3}, {1, 2}, true, tiny(30), {1, 2});
  ASSERT_EQ(r.cells.size(), 8u);
  EXPECT_EQ(r.n_fixed, 4u);
  EXPECT_EQ(r.cells[0].field("d"), "1");
  EXPECT_EQ(r.cells[1].field("L"), "2");
  for (const auto& c : r.cells) {
    EXPECT_FALSE(c.failed) << c.error;
    EXPECT_GE(c.pmr, 0.0);
    EXPECT_LE(c.pmr, 1.0);
  }
}

TEST(LayerSweep, SameSeedsGiveSameScores) {
  const auto a = layer_sweep(3, {1}, {1}, false, tiny(20), {5});
  const auto b = layer_sweep(3, {1}, {1}, false, tiny(20), {5});
  EXPECT_EQ(a.cells[0].tau, b.cells[0].tau);
  EXPECT_EQ(a.cells[0].pmr, b.cells[0].pmr);
}

TEST(LayerSweep, FailedCellsAreRecorded) {
  auto s = tiny(20);
  s.train.learning_rate = 1e200;
  s.train.weight_decay = 0.0;
  s.train.epochs = 3;
  const auto r = layer_sweep(3, {1}, {2}, true, s, {1});
  ASSERT_EQ(r.cells.size(), 1u);
  EXPECT_TRUE(r.cells[0].failed);
  EXPECT_FALSE(r.cells[0].error.empty());
  const auto j = nlohmann::json::parse(experiment_summary_json(r, {}));
  EXPECT_EQ(j["failures"].size(), 1u);
  EXPECT_NE(experiment_csv(r).find(",failed\n"), std::string::npos);
}

TEST(LayerSweep, RejectsDegenerateInput) {
  EXPECT_THROW(layer_sweep(1, {1}, {1}, true, tiny(20), {1}), ArgumentError);
  EXPECT_THROW(layer_sweep(4, {}, {1}, true, tiny(20), {1}), ArgumentError);
  EXPECT_THROW(layer_sweep(4, {1}, {1}, true, tiny(20), {}), ArgumentError);
}

TEST(Ablation, RunsEachSubsetPerSeed) {
  auto s = tiny(30);
  s.data.n_min = 3;
  s.data.n_max = 6;
  const auto r = ablation({{0}, {0, 2}}, s, {1});
  ASSERT_EQ(r.cells.size(), 2u);
  EXPECT_EQ(r.cells[0].field("graphs"), "{g1}");
  EXPECT_EQ(r.cells[1].field("graphs"), "{g1,g3}");
  // distance_for_layers(6, L) for L = 2 and 5.
  EXPECT_EQ(r.cells[1].field("distances"),
            std::to_string(distance_for_layers(6, 2)) + " " + std::to_string(distance_for_layers(6, 5)));
  for (const auto& c : r.cells) EXPECT_FALSE(c.failed) << c.error;
}

TEST(Ablation, RejectsEmptyOrUnknownSubsets) {
  EXPECT_THROW(ablation({{}}, tiny(20), {1}), ArgumentError);
  EXPECT_THROW(ablation({{3}}, tiny(20), {1}), ArgumentError);
  EXPECT_THROW(ablation({}, tiny(20), {1}), ArgumentError);
}

TEST(SubsetLabel, Format) {
  EXPECT_EQ(subset_label({0, 1, 2}), "{g1,g2,g3}");
  EXPECT_EQ(subset_label({1}), "{g2}");
}

TEST(Dominance, DetectsSufficientCellLosingToInsufficient) {
  // n = 5: d = 1 needs 4 layers, d = 4 needs 1.
  ExperimentResult r{"layer_sweep", {}, {1, 2}, 5};
  r.cells = {cell(1, 2, 1, 0.6), cell(1, 4, 1, 0.9), cell(4, 1, 1, 0.95),
             cell(1, 2, 2, 0.5), cell(1, 4, 2, 0.4), cell(4, 1, 2, 0.5)};
  const auto v = layer_dominance_violations(r);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].seed, 2u);
  EXPECT_EQ(v[0].sufficient, "d=1 L=4");
  EXPECT_EQ(v[0].insufficient, "d=1 L=2");
  // A tie is not a violation.
  EXPECT_TRUE(std::none_of(v.begin(), v.end(), [](const auto& x) { return x.sufficient == "d=4 L=1"; }));
}

TEST(Dominance, IgnoresFailedCellsAndOtherSeeds) {
  ExperimentResult r{"layer_sweep", {}, {1, 2}, 5};
  r.cells = {cell(1, 2, 1, 0.9), cell(1, 4, 1, 0.1, true), cell(1, 4, 2, 0.5)};
  EXPECT_TRUE(layer_dominance_violations(r).empty());
}

TEST(Summaries, MeanAndSampleDeviationPerLabel) {
  ExperimentResult r{"layer_sweep", {}, {1, 2, 3}, 5};
  r.cells = {cell(1, 2, 1, 0.2), cell(1, 2, 2, 0.4), cell(1, 2, 3, 0.0, true), cell(4, 1, 1, 1.0)};
  const auto s = summarize_cells(r);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].label, "d=1 L=2");
  EXPECT_EQ(s[0].runs, 2u);
  EXPECT_NEAR(s[0].mean_pmr, 0.3, 1e-15);
  EXPECT_NEAR(s[0].sd_pmr, std::sqrt(0.02), 1e-15);
  EXPECT_EQ(s[1].runs, 1u);
  EXPECT_EQ(s[1].sd_tau, 0.0);
}

TEST(Reports, CsvAndSummaryJson) {
  ExperimentResult r{"layer_sweep", {}, {1}, 5};
  r.cells = {cell(1, 4, 1, 0.5), cell(1, 2, 1, 0.75)};
  r.cells[0].runtime_seconds = 1.25;
  EXPECT_EQ(experiment_csv(r),
            "d,L,seed,tau,pmr,runtime_seconds,status\n"
            "\"1\",\"4\",1,0.500000,0.500000,1.250,ok\n"
            "\"1\",\"2\",1,0.750000,0.750000,0.000,ok\n");
  const auto j = nlohmann::json::parse(experiment_summary_json(r, {{"epochs", "3"}}));
  EXPECT_EQ(j["experiment"], "layer_sweep");
  EXPECT_EQ(j["config"]["epochs"], "3");
  EXPECT_EQ(j["summary"].size(), 2u);
  EXPECT_FALSE(j["depth_dominance_holds"].get<bool>());
  EXPECT_EQ(j["depth_dominance_violations"][0]["sufficient"], "d=1 L=4");
}
