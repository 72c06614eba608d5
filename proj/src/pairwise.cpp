#include "congraph/pairwise.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/core.h>

#include "congraph/error.hpp"
#include "congraph/random.hpp"
#include "json.hpp"

namespace congraph {

namespace {

Matrix xavier(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(fan_in, fan_out);
  for (auto& v : m.data()) v = (2.0 * uniform01(rng) - 1.0) * a;
  return m;
}

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

double threshold(double q) noexcept { return q > 0.5 ? q : 0.0; }

PairPrediction make_prediction(std::size_t i, std::size_t j, double q) noexcept {
  return {i, j, q, threshold(q)};
}

std::vector<LabeledPair> build_constraint_labels(const Paragraph& paragraph, std::size_t d) {
  if (d < 1) throw ArgumentError("distance d must be at least 1");
  const auto pos = paragraph.gold_positions();
  const std::size_t n = paragraph.size();
  std::vector<LabeledPair> out;
  out.reserve(n * (n - 1));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      const bool forward = pos[b] > pos[a] && pos[b] - pos[a] <= d;
      out.push_back({a, b, forward ? 1 : 0, d});
    }
  return out;
}

std::vector<double> pair_features(const Sentence& a, const Sentence& b) {
  if (a.embedding.size() != b.embedding.size()) {
    throw DimensionError(fmt::format("pair_features: embedding dims {} and {} differ",
                                     a.embedding.size(), b.embedding.size()));
  }
  std::vector<double> f;
  f.reserve(a.embedding.size() * 2);
  f.insert(f.end(), a.embedding.begin(), a.embedding.end());
  f.insert(f.end(), b.embedding.begin(), b.embedding.end());
  return f;
}

double bce(double q, double y) {
  double loss = 0.0;
  if (y > 0.0) loss -= y * std::log(q);
  if (y < 1.0) loss -= (1.0 - y) * std::log1p(-q);
  return loss;
}

Tensor bce_with_logits(const Tensor& logits, std::span<const double> labels) {
  const auto& z = logits.value();
  if (z.cols() != 1 || z.rows() != labels.size() || z.rows() == 0) {
    throw ShapeError(fmt::format("bce_with_logits: logits {} vs {} labels", z.shape_string(),
                                 labels.size()));
  }
  const double n = static_cast<double>(z.rows());
  double loss = 0.0;
  for (std::size_t r = 0; r < z.rows(); ++r) loss += softplus(z[r]) - labels[r] * z[r];
  std::vector<double> y(labels.begin(), labels.end());
  return logits.tape().record("bce_with_logits", Matrix(1, 1, loss / n), {logits},
                              [logits, y, n](Tape& t, const Matrix& g) {
                                const auto& zv = logits.value();
                                Matrix gz(zv.rows(), 1);
                                for (std::size_t r = 0; r < zv.rows(); ++r)
                                  gz[r] = g[0] * (stable_sigmoid(zv[r]) - y[r]) / n;
                                t.accumulate(logits, gz);
                              });
}

// ---------------------------------------------------------------------------

PairClassifier::PairClassifier(std::size_t feature_dim, std::size_t hidden, std::uint64_t seed) {
  if (feature_dim == 0 || hidden == 0) throw ArgumentError("classifier dimensions must be positive");
  Rng rng(seed);
  w1_ = Parameter("pair.w1", xavier(feature_dim, hidden, rng));
  b1_ = Parameter("pair.b1", Matrix(1, hidden));
  w2_ = Parameter("pair.w2", xavier(hidden, 1, rng));
  b2_ = Parameter("pair.b2", Matrix(1, 1));
}

Tensor PairClassifier::forward(Tape& tape, const Matrix& features) {
  if (features.cols() != feature_dim()) {
    throw ShapeError(fmt::format("classifier expects {} features, got {}", feature_dim(),
                                 features.cols()));
  }
  Tensor x = tape.constant(features);
  Tensor h = relu(add_row(matmul(x, tape.parameter(w1_)), tape.parameter(b1_)));
  return add_row(matmul(h, tape.parameter(w2_)), tape.parameter(b2_));
}

double PairClassifier::logit(std::span<const double> features) const {
  if (features.size() != feature_dim()) {
    throw ShapeError(fmt::format("classifier expects {} features, got {}", feature_dim(),
                                 features.size()));
  }
  const std::size_t h = hidden();
  double out = b2_.value[0];
  for (std::size_t k = 0; k < h; ++k) {
    double a = b1_.value[k];
    for (std::size_t f = 0; f < features.size(); ++f) a += features[f] * w1_.value(f, k);
    if (a > 0.0) out += a * w2_.value(k, 0);
  }
  return out;
}

std::vector<Parameter*> PairClassifier::parameters() { return {&w1_, &b1_, &w2_, &b2_}; }

Checkpoint PairClassifier::to_checkpoint() const {
  Checkpoint c;
  c.header = {{"kind", "pair_classifier"}, {"final_loss", final_loss}};
  for (const auto* p : {&w1_, &b1_, &w2_, &b2_}) c.tensors.push_back({p->name, p->value});
  return c;
}

PairClassifier PairClassifier::from_checkpoint(const Checkpoint& ckpt) {
  PairClassifier clf;
  clf.w1_ = Parameter("pair.w1", ckpt.get("pair.w1"));
  clf.b1_ = Parameter("pair.b1", ckpt.get("pair.b1"));
  clf.w2_ = Parameter("pair.w2", ckpt.get("pair.w2"));
  clf.b2_ = Parameter("pair.b2", ckpt.get("pair.b2"));
  if (clf.b1_.value.cols() != clf.w1_.value.cols() || clf.w2_.value.rows() != clf.w1_.value.cols())
    throw DataError("pair classifier checkpoint has inconsistent shapes");
  if (ckpt.header.contains("final_loss")) clf.final_loss = ckpt.header["final_loss"].get<double>();
  return clf;
}

PairPrediction predict_pair(const PairClassifier& clf, const Sentence& a, const Sentence& b) {
  const auto f = pair_features(a, b);
  return make_prediction(a.index, b.index, stable_sigmoid(clf.logit(f)));
}

std::vector<PairPrediction> predict_paragraph(const PairClassifier& clf, const Paragraph& paragraph) {
  std::vector<PairPrediction> out;
  const auto& s = paragraph.sentences;
  for (std::size_t a = 0; a < s.size(); ++a)
    for (std::size_t b = 0; b < s.size(); ++b)
      if (a != b) out.push_back(predict_pair(clf, s[a], s[b]));
  return out;
}

std::vector<PairExample> pair_examples(const Dataset& dataset, std::size_t d) {
  std::vector<PairExample> out;
  for (const auto& p : dataset.paragraphs)
    for (const auto& lp : build_constraint_labels(p, d))
      out.push_back({pair_features(p.sentences[lp.i], p.sentences[lp.j]), lp.y});
  return out;
}

PairClassifier train_pair_classifier(std::span<const PairExample> pairs, const TrainConfig& config,
                                     std::size_t hidden) {
  if (pairs.empty()) throw ArgumentError("train_pair_classifier: no training pairs");
  config.validate();
  const std::size_t fdim = pairs.front().features.size();
  for (const auto& p : pairs)
    if (p.features.size() != fdim) throw DimensionError("train_pair_classifier: ragged feature vectors");

  PairClassifier clf(fdim, hidden, config.seed);
  auto params = clf.parameters();
  AdamW opt(params, config);
  Rng rng(mix_seed(config.seed, 1));
  std::vector<std::size_t> order = identity_order(pairs.size());
  double epoch_loss = 0.0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle(std::span<std::size_t>(order), rng);
    epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      Matrix x(stop - start, fdim);
      std::vector<double> y(stop - start);
      for (std::size_t r = start; r < stop; ++r) {
        const auto& ex = pairs[order[r]];
        std::copy(ex.features.begin(), ex.features.end(), x.row(r - start).begin());
        y[r - start] = ex.y;
      }
      opt.zero_grad();
      Tape tape;
      Tensor loss = bce_with_logits(clf.forward(tape, x), y);
      if (!std::isfinite(loss.item())) throw NumericError("pair classifier training diverged");
      tape.backward(loss);
      if (config.max_grad_norm > 0.0) clip_grad_norm(params, config.max_grad_norm);
      opt.step();
      epoch_loss += loss.item() * static_cast<double>(stop - start);
    }
    epoch_loss /= static_cast<double>(pairs.size());
  }
  clf.final_loss = epoch_loss;
  return clf;
}

std::vector<PairPrediction> noisy_oracle(const Paragraph& paragraph, std::size_t d, double accuracy,
                                         std::uint64_t seed) {
  if (!(accuracy > 0.0 && accuracy <= 1.0)) {
    throw ArgumentError(fmt::format("oracle accuracy must lie in (0, 1], got {}", accuracy));
  }
  Rng rng(seed);
  std::vector<PairPrediction> out;
  for (const auto& lp : build_constraint_labels(paragraph, d)) {
    const bool keep = uniform01(rng) < accuracy;
    const bool positive = keep ? lp.y == 1 : lp.y == 0;
    const double u = uniform_open01(rng);
    out.push_back(make_prediction(lp.i, lp.j, positive ? 0.5 + 0.5 * u : 0.5 * u));
  }
  return out;
}

// ---------------------------------------------------------------------------

void write_pair_predictions(const std::filesystem::path& path,
                            std::span<const PairPredictionRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write pair predictions: " + path.string());
  for (const auto& rec : records) {
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : rec.pairs)
      if (p.p > 0.0) pairs.push_back({p.i, p.j, p.q});
    nlohmann::json j = nlohmann::json::object();
    j["paragraph_id"] = rec.paragraph_id;
    j["d"] = rec.d;
    j["pairs"] = std::move(pairs);
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("failed writing pair predictions: " + path.string());
}

std::vector<PairPredictionRecord> read_pair_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open pair predictions: " + path.string());
  std::vector<PairPredictionRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      PairPredictionRecord rec;
      rec.paragraph_id = j.at("paragraph_id").get<std::string>();
      rec.d = j.at("d").get<std::size_t>();
      if (rec.d < 1) throw ParseError("distance must be at least 1", lineno);
      for (const auto& t : j.at("pairs")) {
        if (!t.is_array() || t.size() != 3) throw ParseError("pair must be [i, j, q]", lineno);
        const double q = t[2].get<double>();
        if (!(q >= 0.0 && q <= 1.0)) throw ParseError("probability outside [0, 1]", lineno);
        rec.pairs.push_back(make_prediction(t[0].get<std::size_t>(), t[1].get<std::size_t>(), q));
      }
      out.push_back(std::move(rec));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed pair record: ") + e.what(), lineno);
    }
  }
  return out;
}

}  // namespace congraph
