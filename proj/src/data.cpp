#include "congraph/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/core.h>

#include "congraph/error.hpp"
#include "congraph/log.hpp"
#include "congraph/random.hpp"
#include "json.hpp"

namespace congraph {

using nlohmann::json;

std::vector<std::size_t> Paragraph::gold_positions() const {
  std::vector<std::size_t> pos(gold_order.size());
  for (std::size_t k = 0; k < gold_order.size(); ++k) pos[gold_order[k]] = k;
  return pos;
}

Matrix Paragraph::presented_embeddings() const {
  const std::size_t n = sentences.size();
  const std::size_t dim = n == 0 ? 0 : sentences.front().embedding.size();
  Matrix m(n, dim);
  for (std::size_t k = 0; k < n; ++k) {
    const auto& e = sentences[presentation_order[k]].embedding;
    std::copy(e.begin(), e.end(), m.row(k).begin());
  }
  return m;
}

std::vector<std::size_t> Paragraph::gold_order_in_nodes() const {
  const auto node_of = invert_permutation(presentation_order);
  std::vector<std::size_t> out(gold_order.size());
  for (std::size_t k = 0; k < gold_order.size(); ++k) out[k] = node_of[gold_order[k]];
  return out;
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "unknown";
}

bool is_permutation_of_range(std::span<const std::size_t> perm, std::size_t n) {
  if (perm.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (auto v : perm) {
    if (v >= n || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

std::vector<std::size_t> invert_permutation(std::span<const std::size_t> perm) {
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) inv[perm[k]] = k;
  return inv;
}

namespace {

void validate_paragraph(const Paragraph& p, std::size_t dim, std::size_t max_sentences) {
  const std::size_t n = p.sentences.size();
  if (n == 0) throw DataError("paragraph '" + p.id + "' has no sentences");
  if (n > max_sentences) {
    throw DataError(fmt::format("paragraph '{}' has {} sentences, maximum is {}", p.id, n,
                                max_sentences));
  }
  if (!is_permutation_of_range(p.gold_order, n)) {
    throw DataError("paragraph '" + p.id + "': gold_order is not a permutation of 0.." +
                    std::to_string(n - 1));
  }
  if (!is_permutation_of_range(p.presentation_order, n)) {
    throw DataError("paragraph '" + p.id + "': presentation_order is not a permutation");
  }
  for (const auto& s : p.sentences) {
    if (s.embedding.size() != dim) {
      throw DimensionError(fmt::format("paragraph '{}': sentence {} has embedding dimension {}, expected {}",
                                       p.id, s.index, s.embedding.size(), dim));
    }
    for (double v : s.embedding)
      if (!std::isfinite(v)) throw DataError("paragraph '" + p.id + "': non-finite embedding value");
  }
}

Paragraph parse_paragraph(const json& j) {
  Paragraph p;
  p.id = j.at("id").get<std::string>();
  p.gold_order = j.at("gold_order").get<std::vector<std::size_t>>();
  const auto& sents = j.at("sentences");
  if (!sents.is_array()) throw DataError("'sentences' must be an array");
  for (std::size_t i = 0; i < sents.size(); ++i) {
    Sentence s;
    s.index = i;
    if (sents[i].contains("text") && !sents[i]["text"].is_null())
      s.text = sents[i]["text"].get<std::string>();
    s.embedding = sents[i].at("embedding").get<std::vector<double>>();
    p.sentences.push_back(std::move(s));
  }
  p.presentation_order = identity_order(p.sentences.size());
  return p;
}

}  // namespace

void validate(const Dataset& dataset, std::size_t max_sentences) {
  std::set<std::string> ids;
  for (const auto& p : dataset.paragraphs) {
    if (!ids.insert(p.id).second) throw DataError("duplicate paragraph id '" + p.id + "'");
    validate_paragraph(p, dataset.embedding_dim, max_sentences);
  }
}

Dataset load_dataset(const std::filesystem::path& path, std::optional<std::size_t> expected_dim,
                     std::size_t max_sentences) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset: " + path.string());
  Dataset ds;
  std::optional<std::size_t> dim = expected_dim;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Paragraph p;
    try {
      p = parse_paragraph(json::parse(line));
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed paragraph record: ") + e.what(), lineno);
    } catch (const DataError& e) {
      throw ParseError(e.what(), lineno);
    }
    if (p.sentences.empty()) throw ParseError("paragraph '" + p.id + "' has no sentences", lineno);
    if (!dim) dim = p.sentences.front().embedding.size();
    if (!ids.insert(p.id).second) throw ParseError("duplicate paragraph id '" + p.id + "'", lineno);
    validate_paragraph(p, *dim, max_sentences);
    ds.paragraphs.push_back(std::move(p));
  }
  ds.embedding_dim = dim.value_or(kDefaultEmbeddingDim);
  if (ds.paragraphs.empty()) logging::warn("dataset {} contains no paragraphs", path.string());
  return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write dataset: " + path.string());
  for (const auto& p : dataset.paragraphs) {
    json sents = json::array();
    for (const auto& s : p.sentences) {
      json js = json::object();
      if (s.text) js["text"] = *s.text;
      js["embedding"] = s.embedding;
      sents.push_back(std::move(js));
    }
    json j = json::object();
    j["id"] = p.id;
    j["gold_order"] = p.gold_order;
    j["sentences"] = std::move(sents);
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("failed writing dataset: " + path.string());
}

Dataset shuffle_presentation(const Dataset& dataset, std::uint64_t seed) {
  Dataset out = dataset;
  Rng rng(seed);
  for (auto& p : out.paragraphs) {
    p.presentation_order = identity_order(p.sentences.size());
    shuffle(std::span<std::size_t>(p.presentation_order), rng);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string fixed6(double v) { return fmt::format("{:.6f}", v); }

std::string join_indices(const std::vector<std::size_t>& v, std::string_view sep) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(v[i]);
  }
  return s;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

}  // namespace

std::string report_to_json(const EvalReport& r) {
  std::string s = "{\n";
  s += "  \"tau_mean\": " + fixed6(r.tau_mean) + ",\n";
  s += "  \"pmr\": " + fixed6(r.pmr) + ",\n";
  s += "  \"first_acc\": " + fixed6(r.first_acc) + ",\n";
  s += "  \"last_acc\": " + fixed6(r.last_acc) + ",\n";
  s += "  \"n_evaluated\": " + std::to_string(r.n_evaluated) + ",\n";
  s += "  \"n_skipped\": " + std::to_string(r.n_skipped) + ",\n";
  s += "  \"config\": {";
  bool first = true;
  for (const auto& [k, v] : r.config) {
    s += first ? "\n" : ",\n";
    s += "    " + json(k).dump() + ": " + json(v).dump();
    first = false;
  }
  s += first ? "},\n" : "\n  },\n";
  s += "  \"per_paragraph\": [";
  for (std::size_t i = 0; i < r.per_paragraph.size(); ++i) {
    const auto& p = r.per_paragraph[i];
    s += i ? ",\n" : "\n";
    s += "    {\"id\": " + json(p.id).dump() + ", \"tau\": " + (p.tau ? fixed6(*p.tau) : "null") +
         ", \"exact\": " + bool_str(p.exact) + ", \"first\": " + bool_str(p.first_correct) +
         ", \"last\": " + bool_str(p.last_correct) + ", \"order\": [" + join_indices(p.order, ", ") +
         "]}";
  }
  s += r.per_paragraph.empty() ? "]\n" : "\n  ]\n";
  s += "}\n";
  return s;
}

std::string report_to_csv(const EvalReport& r) {
  std::string s;
  if (!r.config.empty()) {
    s += "# config:";
    for (const auto& [k, v] : r.config) s += " " + k + "=" + v;
    s += "\n";
  }
  s += "id,tau,exact,first,last,order\n";
  for (const auto& p : r.per_paragraph) {
    s += json(p.id).dump() + "," + (p.tau ? fixed6(*p.tau) : "") + "," + (p.exact ? "1" : "0") +
         "," + (p.first_correct ? "1" : "0") + "," + (p.last_correct ? "1" : "0") + "," +
         join_indices(p.order, " ") + "\n";
  }
  s += "summary," + fixed6(r.tau_mean) + "," + fixed6(r.pmr) + "," + fixed6(r.first_acc) + "," +
       fixed6(r.last_acc) + "," + std::to_string(r.n_evaluated) + " evaluated " +
       std::to_string(r.n_skipped) + " skipped\n";
  return s;
}

void write_report(const EvalReport& report, const std::filesystem::path& path, ReportFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write report: " + path.string());
  out << (format == ReportFormat::json ? report_to_json(report) : report_to_csv(report));
  if (!out) throw DataError("failed writing report: " + path.string());
}

EvalReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    EvalReport r;
    r.tau_mean = j.at("tau_mean").get<double>();
    r.pmr = j.at("pmr").get<double>();
    r.first_acc = j.at("first_acc").get<double>();
    r.last_acc = j.at("last_acc").get<double>();
    r.n_evaluated = j.at("n_evaluated").get<std::size_t>();
    r.n_skipped = j.at("n_skipped").get<std::size_t>();
    if (j.contains("config")) r.config = j["config"].get<std::map<std::string, std::string>>();
    for (const auto& p : j.at("per_paragraph")) {
      ParagraphResult pr;
      pr.id = p.at("id").get<std::string>();
      if (!p.at("tau").is_null()) pr.tau = p["tau"].get<double>();
      pr.exact = p.at("exact").get<bool>();
      pr.first_correct = p.at("first").get<bool>();
      pr.last_correct = p.at("last").get<bool>();
      pr.order = p.at("order").get<std::vector<std::size_t>>();
      r.per_paragraph.push_back(std::move(pr));
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

EvalReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open report: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return report_from_json(ss.str());
}

}  // namespace congraph
