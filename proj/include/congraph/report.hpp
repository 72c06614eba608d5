#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace congraph {

struct ParagraphResult {
  std::string id;
  /// Empty for paragraphs with fewer than two sentences.
  std::optional<double> tau;
  bool exact = false;
  bool first_correct = false;
  bool last_correct = false;
  /// Predicted order as sentence indices.
  std::vector<std::size_t> order;

  friend bool operator==(const ParagraphResult&, const ParagraphResult&) = default;
};

struct EvalReport {
  double tau_mean = 0.0;
  double pmr = 0.0;
  double first_acc = 0.0;
  double last_acc = 0.0;
  std::size_t n_evaluated = 0;
  std::size_t n_skipped = 0;
  std::vector<ParagraphResult> per_paragraph;
  /// Effective configuration echoed for provenance.
  std::map<std::string, std::string> config;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

}  // namespace congraph
