#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "congraph/matrix.hpp"
#include "congraph/report.hpp"

namespace congraph {

inline constexpr std::size_t kDefaultEmbeddingDim = 768;
inline constexpr std::size_t kMaxSentences = 40;

struct Sentence {
  std::size_t index = 0;
  std::optional<std::string> text;
  std::vector<double> embedding;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

/// A paragraph as stored plus the shuffled order in which it is shown.
///
/// gold_order[k] is the index of the sentence that belongs at position k.
/// presentation_order[k] is the index of the sentence shown as node k.
struct Paragraph {
  std::string id;
  std::vector<Sentence> sentences;
  std::vector<std::size_t> gold_order;
  std::vector<std::size_t> presentation_order;

  std::size_t size() const noexcept { return sentences.size(); }
  /// position[s] = gold position of sentence s.
  std::vector<std::size_t> gold_positions() const;
  /// Row k is the embedding of sentence presentation_order[k].
  Matrix presented_embeddings() const;
  /// Gold order expressed in node (presentation) indices.
  std::vector<std::size_t> gold_order_in_nodes() const;

  friend bool operator==(const Paragraph&, const Paragraph&) = default;
};

enum class Split { train, val, test };

struct Dataset {
  std::vector<Paragraph> paragraphs;
  std::size_t embedding_dim = kDefaultEmbeddingDim;
  Split split = Split::train;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

std::string to_string(Split s);

bool is_permutation_of_range(std::span<const std::size_t> perm, std::size_t n);
std::vector<std::size_t> identity_order(std::size_t n);
std::vector<std::size_t> invert_permutation(std::span<const std::size_t> perm);

/// Checks every Paragraph/Dataset invariant; throws DataError on violation.
void validate(const Dataset& dataset, std::size_t max_sentences = kMaxSentences);

/// Reads a JSON Lines dataset. presentation_order starts as the identity.
/// Blank lines are skipped; an empty file yields an empty dataset with a warning.
Dataset load_dataset(const std::filesystem::path& path,
                     std::optional<std::size_t> expected_dim = std::nullopt,
                     std::size_t max_sentences = kMaxSentences);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

/// Replaces every presentation_order with a seeded uniform permutation.
Dataset shuffle_presentation(const Dataset& dataset, std::uint64_t seed);

enum class ReportFormat { json, csv };

void write_report(const EvalReport& report, const std::filesystem::path& path,
                  ReportFormat format = ReportFormat::json);
std::string report_to_json(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);
EvalReport read_report(const std::filesystem::path& path);
EvalReport report_from_json(const std::string& text);

}  // namespace congraph
