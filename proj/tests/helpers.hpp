#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "congraph/data.hpp"
#include "congraph/random.hpp"

namespace congraph::testing {

/// Fresh scratch directory named after the running test.
inline std::filesystem::path scratch_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = std::filesystem::temp_directory_path() /
             (std::string("congraph_") + info->test_suite_name() + "_" + info->name());
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::vector<std::size_t> random_permutation(std::size_t n, Rng& rng) {
  auto v = identity_order(n);
  shuffle(std::span<std::size_t>(v), rng);
  return v;
}

/// Paragraph with the given gold order, random embeddings and a presentation order.
inline Paragraph make_paragraph(std::string id, std::vector<std::size_t> gold, std::size_t dim, Rng& rng,
                                std::vector<std::size_t> presentation = {}) {
  Paragraph p;
  p.id = std::move(id);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    Sentence s;
    s.index = i;
    for (std::size_t k = 0; k < dim; ++k) s.embedding.push_back(standard_normal(rng));
    p.sentences.push_back(std::move(s));
  }
  p.presentation_order = presentation.empty() ? identity_order(gold.size()) : std::move(presentation);
  p.gold_order = std::move(gold);
  return p;
}

}  // namespace congraph::testing
