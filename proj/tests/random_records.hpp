#pragma once

#include <random>
#include <string>
#include <vector>

#include "littriage/corpus.hpp"

namespace littriage::fixtures {

inline std::string random_text(std::mt19937_64& rng, std::size_t max_words) {
  static const std::vector<std::string> words{
      "retina", "glaucoma", "deep",  "learning", "\xc3\xa9tude", "\xe6\x97\xa5\xe6\x9c\xac",
      "a,b",    "\"quoted\"", "tab\there", "line\nbreak", "back\\slash", "\xf0\x9f\x94\xac"};
  std::uniform_int_distribution<std::size_t> count(0, max_words);
  std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
  std::string out;
  const auto n = count(rng);
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.empty()) out.push_back(' ');
    out += words[pick(rng)];
  }
  return out;
}

inline std::vector<ArticleRecord> random_records(std::mt19937_64& rng, std::size_t n) {
  std::vector<ArticleRecord> records;
  std::uniform_int_distribution<int> year(1990, 2024);
  for (std::size_t i = 0; i < n; ++i) {
    auto title = random_text(rng, 8);
    if (title.empty()) title = "untitled";
    records.push_back(make_record(std::to_string(1000 + i * 7), title, random_text(rng, 30), year(rng)));
  }
  return records;
}

}  // namespace littriage::fixtures
