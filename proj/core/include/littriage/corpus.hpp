#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace littriage {

struct ArticleRecord {
  std::string pmid;
  std::string title;
  std::string abstract;  // empty, never absent, when the source has none
  int year = 0;
  std::string link;

  friend bool operator==(const ArticleRecord&, const ArticleRecord&) = default;
};

/// Canonical PubMed landing page for an identifier.
std::string pubmed_link(std::string_view pmid);

/// Builds a record with its link derived from the pmid.
ArticleRecord make_record(std::string pmid, std::string title, std::string abstract, int year);

/// Checks the record invariants (non-empty pmid and title, year in
/// [1800, current year], link derived from pmid). Throws DataError.
void validate_record(const ArticleRecord& record);

int current_year();

struct YearRange {
  int min = 0;
  int max = 0;

  bool contains(int year) const noexcept { return year >= min && year <= max; }
  friend bool operator==(const YearRange&, const YearRange&) = default;
};

struct InclusionCriteria {
  std::string query;
  std::optional<YearRange> year_range;
  bool require_abstract = false;
  std::size_t max_articles = 100;

  /// Throws UsageError when min > max or max_articles == 0.
  void validate() const;
};

/// Dedups by pmid (first occurrence wins), drops records outside the year
/// range or without an abstract when one is required, then truncates to
/// max_articles. Surviving records keep their input order.
std::vector<ArticleRecord> apply_inclusion(const std::vector<ArticleRecord>& records,
                                           const InclusionCriteria& criteria);

// Corpus files are UTF-8 JSON lines, one record per line, keys in the order
// pmid, title, abstract, year, link.

std::string serialize_record(const ArticleRecord& record);
ArticleRecord parse_record(std::string_view line, std::size_t line_number);

std::string serialize_corpus(const std::vector<ArticleRecord>& records);
std::vector<ArticleRecord> parse_corpus(std::string_view document);

void save_corpus(const std::vector<ArticleRecord>& records, const std::filesystem::path& path);
std::vector<ArticleRecord> load_corpus(const std::filesystem::path& path);

}  // namespace littriage
