#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "littriage/corpus.hpp"
#include "littriage/error.hpp"
#include "random_records.hpp"

using namespace littriage;

namespace {

std::vector<ArticleRecord> sample() {
  return {make_record("1", "One", "abstract one", 2014), make_record("2", "Two", "", 2015),
          make_record("3", "Three", "abstract three", 2022), make_record("4", "Four", "x", 2023)};
}

std::vector<std::string> pmids(const std::vector<ArticleRecord>& records) {
  std::vector<std::string> out;
  for (const auto& r : records) out.push_back(r.pmid);
  return out;
}

}  // namespace

TEST(Record, LinkDerivesFromPmid) {
  EXPECT_EQ(pubmed_link("123"), "https://pubmed.ncbi.nlm.nih.gov/123/");
  EXPECT_EQ(make_record("9", "T", "A", 2020).link, "https://pubmed.ncbi.nlm.nih.gov/9/");
}

TEST(Record, ValidationRejectsBrokenRecords) {
  EXPECT_NO_THROW(validate_record(make_record("1", "T", "", 2020)));
  EXPECT_THROW(validate_record(make_record("", "T", "", 2020)), DataError);
  EXPECT_THROW(validate_record(make_record("1", "", "", 2020)), DataError);
  EXPECT_THROW(validate_record(make_record("1", "T", "", 1799)), DataError);
  EXPECT_THROW(validate_record(make_record("1", "T", "", current_year() + 1)), DataError);
  auto r = make_record("1", "T", "", 2020);
  r.link = "https://example.org/";
  EXPECT_THROW(validate_record(r), DataError);
}

TEST(Inclusion, DuplicatePmidKeepsFirst) {
  const std::vector<ArticleRecord> records{make_record("1", "a", "x", 2020), make_record("2", "b", "y", 2020),
                                           make_record("1", "c", "z", 2021)};
  const auto kept = apply_inclusion(records, {});
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].title, "a");
}

TEST(Inclusion, RequireAbstractDropsEmpty) {
  InclusionCriteria c;
  c.require_abstract = true;
  EXPECT_EQ(pmids(apply_inclusion(sample(), c)), (std::vector<std::string>{"1", "3", "4"}));
}

TEST(Inclusion, YearRangeIsInclusiveAtBothEnds) {
  std::vector<ArticleRecord> records;
  for (int y = 2014; y <= 2023; ++y) records.push_back(make_record(std::to_string(y), "t", "a", y));
  InclusionCriteria c;
  c.year_range = YearRange{2015, 2022};
  const auto kept = apply_inclusion(records, c);
  ASSERT_EQ(kept.size(), 8u);
  EXPECT_EQ(kept.front().year, 2015);
  EXPECT_EQ(kept.back().year, 2022);
}

TEST(Inclusion, MaxArticlesTruncates) {
  InclusionCriteria c;
  c.max_articles = 2;
  EXPECT_EQ(pmids(apply_inclusion(sample(), c)), (std::vector<std::string>{"1", "2"}));
}

TEST(Inclusion, CriteriaValidation) {
  InclusionCriteria c;
  c.max_articles = 0;
  EXPECT_THROW(c.validate(), UsageError);
  c.max_articles = 5;
  c.year_range = YearRange{2020, 2019};
  EXPECT_THROW(c.validate(), UsageError);
}

TEST(InclusionProperty, IdempotentAndOrderPreserving) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    auto records = fixtures::random_records(rng, 40);
    records.push_back(records[3]);  // duplicate
    InclusionCriteria c;
    c.require_abstract = trial % 2 == 0;
    c.year_range = YearRange{2000, 2015};
    c.max_articles = 5 + trial % 30;
    const auto once = apply_inclusion(records, c);
    EXPECT_EQ(apply_inclusion(once, c), once);
    // Survivors appear in input order.
    std::size_t cursor = 0;
    for (const auto& r : once) {
      while (cursor < records.size() && !(records[cursor] == r)) ++cursor;
      ASSERT_LT(cursor, records.size());
      ++cursor;
    }
  }
}

TEST(CorpusIo, EmptyCorpusRoundTrips) {
  EXPECT_EQ(serialize_corpus({}), "");
  EXPECT_TRUE(parse_corpus("").empty());
}

TEST(CorpusIo, KeyOrderIsStable) {
  EXPECT_EQ(serialize_record(make_record("7", "T", "A", 2020)),
            R"({"pmid":"7","title":"T","abstract":"A","year":2020,"link":"https://pubmed.ncbi.nlm.nih.gov/7/"})");
}

TEST(CorpusIo, MultiLineAbstractIsEscaped) {
  const auto r = make_record("5", "T", "first line\nsecond line\r\n\ttab", 2019);
  const auto line = serialize_record(r);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_EQ(parse_record(line, 1).abstract, r.abstract);
}

TEST(CorpusIo, TenRecordsByteIdentical) {
  std::mt19937_64 rng(5);
  const auto records = fixtures::random_records(rng, 10);
  const auto doc = serialize_corpus(records);
  EXPECT_EQ(serialize_corpus(parse_corpus(doc)), doc);
}

TEST(CorpusIo, RejectsBadLines) {
  EXPECT_THROW(parse_corpus("{not json}\n"), DataError);
  EXPECT_THROW(parse_corpus(R"({"pmid":"1","title":"t","abstract":"","year":"2020","link":"https://pubmed.ncbi.nlm.nih.gov/1/"})"),
               DataError);
  const auto line = serialize_record(make_record("1", "t", "", 2020));
  EXPECT_THROW(parse_corpus(line + "\n" + line + "\n"), DataError);
}

TEST(CorpusIo, ErrorNamesLine) {
  const auto good = serialize_record(make_record("1", "t", "", 2020));
  try {
    parse_corpus(good + "\n\n{broken\n");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(CorpusIo, SaveLoadFile) {
  const auto path = std::filesystem::temp_directory_path() / "littriage_corpus_test.jsonl";
  const auto records = sample();
  save_corpus(records, path);
  EXPECT_EQ(load_corpus(path), records);
  std::filesystem::remove(path);
  EXPECT_THROW(load_corpus(path), DataError);
}

TEST(CorpusProperty, RandomizedRoundTrip) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const auto records = fixtures::random_records(rng, 1 + trial % 15);
    EXPECT_EQ(parse_corpus(serialize_corpus(records)), records);
  }
}
