#include "littriage/corpus.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "littriage/error.hpp"
#include "littriage/text.hpp"

namespace littriage {

namespace {

constexpr int kEarliestYear = 1800;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string pubmed_link(std::string_view pmid) {
  return "https://pubmed.ncbi.nlm.nih.gov/" + std::string(pmid) + "/";
}

ArticleRecord make_record(std::string pmid, std::string title, std::string abstract, int year) {
  ArticleRecord r;
  r.link = pubmed_link(pmid);
  r.pmid = std::move(pmid);
  r.title = std::move(title);
  r.abstract = std::move(abstract);
  r.year = year;
  return r;
}

int current_year() {
  const auto now = std::chrono::system_clock::now();
  const std::chrono::year_month_day ymd{std::chrono::floor<std::chrono::days>(now)};
  return static_cast<int>(ymd.year());
}

void validate_record(const ArticleRecord& record) {
  if (record.pmid.empty()) throw DataError("record has an empty pmid");
  if (is_blank(record.title)) throw DataError("record " + record.pmid + " has an empty title");
  if (record.year < kEarliestYear || record.year > current_year()) {
    throw DataError("record " + record.pmid + " has year " + std::to_string(record.year) +
                    " outside [1800, " + std::to_string(current_year()) + "]");
  }
  if (record.link != pubmed_link(record.pmid)) {
    throw DataError("record " + record.pmid + " link '" + record.link +
                    "' is not derived from its pmid");
  }
}

void InclusionCriteria::validate() const {
  if (max_articles == 0) throw UsageError("max_articles must be at least 1");
  if (year_range && year_range->min > year_range->max) {
    throw UsageError("year range minimum " + std::to_string(year_range->min) +
                     " exceeds maximum " + std::to_string(year_range->max));
  }
}

std::vector<ArticleRecord> apply_inclusion(const std::vector<ArticleRecord>& records,
                                           const InclusionCriteria& criteria) {
  std::vector<ArticleRecord> kept;
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    if (kept.size() >= criteria.max_articles) break;
    if (!seen.insert(r.pmid).second) continue;
    if (criteria.year_range && !criteria.year_range->contains(r.year)) continue;
    if (criteria.require_abstract && is_blank(r.abstract)) continue;
    kept.push_back(r);
  }
  return kept;
}

std::string serialize_record(const ArticleRecord& record) {
  nlohmann::ordered_json j;
  j["pmid"] = record.pmid;
  j["title"] = record.title;
  j["abstract"] = record.abstract;
  j["year"] = record.year;
  j["link"] = record.link;
  try {
    return j.dump();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("record " + record.pmid + " is not valid UTF-8: " + e.what());
  }
}

ArticleRecord parse_record(std::string_view line, std::size_t line_number) {
  const auto where = "corpus line " + std::to_string(line_number) + ": ";
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(where + e.what());
  }
  if (!j.is_object()) throw DataError(where + "expected a JSON object");

  ArticleRecord r;
  try {
    r.pmid = j.at("pmid").get<std::string>();
    r.title = j.at("title").get<std::string>();
    r.abstract = j.at("abstract").get<std::string>();
    r.year = j.at("year").get<int>();
    r.link = j.at("link").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(where + e.what());
  }
  try {
    validate_record(r);
  } catch (const DataError& e) {
    throw DataError(where + e.what());
  }
  return r;
}

std::string serialize_corpus(const std::vector<ArticleRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += serialize_record(r);
    out.push_back('\n');
  }
  return out;
}

std::vector<ArticleRecord> parse_corpus(std::string_view document) {
  std::vector<ArticleRecord> records;
  std::unordered_set<std::string> seen;
  std::size_t line_number = 0;
  std::size_t pos = 0;
  while (pos < document.size()) {
    auto end = document.find('\n', pos);
    if (end == std::string_view::npos) end = document.size();
    ++line_number;
    const auto line = document.substr(pos, end - pos);
    pos = end + 1;
    if (is_blank(line)) continue;
    auto record = parse_record(line, line_number);
    if (!seen.insert(record.pmid).second) {
      throw DataError("corpus line " + std::to_string(line_number) + ": duplicate pmid " +
                      record.pmid);
    }
    records.push_back(std::move(record));
  }
  return records;
}

void save_corpus(const std::vector<ArticleRecord>& records, const std::filesystem::path& path) {
  const auto document = serialize_corpus(records);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << document;
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<ArticleRecord> load_corpus(const std::filesystem::path& path) {
  return parse_corpus(read_file(path));
}

}  // namespace littriage
