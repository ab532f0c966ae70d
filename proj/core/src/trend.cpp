#include "littriage/trend.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>

#include <json.hpp>

#include "littriage/csv.hpp"
#include "littriage/error.hpp"
#include "littriage/text.hpp"

namespace littriage {

namespace {

std::vector<std::string> categories_of(const CategoryGroup& group) {
  auto c = group.labels;
  if (group.mode == ClassificationMode::multilabel) c.emplace_back(kUnassigned);
  return c;
}

void add_decision(const Decision& d, std::vector<std::size_t>& row) {
  if (d.labels.empty()) {
    ++row.back();
    return;
  }
  if (d.mode == ClassificationMode::multiclass) {
    ++row.at(d.labels.front());
    return;
  }
  for (auto l : d.labels) ++row.at(l);
}

void check_group(const Decision& d, const CategoryGroup& group) {
  if (d.group != group.name) {
    throw DataError("decision for pmid " + d.pmid + " belongs to group '" + d.group + "', not '" +
                    group.name + "'");
  }
  for (auto l : d.labels) {
    if (l >= group.size()) throw DataError("decision for pmid " + d.pmid + " has an unknown label");
  }
}

std::size_t parse_count(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return static_cast<std::size_t>(v);
  } catch (const std::exception&) {
    throw DataError("csv row " + std::to_string(line) + ": bad count '" + s + "'");
  }
}

}  // namespace

std::size_t CategorySeries::total() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

std::size_t YearSeries::total() const noexcept {
  std::size_t n = 0;
  for (const auto& row : counts) n = std::accumulate(row.begin(), row.end(), n);
  return n;
}

CategorySeries category_counts(const std::vector<Decision>& decisions, const CategoryGroup& group) {
  CategorySeries s;
  s.group = group.name;
  s.categories = categories_of(group);
  s.counts.assign(s.categories.size(), 0);
  for (const auto& d : decisions) {
    check_group(d, group);
    add_decision(d, s.counts);
    ++s.records;
    s.flagged += (d.tied || d.empty) ? 1 : 0;
  }
  return s;
}

YearSeries time_series(const std::vector<Decision>& decisions,
                       const std::unordered_map<std::string, int>& years_by_pmid,
                       const CategoryGroup& group, YearRange range) {
  if (range.min > range.max) throw UsageError("trend year range minimum exceeds maximum");
  YearSeries s;
  s.group = group.name;
  s.categories = categories_of(group);
  for (int y = range.min; y <= range.max; ++y) s.years.push_back(y);
  s.counts.assign(s.years.size(), std::vector<std::size_t>(s.categories.size(), 0));
  s.records_per_year.assign(s.years.size(), 0);

  for (const auto& d : decisions) {
    check_group(d, group);
    const auto it = years_by_pmid.find(d.pmid);
    if (it == years_by_pmid.end()) {
      throw DataError("decision for pmid " + d.pmid + " has no source record");
    }
    if (!range.contains(it->second)) {
      ++s.excluded;
      continue;
    }
    const auto row = static_cast<std::size_t>(it->second - range.min);
    add_decision(d, s.counts[row]);
    ++s.records_per_year[row];
    ++s.included;
  }
  return s;
}

YearSeries time_series(const std::vector<Decision>& decisions,
                       const std::vector<ArticleRecord>& records, const CategoryGroup& group,
                       YearRange range) {
  std::unordered_map<std::string, int> years;
  for (const auto& r : records) years.emplace(r.pmid, r.year);
  return time_series(decisions, years, group, range);
}

std::string category_csv(const std::vector<CategorySeries>& series) {
  std::string out = csv::format_row({"group", "category", "count"});
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.categories.size(); ++i) {
      out += csv::format_row({s.group, s.categories[i], std::to_string(s.counts[i])});
    }
  }
  return out;
}

std::vector<CategorySeries> parse_category_csv(std::string_view document) {
  const auto rows = csv::parse(document);
  if (rows.empty() || rows.front() != csv::Row{"group", "category", "count"}) {
    throw DataError("category trend csv: unexpected header");
  }
  std::vector<CategorySeries> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 3) throw DataError("category trend csv row " + std::to_string(i) + ": 3 fields expected");
    if (out.empty() || out.back().group != r[0]) {
      out.emplace_back();
      out.back().group = r[0];
    }
    out.back().categories.push_back(r[1]);
    out.back().counts.push_back(parse_count(r[2], i));
  }
  return out;
}

std::string time_csv(const std::vector<YearSeries>& series) {
  std::string out = csv::format_row({"group", "year", "category", "count"});
  for (const auto& s : series) {
    for (std::size_t y = 0; y < s.years.size(); ++y) {
      for (std::size_t c = 0; c < s.categories.size(); ++c) {
        out += csv::format_row({s.group, std::to_string(s.years[y]), s.categories[c],
                                std::to_string(s.counts[y][c])});
      }
    }
  }
  return out;
}

std::vector<YearSeries> parse_time_csv(std::string_view document) {
  const auto rows = csv::parse(document);
  if (rows.empty() || rows.front() != csv::Row{"group", "year", "category", "count"}) {
    throw DataError("time trend csv: unexpected header");
  }
  std::vector<YearSeries> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.size() != 4) throw DataError("time trend csv row " + std::to_string(i) + ": 4 fields expected");
    if (out.empty() || out.back().group != r[0]) {
      out.emplace_back();
      out.back().group = r[0];
    }
    auto& s = out.back();
    const int year = static_cast<int>(parse_count(r[1], i));
    if (s.years.empty() || s.years.back() != year) {
      if (!s.years.empty() && year != s.years.back() + 1) {
        throw DataError("time trend csv row " + std::to_string(i) + ": years are not consecutive");
      }
      s.years.push_back(year);
      s.counts.emplace_back();
    }
    if (s.years.size() == 1) s.categories.push_back(r[2]);
    const auto column = s.counts.back().size();
    if (column >= s.categories.size() || s.categories[column] != r[2]) {
      throw DataError("time trend csv row " + std::to_string(i) + ": category order differs between years");
    }
    s.counts.back().push_back(parse_count(r[3], i));
  }
  for (auto& s : out) {
    for (const auto& row : s.counts) {
      if (row.size() != s.categories.size()) throw DataError("time trend csv: ragged year rows");
    }
  }
  return out;
}

MonotonicClock steady_clock_source() {
  return [] { return std::chrono::steady_clock::now(); };
}

MonotonicClock fixed_step_clock(std::chrono::nanoseconds step) {
  auto ticks = std::make_shared<std::chrono::steady_clock::duration>(0);
  auto mutex = std::make_shared<std::mutex>();
  return [ticks, mutex, step] {
    std::lock_guard lock(*mutex);
    *ticks += step;
    return std::chrono::steady_clock::time_point(*ticks);
  };
}

StageTiming record_timing(std::string stage, std::chrono::duration<double> duration,
                          std::size_t records, std::string group, std::optional<InputMode> input) {
  if (duration.count() < 0.0) throw UsageError("stage '" + stage + "' has a negative duration");
  StageTiming t;
  t.stage = std::move(stage);
  t.group = std::move(group);
  t.input = input;
  t.seconds = duration.count();
  t.records = records;
  if (records > 0 && t.seconds > 0.0) t.records_per_minute = static_cast<double>(records) / t.minutes();
  return t;
}

StageTimer::StageTimer(MonotonicClock clock) : clock_(std::move(clock)), start_(clock_()) {}

std::chrono::duration<double> StageTimer::elapsed() const { return clock_() - start_; }

std::string timing_table(const std::vector<StageTiming>& timings) {
  std::string out = "| Stage | Group | Input | Records | Minutes | Records/min |\n";
  out += "|---|---|---|---:|---:|---:|\n";
  for (const auto& t : timings) {
    out += "| " + t.stage + " | " + (t.group.empty() ? "-" : t.group) + " | " +
           (t.input ? std::string(to_string(*t.input)) : "-") + " | " + std::to_string(t.records) +
           " | " + format_fixed(t.minutes(), 2) + " | " +
           (t.records_per_minute ? format_fixed(*t.records_per_minute, 2) : "-") + " |\n";
  }

  // Per-group view: one minutes column per input mode.
  std::vector<std::string> groups;
  std::map<std::pair<std::string, InputMode>, const StageTiming*> cell;
  std::map<std::string, std::size_t> articles;
  for (const auto& t : timings) {
    if (t.group.empty() || !t.input) continue;
    if (std::find(groups.begin(), groups.end(), t.group) == groups.end()) groups.push_back(t.group);
    cell[{t.group, *t.input}] = &t;
    articles[t.group] = std::max(articles[t.group], t.records);
  }
  if (groups.empty()) return out;

  const InputMode modes[] = {InputMode::abstract, InputMode::title, InputMode::fused,
                             InputMode::appended};
  out += "\n| Group | Articles | Abstract (min) | Title (min) | Fused (min) | Title & Abstract (min) |\n";
  out += "|---|---:|---:|---:|---:|---:|\n";
  for (const auto& g : groups) {
    out += "| " + g + " | " + std::to_string(articles[g]) + " |";
    for (auto m : modes) {
      auto it = cell.find({g, m});
      out += " " + (it == cell.end() ? std::string("-") : format_fixed(it->second->minutes(), 2)) + " |";
    }
    out += "\n";
  }
  return out;
}

std::string timing_csv(const std::vector<StageTiming>& timings) {
  std::string out = csv::format_row({"stage", "records", "minutes", "records_per_min"});
  for (const auto& t : timings) {
    std::string stage = t.stage;
    if (!t.group.empty()) stage += ":" + t.group;
    if (t.input) stage += ":" + std::string(to_string(*t.input));
    out += csv::format_row({stage, std::to_string(t.records), format_double(t.minutes()),
                            t.records_per_minute ? format_double(*t.records_per_minute) : ""});
  }
  return out;
}

std::string timings_json(const std::vector<StageTiming>& timings) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& t : timings) {
    nlohmann::ordered_json j;
    j["stage"] = t.stage;
    j["group"] = t.group;
    j["input_mode"] = t.input ? nlohmann::ordered_json(std::string(to_string(*t.input)))
                              : nlohmann::ordered_json(nullptr);
    j["seconds"] = t.seconds;
    j["records"] = t.records;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

std::vector<StageTiming> parse_timings_json(std::string_view document) {
  std::vector<StageTiming> out;
  try {
    const auto arr = nlohmann::json::parse(document);
    for (const auto& j : arr) {
      std::optional<InputMode> input;
      if (!j.at("input_mode").is_null()) input = parse_input_mode(j["input_mode"].get<std::string>());
      out.push_back(record_timing(j.at("stage").get<std::string>(),
                                  std::chrono::duration<double>(j.at("seconds").get<double>()),
                                  j.at("records").get<std::size_t>(), j.at("group").get<std::string>(),
                                  input));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("timings: ") + e.what());
  }
  return out;
}

}  // namespace littriage
