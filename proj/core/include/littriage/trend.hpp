#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "littriage/corpus.hpp"
#include "littriage/decision.hpp"
#include "littriage/taxonomy.hpp"

namespace littriage {

inline constexpr std::string_view kUnassigned = "unassigned";

/// Counts per category for one group. Categories are the group labels
/// followed by the "unassigned" bin for empty multilabel decisions.
struct CategorySeries {
  std::string group;
  std::vector<std::string> categories;
  std::vector<std::size_t> counts;
  std::size_t records = 0;  // decisions aggregated
  std::size_t flagged = 0;  // tied multiclass or empty multilabel decisions

  std::size_t total() const noexcept;
};

/// Multiclass decisions count once under their label (tie-broken label for
/// tied decisions); multilabel decisions count once per assigned label, or
/// once under "unassigned" when empty. Throws DataError for a decision from
/// another group.
CategorySeries category_counts(const std::vector<Decision>& decisions, const CategoryGroup& group);

/// Year x category counts over a consecutive, zero-filled year range.
struct YearSeries {
  std::string group;
  std::vector<std::string> categories;
  std::vector<int> years;
  std::vector<std::vector<std::size_t>> counts;  // [year][category]
  std::vector<std::size_t> records_per_year;
  std::size_t included = 0;
  std::size_t excluded = 0;  // decisions whose record falls outside the range

  std::size_t total() const noexcept;
};

/// Every decision must have a year in `years_by_pmid` (DataError otherwise).
YearSeries time_series(const std::vector<Decision>& decisions,
                       const std::unordered_map<std::string, int>& years_by_pmid,
                       const CategoryGroup& group, YearRange range);

YearSeries time_series(const std::vector<Decision>& decisions,
                       const std::vector<ArticleRecord>& records, const CategoryGroup& group,
                       YearRange range);

/// group,category,count
std::string category_csv(const std::vector<CategorySeries>& series);
/// Rebuilds group/categories/counts; records and flagged are not stored.
std::vector<CategorySeries> parse_category_csv(std::string_view document);

/// group,year,category,count with every (year, category) cell present.
std::string time_csv(const std::vector<YearSeries>& series);
/// Rebuilds group/categories/years/counts and per-year sums.
std::vector<YearSeries> parse_time_csv(std::string_view document);

using MonotonicClock = std::function<std::chrono::steady_clock::time_point()>;

MonotonicClock steady_clock_source();

/// Advances by `step` on every call. Gives reproducible timings in tests and
/// golden runs.
MonotonicClock fixed_step_clock(std::chrono::nanoseconds step);

struct StageTiming {
  std::string stage;
  std::string group;                  // empty for corpus-level stages
  std::optional<InputMode> input;
  double seconds = 0.0;
  std::size_t records = 0;
  std::optional<double> records_per_minute;  // absent when nothing was timed

  double minutes() const noexcept { return seconds / 60.0; }
  friend bool operator==(const StageTiming&, const StageTiming&) = default;
};

/// Throws UsageError on a negative duration. The rate is omitted for zero
/// records or a zero duration.
StageTiming record_timing(std::string stage, std::chrono::duration<double> duration,
                          std::size_t records, std::string group = {},
                          std::optional<InputMode> input = std::nullopt);

/// Measures one stage with the supplied clock.
class StageTimer {
 public:
  explicit StageTimer(MonotonicClock clock);
  std::chrono::duration<double> elapsed() const;

 private:
  MonotonicClock clock_;
  std::chrono::steady_clock::time_point start_;
};

/// Markdown: one row per stage, then a per-group table with one minutes
/// column per input mode.
std::string timing_table(const std::vector<StageTiming>& timings);

/// stage,records,minutes,records_per_min
std::string timing_csv(const std::vector<StageTiming>& timings);

std::string timings_json(const std::vector<StageTiming>& timings);
std::vector<StageTiming> parse_timings_json(std::string_view document);

}  // namespace littriage
