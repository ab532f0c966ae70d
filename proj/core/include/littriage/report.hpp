#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "littriage/corpus.hpp"
#include "littriage/decision.hpp"
#include "littriage/metrics.hpp"
#include "littriage/trend.hpp"

namespace littriage {

struct ReportInputs {
  InclusionCriteria criteria;
  std::string scorer;
  std::vector<InputMode> input_modes;
  std::optional<InputMode> trend_mode;
  std::vector<CategorySeries> categories;
  std::vector<YearSeries> years;
  std::vector<EvalReport> evaluations;
  std::vector<StageTiming> timings;
};

struct ReportFiles {
  std::filesystem::path report;
  std::vector<std::filesystem::path> charts;
  std::vector<std::filesystem::path> tables;
};

inline constexpr std::string_view kTimestampPrefix = "Generated: ";

/// `<group>_<axis>.svg` with the group name made filesystem-safe.
std::string chart_filename(std::string_view group, std::string_view axis);

std::string render_category_svg(const CategorySeries& series);
std::string render_year_svg(const YearSeries& series);

/// Markdown body of report.md. The only line that varies between runs over
/// the same inputs is the one starting with kTimestampPrefix.
std::string render_report_markdown(const ReportInputs& inputs, std::string_view generated_at);

/// Writes report.md, one SVG per trend series, and the CSV sidecars
/// (category_trends.csv, time_trends.csv, timings.csv,
/// metrics_<group>_<mode>.csv) into `directory`. Needs at least one trend
/// series or evaluation (UsageError otherwise); unwritable paths are a
/// DataError.
ReportFiles render_report(const ReportInputs& inputs, const std::filesystem::path& directory,
                          std::string_view generated_at);

/// ISO-8601 UTC wall-clock time.
std::string utc_timestamp();

}  // namespace littriage
