#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "littriage/annotation.hpp"
#include "littriage/corpus.hpp"
#include "littriage/decision.hpp"
#include "littriage/http.hpp"
#include "littriage/metrics.hpp"
#include "littriage/report.hpp"
#include "littriage/scorer.hpp"
#include "littriage/taxonomy.hpp"
#include "littriage/trend.hpp"

namespace littriage {

struct ScorerSettings {
  std::string backend = "mock";  // mock | remote
  std::string endpoint;
  std::size_t parallelism = 4;
  std::size_t char_budget = 4000;
};

struct ThresholdSettings {
  double default_value = 0.5;
  std::map<std::string, ThresholdConfig> groups;

  ThresholdConfig for_group(const CategoryGroup& group) const;
};

struct SweepSettings {
  bool enabled = false;
  double fraction = 0.5;  // share of gold records used for tuning
  std::vector<double> grid = default_threshold_grid();
  SweepObjective objective = SweepObjective::f1;
};

enum class Stage { fetch, classify, evaluate, ablate, trends, report, run_all };

std::string_view to_string(Stage stage) noexcept;

/// Run configuration, a JSON document with "version": 1. Relative paths are
/// resolved against the directory of the configuration file.
///
///   {"version": 1,
///    "query": "zero-shot classification",
///    "inclusion": {"year_min": 2015, "year_max": 2023, "require_abstract": false,
///                  "max_articles": 100},
///    "taxonomy": "taxonomy.json",
///    "input_modes": ["abstract", "title"],
///    "trend_mode": "abstract",
///    "trend_years": {"min": 2015, "max": 2023},
///    "scorer": {"backend": "mock", "endpoint": "http://127.0.0.1:8080",
///               "parallelism": 4, "char_budget": 4000},
///    "thresholds": {"default": 0.5, "groups": {"Topic": 0.4, "Other": [0.3, 0.6]}},
///    "sweep": {"enabled": false, "fraction": 0.5, "grid": [...], "objective": "f1"},
///    "annotations": "gold.jsonl",
///    "variants": "variants.json",
///    "fixtures": "fixtures/", "record_fixtures": false,
///    "corpus": "corpus.jsonl",
///    "output_dir": "out",
///    "seed": 42}
///
/// Every field except "version" is optional here; validate() checks what a
/// given stage needs.
struct RunConfig {
  InclusionCriteria inclusion;  // carries the query
  std::filesystem::path taxonomy;
  std::vector<InputMode> input_modes{InputMode::abstract};
  std::optional<InputMode> trend_mode;
  std::optional<YearRange> trend_years;
  ScorerSettings scorer;
  ThresholdSettings thresholds;
  SweepSettings sweep;
  std::optional<std::filesystem::path> annotations;
  std::optional<std::filesystem::path> variants;
  std::optional<std::filesystem::path> fixtures;
  bool record_fixtures = false;
  std::optional<std::filesystem::path> corpus;
  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 0;

  /// Input mode the trends and report are computed from.
  InputMode effective_trend_mode() const;
  /// The configured corpus, or corpus.jsonl in the output directory.
  std::filesystem::path corpus_path() const;
  std::filesystem::path decisions_path() const;

  /// Throws UsageError when a value is invalid or a file the stage reads is
  /// missing. Performs no side effects.
  void validate(Stage stage) const;
};

RunConfig parse_run_config(std::string_view document, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

/// Alternative phrasings for the ablation driver:
///   {"group": "Article Type",
///    "sets": [{"name": "descriptive", "phrasings": {"Clinical": "clinical trial", ...}}, ...]}
/// Labels missing from a set keep their primary phrasing.
struct PhrasingSet {
  std::string name;
  std::map<std::string, std::string> phrasings;
};

struct PhrasingVariants {
  std::string group;
  std::vector<PhrasingSet> sets;
};

PhrasingVariants parse_variants(std::string_view document, const std::vector<CategoryGroup>& groups);
PhrasingVariants load_variants(const std::filesystem::path& path,
                               const std::vector<CategoryGroup>& groups);

/// `group` with every label's primary phrasing replaced by the set's entry.
CategoryGroup apply_phrasing_set(const CategoryGroup& group, const PhrasingSet& set);

/// Collaborators the stages use. Defaults talk to the real services; tests
/// substitute fakes.
struct PipelineContext {
  MonotonicClock clock = steady_clock_source();
  std::shared_ptr<HttpTransport> transport;    // E-utilities; built from config when null
  std::shared_ptr<ScoringBackend> backend;     // built from config when null
  ClockHooks hooks = ClockHooks::system();
  std::function<std::string()> timestamp = utc_timestamp;
};

struct ClassifyOutput {
  std::vector<Decision> decisions;  // group-major, then input mode, then record order
  std::vector<StageTiming> timings;
  std::vector<std::string> warnings;
  std::size_t scorer_calls = 0;
};

/// Scores every record for every group and input mode. Records without an
/// abstract fall back to their title (flagged title_fallback) in every mode
/// but title. Fused mode issues two scorer calls per record and averages
/// them; hierarchical groups issue one binary call per label. A failing
/// request aborts with an error of the same kind naming the pmid.
ClassifyOutput classify_records(const std::vector<ArticleRecord>& records,
                                const std::vector<CategoryGroup>& groups,
                                const std::vector<InputMode>& modes, const ScorerGateway& gateway,
                                const ThresholdSettings& thresholds, std::size_t parallelism,
                                const MonotonicClock& clock);

struct EvaluationOutput {
  std::vector<EvalReport> reports;  // one per (group, input mode) with gold
  std::map<std::string, ThresholdConfig> tuned;  // "<group>/<mode>" when swept
  std::vector<std::string> warnings;
};

/// Evaluates decisions against resolved gold. Records without gold and tie
/// records are excluded and counted. With sweep enabled, multilabel groups
/// are split into tuning and evaluation halves; thresholds are tuned on the
/// first and the report covers the second.
EvaluationOutput evaluate_decisions(const std::vector<Decision>& decisions,
                                    const std::vector<CategoryGroup>& groups,
                                    const std::vector<GoldLabel>& gold, const SweepSettings& sweep,
                                    std::uint64_t seed);

struct AblationRow {
  std::string variant;
  InputMode input = InputMode::abstract;
  EvalReport report;
};

struct AblationTable {
  std::string group;
  std::vector<AblationRow> rows;  // variant-major
};

/// One row per (phrasing set, input mode), evaluated on all resolved gold.
AblationTable run_ablation(const std::vector<ArticleRecord>& records, const CategoryGroup& group,
                           const PhrasingVariants& variants, const std::vector<InputMode>& modes,
                           const std::vector<GoldLabel>& gold, const ScorerGateway& gateway,
                           const ThresholdSettings& thresholds, std::size_t parallelism);

/// Markdown table with the best value of each metric marked with '*'.
std::string ablation_markdown(const AblationTable& table);
/// variant,input_mode,Ac,F1,AUC,Pv,Re,records
std::string ablation_csv(const AblationTable& table);

struct TrendOutput {
  std::vector<CategorySeries> categories;
  std::vector<YearSeries> years;
};

/// Trend series for every group from the decisions of one input mode. The
/// year range is the configured one, else the corpus span.
TrendOutput compute_trends(const std::vector<Decision>& decisions,
                           const std::vector<CategoryGroup>& groups,
                           const std::vector<ArticleRecord>& records, InputMode mode,
                           const std::optional<YearRange>& years);

// Stage commands. Each validates the configuration first and writes its
// artifacts under output_dir with stable names.

struct FetchSummary {
  std::size_t retrieved = 0;
  std::size_t included = 0;
  std::size_t missing = 0;
  std::filesystem::path corpus;
};

FetchSummary cmd_fetch(const RunConfig& config, PipelineContext& context);

struct ClassifySummary {
  std::size_t records = 0;
  std::size_t decisions = 0;
  std::size_t scorer_calls = 0;
  std::vector<std::filesystem::path> files;
};

ClassifySummary cmd_classify(const RunConfig& config, PipelineContext& context);

std::vector<std::filesystem::path> cmd_evaluate(const RunConfig& config, PipelineContext& context);
std::vector<std::filesystem::path> cmd_ablate(const RunConfig& config, PipelineContext& context);
std::vector<std::filesystem::path> cmd_trends(const RunConfig& config, PipelineContext& context);
ReportFiles cmd_report(const RunConfig& config, PipelineContext& context);

/// fetch (unless a corpus is configured), classify, evaluate (with
/// annotations), trends, report.
ReportFiles cmd_run_all(const RunConfig& config, PipelineContext& context);

}  // namespace littriage
