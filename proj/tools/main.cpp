#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "littriage/error.hpp"
#include "littriage/pipeline.hpp"

namespace fs = std::filesystem;
using namespace littriage;

namespace {

struct Overrides {
  std::optional<std::string> query;
  std::optional<std::size_t> max_articles;
  std::optional<int> year_min;
  std::optional<int> year_max;
  bool require_abstract = false;
  std::optional<std::string> taxonomy;
  std::vector<std::string> input_modes;
  std::optional<std::string> trend_mode;
  std::optional<std::string> backend;
  std::optional<std::string> endpoint;
  std::optional<std::size_t> parallelism;
  std::optional<double> threshold;
  bool sweep = false;
  std::optional<std::string> annotations;
  std::optional<std::string> variants;
  std::optional<std::string> fixtures;
  bool record_fixtures = false;
  std::optional<std::string> corpus;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--taxonomy", o.taxonomy, "Taxonomy JSON file");
  cmd->add_option("--corpus", o.corpus, "Corpus JSONL file");
  cmd->add_option("-o,--output-dir", o.output_dir, "Artifact directory");
  cmd->add_option("--input-mode", o.input_modes, "abstract, title, fused or appended (repeatable)");
  cmd->add_option("--seed", o.seed, "Seed for the tuning/evaluation split");
}

void add_fetch(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-q,--query", o.query, "PubMed query");
  cmd->add_option("-n,--max-articles", o.max_articles, "Maximum number of records");
  cmd->add_option("--year-min", o.year_min, "Earliest publication year");
  cmd->add_option("--year-max", o.year_max, "Latest publication year");
  cmd->add_flag("--require-abstract", o.require_abstract, "Drop records without an abstract");
  cmd->add_option("--fixtures", o.fixtures, "Replay E-utilities responses from this directory");
  cmd->add_flag("--record-fixtures", o.record_fixtures, "Save live responses into --fixtures");
}

void add_scorer(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--backend", o.backend, "mock or remote");
  cmd->add_option("--endpoint", o.endpoint, "Scorer sidecar address, http://host:port");
  cmd->add_option("-j,--parallelism", o.parallelism, "Concurrent scorer requests");
  cmd->add_option("--threshold", o.threshold, "Default multilabel threshold");
}

void add_evaluation(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--annotations", o.annotations, "Annotator votes, JSONL");
  cmd->add_flag("--sweep", o.sweep, "Tune multilabel thresholds on a held-out split");
}

void add_trend(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--trend-mode", o.trend_mode, "Input mode the trends are computed from");
}

RunConfig build_config(const std::optional<std::string>& config_path, const Overrides& o) {
  RunConfig config = config_path ? load_run_config(*config_path) : RunConfig{};
  if (o.query) config.inclusion.query = *o.query;
  if (o.max_articles) config.inclusion.max_articles = *o.max_articles;
  if (o.year_min || o.year_max) {
    auto range = config.inclusion.year_range.value_or(YearRange{1800, current_year()});
    if (o.year_min) range.min = *o.year_min;
    if (o.year_max) range.max = *o.year_max;
    config.inclusion.year_range = range;
  }
  if (o.require_abstract) config.inclusion.require_abstract = true;
  if (o.taxonomy) config.taxonomy = *o.taxonomy;
  if (!o.input_modes.empty()) {
    config.input_modes.clear();
    for (const auto& m : o.input_modes) config.input_modes.push_back(parse_input_mode(m));
  }
  if (o.trend_mode) config.trend_mode = parse_input_mode(*o.trend_mode);
  if (o.backend) config.scorer.backend = *o.backend;
  if (o.endpoint) config.scorer.endpoint = *o.endpoint;
  if (o.parallelism) config.scorer.parallelism = *o.parallelism;
  if (o.threshold) config.thresholds.default_value = *o.threshold;
  if (o.sweep) config.sweep.enabled = true;
  if (o.annotations) config.annotations = fs::path(*o.annotations);
  if (o.variants) config.variants = fs::path(*o.variants);
  if (o.fixtures) config.fixtures = fs::path(*o.fixtures);
  if (o.record_fixtures) config.record_fixtures = true;
  if (o.corpus) config.corpus = fs::path(*o.corpus);
  if (o.output_dir) config.output_dir = *o.output_dir;
  if (o.seed) config.seed = *o.seed;
  return config;
}

void print_files(const std::vector<fs::path>& files) {
  for (const auto& f : files) std::cout << f.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("littriage");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("%^%l%$: %v");

  CLI::App app{"Zero-shot triage of PubMed literature: fetch, classify, evaluate, report"};
  app.require_subcommand(1);
  std::optional<std::string> config_path;
  bool verbose = false;
  bool quiet = false;
  app.add_option("-c,--config", config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("--quiet", quiet, "Errors only");

  Overrides o;
  auto* fetch = app.add_subcommand("fetch", "Search PubMed and store the filtered corpus");
  add_fetch(fetch, o);
  add_common(fetch, o);

  auto* classify = app.add_subcommand("classify", "Score every record and store decisions");
  add_common(classify, o);
  add_scorer(classify, o);

  auto* evaluate = app.add_subcommand("evaluate", "Compare decisions with annotator gold labels");
  add_common(evaluate, o);
  add_evaluation(evaluate, o);

  auto* ablate = app.add_subcommand("ablate", "Compare label phrasing sets on gold-labelled records");
  add_common(ablate, o);
  add_scorer(ablate, o);
  ablate->add_option("--annotations", o.annotations, "Annotator votes, JSONL");
  ablate->add_option("--variants", o.variants, "Phrasing sets, JSON");

  auto* trends = app.add_subcommand("trends", "Category and per-year counts");
  add_common(trends, o);
  add_trend(trends, o);

  auto* report = app.add_subcommand("report", "Render report.md with charts and tables");
  add_common(report, o);
  add_trend(report, o);
  add_evaluation(report, o);

  auto* run_all = app.add_subcommand("run-all", "fetch, classify, evaluate, trends and report");
  add_fetch(run_all, o);
  add_common(run_all, o);
  add_scorer(run_all, o);
  add_evaluation(run_all, o);
  add_trend(run_all, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_codes::ok : exit_codes::usage;
  }
  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::err : spdlog::level::info);

  try {
    const auto config = build_config(config_path, o);
    PipelineContext context;
    if (fetch->parsed()) {
      const auto s = cmd_fetch(config, context);
      std::cout << "retrieved " << s.retrieved << " records, " << s.included
                << " after inclusion criteria";
      if (s.missing > 0) std::cout << " (" << s.missing << " identifiers not returned)";
      std::cout << "\n" << s.corpus.string() << "\n";
    } else if (classify->parsed()) {
      const auto s = cmd_classify(config, context);
      std::cout << s.decisions << " decisions for " << s.records << " records (" << s.scorer_calls
                << " scorer calls)\n";
      print_files(s.files);
    } else if (evaluate->parsed()) {
      print_files(cmd_evaluate(config, context));
    } else if (ablate->parsed()) {
      print_files(cmd_ablate(config, context));
    } else if (trends->parsed()) {
      print_files(cmd_trends(config, context));
    } else if (report->parsed()) {
      std::cout << cmd_report(config, context).report.string() << "\n";
    } else if (run_all->parsed()) {
      std::cout << cmd_run_all(config, context).report.string() << "\n";
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return exit_codes::internal;
  }
  return exit_codes::ok;
}
