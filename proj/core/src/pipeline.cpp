#include "littriage/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "littriage/csv.hpp"
#include "littriage/error.hpp"
#include "littriage/pubmed.hpp"
#include "littriage/text.hpp"

namespace littriage {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void throw_kind(ErrorKind kind, const std::string& message) {
  switch (kind) {
    case ErrorKind::usage:
      throw UsageError(message);
    case ErrorKind::network:
      throw NetworkError(message);
    case ErrorKind::protocol:
      throw ProtocolError(message);
    case ErrorKind::data:
      break;
  }
  throw DataError(message);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("write failed for " + path.string());
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
}

void require_file(const std::optional<fs::path>& path, std::string_view what) {
  if (!path || path->empty()) throw UsageError(std::string(what) + " is not configured");
  if (!fs::is_regular_file(*path)) {
    throw UsageError(std::string(what) + " not found: " + path->string());
  }
}

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  return p.is_absolute() ? p : base / p;
}

template <typename T>
T field(const json& object, const char* key, const std::string& where) {
  try {
    return object.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError(where + ": field '" + key + "' has the wrong type");
  }
}

void check_keys(const json& object, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  if (!object.is_object()) throw UsageError(where + " must be an object");
  for (const auto& [key, value] : object.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw UsageError(where + ": unknown field '" + key + "'");
    }
  }
}

ThresholdConfig threshold_from_json(const json& value, const std::string& where) {
  if (value.is_number()) return ThresholdConfig::uniform(value.get<double>());
  if (value.is_array()) {
    std::vector<double> values;
    for (const auto& v : value) {
      if (!v.is_number()) throw UsageError(where + ": thresholds must be numbers");
      values.push_back(v.get<double>());
    }
    return ThresholdConfig::per_label(std::move(values));
  }
  throw UsageError(where + ": expected a number or an array of numbers");
}

std::vector<StageTiming> load_timings(const fs::path& path) {
  if (!fs::exists(path)) return {};
  return parse_timings_json(read_text(path));
}

void merge_timings(const fs::path& path, const std::vector<StageTiming>& fresh) {
  auto timings = load_timings(path);
  for (const auto& t : fresh) {
    std::erase_if(timings, [&](const StageTiming& old) {
      return old.stage == t.stage && old.group == t.group && old.input == t.input;
    });
    timings.push_back(t);
  }
  write_text(path, timings_json(timings));
}

std::shared_ptr<ScoringBackend> make_backend(const RunConfig& config, PipelineContext& context) {
  if (context.backend) return context.backend;
  if (config.scorer.backend == "remote") {
    return std::make_shared<RemoteScorer>(config.scorer.endpoint, make_http_transport(), RetryPolicy{},
                                          context.hooks);
  }
  return std::make_shared<MockScorer>();
}

std::string scorer_label(const RunConfig& config) {
  if (config.scorer.backend == "remote") return "remote (" + config.scorer.endpoint + ")";
  return MockScorer().model_id();
}

std::vector<GoldLabel> load_gold(const RunConfig& config, const std::vector<CategoryGroup>& groups) {
  return resolve_gold(load_annotations(*config.annotations, groups), groups);
}

}  // namespace

ThresholdConfig ThresholdSettings::for_group(const CategoryGroup& group) const {
  if (auto it = groups.find(group.name); it != groups.end()) return it->second;
  return ThresholdConfig::uniform(default_value);
}

std::string_view to_string(Stage stage) noexcept {
  switch (stage) {
    case Stage::fetch:
      return "fetch";
    case Stage::classify:
      return "classify";
    case Stage::evaluate:
      return "evaluate";
    case Stage::ablate:
      return "ablate";
    case Stage::trends:
      return "trends";
    case Stage::report:
      return "report";
    case Stage::run_all:
      return "run-all";
  }
  return "run-all";
}

InputMode RunConfig::effective_trend_mode() const {
  if (trend_mode) return *trend_mode;
  return input_modes.empty() ? InputMode::abstract : input_modes.front();
}

fs::path RunConfig::corpus_path() const { return corpus ? *corpus : output_dir / "corpus.jsonl"; }

fs::path RunConfig::decisions_path() const { return output_dir / "decisions.jsonl"; }

void RunConfig::validate(Stage stage) const {
  inclusion.validate();
  if (input_modes.empty()) throw UsageError("at least one input mode is required");
  for (std::size_t i = 0; i < input_modes.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (input_modes[i] == input_modes[j]) {
        throw UsageError("input mode '" + std::string(to_string(input_modes[i])) + "' listed twice");
      }
    }
  }
  if (trend_mode &&
      std::find(input_modes.begin(), input_modes.end(), *trend_mode) == input_modes.end()) {
    throw UsageError("trend mode '" + std::string(to_string(*trend_mode)) +
                     "' is not one of the configured input modes");
  }
  if (trend_years && trend_years->min > trend_years->max) {
    throw UsageError("trend_years minimum exceeds maximum");
  }
  if (scorer.backend != "mock" && scorer.backend != "remote") {
    throw UsageError("unknown scorer backend '" + scorer.backend + "' (expected mock or remote)");
  }
  if (scorer.backend == "remote" && !endpoint_is_valid(scorer.endpoint)) {
    throw UsageError("scorer endpoint '" + scorer.endpoint + "' is not of the form http://host:port");
  }
  if (scorer.parallelism == 0) throw UsageError("scorer parallelism must be at least 1");
  if (scorer.char_budget == 0) throw UsageError("character budget must be positive");
  ThresholdConfig::uniform(thresholds.default_value).validate(1);
  if (!(sweep.fraction > 0.0 && sweep.fraction < 1.0)) {
    throw UsageError("sweep fraction must lie strictly between 0 and 1");
  }
  if (sweep.grid.empty()) throw UsageError("sweep grid is empty");
  for (double v : sweep.grid) {
    if (!(v > 0.0 && v < 1.0)) throw UsageError("sweep grid values must lie strictly between 0 and 1");
  }

  const bool fetches = stage == Stage::fetch || (stage == Stage::run_all && !corpus);
  if (fetches) {
    if (is_blank(inclusion.query)) throw UsageError("a query is required to fetch records");
    if (fixtures && !record_fixtures && !fs::is_directory(*fixtures)) {
      throw UsageError("fixture directory not found: " + fixtures->string());
    }
  }
  if (stage == Stage::fetch) return;

  require_file(taxonomy, "taxonomy");
  const auto groups = load_taxonomy(taxonomy);
  for (const auto& [name, config] : thresholds.groups) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const CategoryGroup& g) { return g.name == name; });
    if (it == groups.end()) throw UsageError("thresholds given for unknown group '" + name + "'");
    config.validate(it->size());
  }

  switch (stage) {
    case Stage::classify:
      require_file(corpus_path(), "corpus");
      break;
    case Stage::evaluate:
      require_file(annotations, "annotations");
      require_file(decisions_path(), "decisions file");
      break;
    case Stage::ablate:
      require_file(corpus_path(), "corpus");
      require_file(annotations, "annotations");
      require_file(variants, "phrasing variants");
      break;
    case Stage::trends:
    case Stage::report:
      require_file(corpus_path(), "corpus");
      require_file(decisions_path(), "decisions file");
      break;
    case Stage::run_all:
      if (!fetches) require_file(corpus_path(), "corpus");
      if (annotations) require_file(annotations, "annotations");
      break;
    case Stage::fetch:
      break;
  }
}

RunConfig parse_run_config(std::string_view document, const fs::path& base_dir) {
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("configuration is not valid JSON: ") + e.what());
  }
  const std::string where = "configuration";
  check_keys(root,
             {"version", "query", "inclusion", "taxonomy", "input_modes", "trend_mode", "trend_years",
              "scorer", "thresholds", "sweep", "annotations", "variants", "fixtures",
              "record_fixtures", "corpus", "output_dir", "seed"},
             where);
  if (!root.contains("version") || root["version"] != 1) {
    throw UsageError("configuration must declare \"version\": 1");
  }

  RunConfig config;
  if (root.contains("query")) config.inclusion.query = field<std::string>(root, "query", where);
  if (root.contains("inclusion")) {
    const auto& inc = root["inclusion"];
    const std::string w = "inclusion";
    check_keys(inc, {"year_min", "year_max", "require_abstract", "max_articles"}, w);
    if (inc.contains("year_min") != inc.contains("year_max")) {
      throw UsageError("inclusion: year_min and year_max go together");
    }
    if (inc.contains("year_min")) {
      config.inclusion.year_range = YearRange{field<int>(inc, "year_min", w), field<int>(inc, "year_max", w)};
    }
    if (inc.contains("require_abstract")) {
      config.inclusion.require_abstract = field<bool>(inc, "require_abstract", w);
    }
    if (inc.contains("max_articles")) {
      const auto n = field<long long>(inc, "max_articles", w);
      if (n <= 0) throw UsageError("inclusion: max_articles must be at least 1");
      config.inclusion.max_articles = static_cast<std::size_t>(n);
    }
  }
  if (root.contains("taxonomy")) config.taxonomy = resolve(base_dir, field<std::string>(root, "taxonomy", where));
  if (root.contains("input_modes")) {
    config.input_modes.clear();
    for (const auto& m : field<std::vector<std::string>>(root, "input_modes", where)) {
      config.input_modes.push_back(parse_input_mode(m));
    }
  }
  if (root.contains("trend_mode")) {
    config.trend_mode = parse_input_mode(field<std::string>(root, "trend_mode", where));
  }
  if (root.contains("trend_years")) {
    const auto& ty = root["trend_years"];
    check_keys(ty, {"min", "max"}, "trend_years");
    config.trend_years = YearRange{field<int>(ty, "min", "trend_years"), field<int>(ty, "max", "trend_years")};
  }
  if (root.contains("scorer")) {
    const auto& s = root["scorer"];
    check_keys(s, {"backend", "endpoint", "parallelism", "char_budget"}, "scorer");
    if (s.contains("backend")) config.scorer.backend = field<std::string>(s, "backend", "scorer");
    if (s.contains("endpoint")) config.scorer.endpoint = field<std::string>(s, "endpoint", "scorer");
    if (s.contains("parallelism")) {
      config.scorer.parallelism = static_cast<std::size_t>(std::max(0LL, field<long long>(s, "parallelism", "scorer")));
    }
    if (s.contains("char_budget")) {
      config.scorer.char_budget = static_cast<std::size_t>(std::max(0LL, field<long long>(s, "char_budget", "scorer")));
    }
  }
  if (root.contains("thresholds")) {
    const auto& t = root["thresholds"];
    check_keys(t, {"default", "groups"}, "thresholds");
    if (t.contains("default")) config.thresholds.default_value = field<double>(t, "default", "thresholds");
    if (t.contains("groups")) {
      if (!t["groups"].is_object()) throw UsageError("thresholds: groups must be an object");
      for (const auto& [name, value] : t["groups"].items()) {
        config.thresholds.groups.emplace(name, threshold_from_json(value, "thresholds for '" + name + "'"));
      }
    }
  }
  if (root.contains("sweep")) {
    const auto& s = root["sweep"];
    check_keys(s, {"enabled", "fraction", "grid", "objective"}, "sweep");
    if (s.contains("enabled")) config.sweep.enabled = field<bool>(s, "enabled", "sweep");
    if (s.contains("fraction")) config.sweep.fraction = field<double>(s, "fraction", "sweep");
    if (s.contains("grid")) config.sweep.grid = field<std::vector<double>>(s, "grid", "sweep");
    if (s.contains("objective")) {
      config.sweep.objective = parse_sweep_objective(field<std::string>(s, "objective", "sweep"));
    }
  }
  auto optional_path = [&](const char* key, std::optional<fs::path>& target) {
    if (root.contains(key)) target = resolve(base_dir, field<std::string>(root, key, where));
  };
  optional_path("annotations", config.annotations);
  optional_path("variants", config.variants);
  optional_path("fixtures", config.fixtures);
  optional_path("corpus", config.corpus);
  if (root.contains("record_fixtures")) config.record_fixtures = field<bool>(root, "record_fixtures", where);
  config.output_dir = resolve(base_dir, root.contains("output_dir")
                                            ? field<std::string>(root, "output_dir", where)
                                            : std::string("out"));
  if (root.contains("seed")) config.seed = field<std::uint64_t>(root, "seed", where);
  return config;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read configuration " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), path.parent_path());
}

PhrasingVariants parse_variants(std::string_view document, const std::vector<CategoryGroup>& groups) {
  json root;
  try {
    root = json::parse(document);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("phrasing variants are not valid JSON: ") + e.what());
  }
  if (!root.is_object() || !root.contains("group") || !root["group"].is_string() ||
      !root.contains("sets") || !root["sets"].is_array()) {
    throw DataError("phrasing variants need a \"group\" name and a \"sets\" array");
  }
  PhrasingVariants variants;
  variants.group = root["group"].get<std::string>();
  const auto& group = find_group(groups, variants.group);
  std::set<std::string> names;
  for (const auto& s : root["sets"]) {
    if (!s.is_object() || !s.contains("name") || !s["name"].is_string() || !s.contains("phrasings") ||
        !s["phrasings"].is_object()) {
      throw DataError("each phrasing set needs a \"name\" and a \"phrasings\" object");
    }
    PhrasingSet set;
    set.name = s["name"].get<std::string>();
    if (!names.insert(set.name).second) throw DataError("phrasing set '" + set.name + "' defined twice");
    for (const auto& [label, phrase] : s["phrasings"].items()) {
      if (!group.index_of(label)) {
        throw DataError("phrasing set '" + set.name + "': unknown label '" + label + "'");
      }
      if (!phrase.is_string() || is_blank(phrase.get<std::string>())) {
        throw DataError("phrasing set '" + set.name + "': phrase for '" + label + "' must be a non-empty string");
      }
      set.phrasings.emplace(label, phrase.get<std::string>());
    }
    variants.sets.push_back(std::move(set));
  }
  if (variants.sets.size() < 2) throw DataError("ablation needs at least two phrasing sets");
  return variants;
}

PhrasingVariants load_variants(const fs::path& path, const std::vector<CategoryGroup>& groups) {
  return parse_variants(read_text(path), groups);
}

CategoryGroup apply_phrasing_set(const CategoryGroup& group, const PhrasingSet& set) {
  CategoryGroup out = group;
  for (std::size_t l = 0; l < out.labels.size(); ++l) {
    if (auto it = set.phrasings.find(out.labels[l]); it != set.phrasings.end()) {
      if (out.phrasings[l].empty()) {
        out.phrasings[l].push_back(it->second);
      } else {
        out.phrasings[l].front() = it->second;
      }
    }
  }
  return out;
}

ClassifyOutput classify_records(const std::vector<ArticleRecord>& records,
                                const std::vector<CategoryGroup>& groups,
                                const std::vector<InputMode>& modes, const ScorerGateway& gateway,
                                const ThresholdSettings& thresholds, std::size_t parallelism,
                                const MonotonicClock& clock) {
  ClassifyOutput out;
  const auto calls_before = gateway.backend_calls();
  const auto budget = gateway.options().char_budget;

  for (const auto& group : groups) {
    const auto config = thresholds.for_group(group);
    if (group.mode == ClassificationMode::multilabel) config.validate(group.size());
    const bool hierarchical = group.decomposition == Decomposition::hierarchical;
    const auto phrases = group.primary_phrases();
    const std::size_t per_text = hierarchical ? group.size() : 1;

    for (const auto mode : modes) {
      StageTimer timer(clock);
      std::vector<ScoreRequest> requests;
      std::vector<std::size_t> owner;  // record index per request
      std::vector<std::size_t> texts(records.size(), 0);
      std::vector<bool> fallback(records.size(), false);

      for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& record = records[r];
        auto effective = mode;
        if (mode != InputMode::title && is_blank(record.abstract)) {
          effective = InputMode::title;
          fallback[r] = true;
          out.warnings.push_back("record " + record.pmid + " has no abstract; " +
                                 std::string(to_string(mode)) + " input falls back to the title");
        }
        const auto input = build_input(record, effective, budget);
        std::vector<const std::string*> sources{&input.primary};
        if (input.secondary) sources.push_back(&*input.secondary);
        texts[r] = sources.size();
        for (const auto* text : sources) {
          if (hierarchical) {
            for (std::size_t l = 0; l < group.size(); ++l) {
              requests.push_back(binary_request(*text, group, l));
              owner.push_back(r);
            }
          } else {
            requests.push_back(ScoreRequest{*text, phrases,
                                            group.mode == ClassificationMode::multilabel,
                                            group.hypothesis_template});
            owner.push_back(r);
          }
        }
      }

      std::vector<LabelScores> scores;
      try {
        scores = gateway.score_batch(requests, parallelism);
      } catch (const BatchError& e) {
        const auto& pmid = records.at(owner.at(e.index())).pmid;
        throw_kind(e.kind(), "scoring record " + pmid + " failed (group '" + group.name + "', " +
                                 std::string(to_string(mode)) + " input): " + e.what());
      }

      std::size_t cursor = 0;
      for (std::size_t r = 0; r < records.size(); ++r) {
        std::vector<LabelScores> per_text_scores;
        for (std::size_t t = 0; t < texts[r]; ++t) {
          if (hierarchical) {
            LabelScores positive;
            for (std::size_t l = 0; l < per_text; ++l) positive.scores.push_back(scores[cursor + l][0]);
            per_text_scores.push_back(std::move(positive));
          } else {
            per_text_scores.push_back(std::move(scores[cursor]));
          }
          cursor += per_text;
        }
        auto combined = per_text_scores.size() == 2 ? fuse_scores(per_text_scores[0], per_text_scores[1])
                                                    : std::move(per_text_scores.front());
        auto decision = make_decision(records[r].pmid, group, mode, std::move(combined), config);
        decision.title_fallback = fallback[r];
        out.decisions.push_back(std::move(decision));
      }
      out.timings.push_back(record_timing("classify", timer.elapsed(), records.size(), group.name, mode));
    }
  }
  out.scorer_calls = gateway.backend_calls() - calls_before;
  return out;
}

EvaluationOutput evaluate_decisions(const std::vector<Decision>& decisions,
                                    const std::vector<CategoryGroup>& groups,
                                    const std::vector<GoldLabel>& gold, const SweepSettings& sweep,
                                    std::uint64_t seed) {
  EvaluationOutput out;
  std::map<std::pair<std::string, std::string>, const GoldLabel*> gold_index;
  for (const auto& g : gold) gold_index[{g.group, g.pmid}] = &g;

  for (const auto& group : groups) {
    std::vector<InputMode> modes;
    for (const auto& d : decisions) {
      if (d.group == group.name && std::find(modes.begin(), modes.end(), d.input) == modes.end()) {
        modes.push_back(d.input);
      }
    }
    for (const auto mode : modes) {
      std::vector<Decision> kept;
      std::vector<GoldLabel> kept_gold;
      std::size_t without_gold = 0;
      std::size_t ties = 0;
      for (const auto& d : decisions) {
        if (d.group != group.name || d.input != mode) continue;
        auto it = gold_index.find({group.name, d.pmid});
        if (it == gold_index.end()) {
          ++without_gold;
        } else if (it->second->status == GoldStatus::tie) {
          ++ties;
        } else {
          kept.push_back(d);
          kept_gold.push_back(*it->second);
        }
      }
      const std::string key = group.name + "/" + std::string(to_string(mode));
      if (kept.empty()) {
        out.warnings.push_back(key + ": no decisions with resolved gold; nothing to evaluate");
        continue;
      }

      if (sweep.enabled && group.mode == ClassificationMode::multilabel) {
        auto split = split_labeled_corpus(kept_gold, sweep.fraction, seed);
        for (auto& w : split.warnings) out.warnings.push_back(key + ": " + w);
        std::unordered_map<std::string, const Decision*> by_pmid;
        for (const auto& d : kept) by_pmid[d.pmid] = &d;

        std::vector<LabelScores> tuning_scores;
        std::vector<std::vector<std::size_t>> tuning_gold;
        for (const auto& g : split.tuning) {
          tuning_scores.push_back(by_pmid.at(g.pmid)->scores);
          tuning_gold.push_back(g.labels);
        }
        auto tuned = sweep_thresholds(tuning_scores, tuning_gold, group.size(), sweep.grid, sweep.objective);
        for (auto& w : tuned.warnings) out.warnings.push_back(key + ": " + w);

        std::vector<Decision> redecided;
        std::vector<GoldLabel> evaluation_gold;
        for (const auto& g : split.evaluation) {
          const auto& original = *by_pmid.at(g.pmid);
          auto d = make_decision(original.pmid, group, mode, original.scores, tuned.thresholds);
          d.title_fallback = original.title_fallback;
          redecided.push_back(std::move(d));
          evaluation_gold.push_back(g);
        }
        out.tuned.emplace(key, tuned.thresholds);
        if (redecided.empty()) {
          out.warnings.push_back(key + ": evaluation split is empty");
          continue;
        }
        kept = std::move(redecided);
        kept_gold = std::move(evaluation_gold);
      }

      std::vector<std::vector<std::size_t>> gold_sets;
      for (const auto& g : kept_gold) gold_sets.push_back(g.labels);
      auto report = evaluate(group, mode, kept, gold_sets);
      report.excluded_without_gold = without_gold;
      report.excluded_ties = ties;
      out.reports.push_back(std::move(report));
    }
  }
  return out;
}

AblationTable run_ablation(const std::vector<ArticleRecord>& records, const CategoryGroup& group,
                           const PhrasingVariants& variants, const std::vector<InputMode>& modes,
                           const std::vector<GoldLabel>& gold, const ScorerGateway& gateway,
                           const ThresholdSettings& thresholds, std::size_t parallelism) {
  if (variants.group != group.name) {
    throw UsageError("phrasing variants are for group '" + variants.group + "', not '" + group.name + "'");
  }
  if (variants.sets.size() < 2) throw UsageError("ablation needs at least two phrasing sets");
  AblationTable table;
  table.group = group.name;
  const auto clock = steady_clock_source();
  for (const auto& set : variants.sets) {
    const auto variant = apply_phrasing_set(group, set);
    auto classified = classify_records(records, {variant}, modes, gateway, thresholds, parallelism, clock);
    auto evaluation = evaluate_decisions(classified.decisions, {variant}, gold, SweepSettings{}, 0);
    for (const auto mode : modes) {
      auto it = std::find_if(evaluation.reports.begin(), evaluation.reports.end(),
                             [&](const EvalReport& r) { return r.input == mode; });
      if (it == evaluation.reports.end()) {
        throw DataError("ablation: no gold-labelled records for group '" + group.name + "'");
      }
      table.rows.push_back({set.name, mode, std::move(*it)});
    }
  }
  return table;
}

namespace {

struct MetricColumn {
  const char* name;
  std::optional<double> (*get)(const EvalReport&);
};

constexpr MetricColumn kAblationColumns[] = {
    {"Ac", [](const EvalReport& r) -> std::optional<double> { return r.accuracy; }},
    {"F1", [](const EvalReport& r) -> std::optional<double> { return r.f1; }},
    {"AUC", [](const EvalReport& r) -> std::optional<double> { return r.auc; }},
    {"Pv", [](const EvalReport& r) -> std::optional<double> { return r.precision; }},
    {"Re", [](const EvalReport& r) -> std::optional<double> { return r.recall; }},
};

}  // namespace

std::string ablation_markdown(const AblationTable& table) {
  std::string md = "# Phrasing ablation: " + table.group + "\n\n| Phrasing set | Input |";
  std::string rule = "|---|---|";
  for (const auto& c : kAblationColumns) {
    md += std::string(" ") + c.name + " |";
    rule += "---:|";
  }
  md += "\n" + rule + "\n";
  std::vector<std::optional<double>> best;
  for (const auto& c : kAblationColumns) {
    std::optional<double> b;
    for (const auto& row : table.rows) {
      auto v = c.get(row.report);
      if (v && (!b || *v > *b)) b = v;
    }
    best.push_back(b);
  }
  for (const auto& row : table.rows) {
    md += "| " + row.variant + " | " + std::string(to_string(row.input)) + " |";
    for (std::size_t c = 0; c < std::size(kAblationColumns); ++c) {
      const auto v = kAblationColumns[c].get(row.report);
      if (!v) {
        md += " - |";
        continue;
      }
      md += " " + format_fixed(*v, 3) + (best[c] && *v == *best[c] ? "*" : "") + " |";
    }
    md += "\n";
  }
  md += "\n`*` marks the best value of each column.\n";
  return md;
}

std::string ablation_csv(const AblationTable& table) {
  std::string out = csv::format_row({"variant", "input_mode", "Ac", "F1", "AUC", "Pv", "Re", "records"});
  for (const auto& row : table.rows) {
    const auto& r = row.report;
    out += csv::format_row({row.variant, std::string(to_string(row.input)), format_double(r.accuracy),
                            format_double(r.f1), r.auc ? format_double(*r.auc) : std::string(),
                            format_double(r.precision), format_double(r.recall),
                            std::to_string(r.records)});
  }
  return out;
}

TrendOutput compute_trends(const std::vector<Decision>& decisions,
                           const std::vector<CategoryGroup>& groups,
                           const std::vector<ArticleRecord>& records, InputMode mode,
                           const std::optional<YearRange>& years) {
  std::unordered_map<std::string, int> year_of;
  for (const auto& r : records) year_of.emplace(r.pmid, r.year);

  TrendOutput out;
  for (const auto& group : groups) {
    std::vector<Decision> selected;
    for (const auto& d : decisions) {
      if (d.group == group.name && d.input == mode) selected.push_back(d);
    }
    out.categories.push_back(category_counts(selected, group));
    auto range = years;
    if (!range) {
      for (const auto& d : selected) {
        auto it = year_of.find(d.pmid);
        if (it == year_of.end()) throw DataError("decision for unknown record " + d.pmid);
        if (!range) {
          range = YearRange{it->second, it->second};
        } else {
          range->min = std::min(range->min, it->second);
          range->max = std::max(range->max, it->second);
        }
      }
    }
    if (range) out.years.push_back(time_series(selected, year_of, group, *range));
  }
  return out;
}

FetchSummary cmd_fetch(const RunConfig& config, PipelineContext& context) {
  config.validate(Stage::fetch);
  ensure_directory(config.output_dir);

  auto transport = context.transport;
  if (!transport) {
    if (config.fixtures && !config.record_fixtures) {
      transport = std::make_shared<FixtureTransport>(*config.fixtures);
    } else if (config.fixtures) {
      ensure_directory(*config.fixtures);
      transport = std::make_shared<RecordingTransport>(make_http_transport(), *config.fixtures);
    } else {
      transport = make_http_transport();
    }
  }

  StageTimer timer(context.clock);
  EutilsClient client(transport, EutilsOptions::from_environment(), context.hooks);
  const auto ids = client.search(config.inclusion.query, config.inclusion.max_articles,
                                 config.inclusion.year_range);
  auto fetched = ids.empty() ? FetchResult{} : client.fetch(ids);
  auto included = apply_inclusion(fetched.records, config.inclusion);

  FetchSummary summary;
  summary.retrieved = fetched.records.size();
  summary.included = included.size();
  summary.missing = fetched.missing.size();
  summary.corpus = config.corpus_path();
  if (summary.corpus.has_parent_path()) ensure_directory(summary.corpus.parent_path());
  save_corpus(included, summary.corpus);
  merge_timings(config.output_dir / "timings.json",
                {record_timing("fetch", timer.elapsed(), included.size())});
  return summary;
}

ClassifySummary cmd_classify(const RunConfig& config, PipelineContext& context) {
  config.validate(Stage::classify);
  const auto groups = load_taxonomy(config.taxonomy);
  const auto records = load_corpus(config.corpus_path());
  ScorerGateway gateway(make_backend(config, context), GatewayOptions{config.scorer.char_budget});
  ensure_directory(config.output_dir);

  auto out = classify_records(records, groups, config.input_modes, gateway, config.thresholds,
                              config.scorer.parallelism, context.clock);
  for (const auto& w : out.warnings) spdlog::warn("{}", w);

  ClassifySummary summary;
  summary.records = records.size();
  summary.decisions = out.decisions.size();
  summary.scorer_calls = out.scorer_calls;
  save_decisions(out.decisions, groups, config.decisions_path());
  summary.files.push_back(config.decisions_path());
  for (const auto& group : groups) {
    std::vector<Decision> own;
    for (const auto& d : out.decisions) {
      if (d.group == group.name) own.push_back(d);
    }
    auto path = config.output_dir / ("decisions_" + slugify(group.name) + ".csv");
    write_text(path, decisions_csv(own, group));
    summary.files.push_back(std::move(path));
  }
  merge_timings(config.output_dir / "timings.json", out.timings);
  summary.files.push_back(config.output_dir / "timings.json");
  return summary;
}

std::vector<fs::path> cmd_evaluate(const RunConfig& config, PipelineContext&) {
  config.validate(Stage::evaluate);
  const auto groups = load_taxonomy(config.taxonomy);
  const auto decisions = load_decisions(config.decisions_path(), groups);
  const auto gold = load_gold(config, groups);
  ensure_directory(config.output_dir);

  auto out = evaluate_decisions(decisions, groups, gold, config.sweep, config.seed);
  for (const auto& w : out.warnings) spdlog::warn("{}", w);

  std::vector<fs::path> files;
  for (const auto& report : out.reports) {
    const auto stem = "eval_" + slugify(report.group) + "_" + std::string(to_string(report.input));
    files.push_back(config.output_dir / (stem + ".json"));
    write_text(files.back(), eval_report_json(report));
    files.push_back(config.output_dir / (stem + ".csv"));
    write_text(files.back(), eval_report_csv(report));
  }
  if (!out.tuned.empty()) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [key, thresholds] : out.tuned) {
      const auto slash = key.rfind('/');
      const auto& group = find_group(groups, key.substr(0, slash));
      j[key.substr(0, slash)][key.substr(slash + 1)] = thresholds.expand(group.size());
    }
    files.push_back(config.output_dir / "thresholds.json");
    write_text(files.back(), j.dump(2) + "\n");
  }
  return files;
}

std::vector<fs::path> cmd_ablate(const RunConfig& config, PipelineContext& context) {
  config.validate(Stage::ablate);
  const auto groups = load_taxonomy(config.taxonomy);
  const auto variants = load_variants(*config.variants, groups);
  const auto records = load_corpus(config.corpus_path());
  const auto gold = load_gold(config, groups);
  ScorerGateway gateway(make_backend(config, context), GatewayOptions{config.scorer.char_budget});
  ensure_directory(config.output_dir);

  const auto& group = find_group(groups, variants.group);
  auto table = run_ablation(records, group, variants, config.input_modes, gold, gateway,
                            config.thresholds, config.scorer.parallelism);
  const auto stem = "ablation_" + slugify(group.name);
  std::vector<fs::path> files{config.output_dir / (stem + ".md"), config.output_dir / (stem + ".csv")};
  write_text(files[0], ablation_markdown(table));
  write_text(files[1], ablation_csv(table));
  return files;
}

std::vector<fs::path> cmd_trends(const RunConfig& config, PipelineContext&) {
  config.validate(Stage::trends);
  const auto groups = load_taxonomy(config.taxonomy);
  const auto decisions = load_decisions(config.decisions_path(), groups);
  const auto records = load_corpus(config.corpus_path());
  const auto years = config.trend_years ? config.trend_years : config.inclusion.year_range;
  auto trends = compute_trends(decisions, groups, records, config.effective_trend_mode(), years);
  ensure_directory(config.output_dir);

  std::vector<fs::path> files{config.output_dir / "category_trends.csv",
                              config.output_dir / "time_trends.csv"};
  write_text(files[0], category_csv(trends.categories));
  write_text(files[1], time_csv(trends.years));
  return files;
}

ReportFiles cmd_report(const RunConfig& config, PipelineContext& context) {
  config.validate(Stage::report);
  const auto groups = load_taxonomy(config.taxonomy);
  const auto decisions = load_decisions(config.decisions_path(), groups);
  const auto records = load_corpus(config.corpus_path());
  const auto years = config.trend_years ? config.trend_years : config.inclusion.year_range;
  auto trends = compute_trends(decisions, groups, records, config.effective_trend_mode(), years);

  ReportInputs inputs;
  inputs.criteria = config.inclusion;
  inputs.scorer = scorer_label(config);
  inputs.input_modes = config.input_modes;
  inputs.trend_mode = config.effective_trend_mode();
  inputs.categories = std::move(trends.categories);
  inputs.years = std::move(trends.years);
  if (config.annotations) {
    require_file(config.annotations, "annotations");
    auto evaluation = evaluate_decisions(decisions, groups, load_gold(config, groups), config.sweep, config.seed);
    for (const auto& w : evaluation.warnings) spdlog::warn("{}", w);
    inputs.evaluations = std::move(evaluation.reports);
  }
  inputs.timings = load_timings(config.output_dir / "timings.json");
  return render_report(inputs, config.output_dir, context.timestamp());
}

ReportFiles cmd_run_all(const RunConfig& config, PipelineContext& context) {
  config.validate(Stage::run_all);
  if (!config.corpus) {
    const auto fetched = cmd_fetch(config, context);
    spdlog::info("fetch: {} records retrieved, {} after inclusion criteria", fetched.retrieved,
                 fetched.included);
  }
  const auto classified = cmd_classify(config, context);
  spdlog::info("classify: {} decisions for {} records", classified.decisions, classified.records);
  if (config.annotations) cmd_evaluate(config, context);
  cmd_trends(config, context);
  return cmd_report(config, context);
}

}  // namespace littriage
