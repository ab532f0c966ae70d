#include "littriage/decision.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "littriage/csv.hpp"
#include "littriage/error.hpp"
#include "littriage/text.hpp"

namespace littriage {

ThresholdConfig ThresholdConfig::uniform(double value) {
  ThresholdConfig c;
  c.uniform_ = value;
  return c;
}

ThresholdConfig ThresholdConfig::per_label(std::vector<double> values) {
  ThresholdConfig c;
  c.per_label_ = std::move(values);
  return c;
}

double ThresholdConfig::at(std::size_t label) const {
  if (uniform_) return *uniform_;
  if (label >= per_label_.size()) {
    throw UsageError("no threshold for label index " + std::to_string(label));
  }
  return per_label_[label];
}

std::vector<double> ThresholdConfig::expand(std::size_t labels) const {
  if (uniform_) return std::vector<double>(labels, *uniform_);
  return per_label_;
}

void ThresholdConfig::validate(std::size_t labels) const {
  auto check = [](double v) {
    if (!(v > 0.0 && v < 1.0)) {
      throw UsageError("threshold " + format_double(v) + " is outside (0, 1)");
    }
  };
  if (uniform_) {
    check(*uniform_);
    return;
  }
  if (per_label_.size() != labels) {
    throw UsageError("expected " + std::to_string(labels) + " per-label thresholds, got " +
                     std::to_string(per_label_.size()));
  }
  for (double v : per_label_) check(v);
}

std::string_view to_string(InputMode mode) noexcept {
  switch (mode) {
    case InputMode::abstract:
      return "abstract";
    case InputMode::title:
      return "title";
    case InputMode::fused:
      return "fused";
    case InputMode::appended:
      return "appended";
  }
  return "abstract";
}

InputMode parse_input_mode(std::string_view text) {
  for (auto m : {InputMode::abstract, InputMode::title, InputMode::fused, InputMode::appended}) {
    if (to_string(m) == text) return m;
  }
  throw UsageError("unknown input mode '" + std::string(text) +
                   "' (expected abstract, title, fused or appended)");
}

MulticlassChoice decide_multiclass(std::span<const double> scores) {
  if (scores.empty()) throw DataError("cannot decide over an empty score vector");
  MulticlassChoice choice;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[choice.index]) choice.index = i;
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i != choice.index && scores[i] == scores[choice.index]) {
      choice.tied = true;
      break;
    }
  }
  return choice;
}

std::vector<std::size_t> decide_multilabel(std::span<const double> scores,
                                           const ThresholdConfig& thresholds) {
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > thresholds.at(i)) chosen.push_back(i);
  }
  return chosen;
}

ModelInput build_input(const ArticleRecord& record, InputMode mode, std::size_t char_budget) {
  if (is_blank(record.title)) throw DataError("record " + record.pmid + " has no title");
  const bool has_abstract = !is_blank(record.abstract);
  switch (mode) {
    case InputMode::title:
      return {truncate_at_word(record.title, char_budget), std::nullopt};
    case InputMode::abstract:
      if (!has_abstract) {
        throw DataError("record " + record.pmid + " has no abstract; classify it in title mode");
      }
      return {truncate_at_word(record.abstract, char_budget), std::nullopt};
    case InputMode::fused:
      if (!has_abstract) {
        throw DataError("record " + record.pmid +
                        " has no abstract to fuse with its title; classify it in title mode");
      }
      return {truncate_at_word(record.abstract, char_budget),
              truncate_at_word(record.title, char_budget)};
    case InputMode::appended: {
      if (!has_abstract) {
        throw DataError("record " + record.pmid + " has no abstract to append; use title mode");
      }
      const auto title_len = utf8_length(record.title) + kAppendSeparator.size();
      if (title_len >= char_budget) return {record.title, std::nullopt};
      auto abstract = truncate_at_word(record.abstract, char_budget - title_len);
      if (abstract.empty()) return {record.title, std::nullopt};
      return {record.title + std::string(kAppendSeparator) + abstract, std::nullopt};
    }
  }
  throw UsageError("unhandled input mode");
}

LabelScores fuse_scores(const LabelScores& a, const LabelScores& b) {
  if (a.size() != b.size()) {
    throw DataError("cannot fuse score vectors of length " + std::to_string(a.size()) + " and " +
                    std::to_string(b.size()));
  }
  LabelScores out;
  out.scores.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out.scores.push_back((a[i] + b[i]) / 2.0);
  return out;
}

ScoreRequest binary_request(std::string text, const CategoryGroup& group, std::size_t label) {
  ScoreRequest r;
  r.text = std::move(text);
  r.label_phrases = {group.phrasings.at(label).front(), group.negative_phrase(label)};
  r.multi_label = false;
  r.hypothesis_template = group.hypothesis_template;
  return r;
}

std::vector<std::size_t> hierarchical_decide(const std::vector<std::optional<LabelScores>>& per_label,
                                             const ThresholdConfig& thresholds,
                                             const std::vector<std::string>& label_names) {
  std::vector<std::size_t> chosen;
  for (std::size_t i = 0; i < label_names.size(); ++i) {
    if (i >= per_label.size() || !per_label[i]) {
      throw DataError("no binary scores for label '" + label_names[i] + "'");
    }
    const auto& s = *per_label[i];
    if (s.size() != 2) {
      throw DataError("binary scores for label '" + label_names[i] + "' have " +
                      std::to_string(s.size()) + " entries");
    }
    if (s[0] > thresholds.at(i)) chosen.push_back(i);
  }
  return chosen;
}

Decision make_decision(std::string pmid, const CategoryGroup& group, InputMode input,
                       LabelScores scores, const ThresholdConfig& thresholds) {
  Decision d;
  d.pmid = std::move(pmid);
  d.group = group.name;
  d.mode = group.mode;
  d.input = input;
  if (group.mode == ClassificationMode::multiclass) {
    const auto choice = decide_multiclass(scores.scores);
    d.labels = {choice.index};
    d.tied = choice.tied;
  } else {
    d.labels = decide_multilabel(scores.scores, thresholds);
    d.empty = d.labels.empty();
  }
  d.scores = std::move(scores);
  return d;
}

namespace {

std::vector<std::string> flags_of(const Decision& d) {
  std::vector<std::string> flags;
  if (d.tied) flags.emplace_back("tied");
  if (d.empty) flags.emplace_back("empty");
  if (d.title_fallback) flags.emplace_back("title_fallback");
  return flags;
}

}  // namespace

std::string serialize_decision(const Decision& d, const CategoryGroup& group) {
  nlohmann::ordered_json j;
  j["pmid"] = d.pmid;
  j["group"] = d.group;
  j["mode"] = std::string(to_string(d.mode));
  j["input_mode"] = std::string(to_string(d.input));
  auto names = nlohmann::ordered_json::array();
  for (auto l : d.labels) names.push_back(group.labels.at(l));
  j["labels"] = std::move(names);
  j["scores"] = d.scores.scores;
  j["flags"] = flags_of(d);
  return j.dump();
}

std::vector<Decision> parse_decisions(std::string_view document,
                                      const std::vector<CategoryGroup>& groups) {
  std::vector<Decision> out;
  std::size_t line_number = 0;
  std::size_t pos = 0;
  while (pos < document.size()) {
    auto end = document.find('\n', pos);
    if (end == std::string_view::npos) end = document.size();
    ++line_number;
    const auto line = document.substr(pos, end - pos);
    pos = end + 1;
    if (is_blank(line)) continue;
    const auto where = "decision line " + std::to_string(line_number) + ": ";
    try {
      const auto j = nlohmann::json::parse(line);
      Decision d;
      d.pmid = j.at("pmid").get<std::string>();
      d.group = j.at("group").get<std::string>();
      const auto& group = find_group(groups, d.group);
      d.mode = parse_classification_mode(j.at("mode").get<std::string>());
      if (d.mode != group.mode) throw DataError("mode does not match the taxonomy");
      d.input = parse_input_mode(j.at("input_mode").get<std::string>());
      for (const auto& name : j.at("labels")) {
        auto idx = group.index_of(name.get<std::string>());
        if (!idx) throw DataError("unknown label " + name.dump());
        d.labels.push_back(*idx);
      }
      d.scores.scores = j.at("scores").get<std::vector<double>>();
      if (d.scores.size() != group.size()) throw DataError("score vector length mismatch");
      for (const auto& f : j.at("flags")) {
        const auto flag = f.get<std::string>();
        if (flag == "tied") {
          d.tied = true;
        } else if (flag == "empty") {
          d.empty = true;
        } else if (flag == "title_fallback") {
          d.title_fallback = true;
        } else {
          throw DataError("unknown flag '" + flag + "'");
        }
      }
      out.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + e.what());
    } catch (const Error& e) {
      throw DataError(where + e.what());
    }
  }
  return out;
}

void save_decisions(const std::vector<Decision>& decisions, const std::vector<CategoryGroup>& groups,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& d : decisions) out << serialize_decision(d, find_group(groups, d.group)) << '\n';
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<Decision> load_decisions(const std::filesystem::path& path,
                                     const std::vector<CategoryGroup>& groups) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open decisions " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_decisions(buf.str(), groups);
}

std::string decisions_csv(const std::vector<Decision>& decisions, const CategoryGroup& group) {
  csv::Row header = {"pmid", "input_mode", "labels", "flags"};
  for (const auto& l : group.labels) header.push_back(l);
  std::string out = csv::format_row(header);
  for (const auto& d : decisions) {
    if (d.group != group.name) continue;
    std::string labels;
    for (auto l : d.labels) {
      if (!labels.empty()) labels.push_back(';');
      labels += group.labels.at(l);
    }
    std::string flags;
    for (const auto& f : flags_of(d)) {
      if (!flags.empty()) flags.push_back(';');
      flags += f;
    }
    csv::Row row = {d.pmid, std::string(to_string(d.input)), labels, flags};
    for (double s : d.scores.scores) row.push_back(format_double(s));
    out += csv::format_row(row);
  }
  return out;
}

SweepObjective parse_sweep_objective(std::string_view text) {
  for (auto o : {SweepObjective::f1, SweepObjective::precision, SweepObjective::recall,
                 SweepObjective::accuracy}) {
    if (to_string(o) == text) return o;
  }
  throw UsageError("unknown sweep objective '" + std::string(text) + "'");
}

std::string_view to_string(SweepObjective objective) noexcept {
  switch (objective) {
    case SweepObjective::f1:
      return "f1";
    case SweepObjective::precision:
      return "precision";
    case SweepObjective::recall:
      return "recall";
    case SweepObjective::accuracy:
      return "accuracy";
  }
  return "f1";
}

std::vector<double> default_threshold_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 19; ++k) grid.push_back(k / 20.0);
  return grid;
}

namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double binary_objective(SweepObjective objective, std::size_t tp, std::size_t fp, std::size_t fn,
                        std::size_t tn) {
  switch (objective) {
    case SweepObjective::precision:
      return ratio(tp, tp + fp);
    case SweepObjective::recall:
      return ratio(tp, tp + fn);
    case SweepObjective::accuracy:
      return ratio(tp + tn, tp + fp + fn + tn);
    case SweepObjective::f1:
      return ratio(2 * tp, 2 * tp + fp + fn);
  }
  return 0.0;
}

}  // namespace

SweepResult sweep_thresholds(const std::vector<LabelScores>& predictions,
                             const std::vector<std::vector<std::size_t>>& gold, std::size_t labels,
                             std::span<const double> grid, SweepObjective objective) {
  if (grid.empty()) throw UsageError("threshold grid is empty");
  for (double v : grid) {
    if (!(v > 0.0 && v < 1.0)) throw UsageError("grid value " + format_double(v) + " outside (0, 1)");
  }
  if (predictions.empty()) throw UsageError("threshold sweep needs a non-empty tuning set");
  if (predictions.size() != gold.size()) throw UsageError("predictions and gold are not aligned");

  std::vector<double> sorted(grid.begin(), grid.end());
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[(sorted.size() - 1) / 2];

  std::vector<std::vector<bool>> truth(labels, std::vector<bool>(gold.size(), false));
  for (std::size_t r = 0; r < gold.size(); ++r) {
    if (predictions[r].size() != labels) {
      throw DataError("tuning record " + std::to_string(r) + " has " +
                      std::to_string(predictions[r].size()) + " scores, expected " +
                      std::to_string(labels));
    }
    for (auto l : gold[r]) {
      if (l >= labels) throw DataError("gold label out of range in tuning record " + std::to_string(r));
      truth[l][r] = true;
    }
  }

  SweepResult result;
  std::vector<double> chosen(labels, median);
  result.objective.assign(labels, 0.0);
  for (std::size_t l = 0; l < labels; ++l) {
    if (std::none_of(truth[l].begin(), truth[l].end(), [](bool b) { return b; })) {
      result.warnings.push_back("label " + std::to_string(l) +
                                " never occurs in the tuning gold; using grid median " +
                                format_double(median));
      continue;
    }
    bool have_best = false;
    for (double xi : sorted) {
      std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
      for (std::size_t r = 0; r < predictions.size(); ++r) {
        const bool predicted = predictions[r][l] > xi;
        const bool actual = truth[l][r];
        tp += predicted && actual;
        fp += predicted && !actual;
        fn += !predicted && actual;
        tn += !predicted && !actual;
      }
      const double value = binary_objective(objective, tp, fp, fn, tn);
      // Ascending scan with strict improvement keeps the smallest maximizer.
      if (!have_best || value > result.objective[l]) {
        result.objective[l] = value;
        chosen[l] = xi;
        have_best = true;
      }
    }
  }
  result.thresholds = ThresholdConfig::per_label(std::move(chosen));
  for (const auto& w : result.warnings) spdlog::warn("threshold sweep: {}", w);
  return result;
}

}  // namespace littriage
