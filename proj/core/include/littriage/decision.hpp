#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "littriage/corpus.hpp"
#include "littriage/scorer.hpp"
#include "littriage/taxonomy.hpp"

namespace littriage {

/// Decision thresholds for multilabel groups: one value for every label or
/// one per label, each strictly inside (0, 1).
class ThresholdConfig {
 public:
  static ThresholdConfig uniform(double value);
  static ThresholdConfig per_label(std::vector<double> values);

  double at(std::size_t label) const;
  bool is_uniform() const noexcept { return uniform_.has_value(); }
  /// Per-label values expanded to `labels` entries.
  std::vector<double> expand(std::size_t labels) const;

  /// Throws UsageError on values outside (0, 1) or a per-label size mismatch.
  void validate(std::size_t labels) const;

  friend bool operator==(const ThresholdConfig&, const ThresholdConfig&) = default;

 private:
  std::optional<double> uniform_;
  std::vector<double> per_label_;
};

enum class InputMode { abstract, title, fused, appended };

std::string_view to_string(InputMode mode) noexcept;
InputMode parse_input_mode(std::string_view text);

struct MulticlassChoice {
  std::size_t index = 0;
  bool tied = false;  // another label shares the maximum; lowest index won
};

/// Argmax; exact ties resolve to the lowest index and are flagged.
MulticlassChoice decide_multiclass(std::span<const double> scores);

/// { i : scores[i] > threshold_i }, strict. May be empty.
std::vector<std::size_t> decide_multilabel(std::span<const double> scores,
                                           const ThresholdConfig& thresholds);

/// Text handed to the scorer. Fused mode carries the abstract as `primary`
/// and the title as `secondary`; every other mode has one text.
struct ModelInput {
  std::string primary;
  std::optional<std::string> secondary;

  friend bool operator==(const ModelInput&, const ModelInput&) = default;
};

inline constexpr std::string_view kAppendSeparator = ". ";

/// Appended mode is title + ". " + abstract, shortening only the abstract
/// when the result would exceed `char_budget` code points. Abstract and
/// fused modes need a non-empty abstract (DataError pointing at title mode);
/// every mode needs a title.
ModelInput build_input(const ArticleRecord& record, InputMode mode, std::size_t char_budget = 4000);

/// Element-wise arithmetic mean. Throws DataError on a length mismatch.
LabelScores fuse_scores(const LabelScores& a, const LabelScores& b);

/// Binary request for one label: phrases [positive, negative], softmax.
ScoreRequest binary_request(std::string text, const CategoryGroup& group, std::size_t label);

/// per_label[i] holds the two-class scores of label i; the label is kept
/// when its positive probability exceeds its threshold. A missing entry is a
/// DataError naming the label.
std::vector<std::size_t> hierarchical_decide(const std::vector<std::optional<LabelScores>>& per_label,
                                             const ThresholdConfig& thresholds,
                                             const std::vector<std::string>& label_names);

struct Decision {
  std::string pmid;
  std::string group;
  ClassificationMode mode = ClassificationMode::multiclass;
  InputMode input = InputMode::abstract;
  std::vector<std::size_t> labels;  // one entry for multiclass
  LabelScores scores;               // positive-class probabilities when hierarchical
  bool tied = false;
  bool empty = false;
  bool title_fallback = false;

  friend bool operator==(const Decision&, const Decision&) = default;
};

/// Builds the decision for a score vector, using argmax or thresholds
/// according to the group mode.
Decision make_decision(std::string pmid, const CategoryGroup& group, InputMode input,
                       LabelScores scores, const ThresholdConfig& thresholds);

// Decision files are JSON lines:
//   {"pmid":..., "group":..., "mode":..., "input_mode":..., "labels":[names],
//    "scores":[...], "flags":[...]}

std::string serialize_decision(const Decision& decision, const CategoryGroup& group);
std::vector<Decision> parse_decisions(std::string_view document,
                                      const std::vector<CategoryGroup>& groups);
void save_decisions(const std::vector<Decision>& decisions, const std::vector<CategoryGroup>& groups,
                    const std::filesystem::path& path);
std::vector<Decision> load_decisions(const std::filesystem::path& path,
                                     const std::vector<CategoryGroup>& groups);

/// pmid,input_mode,labels,flags,<one column per label score>
std::string decisions_csv(const std::vector<Decision>& decisions, const CategoryGroup& group);

enum class SweepObjective { f1, precision, recall, accuracy };

SweepObjective parse_sweep_objective(std::string_view text);
std::string_view to_string(SweepObjective objective) noexcept;

/// {0.05, 0.10, ..., 0.95}
std::vector<double> default_threshold_grid();

struct SweepResult {
  ThresholdConfig thresholds;
  std::vector<double> objective;  // best per-label objective value
  std::vector<std::string> warnings;
};

/// Per label, the grid value maximizing the per-label objective on the
/// tuning predictions (ties go to the smallest value). Labels never present
/// in the gold sets get the grid median with a warning.
SweepResult sweep_thresholds(const std::vector<LabelScores>& predictions,
                             const std::vector<std::vector<std::size_t>>& gold, std::size_t labels,
                             std::span<const double> grid,
                             SweepObjective objective = SweepObjective::f1);

}  // namespace littriage
