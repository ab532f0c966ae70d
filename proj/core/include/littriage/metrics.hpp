#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "littriage/decision.hpp"
#include "littriage/taxonomy.hpp"

namespace littriage {

/// counts[gold][predicted]
struct ConfusionMatrix {
  std::vector<std::vector<std::size_t>> counts;

  std::size_t labels() const noexcept { return counts.size(); }
  std::size_t total() const noexcept;
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Throws DataError naming the record index of an out-of-range label or on
/// misaligned inputs. Empty input gives a zero matrix.
ConfusionMatrix confusion_matrix(std::span<const std::size_t> predicted,
                                 std::span<const std::size_t> gold, std::size_t labels);

enum class Averaging { weighted, macro };

struct LabelMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;  // one-vs-rest
  std::size_t support = 0;
  std::optional<double> auc;
};

struct MulticlassMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<LabelMetrics> per_label;
  std::vector<std::string> warnings;  // 0/0 cases, reported as 0
};

/// Accuracy is trace/total; per-label values are one-vs-rest; the aggregate
/// precision/recall/F1 is support-weighted (or a plain mean with
/// Averaging::macro). Throws DataError when the matrix is empty.
MulticlassMetrics multiclass_metrics(const ConfusionMatrix& matrix,
                                     Averaging averaging = Averaging::weighted);

struct MicroMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::vector<std::string> warnings;
};

/// TP/FP/FN pooled over every (record, label) pair.
MicroMetrics multilabel_micro_metrics(const std::vector<std::vector<std::size_t>>& predicted,
                                      const std::vector<std::vector<std::size_t>>& gold,
                                      std::size_t labels);

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Throws DataError when either class is absent.
double auc_binary(std::span<const double> scores, const std::vector<bool>& positive);

struct AucResult {
  double auc = 0.0;
  std::vector<std::optional<double>> per_label;  // one-vs-rest where defined
  std::vector<std::string> warnings;
};

/// Multiclass: macro mean of one-vs-rest AUCs over labels whose gold has
/// both classes (others skipped with a warning). Multilabel: one AUC over
/// the pooled (record, label) pairs. Gold is a label set per record (a
/// singleton for multiclass). Throws DataError when no AUC is defined.
AucResult auc_aggregate(const std::vector<LabelScores>& scores,
                        const std::vector<std::vector<std::size_t>>& gold,
                        ClassificationMode mode, std::size_t labels);

struct EvalReport {
  std::string group;
  ClassificationMode mode = ClassificationMode::multiclass;
  InputMode input = InputMode::abstract;
  std::vector<std::string> labels;
  std::size_t records = 0;
  std::size_t excluded_without_gold = 0;
  std::size_t excluded_ties = 0;

  // Ac, Pv, Re, F1, AUC. For multilabel groups accuracy is exact-set match
  // and precision/recall/F1 are the micro values.
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> auc;

  std::optional<MicroMetrics> micro;
  std::vector<LabelMetrics> per_label;
  std::optional<ConfusionMatrix> confusion;
  std::vector<std::string> warnings;
};

/// Scores `decisions` against aligned gold label sets.
EvalReport evaluate(const CategoryGroup& group, InputMode input,
                    const std::vector<Decision>& decisions,
                    const std::vector<std::vector<std::size_t>>& gold,
                    Averaging averaging = Averaging::weighted);

std::string eval_report_json(const EvalReport& report);

/// label,Ac,F1,AUC,Pv,Re,support: one row per label, then an "aggregate" row.
std::string eval_report_csv(const EvalReport& report);

}  // namespace littriage
