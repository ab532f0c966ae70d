#include "littriage/metrics.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "littriage/csv.hpp"
#include "littriage/error.hpp"
#include "littriage/text.hpp"

namespace littriage {

namespace {

double safe_ratio(std::size_t num, std::size_t den, const std::string& what,
                  std::vector<std::string>& warnings) {
  if (den == 0) {
    warnings.push_back(what + " is 0/0; reported as 0");
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

void check_labels(const std::vector<std::size_t>& set, std::size_t labels, std::size_t record) {
  for (auto l : set) {
    if (l >= labels) {
      throw DataError("record " + std::to_string(record) + ": label " + std::to_string(l) +
                      " outside [0, " + std::to_string(labels) + ")");
    }
  }
}

bool contains(const std::vector<std::size_t>& set, std::size_t label) {
  return std::find(set.begin(), set.end(), label) != set.end();
}

}  // namespace

std::size_t ConfusionMatrix::total() const noexcept {
  std::size_t n = 0;
  for (const auto& row : counts) n = std::accumulate(row.begin(), row.end(), n);
  return n;
}

ConfusionMatrix confusion_matrix(std::span<const std::size_t> predicted,
                                 std::span<const std::size_t> gold, std::size_t labels) {
  if (predicted.size() != gold.size()) {
    throw DataError("confusion matrix: " + std::to_string(predicted.size()) + " predictions for " +
                    std::to_string(gold.size()) + " gold labels");
  }
  ConfusionMatrix m;
  m.counts.assign(labels, std::vector<std::size_t>(labels, 0));
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] >= labels || predicted[i] >= labels) {
      throw DataError("confusion matrix: record " + std::to_string(i) + " has a label outside [0, " +
                      std::to_string(labels) + ")");
    }
    ++m.counts[gold[i]][predicted[i]];
  }
  return m;
}

MulticlassMetrics multiclass_metrics(const ConfusionMatrix& matrix, Averaging averaging) {
  const auto total = matrix.total();
  if (total == 0) throw DataError("metrics are undefined for an empty confusion matrix");
  const auto n = matrix.labels();

  MulticlassMetrics out;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) correct += matrix.counts[i][i];
  out.accuracy = static_cast<double>(correct) / static_cast<double>(total);

  for (std::size_t l = 0; l < n; ++l) {
    const auto tp = matrix.counts[l][l];
    std::size_t gold_l = 0;
    std::size_t pred_l = 0;
    for (std::size_t k = 0; k < n; ++k) {
      gold_l += matrix.counts[l][k];
      pred_l += matrix.counts[k][l];
    }
    const auto fp = pred_l - tp;
    const auto fn = gold_l - tp;
    const auto tn = total - tp - fp - fn;
    const auto name = "label " + std::to_string(l);

    LabelMetrics m;
    m.support = gold_l;
    m.precision = safe_ratio(tp, tp + fp, name + " precision", out.warnings);
    m.recall = safe_ratio(tp, tp + fn, name + " recall", out.warnings);
    m.f1 = safe_ratio(2 * tp, 2 * tp + fp + fn, name + " F1", out.warnings);
    m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(total);
    out.per_label.push_back(m);
  }

  if (averaging == Averaging::weighted) {
    for (const auto& m : out.per_label) {
      const double w = static_cast<double>(m.support) / static_cast<double>(total);
      out.precision += w * m.precision;
      out.recall += w * m.recall;
      out.f1 += w * m.f1;
    }
  } else {
    for (const auto& m : out.per_label) {
      out.precision += m.precision;
      out.recall += m.recall;
      out.f1 += m.f1;
    }
    out.precision /= static_cast<double>(n);
    out.recall /= static_cast<double>(n);
    out.f1 /= static_cast<double>(n);
  }
  return out;
}

MicroMetrics multilabel_micro_metrics(const std::vector<std::vector<std::size_t>>& predicted,
                                      const std::vector<std::vector<std::size_t>>& gold,
                                      std::size_t labels) {
  if (predicted.size() != gold.size()) throw DataError("micro metrics: inputs are not aligned");
  MicroMetrics out;
  for (std::size_t r = 0; r < gold.size(); ++r) {
    check_labels(predicted[r], labels, r);
    check_labels(gold[r], labels, r);
    for (std::size_t l = 0; l < labels; ++l) {
      const bool p = contains(predicted[r], l);
      const bool g = contains(gold[r], l);
      out.tp += p && g;
      out.fp += p && !g;
      out.fn += !p && g;
    }
  }
  out.precision = safe_ratio(out.tp, out.tp + out.fp, "micro precision", out.warnings);
  out.recall = safe_ratio(out.tp, out.tp + out.fn, "micro recall", out.warnings);
  out.f1 = safe_ratio(2 * out.tp, 2 * out.tp + out.fp + out.fn, "micro F1", out.warnings);
  return out;
}

double auc_binary(std::span<const double> scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw DataError("AUC: scores and labels are not aligned");
  const auto n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });

  // Mann-Whitney U with mid-ranks for tied scores.
  double positive_rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (positive[order[k]]) {
        positive_rank_sum += mid_rank;
        ++positives;
      }
    }
    i = j + 1;
  }
  const auto negatives = n - positives;
  if (positives == 0 || negatives == 0) {
    throw DataError("AUC is undefined when gold contains a single class");
  }
  const double p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

AucResult auc_aggregate(const std::vector<LabelScores>& scores,
                        const std::vector<std::vector<std::size_t>>& gold,
                        ClassificationMode mode, std::size_t labels) {
  if (scores.size() != gold.size()) throw DataError("AUC: scores and gold are not aligned");
  for (std::size_t r = 0; r < scores.size(); ++r) {
    if (scores[r].size() != labels) {
      throw DataError("AUC: record " + std::to_string(r) + " has " +
                      std::to_string(scores[r].size()) + " scores, expected " +
                      std::to_string(labels));
    }
    check_labels(gold[r], labels, r);
  }

  AucResult out;
  out.per_label.assign(labels, std::nullopt);
  std::vector<double> column(scores.size());
  std::vector<bool> positive(scores.size());
  for (std::size_t l = 0; l < labels; ++l) {
    std::size_t pos = 0;
    for (std::size_t r = 0; r < scores.size(); ++r) {
      column[r] = scores[r][l];
      positive[r] = contains(gold[r], l);
      pos += positive[r];
    }
    if (pos == 0 || pos == scores.size()) continue;
    out.per_label[l] = auc_binary(column, positive);
  }

  if (mode == ClassificationMode::multiclass) {
    double sum = 0.0;
    std::size_t defined = 0;
    for (std::size_t l = 0; l < labels; ++l) {
      if (out.per_label[l]) {
        sum += *out.per_label[l];
        ++defined;
      } else {
        out.warnings.push_back("label " + std::to_string(l) +
                               " has single-class gold; skipped in macro AUC");
      }
    }
    if (defined == 0) throw DataError("AUC: no label has both classes in the gold data");
    out.auc = sum / static_cast<double>(defined);
    return out;
  }

  std::vector<double> pooled;
  std::vector<bool> pooled_positive;
  pooled.reserve(scores.size() * labels);
  pooled_positive.reserve(scores.size() * labels);
  for (std::size_t r = 0; r < scores.size(); ++r) {
    for (std::size_t l = 0; l < labels; ++l) {
      pooled.push_back(scores[r][l]);
      pooled_positive.push_back(contains(gold[r], l));
    }
  }
  out.auc = auc_binary(pooled, pooled_positive);
  return out;
}

EvalReport evaluate(const CategoryGroup& group, InputMode input,
                    const std::vector<Decision>& decisions,
                    const std::vector<std::vector<std::size_t>>& gold, Averaging averaging) {
  if (decisions.size() != gold.size()) throw DataError("evaluate: decisions and gold not aligned");
  if (decisions.empty()) throw DataError("evaluate: no records with gold labels for '" + group.name + "'");

  EvalReport report;
  report.group = group.name;
  report.mode = group.mode;
  report.input = input;
  report.labels = group.labels;
  report.records = decisions.size();
  const auto n = group.size();

  std::vector<LabelScores> scores;
  scores.reserve(decisions.size());
  for (const auto& d : decisions) scores.push_back(d.scores);

  if (group.mode == ClassificationMode::multiclass) {
    std::vector<std::size_t> predicted;
    std::vector<std::size_t> truth;
    for (std::size_t r = 0; r < decisions.size(); ++r) {
      if (decisions[r].labels.size() != 1 || gold[r].size() != 1) {
        throw DataError("evaluate: multiclass record " + decisions[r].pmid +
                        " needs exactly one predicted and one gold label");
      }
      predicted.push_back(decisions[r].labels.front());
      truth.push_back(gold[r].front());
    }
    auto cm = confusion_matrix(predicted, truth, n);
    auto m = multiclass_metrics(cm, averaging);
    report.accuracy = m.accuracy;
    report.precision = m.precision;
    report.recall = m.recall;
    report.f1 = m.f1;
    report.per_label = std::move(m.per_label);
    report.warnings = std::move(m.warnings);
    report.confusion = std::move(cm);
  } else {
    std::vector<std::vector<std::size_t>> predicted;
    std::size_t exact = 0;
    for (std::size_t r = 0; r < decisions.size(); ++r) {
      auto p = decisions[r].labels;
      auto g = gold[r];
      std::sort(p.begin(), p.end());
      std::sort(g.begin(), g.end());
      exact += p == g;
      predicted.push_back(std::move(p));
    }
    auto micro = multilabel_micro_metrics(predicted, gold, n);
    report.accuracy = static_cast<double>(exact) / static_cast<double>(decisions.size());
    report.precision = micro.precision;
    report.recall = micro.recall;
    report.f1 = micro.f1;
    report.warnings = micro.warnings;
    for (std::size_t l = 0; l < n; ++l) {
      std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
      for (std::size_t r = 0; r < decisions.size(); ++r) {
        const bool p = contains(predicted[r], l);
        const bool g = contains(gold[r], l);
        tp += p && g;
        fp += p && !g;
        fn += !p && g;
        tn += !p && !g;
      }
      const auto name = group.labels[l];
      LabelMetrics m;
      m.support = tp + fn;
      m.precision = safe_ratio(tp, tp + fp, name + " precision", report.warnings);
      m.recall = safe_ratio(tp, tp + fn, name + " recall", report.warnings);
      m.f1 = safe_ratio(2 * tp, 2 * tp + fp + fn, name + " F1", report.warnings);
      m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(decisions.size());
      report.per_label.push_back(m);
    }
    report.micro = std::move(micro);
  }

  try {
    auto auc = auc_aggregate(scores, gold, group.mode, n);
    report.auc = auc.auc;
    for (std::size_t l = 0; l < n; ++l) report.per_label[l].auc = auc.per_label[l];
    for (auto& w : auc.warnings) report.warnings.push_back(std::move(w));
  } catch (const DataError& e) {
    report.warnings.emplace_back(std::string("AUC not reported: ") + e.what());
  }
  for (const auto& w : report.warnings) spdlog::warn("evaluate '{}': {}", group.name, w);
  return report;
}

std::string eval_report_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["group"] = report.group;
  j["mode"] = std::string(to_string(report.mode));
  j["input_mode"] = std::string(to_string(report.input));
  j["records"] = report.records;
  j["excluded_without_gold"] = report.excluded_without_gold;
  j["excluded_ties"] = report.excluded_ties;
  j["Ac"] = report.accuracy;
  j["F1"] = report.f1;
  j["AUC"] = report.auc ? nlohmann::ordered_json(*report.auc) : nlohmann::ordered_json(nullptr);
  j["Pv"] = report.precision;
  j["Re"] = report.recall;
  if (report.micro) {
    j["micro"] = {{"F1", report.micro->f1},
                  {"Pv", report.micro->precision},
                  {"Re", report.micro->recall},
                  {"tp", report.micro->tp},
                  {"fp", report.micro->fp},
                  {"fn", report.micro->fn}};
  }
  auto labels = nlohmann::ordered_json::array();
  for (std::size_t l = 0; l < report.per_label.size(); ++l) {
    const auto& m = report.per_label[l];
    nlohmann::ordered_json row;
    row["label"] = report.labels.at(l);
    row["Ac"] = m.accuracy;
    row["F1"] = m.f1;
    row["AUC"] = m.auc ? nlohmann::ordered_json(*m.auc) : nlohmann::ordered_json(nullptr);
    row["Pv"] = m.precision;
    row["Re"] = m.recall;
    row["support"] = m.support;
    labels.push_back(std::move(row));
  }
  j["per_label"] = std::move(labels);
  if (report.confusion) j["confusion"] = report.confusion->counts;
  j["warnings"] = report.warnings;
  return j.dump(2) + "\n";
}

std::string eval_report_csv(const EvalReport& report) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  std::string out = csv::format_row({"label", "Ac", "F1", "AUC", "Pv", "Re", "support"});
  for (std::size_t l = 0; l < report.per_label.size(); ++l) {
    const auto& m = report.per_label[l];
    out += csv::format_row({report.labels.at(l), format_double(m.accuracy), format_double(m.f1),
                            opt(m.auc), format_double(m.precision), format_double(m.recall),
                            std::to_string(m.support)});
  }
  out += csv::format_row({"aggregate", format_double(report.accuracy), format_double(report.f1),
                          opt(report.auc), format_double(report.precision),
                          format_double(report.recall), std::to_string(report.records)});
  return out;
}

}  // namespace littriage
