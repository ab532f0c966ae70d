#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "littriage/taxonomy.hpp"

namespace littriage {

/// One annotator's assignment: a single label index for multiclass groups, a
/// label set for multilabel groups.
struct Vote {
  std::string annotator;
  std::vector<std::size_t> labels;
};

struct AnnotationSet {
  std::string pmid;
  std::string group;
  std::vector<Vote> votes;

  /// At least one vote, distinct annotators, every label inside the group,
  /// exactly one label per vote for multiclass groups.
  void validate(const CategoryGroup& group) const;
};

enum class GoldStatus { resolved, tie };

std::string_view to_string(GoldStatus status) noexcept;

struct GoldLabel {
  std::string pmid;
  std::string group;
  std::vector<std::size_t> labels;  // sorted; one element when multiclass and resolved
  GoldStatus status = GoldStatus::resolved;
  std::vector<std::size_t> tied_labels;

  friend bool operator==(const GoldLabel&, const GoldLabel&) = default;
};

/// Multiclass: the label with a strict plurality wins; a shared maximum is a
/// tie and no label is chosen. Multilabel: a label is gold iff more than half
/// of the annotators assigned it; labels at exactly half are left out and
/// reported in tied_labels, which marks the record as a tie.
GoldLabel majority_vote(const AnnotationSet& annotations, ClassificationMode mode);

/// Annotation files are JSON lines:
///   {"pmid": "123", "group": "Article Type", "annotator": "a1", "label": "Clinical"}
/// or "labels": [...] for multilabel groups. Lines are grouped by
/// (pmid, group) in order of first appearance.
std::vector<AnnotationSet> parse_annotations(std::string_view document,
                                             const std::vector<CategoryGroup>& groups);
std::vector<AnnotationSet> load_annotations(const std::filesystem::path& path,
                                            const std::vector<CategoryGroup>& groups);

/// Majority vote over every set whose group is in `groups`.
std::vector<GoldLabel> resolve_gold(const std::vector<AnnotationSet>& sets,
                                    const std::vector<CategoryGroup>& groups);

struct SplitResult {
  std::vector<GoldLabel> tuning;
  std::vector<GoldLabel> evaluation;
  std::vector<std::string> warnings;
};

/// Deterministic stratified split. Each label with at least two instances
/// ends up on both sides whenever the data allows it; records carrying a
/// label with fewer than two instances go to the tuning set with a warning.
/// Within each side records keep their input order.
SplitResult split_labeled_corpus(const std::vector<GoldLabel>& gold, double fraction,
                                 std::uint64_t seed);

}  // namespace littriage
