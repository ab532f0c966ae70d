#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace littriage {

enum class ClassificationMode { multiclass, multilabel };

std::string_view to_string(ClassificationMode mode) noexcept;
ClassificationMode parse_classification_mode(std::string_view text);

/// How a multilabel group is scored: one flat request over all labels, or
/// one binary (label vs. not-label) request per label.
enum class Decomposition { flat, hierarchical };

std::string_view to_string(Decomposition d) noexcept;

inline constexpr std::string_view kDefaultTemplate = "This example is about {}.";

/// A named label set. Canonical label names are what reports show; the
/// phrasings are what the scorer sees, and the first phrasing of each label
/// is the one used for classification.
struct CategoryGroup {
  std::string name;
  ClassificationMode mode = ClassificationMode::multiclass;
  Decomposition decomposition = Decomposition::flat;
  std::string hypothesis_template{kDefaultTemplate};
  std::vector<std::string> labels;
  std::vector<std::vector<std::string>> phrasings;     // aligned with labels
  std::vector<std::optional<std::string>> negatives;   // hierarchical override per label

  std::size_t size() const noexcept { return labels.size(); }

  /// First phrasing of every label, in label order.
  std::vector<std::string> primary_phrases() const;

  /// Negative phrasing for binary decomposition ("not " + phrase by default).
  std::string negative_phrase(std::size_t label) const;

  std::optional<std::size_t> index_of(std::string_view label) const;

  /// Throws DataError naming the group on duplicate labels, empty phrasings,
  /// fewer than two labels, or a template without exactly one "{}".
  void validate() const;
};

/// Parses a taxonomy document:
///
///   {"version": 1, "groups": [{"name": "...", "mode": "multiclass",
///     "decomposition": "flat", "template": "This example is about {}.",
///     "labels": [{"name": "Clinical", "phrasings": ["..."], "negative": "..."}]}]}
///
/// "phrasings" may be a single string. Every group is validated; group names
/// must be unique.
std::vector<CategoryGroup> parse_taxonomy(std::string_view document);
std::vector<CategoryGroup> load_taxonomy(const std::filesystem::path& path);

const CategoryGroup& find_group(const std::vector<CategoryGroup>& groups, std::string_view name);

bool template_is_valid(std::string_view hypothesis_template) noexcept;

/// Substitutes `phrase` for the single "{}" placeholder.
std::string apply_template(std::string_view hypothesis_template, std::string_view phrase);

}  // namespace littriage
