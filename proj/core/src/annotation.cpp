#include "littriage/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "littriage/error.hpp"
#include "littriage/random.hpp"

namespace littriage {

std::string_view to_string(GoldStatus status) noexcept {
  return status == GoldStatus::resolved ? "resolved" : "tie";
}

void AnnotationSet::validate(const CategoryGroup& g) const {
  const auto where = "annotations for pmid " + pmid + " / group '" + group + "': ";
  if (votes.empty()) throw DataError(where + "no annotators");
  std::unordered_set<std::string> annotators;
  for (const auto& v : votes) {
    if (!annotators.insert(v.annotator).second) {
      throw DataError(where + "annotator '" + v.annotator + "' appears twice");
    }
    if (g.mode == ClassificationMode::multiclass && v.labels.size() != 1) {
      throw DataError(where + "annotator '" + v.annotator +
                      "' must assign exactly one label in a multiclass group");
    }
    for (auto l : v.labels) {
      if (l >= g.size()) throw DataError(where + "label index out of range");
    }
  }
}

GoldLabel majority_vote(const AnnotationSet& annotations, ClassificationMode mode) {
  GoldLabel gold;
  gold.pmid = annotations.pmid;
  gold.group = annotations.group;

  std::map<std::size_t, std::size_t> counts;
  for (const auto& v : annotations.votes) {
    // A label listed twice by one annotator is still one vote.
    std::set<std::size_t> distinct(v.labels.begin(), v.labels.end());
    for (auto l : distinct) ++counts[l];
  }

  if (mode == ClassificationMode::multiclass) {
    std::size_t best = 0;
    std::size_t best_count = 0;
    bool shared = false;
    for (const auto& [label, n] : counts) {
      if (n > best_count) {
        best = label;
        best_count = n;
        shared = false;
      } else if (n == best_count) {
        shared = true;
      }
    }
    if (best_count == 0 || shared) {
      gold.status = GoldStatus::tie;
      for (const auto& [label, n] : counts) {
        if (n == best_count) gold.tied_labels.push_back(label);
      }
    } else {
      gold.labels.push_back(best);
    }
    return gold;
  }

  const auto annotators = annotations.votes.size();
  for (const auto& [label, n] : counts) {
    if (2 * n > annotators) {
      gold.labels.push_back(label);
    } else if (2 * n == annotators) {
      gold.tied_labels.push_back(label);
    }
  }
  if (!gold.tied_labels.empty()) gold.status = GoldStatus::tie;
  return gold;
}

std::vector<AnnotationSet> parse_annotations(std::string_view document,
                                             const std::vector<CategoryGroup>& groups) {
  std::vector<AnnotationSet> sets;
  std::map<std::pair<std::string, std::string>, std::size_t> index;

  std::size_t line_number = 0;
  std::size_t pos = 0;
  while (pos < document.size()) {
    auto end = document.find('\n', pos);
    if (end == std::string_view::npos) end = document.size();
    ++line_number;
    const auto line = document.substr(pos, end - pos);
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    const auto where = "annotation line " + std::to_string(line_number) + ": ";
    try {
      const auto j = nlohmann::json::parse(line);
      auto pmid = j.at("pmid").get<std::string>();
      auto group_name = j.at("group").get<std::string>();
      const auto& group = find_group(groups, group_name);

      std::vector<std::string> names;
      if (j.contains("labels")) {
        names = j["labels"].get<std::vector<std::string>>();
      } else {
        names.push_back(j.at("label").get<std::string>());
      }
      Vote vote;
      vote.annotator = j.at("annotator").get<std::string>();
      for (const auto& n : names) {
        auto idx = group.index_of(n);
        if (!idx) throw DataError("label '" + n + "' is not in group '" + group.name + "'");
        vote.labels.push_back(*idx);
      }

      auto key = std::make_pair(pmid, group_name);
      auto [it, inserted] = index.try_emplace(key, sets.size());
      if (inserted) sets.push_back(AnnotationSet{std::move(pmid), std::move(group_name), {}});
      auto& set = sets[it->second];
      for (const auto& v : set.votes) {
        if (v.annotator == vote.annotator) {
          throw DataError("annotator '" + vote.annotator + "' already voted on pmid " + set.pmid);
        }
      }
      set.votes.push_back(std::move(vote));
      set.validate(group);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + e.what());
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
  }
  return sets;
}

std::vector<AnnotationSet> load_annotations(const std::filesystem::path& path,
                                            const std::vector<CategoryGroup>& groups) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open annotations " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_annotations(buf.str(), groups);
}

std::vector<GoldLabel> resolve_gold(const std::vector<AnnotationSet>& sets,
                                    const std::vector<CategoryGroup>& groups) {
  std::vector<GoldLabel> gold;
  gold.reserve(sets.size());
  for (const auto& s : sets) {
    const auto& group = find_group(groups, s.group);
    gold.push_back(majority_vote(s, group.mode));
  }
  return gold;
}

SplitResult split_labeled_corpus(const std::vector<GoldLabel>& gold, double fraction,
                                 std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw UsageError("split fraction must lie strictly between 0 and 1");
  }

  SplitResult result;
  std::map<std::size_t, std::size_t> label_counts;
  for (const auto& g : gold) {
    for (auto l : g.labels) ++label_counts[l];
  }

  std::vector<bool> to_tuning(gold.size(), false);
  std::vector<bool> forced(gold.size(), false);
  for (const auto& [label, n] : label_counts) {
    if (n < 2) {
      result.warnings.push_back("label " + std::to_string(label) + " has " + std::to_string(n) +
                                " instance(s); placed in the tuning set only");
    }
  }

  // Stratum key: the record's rarest label; unlabeled records share one
  // stratum keyed after every label.
  constexpr auto kUnlabeled = static_cast<std::size_t>(-1);
  std::map<std::size_t, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& labels = gold[i].labels;
    bool has_singleton = false;
    std::size_t key = kUnlabeled;
    std::size_t key_count = 0;
    for (auto l : labels) {
      const auto n = label_counts[l];
      if (n < 2) has_singleton = true;
      if (key == kUnlabeled || n < key_count || (n == key_count && l < key)) {
        key = l;
        key_count = n;
      }
    }
    if (has_singleton) {
      forced[i] = true;
      to_tuning[i] = true;
      continue;
    }
    strata[key].push_back(i);
  }

  std::size_t pool = 0;
  for (const auto& [key, members] : strata) pool += members.size();
  const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(pool) * fraction));

  // Largest-remainder apportionment of `target` across strata.
  std::vector<std::size_t> quota;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  std::size_t s = 0;
  for (const auto& [key, members] : strata) {
    const double exact = static_cast<double>(members.size()) * fraction;
    const auto base = static_cast<std::size_t>(std::floor(exact));
    quota.push_back(base);
    remainders.emplace_back(exact - static_cast<double>(base), s++);
    assigned += base;
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < target && k < remainders.size(); ++k) {
    ++quota[remainders[k].second];
    ++assigned;
  }

  std::mt19937_64 rng(seed);
  s = 0;
  for (auto& [key, members] : strata) {
    auto q = quota[s++];
    if (members.size() >= 2) q = std::clamp<std::size_t>(q, 1, members.size() - 1);
    seeded_shuffle(members, rng);
    for (std::size_t k = 0; k < q && k < members.size(); ++k) to_tuning[members[k]] = true;
  }

  // Multilabel records can leave a label stranded on one side; move a record
  // across when that does not strand another label.
  auto side_counts = [&](bool tuning_side) {
    std::map<std::size_t, std::size_t> c;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      if (to_tuning[i] != tuning_side) continue;
      for (auto l : gold[i].labels) ++c[l];
    }
    return c;
  };
  for (const auto& [label, n] : label_counts) {
    if (n < 2) continue;
    for (bool missing_side : {true, false}) {
      auto here = side_counts(missing_side);
      if (here[label] > 0) continue;
      auto there = side_counts(!missing_side);
      bool moved = false;
      for (std::size_t i = 0; i < gold.size() && !moved; ++i) {
        if (to_tuning[i] == missing_side || forced[i]) continue;
        const auto& labels = gold[i].labels;
        if (std::find(labels.begin(), labels.end(), label) == labels.end()) continue;
        const bool strands = std::any_of(labels.begin(), labels.end(), [&](std::size_t l) {
          return label_counts[l] >= 2 && there[l] == 1;
        });
        if (strands) continue;
        to_tuning[i] = missing_side;
        moved = true;
      }
      if (!moved) {
        result.warnings.push_back("label " + std::to_string(label) + " could not be placed in the " +
                                  (missing_side ? "tuning" : "evaluation") + " set");
      }
    }
  }

  for (std::size_t i = 0; i < gold.size(); ++i) {
    (to_tuning[i] ? result.tuning : result.evaluation).push_back(gold[i]);
  }
  for (const auto& w : result.warnings) spdlog::warn("split: {}", w);
  return result;
}

}  // namespace littriage
