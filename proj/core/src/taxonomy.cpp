#include "littriage/taxonomy.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "littriage/error.hpp"
#include "littriage/text.hpp"

namespace littriage {

std::string_view to_string(ClassificationMode mode) noexcept {
  return mode == ClassificationMode::multiclass ? "multiclass" : "multilabel";
}

ClassificationMode parse_classification_mode(std::string_view text) {
  if (text == "multiclass") return ClassificationMode::multiclass;
  if (text == "multilabel") return ClassificationMode::multilabel;
  throw DataError("unknown classification mode '" + std::string(text) + "'");
}

std::string_view to_string(Decomposition d) noexcept {
  return d == Decomposition::flat ? "flat" : "hierarchical";
}

std::vector<std::string> CategoryGroup::primary_phrases() const {
  std::vector<std::string> out;
  out.reserve(phrasings.size());
  for (const auto& p : phrasings) out.push_back(p.front());
  return out;
}

std::string CategoryGroup::negative_phrase(std::size_t label) const {
  if (label < negatives.size() && negatives[label]) return *negatives[label];
  return "not " + phrasings.at(label).front();
}

std::optional<std::size_t> CategoryGroup::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) return i;
  }
  return std::nullopt;
}

bool template_is_valid(std::string_view hypothesis_template) noexcept {
  const auto first = hypothesis_template.find("{}");
  return first != std::string_view::npos &&
         hypothesis_template.find("{}", first + 2) == std::string_view::npos;
}

std::string apply_template(std::string_view hypothesis_template, std::string_view phrase) {
  const auto at = hypothesis_template.find("{}");
  if (at == std::string_view::npos) return std::string(phrase);
  std::string out(hypothesis_template.substr(0, at));
  out += phrase;
  out += hypothesis_template.substr(at + 2);
  return out;
}

void CategoryGroup::validate() const {
  const auto where = "group '" + name + "': ";
  if (is_blank(name)) throw DataError("category group with an empty name");
  if (labels.size() < 2) {
    throw DataError(where + "needs at least 2 labels, has " + std::to_string(labels.size()));
  }
  if (phrasings.size() != labels.size()) throw DataError(where + "phrasings not aligned with labels");
  if (!negatives.empty() && negatives.size() != labels.size()) {
    throw DataError(where + "negative phrasings not aligned with labels");
  }
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (is_blank(labels[i])) throw DataError(where + "empty label name");
    if (!seen.insert(labels[i]).second) throw DataError(where + "duplicate label '" + labels[i] + "'");
    if (phrasings[i].empty()) throw DataError(where + "label '" + labels[i] + "' has no phrasings");
    for (const auto& p : phrasings[i]) {
      if (is_blank(p)) throw DataError(where + "label '" + labels[i] + "' has an empty phrasing");
    }
  }
  if (!template_is_valid(hypothesis_template)) {
    throw DataError(where + "hypothesis template must contain exactly one {} placeholder");
  }
  if (decomposition == Decomposition::hierarchical && mode != ClassificationMode::multilabel) {
    throw DataError(where + "hierarchical decomposition applies to multilabel groups only");
  }
}

namespace {

CategoryGroup parse_group(const nlohmann::json& g) {
  CategoryGroup group;
  group.name = g.at("name").get<std::string>();
  try {
    group.mode = parse_classification_mode(g.value("mode", std::string("multiclass")));
    const auto decomposition = g.value("decomposition", std::string("flat"));
    if (decomposition == "flat") {
      group.decomposition = Decomposition::flat;
    } else if (decomposition == "hierarchical") {
      group.decomposition = Decomposition::hierarchical;
    } else {
      throw DataError("unknown decomposition '" + decomposition + "'");
    }
    group.hypothesis_template = g.value("template", std::string(kDefaultTemplate));

    bool any_negative = false;
    for (const auto& l : g.at("labels")) {
      group.labels.push_back(l.at("name").get<std::string>());
      std::vector<std::string> phrasings;
      if (l.contains("phrasings")) {
        const auto& p = l["phrasings"];
        if (p.is_string()) {
          phrasings.push_back(p.get<std::string>());
        } else {
          phrasings = p.get<std::vector<std::string>>();
        }
      } else {
        // A label without explicit phrasings is scored by its own name.
        phrasings.push_back(group.labels.back());
      }
      group.phrasings.push_back(std::move(phrasings));
      if (l.contains("negative")) {
        group.negatives.emplace_back(l["negative"].get<std::string>());
        any_negative = true;
      } else {
        group.negatives.emplace_back(std::nullopt);
      }
    }
    if (!any_negative) group.negatives.clear();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("group '" + group.name + "': " + e.what());
  } catch (const DataError& e) {
    throw DataError("group '" + group.name + "': " + e.what());
  }
  group.validate();
  return group;
}

}  // namespace

std::vector<CategoryGroup> parse_taxonomy(std::string_view document) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(document);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("taxonomy: ") + e.what());
  }
  if (j.contains("version") && j["version"] != 1) {
    throw DataError("taxonomy: unsupported version " + j["version"].dump());
  }
  if (!j.contains("groups") || !j["groups"].is_array()) {
    throw DataError("taxonomy: expected a \"groups\" array");
  }

  std::vector<CategoryGroup> groups;
  std::unordered_set<std::string> names;
  for (const auto& g : j["groups"]) {
    if (!g.is_object() || !g.contains("name")) throw DataError("taxonomy: group without a name");
    auto group = parse_group(g);
    if (!names.insert(group.name).second) {
      throw DataError("taxonomy: duplicate group '" + group.name + "'");
    }
    groups.push_back(std::move(group));
  }
  if (groups.empty()) throw DataError("taxonomy: no groups defined");
  return groups;
}

std::vector<CategoryGroup> load_taxonomy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open taxonomy " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_taxonomy(buf.str());
}

const CategoryGroup& find_group(const std::vector<CategoryGroup>& groups, std::string_view name) {
  for (const auto& g : groups) {
    if (g.name == name) return g;
  }
  throw DataError("unknown category group '" + std::string(name) + "'");
}

}  // namespace littriage
