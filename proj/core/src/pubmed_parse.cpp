#include <boost/property_tree/detail/rapidxml.hpp>

#include <algorithm>
#include <cctype>
#include <cstring>
#include <unordered_set>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "littriage/error.hpp"
#include "littriage/pubmed.hpp"
#include "littriage/text.hpp"

namespace littriage {

namespace rx = boost::property_tree::detail::rapidxml;

namespace {

using Node = rx::xml_node<char>;

std::string excerpt(std::string_view body) {
  constexpr std::size_t kMax = 200;
  auto text = collapse_whitespace(body.substr(0, kMax));
  if (body.size() > kMax) text += "...";
  return text;
}

bool name_is(const Node* node, std::string_view name) {
  return std::string_view(node->name(), node->name_size()) == name;
}

const Node* child(const Node* parent, std::string_view name) {
  if (parent == nullptr) return nullptr;
  for (auto* c = parent->first_node(); c != nullptr; c = c->next_sibling()) {
    if (c->type() == rx::node_element && name_is(c, name)) return c;
  }
  return nullptr;
}

const Node* path(const Node* from, std::initializer_list<std::string_view> names) {
  const Node* cur = from;
  for (auto n : names) cur = child(cur, n);
  return cur;
}

std::string_view attribute(const Node* node, std::string_view name) {
  for (auto* a = node->first_attribute(); a != nullptr; a = a->next_attribute()) {
    if (std::string_view(a->name(), a->name_size()) == name) {
      return {a->value(), a->value_size()};
    }
  }
  return {};
}

void append_text(const Node* node, std::string& out) {
  for (auto* c = node->first_node(); c != nullptr; c = c->next_sibling()) {
    switch (c->type()) {
      case rx::node_data:
      case rx::node_cdata:
        out.append(c->value(), c->value_size());
        break;
      case rx::node_element:
        // Inline markup (<i>, <sup>, ...) sits inside words; no separator.
        append_text(c, out);
        break;
      default:
        break;
    }
  }
}

std::string text_of(const Node* node) {
  if (node == nullptr) return {};
  std::string raw;
  append_text(node, raw);
  return collapse_whitespace(raw);
}

std::optional<int> leading_year(std::string_view text) {
  for (std::size_t i = 0; i + 4 <= text.size(); ++i) {
    bool digits = true;
    for (std::size_t k = 0; k < 4; ++k) {
      if (std::isdigit(static_cast<unsigned char>(text[i + k])) == 0) {
        digits = false;
        break;
      }
    }
    if (digits) return std::stoi(std::string(text.substr(i, 4)));
  }
  return std::nullopt;
}

std::optional<int> year_from_date(const Node* date) {
  if (date == nullptr) return std::nullopt;
  if (auto* y = child(date, "Year")) return leading_year(text_of(y));
  // PubDate sometimes carries only free text, e.g. "1998 Dec-1999 Jan".
  if (auto* md = child(date, "MedlineDate")) return leading_year(text_of(md));
  return std::nullopt;
}

std::optional<int> publication_year(const Node* article_node) {
  const auto* citation = child(article_node, "MedlineCitation");
  const auto* article = child(citation, "Article");

  if (auto y = year_from_date(path(article, {"Journal", "JournalIssue", "PubDate"}))) return y;

  if (article != nullptr) {
    for (auto* c = article->first_node("ArticleDate"); c != nullptr;
         c = c->next_sibling("ArticleDate")) {
      if (auto y = year_from_date(c)) return y;
    }
  }

  if (const auto* history = path(article_node, {"PubmedData", "History"})) {
    for (auto* c = history->first_node("PubMedPubDate"); c != nullptr;
         c = c->next_sibling("PubMedPubDate")) {
      if (attribute(c, "PubStatus") == "entrez") {
        if (auto y = year_from_date(c)) return y;
      }
    }
  }
  return std::nullopt;
}

std::string abstract_text(const Node* article) {
  const auto* abstract = child(article, "Abstract");
  if (abstract == nullptr) return {};
  std::string joined;
  for (auto* c = abstract->first_node("AbstractText"); c != nullptr;
       c = c->next_sibling("AbstractText")) {
    auto section = text_of(c);
    if (section.empty()) continue;
    if (!joined.empty()) joined.push_back(' ');
    joined += section;
  }
  return joined;
}

std::pair<std::size_t, std::size_t> line_and_column(std::string_view text, std::size_t offset) {
  std::size_t line = 1;
  std::size_t column = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

}  // namespace

SearchPage parse_esearch_json(std::string_view body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    throw ProtocolError("esearch: response is not JSON: " + excerpt(body));
  }
  if (!j.is_object() || !j.contains("esearchresult") || !j["esearchresult"].is_object()) {
    throw ProtocolError("esearch: missing esearchresult: " + excerpt(body));
  }
  const auto& result = j["esearchresult"];
  if (result.contains("ERROR")) {
    throw ProtocolError("esearch: service error: " + excerpt(result["ERROR"].dump()));
  }
  if (!result.contains("idlist") || !result["idlist"].is_array()) {
    throw ProtocolError("esearch: missing idlist: " + excerpt(body));
  }

  SearchPage page;
  for (const auto& id : result["idlist"]) {
    if (!id.is_string()) throw ProtocolError("esearch: non-string id: " + excerpt(id.dump()));
    auto s = id.get<std::string>();
    if (s.empty() || !std::all_of(s.begin(), s.end(),
                                  [](unsigned char c) { return std::isdigit(c) != 0; })) {
      throw ProtocolError("esearch: non-numeric pmid '" + s + "'");
    }
    page.ids.push_back(std::move(s));
  }
  if (result.contains("count")) {
    const auto& count = result["count"];
    try {
      page.total_count = count.is_string() ? std::stoull(count.get<std::string>())
                                           : count.get<std::size_t>();
    } catch (const std::exception&) {
      throw ProtocolError("esearch: bad count field: " + excerpt(count.dump()));
    }
  } else {
    page.total_count = page.ids.size();
  }
  return page;
}

ParsedArticles parse_efetch_xml(std::string_view xml) {
  std::vector<char> buffer(xml.begin(), xml.end());
  buffer.push_back('\0');

  rx::xml_document<char> doc;
  try {
    doc.parse<rx::parse_default>(buffer.data());
  } catch (const rx::parse_error& e) {
    const auto offset = static_cast<std::size_t>(e.where<char>() - buffer.data());
    const auto [line, column] = line_and_column(xml, offset);
    throw DataError(std::string("efetch XML parse error: ") + e.what() + " at byte " +
                    std::to_string(offset) + " (line " + std::to_string(line) + ", column " +
                    std::to_string(column) + ")");
  }

  ParsedArticles parsed;
  const auto* set = doc.first_node("PubmedArticleSet");
  if (set == nullptr) {
    // Empty efetch responses can come back as a bare declaration.
    return parsed;
  }

  std::unordered_set<std::string> seen;
  for (auto* node = set->first_node("PubmedArticle"); node != nullptr;
       node = node->next_sibling("PubmedArticle")) {
    const auto* citation = child(node, "MedlineCitation");
    const auto pmid = text_of(child(citation, "PMID"));
    if (pmid.empty()) {
      parsed.warnings.push_back("skipping PubmedArticle without PMID");
      continue;
    }
    if (!seen.insert(pmid).second) continue;

    const auto* article = child(citation, "Article");
    auto title = text_of(child(article, "ArticleTitle"));
    if (title.empty()) {
      parsed.warnings.push_back("pmid " + pmid + ": no ArticleTitle, skipped");
      continue;
    }
    const auto year = publication_year(node);
    if (!year) {
      parsed.warnings.push_back("pmid " + pmid + ": no publication year, skipped");
      continue;
    }
    if (*year < 1800 || *year > current_year()) {
      parsed.warnings.push_back("pmid " + pmid + ": implausible year " + std::to_string(*year) +
                                ", skipped");
      continue;
    }
    parsed.records.push_back(make_record(pmid, std::move(title), abstract_text(article), *year));
  }
  return parsed;
}

}  // namespace littriage
