#include "littriage/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>
#include <unordered_set>

#include "littriage/error.hpp"
#include "littriage/text.hpp"

namespace littriage {

namespace {

constexpr std::string_view kStopWords[] = {
    "a",     "about",  "above", "after", "all",     "also",  "an",    "and",   "any",   "are",
    "as",    "at",     "be",    "been",  "being",   "between", "both", "but",  "by",    "can",
    "could", "did",    "do",    "does",  "during",  "each",  "for",   "from",  "had",   "has",
    "have",  "he",     "her",   "here",  "his",     "how",   "i",     "if",    "in",    "into",
    "is",    "it",     "its",   "more",  "most",    "my",    "of",    "on",    "once",  "only",
    "or",    "other",  "our",   "out",   "over",    "she",   "should", "so",   "some",  "such",
    "than",  "that",   "the",   "their", "them",    "then",  "there", "these", "they",  "this",
    "those", "through", "to",   "too",   "under",   "up",    "us",    "very",  "was",   "we",
    "were",  "what",   "when",  "where", "which",   "while", "who",   "whom",  "why",   "will",
    "with",  "would",  "you",   "your",  "yours",   "itself", "via"};

}  // namespace

bool is_stop_word(std::string_view token) noexcept {
  return std::find(std::begin(kStopWords), std::end(kStopWords), token) != std::end(kStopWords);
}

std::size_t shared_token_count(std::string_view text, std::string_view phrase) {
  std::unordered_set<std::string> text_tokens;
  for (auto& t : word_tokens(text)) {
    if (!is_stop_word(t)) text_tokens.insert(std::move(t));
  }
  std::unordered_set<std::string> counted;
  for (auto& t : word_tokens(phrase)) {
    if (is_stop_word(t) || !text_tokens.contains(t)) continue;
    counted.insert(std::move(t));
  }
  return counted.size();
}

void ScoreRequest::validate() const {
  if (is_blank(text)) throw DataError("score request has empty text");
  if (label_phrases.size() < 2) {
    throw DataError("score request needs at least 2 label phrases, has " +
                    std::to_string(label_phrases.size()));
  }
  for (const auto& p : label_phrases) {
    if (is_blank(p)) throw DataError("score request has an empty label phrase");
  }
  if (!template_is_valid(hypothesis_template)) {
    throw DataError("hypothesis template must contain exactly one {} placeholder");
  }
}

void validate_scores(const LabelScores& scores, std::size_t expected_size, bool multi_label) {
  if (scores.size() != expected_size) {
    throw ProtocolError("scorer returned " + std::to_string(scores.size()) + " scores for " +
                        std::to_string(expected_size) + " labels");
  }
  double sum = 0.0;
  for (double s : scores.scores) {
    if (!(s >= 0.0 && s <= 1.0)) throw ProtocolError("scorer returned a score outside [0, 1]");
    sum += s;
  }
  if (!multi_label && std::abs(sum - 1.0) > kUnitSumTolerance) {
    throw ProtocolError("multiclass scores sum to " + format_double(sum) + ", not 1");
  }
}

LabelScores mock_score(const ScoreRequest& request) {
  std::vector<double> raw;
  raw.reserve(request.label_phrases.size());
  for (const auto& phrase : request.label_phrases) {
    raw.push_back(static_cast<double>(shared_token_count(request.text, phrase)) + 0.01);
  }
  LabelScores out;
  out.scores.reserve(raw.size());
  if (request.multi_label) {
    for (double r : raw) out.scores.push_back(r / (r + 1.0));
  } else {
    const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
    for (double r : raw) out.scores.push_back(r / total);
  }
  return out;
}

ScorerGateway::ScorerGateway(std::shared_ptr<ScoringBackend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(options) {
  if (!backend_) throw UsageError("scorer gateway needs a backend");
  if (options_.char_budget == 0) throw UsageError("character budget must be positive");
}

LabelScores ScorerGateway::score(const ScoreRequest& request) const {
  request.validate();
  ++calls_;
  LabelScores result;
  if (utf8_length(request.text) > options_.char_budget) {
    ScoreRequest trimmed = request;
    trimmed.text = truncate_at_word(request.text, options_.char_budget);
    result = backend_->score(trimmed);
  } else {
    result = backend_->score(request);
  }
  validate_scores(result, request.label_phrases.size(), request.multi_label);
  return result;
}

std::vector<LabelScores> ScorerGateway::score_batch(const std::vector<ScoreRequest>& requests,
                                                    std::size_t parallelism) const {
  if (parallelism == 0) throw UsageError("parallelism must be at least 1");

  std::vector<LabelScores> results(requests.size());
  std::vector<std::exception_ptr> failures(requests.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};

  auto worker = [&] {
    for (auto i = next++; i < requests.size() && !abort.load(); i = next++) {
      try {
        results[i] = score(requests[i]);
      } catch (...) {
        failures[i] = std::current_exception();
        abort = true;
      }
    }
  };

  const auto threads = std::min(parallelism, requests.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }

  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (!failures[i]) continue;
    try {
      std::rethrow_exception(failures[i]);
    } catch (const Error& e) {
      throw BatchError(e.kind(), i, e.what());
    } catch (const std::exception& e) {
      throw BatchError(ErrorKind::data, i, e.what());
    }
  }
  return results;
}

}  // namespace littriage
