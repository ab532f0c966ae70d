#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "littriage/corpus.hpp"
#include "littriage/http.hpp"

namespace littriage {

/// Token bucket: `rate` tokens per second, capacity `burst`. acquire()
/// blocks (through the sleep hook) until a token is available. Thread-safe.
class RateLimiter {
 public:
  RateLimiter(double requests_per_second, double burst = 1.0, ClockHooks hooks = ClockHooks::system());

  void acquire();
  double rate() const noexcept { return rate_; }

 private:
  double rate_;
  double burst_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
  ClockHooks hooks_;
  std::mutex mutex_;
};

struct EutilsOptions {
  std::string base_url = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils/";
  std::optional<std::string> api_key;
  /// Defaults to the published ceilings: 3/s anonymous, 10/s with a key.
  std::optional<double> requests_per_second;
  RetryPolicy retry;
  std::size_t fetch_batch_size = 200;
  std::size_t max_in_flight = 2;
  std::size_t search_page_size = 10000;
  std::string tool = "littriage";

  /// Picks up NCBI_API_KEY from the environment when set.
  static EutilsOptions from_environment();
};

std::string url_encode(std::string_view text);

std::string build_esearch_url(const EutilsOptions& options, std::string_view query,
                              std::size_t retstart, std::size_t retmax,
                              const std::optional<YearRange>& range);
std::string build_efetch_url(const EutilsOptions& options, const std::vector<std::string>& pmids);

struct SearchPage {
  std::vector<std::string> ids;
  std::size_t total_count = 0;
};

/// Parses an esearch retmode=json body. Throws ProtocolError with a body
/// excerpt when the shape is wrong or the service reports an error.
SearchPage parse_esearch_json(std::string_view body);

struct ParsedArticles {
  std::vector<ArticleRecord> records;
  std::vector<std::string> warnings;
};

/// Parses an efetch retmode=xml PubmedArticleSet. Articles without a usable
/// title or year are skipped with a warning. Throws DataError with the byte
/// offset, line and column of malformed XML.
///
/// Year precedence: Journal/JournalIssue/PubDate, then ArticleDate
/// (electronic), then the History "entrez" date.
ParsedArticles parse_efetch_xml(std::string_view xml);

struct FetchResult {
  std::vector<ArticleRecord> records;
  std::vector<std::string> missing;  // requested but absent from the response
  std::vector<std::string> warnings;
};

class EutilsClient {
 public:
  EutilsClient(std::shared_ptr<HttpTransport> transport, EutilsOptions options,
               ClockHooks hooks = ClockHooks::system());

  /// Up to max_results identifiers in relevance order, deduplicated.
  std::vector<std::string> search(std::string_view query, std::size_t max_results,
                                  const std::optional<YearRange>& range = std::nullopt);

  /// One record per pmid found, in request order. Batches run concurrently up
  /// to options.max_in_flight, all sharing the rate limiter.
  FetchResult fetch(const std::vector<std::string>& pmids);

  std::size_t requests_issued() const noexcept { return requests_issued_; }

 private:
  HttpResponse get_with_retry(const std::string& url);

  std::shared_ptr<HttpTransport> transport_;
  EutilsOptions options_;
  ClockHooks hooks_;
  RateLimiter limiter_;
  std::atomic<std::size_t> requests_issued_{0};
};

}  // namespace littriage
