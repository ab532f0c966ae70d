#include <algorithm>
#include <cstdlib>
#include <exception>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "littriage/error.hpp"
#include "littriage/pubmed.hpp"

namespace littriage {

RateLimiter::RateLimiter(double requests_per_second, double burst, ClockHooks hooks)
    : rate_(requests_per_second), burst_(burst), tokens_(burst), hooks_(std::move(hooks)) {
  if (!(rate_ > 0.0)) throw UsageError("rate limit must be positive");
  if (!(burst_ >= 1.0)) throw UsageError("rate limiter burst must be at least 1");
  last_ = hooks_.now();
}

void RateLimiter::acquire() {
  std::lock_guard lock(mutex_);
  for (;;) {
    const auto now = hooks_.now();
    const std::chrono::duration<double> elapsed = now - last_;
    tokens_ = std::min(burst_, tokens_ + elapsed.count() * rate_);
    last_ = now;
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const std::chrono::duration<double> wait((1.0 - tokens_) / rate_);
    // Sleeping under the lock is what serializes callers at the ceiling.
    hooks_.sleep(std::chrono::duration_cast<std::chrono::steady_clock::duration>(wait) +
                 std::chrono::nanoseconds(1));
  }
}

EutilsOptions EutilsOptions::from_environment() {
  EutilsOptions options;
  if (const char* key = std::getenv("NCBI_API_KEY"); key != nullptr && *key != '\0') {
    options.api_key = key;
  }
  return options;
}

std::string url_encode(std::string_view text) {
  static constexpr char hex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c) != 0 || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4U]);
      out.push_back(hex[c & 0xFU]);
    }
  }
  return out;
}

namespace {

std::string common_params(const EutilsOptions& options) {
  std::string s = "&tool=" + url_encode(options.tool);
  if (options.api_key) s += "&api_key=" + url_encode(*options.api_key);
  return s;
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

}  // namespace

std::string build_esearch_url(const EutilsOptions& options, std::string_view query,
                              std::size_t retstart, std::size_t retmax,
                              const std::optional<YearRange>& range) {
  std::string url = options.base_url + "esearch.fcgi?db=pubmed&term=" + url_encode(query) +
                    "&retmax=" + std::to_string(retmax) + "&retmode=json";
  if (retstart > 0) url += "&retstart=" + std::to_string(retstart);
  if (range) {
    url += "&datetype=pdat&mindate=" + std::to_string(range->min) +
           "&maxdate=" + std::to_string(range->max);
  }
  return url + common_params(options);
}

std::string build_efetch_url(const EutilsOptions& options, const std::vector<std::string>& pmids) {
  std::string ids;
  for (const auto& id : pmids) {
    if (!ids.empty()) ids.push_back(',');
    ids += url_encode(id);
  }
  return options.base_url + "efetch.fcgi?db=pubmed&id=" + ids + "&retmode=xml" +
         common_params(options);
}

EutilsClient::EutilsClient(std::shared_ptr<HttpTransport> transport, EutilsOptions options,
                           ClockHooks hooks)
    : transport_(std::move(transport)),
      options_(std::move(options)),
      hooks_(hooks),
      limiter_(options_.requests_per_second.value_or(options_.api_key ? 10.0 : 3.0), 1.0,
               std::move(hooks)) {
  if (!transport_) throw UsageError("EutilsClient needs a transport");
  if (options_.fetch_batch_size == 0) throw UsageError("fetch batch size must be positive");
  if (options_.max_in_flight == 0) throw UsageError("max in-flight requests must be positive");
  if (options_.search_page_size == 0) throw UsageError("search page size must be positive");
}

HttpResponse EutilsClient::get_with_retry(const std::string& url) {
  auto backoff = std::chrono::duration<double, std::milli>(options_.retry.initial_backoff);
  std::string last_failure;
  for (int attempt = 0;; ++attempt) {
    limiter_.acquire();
    ++requests_issued_;
    try {
      auto response = transport_->get(url);
      if (response.status == 200) return response;
      std::string excerpt = response.body.substr(0, 200);
      if (!retryable_status(response.status)) {
        throw ProtocolError("HTTP " + std::to_string(response.status) + " from " +
                            strip_api_key(url) + ": " + excerpt);
      }
      last_failure = "HTTP " + std::to_string(response.status) + ": " + excerpt;
    } catch (const NetworkError& e) {
      last_failure = e.what();
    }
    if (attempt >= options_.retry.max_retries) break;
    spdlog::warn("eutils request failed ({}); retry {}/{} in {:.0f} ms", last_failure,
                 attempt + 1, options_.retry.max_retries, backoff.count());
    hooks_.sleep(std::chrono::duration_cast<std::chrono::steady_clock::duration>(backoff));
    backoff *= options_.retry.multiplier;
  }
  throw NetworkError("giving up on " + strip_api_key(url) + " after " +
                     std::to_string(options_.retry.max_retries) + " retries: " + last_failure);
}

std::vector<std::string> EutilsClient::search(std::string_view query, std::size_t max_results,
                                              const std::optional<YearRange>& range) {
  if (query.empty()) throw UsageError("search query must not be empty");
  if (max_results == 0) throw UsageError("max_results must be at least 1");
  if (range && range->min > range->max) throw UsageError("year range minimum exceeds maximum");

  std::vector<std::string> ids;
  std::unordered_set<std::string> seen;
  std::size_t retstart = 0;
  while (ids.size() < max_results) {
    const auto want = std::min(options_.search_page_size, max_results - ids.size());
    auto page = parse_esearch_json(
        get_with_retry(build_esearch_url(options_, query, retstart, want, range)).body);
    for (auto& id : page.ids) {
      if (ids.size() >= max_results) break;
      if (seen.insert(id).second) ids.push_back(std::move(id));
    }
    retstart += page.ids.size();
    if (page.ids.empty() || page.ids.size() < want || retstart >= page.total_count) break;
  }
  return ids;
}

FetchResult EutilsClient::fetch(const std::vector<std::string>& pmids) {
  if (pmids.empty()) throw UsageError("fetch needs at least one pmid");

  std::vector<std::vector<std::string>> batches;
  for (std::size_t i = 0; i < pmids.size(); i += options_.fetch_batch_size) {
    const auto end = std::min(pmids.size(), i + options_.fetch_batch_size);
    batches.emplace_back(pmids.begin() + static_cast<std::ptrdiff_t>(i),
                         pmids.begin() + static_cast<std::ptrdiff_t>(end));
  }

  std::vector<ParsedArticles> parsed(batches.size());
  std::vector<std::exception_ptr> failures(batches.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto b = next++; b < batches.size(); b = next++) {
      try {
        parsed[b] = parse_efetch_xml(get_with_retry(build_efetch_url(options_, batches[b])).body);
      } catch (...) {
        failures[b] = std::current_exception();
      }
    }
  };
  const auto workers = std::min(options_.max_in_flight, batches.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  std::unordered_map<std::string, ArticleRecord> by_pmid;
  FetchResult result;
  for (auto& p : parsed) {
    for (auto& w : p.warnings) result.warnings.push_back(std::move(w));
    for (auto& r : p.records) {
      auto key = r.pmid;
      by_pmid.try_emplace(std::move(key), std::move(r));
    }
  }
  std::unordered_set<std::string> emitted;
  for (const auto& id : pmids) {
    if (!emitted.insert(id).second) continue;
    auto it = by_pmid.find(id);
    if (it == by_pmid.end()) {
      result.missing.push_back(id);
      continue;
    }
    result.records.push_back(std::move(it->second));
  }
  for (const auto& w : result.warnings) spdlog::warn("efetch: {}", w);
  if (!result.missing.empty()) {
    spdlog::warn("efetch: {} requested pmid(s) not returned (first: {})", result.missing.size(),
                 result.missing.front());
  }
  return result;
}

}  // namespace littriage
