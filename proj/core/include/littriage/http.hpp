#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

namespace littriage {

/// Injection points for time so rate limiting and backoff are testable
/// without sleeping.
struct ClockHooks {
  std::function<std::chrono::steady_clock::time_point()> now;
  std::function<void(std::chrono::steady_clock::duration)> sleep;

  static ClockHooks system();
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// Minimal blocking HTTP surface. Implementations throw NetworkError when no
/// response could be obtained; any HTTP status is returned, not thrown.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse get(const std::string& url) = 0;
  virtual HttpResponse post(const std::string& url, const std::string& body,
                            const std::string& content_type);
};

struct HttpTimeouts {
  std::chrono::seconds connect{10};
  std::chrono::seconds read{120};
};

/// Live transport over http:// and https:// URLs. Thread-safe.
std::shared_ptr<HttpTransport> make_http_transport(HttpTimeouts timeouts = {});

/// Drops the api_key parameter so recorded fixtures never carry credentials.
std::string strip_api_key(std::string_view url);

/// Stable fixture filename for a request URL: "<endpoint>-<fnv1a64 hex>.txt",
/// where endpoint is the path stem ("esearch", "efetch") and the hash covers
/// the URL with api_key removed.
std::string fixture_name(std::string_view url);

/// Replays responses from a directory. Lookup order: the exact fixture_name
/// for the URL, then a generic "<endpoint>.json" / "<endpoint>.xml". A miss
/// is a NetworkError naming the expected file.
class FixtureTransport : public HttpTransport {
 public:
  explicit FixtureTransport(std::filesystem::path directory);
  HttpResponse get(const std::string& url) override;

 private:
  std::filesystem::path directory_;
};

/// Forwards to another transport and stores every 200 response under
/// fixture_name(url) so the run can later be replayed offline.
class RecordingTransport : public HttpTransport {
 public:
  RecordingTransport(std::shared_ptr<HttpTransport> inner, std::filesystem::path directory);
  HttpResponse get(const std::string& url) override;

 private:
  std::shared_ptr<HttpTransport> inner_;
  std::filesystem::path directory_;
};

}  // namespace littriage
