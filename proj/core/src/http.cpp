#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "littriage/http.hpp"

#include <array>
#include <cstdint>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "littriage/error.hpp"

namespace littriage {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string target;  // /path?query
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw UsageError("URL without scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string endpoint_stem(std::string_view url) {
  auto q = url.find('?');
  auto path = url.substr(0, q);
  auto slash = path.rfind('/');
  auto name = slash == std::string_view::npos ? path : path.substr(slash + 1);
  auto dot = name.find('.');
  auto stem = std::string(name.substr(0, dot));
  return stem.empty() ? "request" : stem;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

class HttplibTransport : public HttpTransport {
 public:
  explicit HttplibTransport(HttpTimeouts timeouts) : timeouts_(timeouts) {}

  HttpResponse get(const std::string& url) override {
    auto [origin, target] = split_url(url);
    auto client = make_client(origin);
    auto result = client.Get(target);
    return unwrap(result, url);
  }

  HttpResponse post(const std::string& url, const std::string& body,
                    const std::string& content_type) override {
    auto [origin, target] = split_url(url);
    auto client = make_client(origin);
    auto result = client.Post(target, body, content_type);
    return unwrap(result, url);
  }

 private:
  httplib::Client make_client(const std::string& origin) const {
    httplib::Client client(origin);
    client.set_connection_timeout(timeouts_.connect);
    client.set_read_timeout(timeouts_.read);
    client.set_follow_location(true);
    return client;
  }

  static HttpResponse unwrap(const httplib::Result& result, const std::string& url) {
    if (!result) {
      throw NetworkError("request to " + strip_api_key(url) +
                         " failed: " + httplib::to_string(result.error()));
    }
    return HttpResponse{result->status, result->body};
  }

  HttpTimeouts timeouts_;
};

}  // namespace

ClockHooks ClockHooks::system() {
  return ClockHooks{[] { return std::chrono::steady_clock::now(); },
                    [](std::chrono::steady_clock::duration d) { std::this_thread::sleep_for(d); }};
}

HttpResponse HttpTransport::post(const std::string& url, const std::string&,
                                 const std::string&) {
  throw NetworkError("transport does not support POST (" + url + ")");
}

std::shared_ptr<HttpTransport> make_http_transport(HttpTimeouts timeouts) {
  return std::make_shared<HttplibTransport>(timeouts);
}

std::string strip_api_key(std::string_view url) {
  const auto q = url.find('?');
  if (q == std::string_view::npos) return std::string(url);
  std::string out(url.substr(0, q));
  char sep = '?';
  auto rest = url.substr(q + 1);
  while (!rest.empty()) {
    auto amp = rest.find('&');
    auto param = rest.substr(0, amp);
    if (param.substr(0, 8) != "api_key=") {
      out.push_back(sep);
      out.append(param);
      sep = '&';
    }
    if (amp == std::string_view::npos) break;
    rest = rest.substr(amp + 1);
  }
  return out;
}

std::string fixture_name(std::string_view url) {
  static constexpr std::array<char, 16> hex = {'0', '1', '2', '3', '4', '5', '6', '7',
                                               '8', '9', 'a', 'b', 'c', 'd', 'e', 'f'};
  const auto canonical = strip_api_key(url);
  auto h = fnv1a64(canonical);
  std::string digits(16, '0');
  for (int i = 15; i >= 0; --i) {
    digits[static_cast<std::size_t>(i)] = hex[h & 0xFU];
    h >>= 4U;
  }
  return endpoint_stem(canonical) + "-" + digits + ".txt";
}

FixtureTransport::FixtureTransport(std::filesystem::path directory)
    : directory_(std::move(directory)) {
  if (!std::filesystem::is_directory(directory_)) {
    throw UsageError("fixture directory does not exist: " + directory_.string());
  }
}

HttpResponse FixtureTransport::get(const std::string& url) {
  const auto exact = directory_ / fixture_name(url);
  if (std::filesystem::exists(exact)) return {200, read_file(exact)};
  const auto stem = endpoint_stem(url);
  for (const char* ext : {".json", ".xml"}) {
    const auto generic = directory_ / (stem + ext);
    if (std::filesystem::exists(generic)) return {200, read_file(generic)};
  }
  throw NetworkError("offline mode: no fixture for " + strip_api_key(url) + " (expected " +
                     exact.string() + ")");
}

RecordingTransport::RecordingTransport(std::shared_ptr<HttpTransport> inner,
                                       std::filesystem::path directory)
    : inner_(std::move(inner)), directory_(std::move(directory)) {
  std::filesystem::create_directories(directory_);
}

HttpResponse RecordingTransport::get(const std::string& url) {
  auto response = inner_->get(url);
  if (response.status == 200) {
    static std::mutex write_mutex;
    std::lock_guard lock(write_mutex);
    std::ofstream out(directory_ / fixture_name(url), std::ios::binary | std::ios::trunc);
    out << response.body;
  }
  return response;
}

}  // namespace littriage
