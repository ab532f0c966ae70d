#include <cmath>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "littriage/error.hpp"
#include "littriage/scorer.hpp"
#include "littriage/text.hpp"

namespace littriage {

namespace {

constexpr double kWireSumTolerance = 1e-4;

std::string excerpt(std::string_view body) {
  constexpr std::size_t kMax = 200;
  auto text = collapse_whitespace(body.substr(0, kMax));
  if (body.size() > kMax) text += "...";
  return text;
}

}  // namespace

std::string encode_score_request(const ScoreRequest& request) {
  nlohmann::ordered_json j;
  j["text"] = request.text;
  j["labels"] = request.label_phrases;
  j["template"] = request.hypothesis_template;
  j["multi_label"] = request.multi_label;
  try {
    return j.dump();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("score request is not valid UTF-8: ") + e.what());
  }
}

ScoreWireResponse decode_score_response(std::string_view body, const ScoreRequest& request) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    throw ProtocolError("scorer response is not JSON: " + excerpt(body));
  }
  if (!j.is_object()) throw ProtocolError("scorer response is not an object: " + excerpt(body));
  for (const char* field : {"scores", "model_id", "latency_ms"}) {
    if (!j.contains(field)) {
      throw ProtocolError(std::string("scorer response lacks \"") + field + "\": " + excerpt(body));
    }
  }
  const auto& scores = j["scores"];
  if (!scores.is_array()) throw ProtocolError("scorer response \"scores\" is not an array");
  if (!j["model_id"].is_string()) throw ProtocolError("scorer response \"model_id\" is not a string");
  if (!j["latency_ms"].is_number()) throw ProtocolError("scorer response \"latency_ms\" is not a number");

  ScoreWireResponse response;
  response.model_id = j["model_id"].get<std::string>();
  response.latency_ms = j["latency_ms"].get<double>();
  for (const auto& s : scores) {
    if (!s.is_number()) throw ProtocolError("scorer response has a non-numeric score");
    response.scores.scores.push_back(s.get<double>());
  }

  if (response.scores.size() != request.label_phrases.size()) {
    throw ProtocolError("scorer returned " + std::to_string(response.scores.size()) +
                        " scores for " + std::to_string(request.label_phrases.size()) + " labels");
  }
  if (!request.multi_label) {
    double sum = 0.0;
    for (double s : response.scores.scores) sum += s;
    if (!(std::abs(sum - 1.0) <= kWireSumTolerance)) {
      throw ProtocolError("multiclass scores sum to " + format_double(sum) + ", outside 1 +/- 1e-4");
    }
    for (double& s : response.scores.scores) s /= sum;
  }
  validate_scores(response.scores, request.label_phrases.size(), request.multi_label);
  return response;
}

bool endpoint_is_valid(std::string_view endpoint) noexcept {
  std::string_view rest;
  if (endpoint.starts_with("http://")) {
    rest = endpoint.substr(7);
  } else if (endpoint.starts_with("https://")) {
    rest = endpoint.substr(8);
  } else {
    return false;
  }
  const auto host_end = rest.find_first_of(":/");
  const auto host = rest.substr(0, host_end);
  if (host.empty()) return false;
  if (host_end != std::string_view::npos && rest[host_end] == ':') {
    auto port = rest.substr(host_end + 1);
    int value = 0;
    std::size_t digits = 0;
    for (char c : port) {
      if (c == '/') break;
      if (c < '0' || c > '9' || ++digits > 5) return false;
      value = value * 10 + (c - '0');
    }
    if (digits == 0 || value == 0 || value > 65535) return false;
  }
  return true;
}

RemoteScorer::RemoteScorer(std::string endpoint, std::shared_ptr<HttpTransport> transport,
                           RetryPolicy retry, ClockHooks hooks)
    : endpoint_(std::move(endpoint)),
      transport_(std::move(transport)),
      retry_(retry),
      hooks_(std::move(hooks)) {
  while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
  if (!endpoint_is_valid(endpoint_)) throw UsageError("malformed scorer endpoint '" + endpoint_ + "'");
  if (!transport_) throw UsageError("remote scorer needs a transport");
}

LabelScores RemoteScorer::score(const ScoreRequest& request) {
  const auto body = encode_score_request(request);
  const auto url = endpoint_ + "/score";
  auto backoff = std::chrono::duration<double, std::milli>(retry_.initial_backoff);
  std::string last_failure;

  for (int attempt = 0;; ++attempt) {
    try {
      const auto response = transport_->post(url, body, "application/json");
      if (response.status == 200) {
        auto decoded = decode_score_response(response.body, request);
        {
          std::lock_guard lock(model_mutex_);
          last_model_id_ = decoded.model_id;
        }
        return std::move(decoded.scores);
      }
      if (response.status == 400) {
        throw ProtocolError("scorer rejected the request (400): " + excerpt(response.body));
      }
      if (response.status == 413) {
        throw DataError("text exceeds the scorer's context after truncation (413)");
      }
      if (response.status != 503 && response.status != 429 && response.status < 500) {
        throw ProtocolError("scorer answered HTTP " + std::to_string(response.status) + ": " +
                            excerpt(response.body));
      }
      last_failure = "HTTP " + std::to_string(response.status);
    } catch (const NetworkError& e) {
      last_failure = e.what();
    }
    if (attempt >= retry_.max_retries) break;
    spdlog::warn("scorer unavailable ({}); retry {}/{}", last_failure, attempt + 1,
                 retry_.max_retries);
    hooks_.sleep(std::chrono::duration_cast<std::chrono::steady_clock::duration>(backoff));
    backoff *= retry_.multiplier;
  }
  throw NetworkError("scorer at " + endpoint_ + " unreachable after " +
                     std::to_string(retry_.max_retries) + " retries: " + last_failure);
}

std::string RemoteScorer::model_id() const {
  std::lock_guard lock(model_mutex_);
  return last_model_id_.empty() ? "remote:" + endpoint_ : last_model_id_;
}

}  // namespace littriage
