#pragma once

#include <atomic>
#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "littriage/http.hpp"
#include "littriage/taxonomy.hpp"

namespace littriage {

struct ScoreRequest {
  std::string text;
  std::vector<std::string> label_phrases;
  bool multi_label = false;
  std::string hypothesis_template{kDefaultTemplate};

  /// Non-empty text, at least two phrases, exactly one "{}" in the template.
  /// Throws DataError.
  void validate() const;
};

/// Per-label probabilities aligned with ScoreRequest::label_phrases.
struct LabelScores {
  std::vector<double> scores;

  std::size_t size() const noexcept { return scores.size(); }
  double operator[](std::size_t i) const { return scores[i]; }
  friend bool operator==(const LabelScores&, const LabelScores&) = default;
};

inline constexpr double kUnitSumTolerance = 1e-6;

/// Throws ProtocolError when the vector has the wrong length, a value outside
/// [0, 1], or (multiclass) does not sum to 1 within kUnitSumTolerance.
void validate_scores(const LabelScores& scores, std::size_t expected_size, bool multi_label);

class ScoringBackend {
 public:
  virtual ~ScoringBackend() = default;
  virtual LabelScores score(const ScoreRequest& request) = 0;
  virtual std::string model_id() const = 0;
};

bool is_stop_word(std::string_view token) noexcept;

/// Number of distinct non-stop-word tokens of `phrase` that also occur in
/// `text`, after case folding.
std::size_t shared_token_count(std::string_view text, std::string_view phrase);

/// Deterministic test backend. raw(i) = shared_token_count(text, phrase_i) + 0.01;
/// multiclass scores are raw / sum(raw), multilabel scores raw / (raw + 1).
/// The hypothesis template is ignored.
LabelScores mock_score(const ScoreRequest& request);

class MockScorer final : public ScoringBackend {
 public:
  LabelScores score(const ScoreRequest& request) override { return mock_score(request); }
  std::string model_id() const override { return "mock-token-overlap"; }
};

struct GatewayOptions {
  std::size_t char_budget = 4000;
};

/// Uniform entry point over a backend: validates requests and responses,
/// applies the character budget, and fans batches out over threads.
class ScorerGateway {
 public:
  explicit ScorerGateway(std::shared_ptr<ScoringBackend> backend, GatewayOptions options = {});

  LabelScores score(const ScoreRequest& request) const;

  /// Results are in input order. The first failing element (lowest index
  /// among those attempted) aborts the batch with a BatchError.
  std::vector<LabelScores> score_batch(const std::vector<ScoreRequest>& requests,
                                       std::size_t parallelism) const;

  std::string model_id() const { return backend_->model_id(); }
  std::size_t backend_calls() const noexcept { return calls_.load(); }
  const GatewayOptions& options() const noexcept { return options_; }

 private:
  std::shared_ptr<ScoringBackend> backend_;
  GatewayOptions options_;
  mutable std::atomic<std::size_t> calls_{0};
};

// Sidecar wire protocol (POST <endpoint>/score, application/json):
//   request  {"text": str, "labels": [str], "template": str, "multi_label": bool}
//   response {"scores": [number], "model_id": str, "latency_ms": number}

std::string encode_score_request(const ScoreRequest& request);

struct ScoreWireResponse {
  LabelScores scores;
  std::string model_id;
  double latency_ms = 0.0;
};

/// Parses and checks a response against its request. Multiclass vectors
/// within 1e-4 of unit sum are renormalized; anything else that breaks the
/// LabelScores contract is a ProtocolError.
ScoreWireResponse decode_score_response(std::string_view body, const ScoreRequest& request);

/// http://host:port[/prefix] with a non-empty host.
bool endpoint_is_valid(std::string_view endpoint) noexcept;

class RemoteScorer final : public ScoringBackend {
 public:
  RemoteScorer(std::string endpoint, std::shared_ptr<HttpTransport> transport,
               RetryPolicy retry = {}, ClockHooks hooks = ClockHooks::system());

  LabelScores score(const ScoreRequest& request) override;
  std::string model_id() const override;

 private:
  std::string endpoint_;
  std::shared_ptr<HttpTransport> transport_;
  RetryPolicy retry_;
  ClockHooks hooks_;
  mutable std::mutex model_mutex_;
  std::string last_model_id_;
};

}  // namespace littriage
