#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "fake_sidecar.hpp"
#include "fakes.hpp"
#include "littriage/error.hpp"
#include "littriage/random.hpp"

using namespace littriage;
using littriage::fixtures::FakeClock;
using littriage::fixtures::FakeSidecar;
using littriage::fixtures::ScriptedTransport;

namespace {

ScoreRequest request(std::string text, std::vector<std::string> phrases, bool multi_label = false) {
  return ScoreRequest{std::move(text), std::move(phrases), multi_label, std::string(kDefaultTemplate)};
}

}  // namespace

TEST(WireProtocol, EncodeUsesWireFieldNames) {
  EXPECT_EQ(encode_score_request(request("t", {"a", "b"}, true)),
            R"({"text":"t","labels":["a","b"],"template":"This example is about {}.","multi_label":true})");
}

TEST(WireProtocol, DecodeAcceptsWithinSidecarTolerance) {
  const auto r = request("t", {"a", "b"});
  const auto d = decode_score_response(R"({"scores":[0.30004,0.7],"model_id":"m","latency_ms":3})", r);
  EXPECT_NEAR(d.scores[0] + d.scores[1], 1.0, 1e-12);
  EXPECT_EQ(d.model_id, "m");
  EXPECT_DOUBLE_EQ(d.latency_ms, 3.0);
}

TEST(WireProtocol, DecodeRejectsContractBreaches) {
  const auto r = request("t", {"a", "b"});
  EXPECT_THROW(decode_score_response("oops", r), ProtocolError);
  EXPECT_THROW(decode_score_response(R"({"scores":[0.5,0.5],"model_id":"m"})", r), ProtocolError);
  EXPECT_THROW(decode_score_response(R"({"scores":[0.5,0.5,0.0],"model_id":"m","latency_ms":1})", r), ProtocolError);
  EXPECT_THROW(decode_score_response(R"({"scores":[0.5],"model_id":"m","latency_ms":1})", r), ProtocolError);
  EXPECT_THROW(decode_score_response(R"({"scores":[0.4,0.5],"model_id":"m","latency_ms":1})", r), ProtocolError);
  EXPECT_THROW(decode_score_response(R"({"scores":["0.5",0.5],"model_id":"m","latency_ms":1})", r), ProtocolError);
  EXPECT_THROW(decode_score_response(R"({"scores":[1.5,0.2],"model_id":"m","latency_ms":1})",
                                     request("t", {"a", "b"}, true)),
               ProtocolError);
}

TEST(WireProtocol, EndpointShape) {
  EXPECT_TRUE(endpoint_is_valid("http://127.0.0.1:8080"));
  EXPECT_TRUE(endpoint_is_valid("http://scorer/prefix"));
  EXPECT_TRUE(endpoint_is_valid("https://scorer.example.org:443/v1"));
  EXPECT_FALSE(endpoint_is_valid("ftp://x"));
  EXPECT_FALSE(endpoint_is_valid("http://"));
  EXPECT_FALSE(endpoint_is_valid("http://host:"));
  EXPECT_FALSE(endpoint_is_valid("http://host:99999"));
  EXPECT_FALSE(endpoint_is_valid("http://host:80a"));
  EXPECT_THROW(RemoteScorer("localhost:80", make_http_transport()), UsageError);
}

TEST(RemoteScorerTest, MatchesMockOverHttp) {
  FakeSidecar sidecar;
  auto backend = std::make_shared<RemoteScorer>(sidecar.endpoint(), make_http_transport());
  ScorerGateway gateway(backend);
  std::mt19937_64 rng(4);
  const std::vector<std::string> words{"retina", "deep", "network", "trial", "review", "gene"};
  std::vector<ScoreRequest> batch;
  for (int i = 0; i < 50; ++i) {
    std::string text;
    for (int w = 0; w < 6; ++w) text += words[uniform_below(rng, words.size())] + " ";
    batch.push_back(request(text, {"deep network", "clinical trial", "gene review"}, i % 2 == 1));
  }
  const auto remote = gateway.score_batch(batch, 4);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto local = mock_score(batch[i]);
    ASSERT_EQ(remote[i].size(), local.size());
    for (std::size_t l = 0; l < local.size(); ++l) EXPECT_NEAR(remote[i][l], local[l], 1e-12);
  }
  EXPECT_EQ(backend->model_id(), "fake-sidecar");
  EXPECT_EQ(sidecar.calls(), 50);
}

TEST(RemoteScorerTest, RetriesUnavailableThenSucceeds) {
  FakeSidecar sidecar([](int call, httplib::Response& res) {
    if (call < 2) {
      res.status = 503;
      res.set_content("loading", "text/plain");
      return true;
    }
    return false;
  });
  FakeClock clock;
  RemoteScorer scorer(sidecar.endpoint(), make_http_transport(), RetryPolicy{}, clock.hooks());
  const auto s = scorer.score(request("deep", {"deep", "shallow"}));
  EXPECT_EQ(s, mock_score(request("deep", {"deep", "shallow"})));
  EXPECT_EQ(sidecar.calls(), 3);
  EXPECT_EQ(clock.sleeps.size(), 2u);
}

TEST(RemoteScorerTest, StatusMapping) {
  FakeClock clock;
  auto respond = [](int status) {
    return std::make_shared<ScriptedTransport>([status](const std::string&) { return HttpResponse{status, "no"}; });
  };
  EXPECT_THROW(RemoteScorer("http://h:1", respond(400), {}, clock.hooks()).score(request("t", {"a", "b"})),
               ProtocolError);
  EXPECT_THROW(RemoteScorer("http://h:1", respond(413), {}, clock.hooks()).score(request("t", {"a", "b"})),
               DataError);
  EXPECT_THROW(RemoteScorer("http://h:1", respond(404), {}, clock.hooks()).score(request("t", {"a", "b"})),
               ProtocolError);
  auto down = respond(503);
  EXPECT_THROW(RemoteScorer("http://h:1", down, {}, clock.hooks()).score(request("t", {"a", "b"})), NetworkError);
  EXPECT_EQ(down->urls().size(), 4u);
  EXPECT_EQ(down->urls().front(), "http://h:1/score");
}

TEST(RemoteScorerTest, UnreachableSidecarIsNetworkError) {
  FakeClock clock;
  RetryPolicy retry;
  retry.max_retries = 1;
  std::string endpoint;
  {
    FakeSidecar gone;
    endpoint = gone.endpoint();
  }
  RemoteScorer scorer(endpoint, make_http_transport(HttpTimeouts{std::chrono::seconds(1), std::chrono::seconds(1)}),
                      retry, clock.hooks());
  EXPECT_THROW(scorer.score(request("t", {"a", "b"})), NetworkError);
}

TEST(RemoteScorerTest, MalformedResponseAbortsBatchWithIndex) {
  FakeSidecar sidecar([](int call, httplib::Response& res) {
    if (call == 0) return false;
    res.set_content(R"({"scores":[0.9,0.9],"model_id":"x","latency_ms":1})", "application/json");
    return true;
  });
  ScorerGateway gateway(std::make_shared<RemoteScorer>(sidecar.endpoint(), make_http_transport()));
  std::vector<ScoreRequest> batch(3, request("deep", {"deep", "shallow"}));
  try {
    gateway.score_batch(batch, 1);
    FAIL();
  } catch (const BatchError& e) {
    EXPECT_EQ(e.index(), 1u);
    EXPECT_EQ(e.kind(), ErrorKind::protocol);
  }
}
