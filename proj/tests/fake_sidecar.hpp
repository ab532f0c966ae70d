#pragma once

// Must match the library's httplib configuration so the inline definitions agree.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <atomic>
#include <functional>
#include <string>
#include <thread>

#include <json.hpp>

#include "littriage/scorer.hpp"

namespace littriage::fixtures {

/// In-process scorer sidecar speaking the /score wire protocol, backed by
/// the mock formula. `respond` can override the reply per call.
class FakeSidecar {
 public:
  using Override = std::function<bool(int call, httplib::Response& res)>;

  explicit FakeSidecar(Override respond = {}) : respond_(std::move(respond)) {
    server_.Post("/score", [this](const httplib::Request& req, httplib::Response& res) {
      const int call = calls_++;
      if (respond_ && respond_(call, res)) return;
      const auto j = nlohmann::json::parse(req.body);
      ScoreRequest r{j.at("text").get<std::string>(), j.at("labels").get<std::vector<std::string>>(),
                     j.at("multi_label").get<bool>(), j.at("template").get<std::string>()};
      nlohmann::json out;
      out["scores"] = mock_score(r).scores;
      out["model_id"] = "fake-sidecar";
      out["latency_ms"] = 1.5;
      res.set_content(out.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FakeSidecar() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int calls() const { return calls_.load(); }

 private:
  Override respond_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::atomic<int> calls_{0};
};

}  // namespace littriage::fixtures
