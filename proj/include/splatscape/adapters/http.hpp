#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

#include "json.hpp"
#include "splatscape/adapters/backends.hpp"
#include "splatscape/adapters/protocol.hpp"

namespace splatscape {

struct RetryPolicy {
  double base_delay = 0.5;  // seconds before the first retry
  double factor = 2.0;
  /// Each delay is scaled by a factor drawn from [1 - jitter, 1 + jitter].
  double jitter = 0.25;
  std::uint64_t seed = 0;
  /// Replaced in tests; defaults to sleeping the calling thread.
  std::function<void(double seconds)> sleep;

  /// Delay before retry number `attempt` (1-based). Pure in (seed, attempt).
  double delay(int attempt) const;
};

/// JSON-over-HTTP POST to <endpoint.url>/<role>. Transport failures, 5xx and
/// 429 are retried with backoff; once retries are spent the call throws
/// Timeout if the last failure was a timeout and EndpointUnavailable
/// otherwise. Other non-200 statuses and unparseable bodies throw
/// ProtocolError without retrying. Safe for concurrent calls.
class HttpClient {
 public:
  explicit HttpClient(ModelEndpoint endpoint, RetryPolicy policy = {});
  nlohmann::json post(const nlohmann::json& body) const;
  const ModelEndpoint& endpoint() const { return endpoint_; }

 private:
  ModelEndpoint endpoint_;
  RetryPolicy policy_;
};

class HttpInpaint : public InpaintBackend {
 public:
  explicit HttpInpaint(HttpClient client) : client_(std::move(client)) {}
  Image inpaint(const Image& image, const Mask& mask, const std::string& prompt) const override;

 private:
  HttpClient client_;
};

class HttpDepth : public DepthBackend {
 public:
  explicit HttpDepth(HttpClient client) : client_(std::move(client)) {}
  DepthEstimate estimate_depth(const Image& image) const override;

 private:
  HttpClient client_;
};

class HttpText : public TextBackend {
 public:
  explicit HttpText(HttpClient client) : client_(std::move(client)) {}
  std::string generate(const Image& image, const std::string& prompt) const override;

 private:
  HttpClient client_;
};

/// Serves the wire protocol on 127.0.0.1 from in-process backends (any may be
/// null, which answers 404). Used by the tests and `splatscape serve`.
class ModelServer {
 public:
  struct Backends {
    const InpaintBackend* inpaint = nullptr;
    const DepthBackend* depth = nullptr;
    const TextBackend* caption = nullptr;
    const TextBackend* vqa = nullptr;
  };

  /// port 0 picks a free port.
  explicit ModelServer(Backends backends, int port = 0);
  ~ModelServer();
  ModelServer(const ModelServer&) = delete;
  ModelServer& operator=(const ModelServer&) = delete;

  int port() const;
  std::string url() const;
  /// Blocks until stop() is called from another thread.
  void wait();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace splatscape
