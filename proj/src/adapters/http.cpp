#include "splatscape/adapters/http.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <regex>
#include <thread>

#include "httplib.h"
#include "splatscape/error.hpp"

namespace splatscape {

namespace {

using nlohmann::json;

struct Target {
  std::string host;  // scheme://host[:port]
  std::string path;
};

Target split_url(const ModelEndpoint& endpoint) {
  static const std::regex re(R"(^(http://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint.url(), m, re))
    throw Error(ErrorCode::ConfigInvalid, "malformed endpoint url '" + endpoint.url() + "'");
  std::string path = m[2].matched ? m[2].str() : std::string();
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {m[1].str(), path + "/" + std::string(to_string(endpoint.role()))};
}

std::chrono::microseconds to_duration(double seconds) {
  return std::chrono::microseconds(static_cast<long long>(std::llround(seconds * 1e6)));
}

}  // namespace

double RetryPolicy::delay(int attempt) const {
  std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(attempt)));
  std::uniform_real_distribution<double> u(1.0 - jitter, 1.0 + jitter);
  return base_delay * std::pow(factor, attempt - 1) * u(rng);
}

HttpClient::HttpClient(ModelEndpoint endpoint, RetryPolicy policy)
    : endpoint_(std::move(endpoint)), policy_(std::move(policy)) {
  split_url(endpoint_);  // validate eagerly
}

json HttpClient::post(const json& body) const {
  const Target target = split_url(endpoint_);
  const std::string payload = body.dump();
  const std::string where = std::string(to_string(endpoint_.role())) + " endpoint " + endpoint_.url();
  bool timed_out = false;
  std::string last_failure;
  for (int attempt = 0; attempt <= endpoint_.retries(); ++attempt) {
    if (attempt > 0) {
      const double wait = policy_.delay(attempt);
      if (policy_.sleep) policy_.sleep(wait);
      else std::this_thread::sleep_for(to_duration(wait));
    }
    httplib::Client client(target.host);
    client.set_connection_timeout(to_duration(endpoint_.timeout_seconds()));
    client.set_read_timeout(to_duration(endpoint_.timeout_seconds()));
    client.set_write_timeout(to_duration(endpoint_.timeout_seconds()));
    const httplib::Result res = client.Post(target.path, payload, "application/json");
    if (!res) {
      const httplib::Error err = res.error();
      timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
      last_failure = httplib::to_string(err);
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      timed_out = false;
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw Error(ErrorCode::ProtocolError, where + " answered HTTP " + std::to_string(res->status));
    try {
      return json::parse(res->body);
    } catch (const json::exception&) {
      throw Error(ErrorCode::ProtocolError, where + " returned a body that is not JSON");
    }
  }
  const std::string message = where + " failed after " + std::to_string(endpoint_.retries() + 1) +
                              " attempts (" + last_failure + ")";
  throw Error(timed_out ? ErrorCode::Timeout : ErrorCode::EndpointUnavailable, message);
}

Image HttpInpaint::inpaint(const Image& image, const Mask& mask, const std::string& prompt) const {
  return parse_inpaint_response(client_.post(inpaint_request(image, mask, prompt)));
}

DepthEstimate HttpDepth::estimate_depth(const Image& image) const {
  return parse_depth_response(client_.post(depth_request(image)));
}

std::string HttpText::generate(const Image& image, const std::string& prompt) const {
  return parse_text_response(client_.post(text_request(image, prompt)));
}

struct ModelServer::Impl {
  httplib::Server server;
  int port = 0;
  std::thread thread;
};

ModelServer::ModelServer(Backends backends, int port) : impl_(std::make_unique<Impl>()) {
  auto route = [this](const std::string& path, auto handler) {
    impl_->server.Post(path, [handler](const httplib::Request& req, httplib::Response& res) {
      try {
        res.set_content(handler(json::parse(req.body)).dump(), "application/json");
      } catch (const json::exception& e) {
        res.status = 400;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      } catch (const Error& e) {
        res.status = e.code() == ErrorCode::ProtocolError ? 400 : 500;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      }
    });
  };
  if (const InpaintBackend* b = backends.inpaint)
    route("/inpaint", [b](const json& body) {
      const InpaintRequest r = parse_inpaint_request(body);
      return inpaint_response(b->inpaint(r.image, r.mask, r.prompt));
    });
  if (const DepthBackend* b = backends.depth)
    route("/depth", [b](const json& body) { return depth_response(b->estimate_depth(parse_depth_request(body))); });
  if (const TextBackend* b = backends.caption)
    route("/caption", [b](const json& body) {
      const TextRequest r = parse_text_request(body);
      return text_response(b->generate(r.image, r.prompt));
    });
  if (const TextBackend* b = backends.vqa)
    route("/vqa", [b](const json& body) {
      const TextRequest r = parse_text_request(body);
      return text_response(b->generate(r.image, r.prompt));
    });

  impl_->port = port == 0 ? impl_->server.bind_to_any_port("127.0.0.1")
                          : (impl_->server.bind_to_port("127.0.0.1", port) ? port : -1);
  if (impl_->port < 0) throw Error(ErrorCode::EndpointUnavailable, "cannot bind model server port");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

ModelServer::~ModelServer() {
  stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int ModelServer::port() const { return impl_->port; }

std::string ModelServer::url() const { return "http://127.0.0.1:" + std::to_string(impl_->port); }

void ModelServer::wait() {
  if (impl_->thread.joinable()) impl_->thread.join();
}

void ModelServer::stop() { impl_->server.stop(); }

}  // namespace splatscape
