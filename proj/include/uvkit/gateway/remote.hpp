#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "uvkit/gateway/gateway.hpp"

namespace uvkit::gateway {

// Carries one JSON message to a model server and returns its one-line reply.
// Failures to deliver or to hear back within the timeout throw TransportError.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual nlohmann::json call(const nlohmann::json& msg, double timeout_s) = 0;
};

// Long-lived child process (`/bin/sh -c command`) speaking line-delimited JSON
// on stdin/stdout. Restarted after a crash or timeout.
class SubprocessTransport : public Transport {
 public:
  explicit SubprocessTransport(std::string command);
  ~SubprocessTransport() override;
  SubprocessTransport(const SubprocessTransport&) = delete;
  SubprocessTransport& operator=(const SubprocessTransport&) = delete;

  nlohmann::json call(const nlohmann::json& msg, double timeout_s) override;

 private:
  void start();
  void stop();

  std::string command_;
  std::mutex mu_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string pending_;
};

// POSTs each message to `url` (http://host:port/path); the body of the reply
// is the response line.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(const std::string& url);
  nlohmann::json call(const nlohmann::json& msg, double timeout_s) override;

 private:
  std::string base_;
  std::string path_;
};

// "exec:<command>" or "http://host:port/path".
std::shared_ptr<Transport> make_transport(const std::string& uri);
// Value of UVKIT_BACKEND_URI, if set and nonempty.
std::optional<std::string> backend_uri_from_env();

// Backends that speak the wire protocol. Raster payloads travel as file
// references under `workdir`.
class RemoteSegmentation : public SegmentationBackend {
 public:
  RemoteSegmentation(std::shared_ptr<Transport> t, double timeout_s);
  SegmentationResponse segment(const TileRequest& req) override;

 private:
  std::shared_ptr<Transport> t_;
  double timeout_s_;
};

class RemoteEmbedding : public EmbeddingProvider {
 public:
  RemoteEmbedding(std::shared_ptr<Transport> t, std::size_t dimension, double timeout_s);
  std::size_t dimension() const override { return dim_; }
  sampler::EmbeddingMatrix embed(const sampler::GridCell& cell) override;

 private:
  std::shared_ptr<Transport> t_;
  std::size_t dim_;
  double timeout_s_;
};

class RemoteRefiner : public Refiner {
 public:
  RemoteRefiner(std::shared_ptr<Transport> t, std::filesystem::path workdir, double timeout_s);
  RefineResponse refine(const RefineRequest& req) override;

 private:
  std::shared_ptr<Transport> t_;
  std::filesystem::path workdir_;
  double timeout_s_;
};

}  // namespace uvkit::gateway
