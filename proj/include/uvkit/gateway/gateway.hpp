#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "uvkit/gateway/messages.hpp"

namespace uvkit::gateway {

// Backend contracts. Implementations throw TransportError for failures worth
// retrying; anything else propagates immediately.
class SegmentationBackend {
 public:
  virtual ~SegmentationBackend() = default;
  virtual SegmentationResponse segment(const TileRequest& req) = 0;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  // Declared output dimension D.
  virtual std::size_t dimension() const = 0;
  virtual sampler::EmbeddingMatrix embed(const sampler::GridCell& cell) = 0;
};

class Refiner {
 public:
  virtual ~Refiner() = default;
  virtual RefineResponse refine(const RefineRequest& req) = 0;
};

struct GatewayConfig {
  double timeout_s = 60.0;
  int retries = 2;
  double backoff_base_s = 0.5;  // delay before retry k is base * 2^k, plus jitter
  double jitter_frac = 0.25;
  std::uint64_t jitter_seed = 0;
  int max_in_flight = 4;  // per backend

  void validate() const;
};

// Which backend a tile goes to when the caller does not name one.
std::string route(const TileRequest& req);

// One retry decision, recorded so failure handling can be replayed.
struct RetryEvent {
  std::string backend;
  std::string tile_id;
  int attempt = 0;
  double delay_s = 0.0;
  std::string error;
};

// Bounded in-flight counter.
class InFlightLimit {
 public:
  explicit InFlightLimit(int limit) : limit_(limit) {}
  void acquire();
  void release();
  int peak() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  int limit_;
  int active_ = 0;
  int peak_ = 0;
};

class Gateway {
 public:
  using Sleeper = std::function<void(double seconds)>;

  explicit Gateway(GatewayConfig cfg = {});

  const GatewayConfig& config() const noexcept { return cfg_; }
  void set_sleeper(Sleeper s) { sleeper_ = std::move(s); }

  void register_segmenter(const std::string& backend_id, std::shared_ptr<SegmentationBackend> b);
  void register_embedder(const std::string& provider_id, std::shared_ptr<EmbeddingProvider> p);
  void register_refiner(const std::string& refiner_id, std::shared_ptr<Refiner> r);
  bool has_segmenter(const std::string& backend_id) const;

  // Routes by the vector-context flag, then calls that backend.
  SegmentationResponse segment(const TileRequest& req);
  // Calls the named backend regardless of routing.
  SegmentationResponse segment(const TileRequest& req, const std::string& backend_id);
  sampler::EmbeddingMatrix embed(const sampler::GridCell& cell, const std::string& provider_id);
  RefineResponse refine(const RefineRequest& req, const std::string& refiner_id);
  // The only refiner, when exactly one is registered.
  RefineResponse refine(const RefineRequest& req);

  std::map<std::string, std::size_t> routing_counts() const;
  std::vector<RetryEvent> retry_log() const;
  std::size_t calls(const std::string& backend_id) const;
  int peak_in_flight(const std::string& backend_id) const;

 private:
  template <class F>
  auto with_retry(const std::string& backend, const std::string& tile_id, F&& call) -> decltype(call());
  InFlightLimit& limit_for(const std::string& backend);

  GatewayConfig cfg_;
  Sleeper sleeper_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<SegmentationBackend>> segmenters_;
  std::map<std::string, std::shared_ptr<EmbeddingProvider>> embedders_;
  std::map<std::string, std::shared_ptr<Refiner>> refiners_;
  std::map<std::string, std::unique_ptr<InFlightLimit>> limits_;
  std::map<std::string, std::size_t> routing_;
  std::map<std::string, std::size_t> calls_;
  std::vector<RetryEvent> retries_;
};

}  // namespace uvkit::gateway
