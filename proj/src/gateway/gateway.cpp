#include "uvkit/gateway/gateway.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include "uvkit/error.hpp"
#include "uvkit/numeric.hpp"

namespace uvkit::gateway {

void GatewayConfig::validate() const {
  if (!(timeout_s > 0.0)) throw ConfigError("gateway: timeout_s must be positive");
  if (retries < 0) throw ConfigError("gateway: retries must be >= 0");
  if (!(backoff_base_s >= 0.0)) throw ConfigError("gateway: backoff_base_s must be >= 0");
  if (!(jitter_frac >= 0.0 && jitter_frac <= 1.0)) throw ConfigError("gateway: jitter_frac must be in [0,1]");
  if (max_in_flight < 1) throw ConfigError("gateway: max_in_flight must be >= 1");
}

std::string route(const TileRequest& req) { return req.vector_context_present ? kMultimodal : kRsOnly; }

void InFlightLimit::acquire() {
  std::unique_lock lk(mu_);
  cv_.wait(lk, [&] { return active_ < limit_; });
  ++active_;
  if (active_ > peak_) peak_ = active_;
}

void InFlightLimit::release() {
  {
    std::lock_guard lk(mu_);
    --active_;
  }
  cv_.notify_one();
}

int InFlightLimit::peak() const {
  std::lock_guard lk(mu_);
  return peak_;
}

Gateway::Gateway(GatewayConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  sleeper_ = [](double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); };
}

void Gateway::register_segmenter(const std::string& id, std::shared_ptr<SegmentationBackend> b) {
  std::lock_guard lk(mu_);
  segmenters_[id] = std::move(b);
}

void Gateway::register_embedder(const std::string& id, std::shared_ptr<EmbeddingProvider> p) {
  std::lock_guard lk(mu_);
  embedders_[id] = std::move(p);
}

void Gateway::register_refiner(const std::string& id, std::shared_ptr<Refiner> r) {
  std::lock_guard lk(mu_);
  refiners_[id] = std::move(r);
}

bool Gateway::has_segmenter(const std::string& id) const {
  std::lock_guard lk(mu_);
  return segmenters_.count(id) != 0;
}

InFlightLimit& Gateway::limit_for(const std::string& backend) {
  std::lock_guard lk(mu_);
  auto& slot = limits_[backend];
  if (!slot) slot = std::make_unique<InFlightLimit>(cfg_.max_in_flight);
  return *slot;
}

template <class F>
auto Gateway::with_retry(const std::string& backend, const std::string& tile_id, F&& call) -> decltype(call()) {
  InFlightLimit& limit = limit_for(backend);
  // Jitter depends only on (seed, tile, attempt), so the schedule is the same
  // whatever order concurrent requests fail in.
  const std::uint64_t key = hash_combine(cfg_.jitter_seed, fnv1a64(backend + '\x1f' + tile_id));
  for (int attempt = 0;; ++attempt) {
    {
      std::lock_guard lk(mu_);
      ++calls_[backend];
    }
    limit.acquire();
    try {
      auto out = call();
      limit.release();
      return out;
    } catch (const TransportError& e) {
      limit.release();
      if (attempt >= cfg_.retries) throw TransportError(tile_id, e.detail() + " (retries exhausted)");
      CounterRng rng(hash_combine(key, static_cast<std::uint64_t>(attempt)));
      const double delay = cfg_.backoff_base_s * std::ldexp(1.0, attempt) * (1.0 + cfg_.jitter_frac * rng.uniform());
      {
        std::lock_guard lk(mu_);
        retries_.push_back({backend, tile_id, attempt + 1, delay, e.detail()});
      }
      sleeper_(delay);
    } catch (...) {
      limit.release();
      throw;
    }
  }
}

SegmentationResponse Gateway::segment(const TileRequest& req) {
  req.validate();
  const std::string id = route(req);
  {
    std::lock_guard lk(mu_);
    ++routing_[id];
  }
  return segment(req, id);
}

SegmentationResponse Gateway::segment(const TileRequest& req, const std::string& backend_id) {
  req.validate();
  std::shared_ptr<SegmentationBackend> b;
  {
    std::lock_guard lk(mu_);
    auto it = segmenters_.find(backend_id);
    if (it == segmenters_.end()) throw ConfigError("no segmentation backend registered as '" + backend_id + "'");
    b = it->second;
  }
  auto resp = with_retry(backend_id, req.tile_id, [&] { return b->segment(req); });
  validate(resp, req);
  return resp;
}

sampler::EmbeddingMatrix Gateway::embed(const sampler::GridCell& cell, const std::string& provider_id) {
  std::shared_ptr<EmbeddingProvider> p;
  {
    std::lock_guard lk(mu_);
    auto it = embedders_.find(provider_id);
    if (it == embedders_.end()) throw ConfigError("no embedding provider registered as '" + provider_id + "'");
    p = it->second;
  }
  auto m = with_retry(provider_id, "cell-" + std::to_string(cell.cell_id), [&] { return p->embed(cell); });
  validate(m, p->dimension());
  return m;
}

RefineResponse Gateway::refine(const RefineRequest& req, const std::string& refiner_id) {
  std::shared_ptr<Refiner> r;
  {
    std::lock_guard lk(mu_);
    auto it = refiners_.find(refiner_id);
    if (it == refiners_.end()) throw ConfigError("no refiner registered as '" + refiner_id + "'");
    r = it->second;
  }
  auto resp = with_retry(refiner_id, req.tile_id + "#" + std::to_string(req.region_id),
                         [&] { return r->refine(req); });
  validate(resp, req);
  return resp;
}

RefineResponse Gateway::refine(const RefineRequest& req) {
  std::string id;
  {
    std::lock_guard lk(mu_);
    if (refiners_.size() != 1) throw ConfigError("refine: expected exactly one registered refiner");
    id = refiners_.begin()->first;
  }
  return refine(req, id);
}

std::map<std::string, std::size_t> Gateway::routing_counts() const {
  std::lock_guard lk(mu_);
  return routing_;
}

std::vector<RetryEvent> Gateway::retry_log() const {
  std::lock_guard lk(mu_);
  return retries_;
}

std::size_t Gateway::calls(const std::string& backend_id) const {
  std::lock_guard lk(mu_);
  auto it = calls_.find(backend_id);
  return it == calls_.end() ? 0 : it->second;
}

int Gateway::peak_in_flight(const std::string& backend_id) const {
  std::lock_guard lk(mu_);
  auto it = limits_.find(backend_id);
  return it == limits_.end() ? 0 : it->second->peak();
}

}  // namespace uvkit::gateway
