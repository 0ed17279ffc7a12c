#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "uvkit/gateway/gateway.hpp"

namespace uvkit::gateway {

// Uniform probability over the tile. The frame comes from the request, or
// from the header of the raster at image_ref.
class ConstantBackend : public SegmentationBackend {
 public:
  explicit ConstantBackend(float value, std::string backend_id = "mock");
  SegmentationResponse segment(const TileRequest& req) override;

 private:
  float value_;
  std::string id_;
};

// Serves precomputed grids: <dir>/<tile_id>.pgrid, or image_ref itself when
// it names a PGRID file.
class FileBackend : public SegmentationBackend {
 public:
  explicit FileBackend(std::filesystem::path dir, std::string backend_id = "file");
  SegmentationResponse segment(const TileRequest& req) override;

 private:
  std::filesystem::path dir_;
  std::string id_;
};

// Replays a failure script around another backend: call k throws a
// TransportError when script[k] is true. Calls past the script succeed.
class ScriptedBackend : public SegmentationBackend {
 public:
  ScriptedBackend(std::shared_ptr<SegmentationBackend> inner, std::vector<bool> script);
  SegmentationResponse segment(const TileRequest& req) override;
  std::size_t calls() const { return calls_.load(); }

 private:
  std::shared_ptr<SegmentationBackend> inner_;
  std::vector<bool> script_;
  std::atomic<std::size_t> calls_{0};
};

class FixedEmbeddingProvider : public EmbeddingProvider {
 public:
  explicit FixedEmbeddingProvider(sampler::EmbeddingMatrix m);
  std::size_t dimension() const override { return m_.cols; }
  sampler::EmbeddingMatrix embed(const sampler::GridCell& cell) override;

 private:
  sampler::EmbeddingMatrix m_;
};

// Deterministic function of the cell bounds (quantized to millimeters).
class GeometryHashProvider : public EmbeddingProvider {
 public:
  explicit GeometryHashProvider(std::size_t rows = 16, std::size_t cols = 32, std::uint64_t seed = 0);
  std::size_t dimension() const override { return cols_; }
  sampler::EmbeddingMatrix embed(const sampler::GridCell& cell) override;

 private:
  std::size_t rows_, cols_;
  std::uint64_t seed_;
};

// Returns the mask prompt (or an empty mask) at a fixed confidence.
class IdentityRefiner : public Refiner {
 public:
  explicit IdentityRefiner(double confidence = 1.0, std::string id = "identity");
  RefineResponse refine(const RefineRequest& req) override;

 private:
  double confidence_;
  std::string id_;
};

// Always fails with a TransportError.
class FailingRefiner : public Refiner {
 public:
  RefineResponse refine(const RefineRequest& req) override;
};

// Request handler behind the mock backend executable and the in-process HTTP
// test server. Rasters are written under `workdir`.
struct MockServerOptions {
  std::filesystem::path workdir;
  float segment_value = 0.9f;
  double refine_confidence = 1.0;
  std::size_t embed_rows = 16;
  std::size_t embed_cols = 32;
  std::uint64_t seed = 0;
};
nlohmann::json handle_mock_message(const nlohmann::json& msg, const MockServerOptions& opt);

}  // namespace uvkit::gateway
