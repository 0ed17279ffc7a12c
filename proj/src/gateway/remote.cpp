#include <httplib.h>

#include "uvkit/error.hpp"
#include "uvkit/gateway/remote.hpp"
#include "uvkit/geomesh/io.hpp"

namespace uvkit::gateway {

namespace {

// Replies carrying "error" are backend-side failures and count as transport
// failures for retry purposes.
const nlohmann::json& checked(const nlohmann::json& reply, const std::string& tile) {
  if (!reply.is_object()) throw ValidationError("backend reply is not an object");
  if (reply.contains("error")) throw TransportError(tile, "backend error: " + reply["error"].dump());
  return reply;
}

std::string require_string(const nlohmann::json& reply, const char* key) {
  if (!reply.contains(key) || !reply[key].is_string()) {
    throw ValidationError(std::string("backend reply lacks string field '") + key + "'");
  }
  return reply[key].get<std::string>();
}

}  // namespace

HttpTransport::HttpTransport(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end + 3);
  base_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

nlohmann::json HttpTransport::call(const nlohmann::json& msg, double timeout_s) {
  const std::string tile = msg.value("tile_id", "");
  httplib::Client cli(base_);
  const auto secs = static_cast<time_t>(timeout_s);
  const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);
  auto res = cli.Post(path_, msg.dump() + "\n", "application/x-ndjson");
  if (!res) throw TransportError(tile, "HTTP request failed: " + httplib::to_string(res.error()));
  if (res->status >= 500) throw TransportError(tile, "HTTP status " + std::to_string(res->status));
  if (res->status != 200) throw ValidationError("backend HTTP status " + std::to_string(res->status));
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("backend reply is not JSON");
  }
}

RemoteSegmentation::RemoteSegmentation(std::shared_ptr<Transport> t, double timeout_s)
    : t_(std::move(t)), timeout_s_(timeout_s) {}

SegmentationResponse RemoteSegmentation::segment(const TileRequest& req) {
  const auto reply = checked(t_->call(encode_segment(req), timeout_s_), req.tile_id);
  SegmentationResponse r;
  r.tile_id = require_string(reply, "tile_id");
  r.backend_id = require_string(reply, "backend_id");
  r.probabilities = geomesh::read_probabilities(require_string(reply, "grid_ref"));
  return r;
}

RemoteEmbedding::RemoteEmbedding(std::shared_ptr<Transport> t, std::size_t dimension, double timeout_s)
    : t_(std::move(t)), dim_(dimension), timeout_s_(timeout_s) {}

sampler::EmbeddingMatrix RemoteEmbedding::embed(const sampler::GridCell& cell) {
  const auto msg = encode_embed(cell);
  const auto reply = checked(t_->call(msg, timeout_s_), msg["tile_id"]);
  return read_embedding(require_string(reply, "grid_ref"));
}

RemoteRefiner::RemoteRefiner(std::shared_ptr<Transport> t, std::filesystem::path workdir, double timeout_s)
    : t_(std::move(t)), workdir_(std::move(workdir)), timeout_s_(timeout_s) {}

RefineResponse RemoteRefiner::refine(const RefineRequest& req) {
  std::optional<std::string> mask_ref;
  if (req.mask_prompt) {
    const auto p = workdir_ / ("prompt-" + req.tile_id + "-" + std::to_string(req.region_id) + ".grid");
    geomesh::write_mask(p, *req.mask_prompt);
    mask_ref = p.string();
  }
  const auto reply = checked(t_->call(encode_refine(req, mask_ref), timeout_s_), req.tile_id);
  RefineResponse r;
  r.tile_id = require_string(reply, "tile_id");
  r.region_id = reply.value("region_id", req.region_id);
  r.backend_id = require_string(reply, "backend_id");
  auto candidate = [](const nlohmann::json& c) {
    if (!c.contains("confidence") || !c["confidence"].is_number()) {
      throw ValidationError("backend reply lacks numeric 'confidence'");
    }
    return RefineCandidate{geomesh::read_mask(require_string(c, "grid_ref")), c["confidence"].get<double>()};
  };
  if (reply.contains("candidates")) {
    for (const auto& c : reply["candidates"]) r.candidates.push_back(candidate(c));
  } else {
    r.candidates.push_back(candidate(reply));
  }
  return r;
}

}  // namespace uvkit::gateway
