#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace uvkit {

// Base of every error raised by the toolkit. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

class FrameMismatch : public Error {
 public:
  using Error::Error;
};

// Malformed input, out-of-range parameter, or a backend response that fails
// shape/range checks.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  TransportError(std::string tile_id, const std::string& what)
      : Error("backend transport failure for '" + tile_id + "': " + what),
        tile_id_(std::move(tile_id)),
        detail_(what) {}

  const std::string& tile_id() const noexcept { return tile_id_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string tile_id_;
  std::string detail_;
};

}  // namespace uvkit
