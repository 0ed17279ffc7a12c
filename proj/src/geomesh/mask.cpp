#include "uvkit/geomesh/mask.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uvkit/error.hpp"

namespace uvkit::geomesh {

bool Frame::same_geometry(const Frame& o) const {
  if (width != o.width || height != o.height) return false;
  const double tol = 1e-9 * std::max(resolution, o.resolution);
  return std::abs(resolution - o.resolution) <= 1e-12 * std::max(resolution, o.resolution) &&
         std::abs(origin.x - o.origin.x) <= tol && std::abs(origin.y - o.origin.y) <= tol;
}

void Frame::validate() const {
  if (width <= 0 || height <= 0) throw ValidationError("frame dimensions must be positive");
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw ValidationError("frame resolution must be positive");
  }
  if (!std::isfinite(origin.x) || !std::isfinite(origin.y)) {
    throw ValidationError("frame origin must be finite");
  }
}

BinaryMask::BinaryMask(const Frame& frame) : frame_(frame) {
  frame_.validate();
  data_.assign(frame_.size(), 0);
}

BinaryMask::BinaryMask(const Frame& frame, std::vector<std::uint8_t> data)
    : frame_(frame), data_(std::move(data)) {
  frame_.validate();
  if (data_.size() != frame_.size()) throw ValidationError("mask data length != width*height");
  for (std::uint8_t v : data_) {
    if (v > 1) throw ValidationError("mask values must be 0 or 1");
  }
}

std::size_t BinaryMask::count() const {
  return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

bool BinaryMask::contains(Point p) const {
  const double c = std::floor(frame_.col_of(p.x));
  const double r = std::floor(frame_.row_of(p.y));
  if (c < 0 || r < 0 || c >= frame_.width || r >= frame_.height) return false;
  return at(static_cast<int>(c), static_cast<int>(r));
}

BinaryMask BinaryMask::crop(int col, int row, int w, int h) const {
  BinaryMask out(frame_.window(col, row, w, h));
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (get(col + c, row + r)) out.set(c, r, true);
    }
  }
  return out;
}

void BinaryMask::paste_or(const BinaryMask& other, int col, int row) {
  for (int r = 0; r < other.height(); ++r) {
    const int rr = row + r;
    if (rr < 0 || rr >= height()) continue;
    for (int c = 0; c < other.width(); ++c) {
      const int cc = col + c;
      if (cc < 0 || cc >= width()) continue;
      if (other.at(c, r)) set(cc, rr, true);
    }
  }
}

BinaryMask& BinaryMask::operator|=(const BinaryMask& o) {
  if (!frame_.same_geometry(o.frame_)) throw FrameMismatch("mask union over different frames");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] |= o.data_[i];
  return *this;
}

BinaryMask& BinaryMask::operator&=(const BinaryMask& o) {
  if (!frame_.same_geometry(o.frame_)) throw FrameMismatch("mask intersection over different frames");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] &= o.data_[i];
  return *this;
}

PixelSide classify_point(const BinaryMask& mask, Point p) {
  const Frame& f = mask.frame();
  const double cx = f.col_of(p.x);
  const double cy = f.row_of(p.y);
  constexpr double tie = 1e-9;
  // Pixel columns/rows whose closed square holds the point.
  auto span_of = [](double v, int& lo, int& hi) {
    const double fl = std::floor(v + 0.5);
    if (std::abs(v - fl) <= tie) {
      lo = static_cast<int>(fl) - 1;
      hi = static_cast<int>(fl);
    } else {
      lo = hi = static_cast<int>(std::floor(v));
    }
  };
  int c0, c1, r0, r1;
  span_of(cx, c0, c1);
  span_of(cy, r0, r1);
  bool any_fg = false, any_bg = false;
  for (int r = r0; r <= r1; ++r) {
    for (int c = c0; c <= c1; ++c) {
      if (mask.get(c, r)) {
        any_fg = true;
      } else {
        any_bg = true;
      }
    }
  }
  if (any_fg && any_bg) return PixelSide::Boundary;
  return any_fg ? PixelSide::Inside : PixelSide::Outside;
}

BinaryMask LabeledComponents::component_mask(int label) const {
  std::vector<std::uint8_t> data(labels.size());
  std::transform(labels.begin(), labels.end(), data.begin(),
                 [label](std::int32_t v) { return static_cast<std::uint8_t>(v == label); });
  return BinaryMask(frame, std::move(data));
}

BinaryMask LabeledComponents::foreground() const {
  std::vector<std::uint8_t> data(labels.size());
  std::transform(labels.begin(), labels.end(), data.begin(),
                 [](std::int32_t v) { return static_cast<std::uint8_t>(v != 0); });
  return BinaryMask(frame, std::move(data));
}

LabeledComponents connected_components(const BinaryMask& mask) {
  const Frame& f = mask.frame();
  const int w = f.width, h = f.height;
  LabeledComponents out;
  out.frame = f;
  out.labels.assign(f.size(), 0);
  std::vector<std::int32_t> stack;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t seed = static_cast<std::size_t>(r) * w + c;
      if (!mask.at(c, r) || out.labels[seed] != 0) continue;
      const std::int32_t label = ++out.count;
      std::int64_t area = 0;
      out.labels[seed] = label;
      stack.push_back(static_cast<std::int32_t>(seed));
      while (!stack.empty()) {
        const std::size_t idx = static_cast<std::size_t>(stack.back());
        stack.pop_back();
        ++area;
        const int pc = static_cast<int>(idx % w), pr = static_cast<int>(idx / w);
        const int nc[4] = {pc - 1, pc + 1, pc, pc};
        const int nr[4] = {pr, pr, pr - 1, pr + 1};
        for (int k = 0; k < 4; ++k) {
          if (nc[k] < 0 || nr[k] < 0 || nc[k] >= w || nr[k] >= h) continue;
          const std::size_t n = static_cast<std::size_t>(nr[k]) * w + nc[k];
          if (out.labels[n] == 0 && mask.at(nc[k], nr[k])) {
            out.labels[n] = label;
            stack.push_back(static_cast<std::int32_t>(n));
          }
        }
      }
      out.areas.push_back(area);
    }
  }
  return out;
}

OverlapCounts overlap_counts(const BinaryMask& a, const BinaryMask& b, const BinaryMask* within) {
  if (!a.frame().same_geometry(b.frame())) throw FrameMismatch("IoU over masks with different frames");
  if (within && !within->frame().same_geometry(a.frame())) {
    throw FrameMismatch("IoU restriction mask has a different frame");
  }
  OverlapCounts oc;
  const auto& da = a.data();
  const auto& db = b.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    if (within && !within->data()[i]) continue;
    oc.a += da[i];
    oc.b += db[i];
    oc.intersection += da[i] & db[i];
    oc.union_ += da[i] | db[i];
  }
  return oc;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  const OverlapCounts oc = overlap_counts(a, b);
  if (oc.union_ == 0) return 1.0;
  return static_cast<double>(oc.intersection) / static_cast<double>(oc.union_);
}

}  // namespace uvkit::geomesh

namespace uvkit::geomesh {

BinaryMask ProbabilityGrid::threshold(float level) const {
  std::vector<std::uint8_t> data(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) data[i] = static_cast<std::uint8_t>(values[i] >= level);
  return BinaryMask(frame, std::move(data));
}

void ProbabilityGrid::validate() const {
  frame.validate();
  if (values.size() != frame.size()) throw ValidationError("probability grid length != width*height");
  for (float v : values) {
    if (!(v >= 0.0f && v <= 1.0f)) throw ValidationError("probability outside [0, 1]");
  }
}

}  // namespace uvkit::geomesh
