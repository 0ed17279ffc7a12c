#pragma once

#include <cstdint>
#include <vector>

#include "uvkit/geomesh/polygon.hpp"

namespace uvkit::geomesh {

// Georeference of a north-up pixel grid. Pixel (col, row) covers
// x in [origin.x + col*res, origin.x + (col+1)*res] and
// y in [origin.y - (row+1)*res, origin.y - row*res].
struct Frame {
  int width = 0;
  int height = 0;
  Point origin;  // top-left corner of pixel (0, 0)
  double resolution = 1.0;  // meters per pixel

  std::size_t size() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  Point pixel_center(int col, int row) const {
    return {origin.x + (col + 0.5) * resolution, origin.y - (row + 0.5) * resolution};
  }
  Point corner(double col, double row) const {
    return {origin.x + col * resolution, origin.y - row * resolution};
  }
  // Continuous pixel coordinates; pixel (c, r) spans [c, c+1) x [r, r+1).
  double col_of(double x) const { return (x - origin.x) / resolution; }
  double row_of(double y) const { return (origin.y - y) / resolution; }
  Box bounds() const {
    return {origin.x, origin.y - height * resolution, origin.x + width * resolution, origin.y};
  }
  // Sub-frame starting at pixel (col, row).
  Frame window(int col, int row, int w, int h) const {
    return {w, h, corner(col, row), resolution};
  }

  // Shape equal and georeference equal to within 1e-9 of a pixel.
  bool same_geometry(const Frame& o) const;
  // Throws ValidationError unless width, height and resolution are positive and finite.
  void validate() const;
};

class BinaryMask {
 public:
  BinaryMask() = default;
  explicit BinaryMask(const Frame& frame);
  // Throws ValidationError when data length or values are wrong.
  BinaryMask(const Frame& frame, std::vector<std::uint8_t> data);

  const Frame& frame() const noexcept { return frame_; }
  int width() const noexcept { return frame_.width; }
  int height() const noexcept { return frame_.height; }
  const std::vector<std::uint8_t>& data() const noexcept { return data_; }

  bool at(int col, int row) const { return data_[index(col, row)] != 0; }
  // Out-of-frame reads as background.
  bool get(int col, int row) const {
    return col >= 0 && row >= 0 && col < frame_.width && row < frame_.height && at(col, row);
  }
  void set(int col, int row, bool v) { data_[index(col, row)] = v ? 1 : 0; }

  std::size_t count() const;
  bool empty() const { return count() == 0; }

  // Foreground of the pixel containing p; false outside the frame.
  bool contains(Point p) const;

  // Copy of the pixels in [col, col+w) x [row, row+h); out-of-frame is background.
  BinaryMask crop(int col, int row, int w, int h) const;
  // OR `other` into this mask at pixel offset (col, row); parts outside are dropped.
  void paste_or(const BinaryMask& other, int col, int row);

  BinaryMask& operator|=(const BinaryMask& o);
  BinaryMask& operator&=(const BinaryMask& o);

  friend bool operator==(const BinaryMask& a, const BinaryMask& b) {
    return a.frame_.same_geometry(b.frame_) && a.data_ == b.data_;
  }

 private:
  std::size_t index(int col, int row) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(frame_.width) +
           static_cast<std::size_t>(col);
  }

  Frame frame_;
  std::vector<std::uint8_t> data_;
};

// Where a point sits relative to a mask once pixel-boundary ties are resolved:
// a point on a pixel edge or corner is Inside only if every touching pixel is
// foreground, Outside only if every touching pixel is background.
enum class PixelSide { Inside, Outside, Boundary };
PixelSide classify_point(const BinaryMask& mask, Point p);

struct LabeledComponents {
  Frame frame;
  std::vector<std::int32_t> labels;  // 0 = background, 1..count
  int count = 0;
  std::vector<std::int64_t> areas;  // areas[k] is the pixel count of label k+1

  std::int32_t label_at(int col, int row) const {
    return labels[static_cast<std::size_t>(row) * frame.width + col];
  }
  BinaryMask component_mask(int label) const;
  BinaryMask foreground() const;
};

// 4-connected labeling, labels assigned in raster-scan discovery order.
LabeledComponents connected_components(const BinaryMask& mask);

// |a AND b| / |a OR b|; 1 when both are empty. Throws FrameMismatch.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

struct OverlapCounts {
  std::size_t intersection = 0;
  std::size_t union_ = 0;
  std::size_t a = 0;
  std::size_t b = 0;
};
// Counts restricted to `within` when given. Throws FrameMismatch.
OverlapCounts overlap_counts(const BinaryMask& a, const BinaryMask& b,
                             const BinaryMask* within = nullptr);

}  // namespace uvkit::geomesh

namespace uvkit::geomesh {

// Real-valued raster aligned to a Frame, e.g. segmentation probabilities.
struct ProbabilityGrid {
  Frame frame;
  std::vector<float> values;

  // Pixels with value >= threshold become foreground.
  BinaryMask threshold(float level = 0.5f) const;
  // Throws ValidationError unless the length matches and every value is in [0, 1].
  void validate() const;
};

}  // namespace uvkit::geomesh
