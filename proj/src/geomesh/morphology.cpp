#include "uvkit/geomesh/morphology.hpp"

#include <vector>

#include "uvkit/error.hpp"

namespace uvkit::geomesh {

namespace {

// One separable pass: out[i] = (window count over [i-r, i+r] along the axis)
// compared against `need`. Erosion needs the full window, dilation any hit.
void window_pass(const std::vector<std::uint8_t>& in, std::vector<std::uint8_t>& out, int w, int h,
                 int radius, bool horizontal, bool erosion) {
  const int lines = horizontal ? h : w;
  const int len = horizontal ? w : h;
  const int full = 2 * radius + 1;
  std::vector<int> prefix(static_cast<std::size_t>(len) + 1);
  for (int l = 0; l < lines; ++l) {
    auto at = [&](int i) -> std::size_t {
      return horizontal ? static_cast<std::size_t>(l) * w + i : static_cast<std::size_t>(i) * w + l;
    };
    prefix[0] = 0;
    for (int i = 0; i < len; ++i) prefix[i + 1] = prefix[i] + in[at(i)];
    for (int i = 0; i < len; ++i) {
      const int lo = i - radius < 0 ? 0 : i - radius;
      const int hi = i + radius + 1 > len ? len : i + radius + 1;
      const int hits = prefix[hi] - prefix[lo];
      out[at(i)] = erosion ? static_cast<std::uint8_t>(hits == full) : static_cast<std::uint8_t>(hits > 0);
    }
  }
}

BinaryMask apply(const BinaryMask& mask, int radius, bool erosion) {
  if (radius < 0) throw ValidationError("structuring element radius must be >= 0");
  if (radius == 0) return mask;
  const int w = mask.width(), h = mask.height();
  std::vector<std::uint8_t> tmp(mask.data().size()), out(mask.data().size());
  window_pass(mask.data(), tmp, w, h, radius, true, erosion);
  window_pass(tmp, out, w, h, radius, false, erosion);
  return BinaryMask(mask.frame(), std::move(out));
}

}  // namespace

BinaryMask erode(const BinaryMask& mask, int radius) { return apply(mask, radius, true); }

BinaryMask dilate(const BinaryMask& mask, int radius) { return apply(mask, radius, false); }

BinaryMask morphological_open(const BinaryMask& mask, int radius) {
  if (radius < 1) throw ValidationError("opening radius must be >= 1");
  return dilate(erode(mask, radius), radius);
}

BinaryMask drop_small_components(const BinaryMask& mask, std::int64_t min_area) {
  if (min_area < 0) throw ValidationError("min_area must be >= 0");
  if (min_area <= 1) return mask;
  const LabeledComponents cc = connected_components(mask);
  std::vector<std::uint8_t> data(mask.data().size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::int32_t l = cc.labels[i];
    data[i] = static_cast<std::uint8_t>(l != 0 && cc.areas[static_cast<std::size_t>(l - 1)] >= min_area);
  }
  return BinaryMask(mask.frame(), std::move(data));
}

}  // namespace uvkit::geomesh
