#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uvkit/geomesh/polygon.hpp"

namespace uvkit::sampler {

enum class CellStatus { Anchor, Unlabeled, AnnotatedPositive, AnnotatedNegative };

std::string to_string(CellStatus s);
CellStatus parse_cell_status(const std::string& s);

// One square of the city grid. `bounds` is the full nominal square; `clipped`
// is its intersection with the city extent.
struct GridCell {
  std::int64_t cell_id = 0;
  int row = 0;  // counted from the top (north) of the extent
  int col = 0;
  geomesh::Box bounds;
  geomesh::Box clipped;
  CellStatus status = CellStatus::Unlabeled;
};

// Patch-count x dimension matrix, row-major.
struct EmbeddingMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  // Throws ValidationError for empty shape, length mismatch or non-finite values.
  void validate() const;
};

}  // namespace uvkit::sampler
