#pragma once

#include <string>
#include <vector>

#include "tsc/linalg.hpp"

namespace tsc {

// A batch of flattened square patches.  Rows of `patches` are individual
// patches (row-major pixels, side * side columns), already mean-subtracted.
// `tags` records per-patch provenance ("image3 r12 c40", "lines v2h5", ...)
// and is either empty or has one entry per row.
struct PatchBatch {
  int side = 0;
  Mat patches;
  std::vector<std::string> tags;

  std::size_t count() const { return patches.rows(); }
  std::size_t dim() const { return patches.cols(); }
};

}  // namespace tsc
