#pragma once

#include <string>
#include <vector>

#include "tsc/linalg.hpp"
#include "tsc/model.hpp"
#include "tsc/patch.hpp"
#include "tsc/rng.hpp"

namespace tsc {

// Reads an 8-bit binary PGM (P5, maxval 255) into an H x W matrix scaled to
// [0, 1].  Anything else — wrong magic, other maxval, truncated payload —
// raises DataError naming the file.
Mat load_grayscale(const std::string& path);

// Writes a [0, 1] image as binary PGM, rounding to 8 bits (values outside
// [0, 1] are clipped).
void save_pgm(const Mat& image01, const std::string& path);

// Samples `count` side x side patches uniformly over all valid positions of
// all images (large images contribute proportionally more).  Patches are
// mean-subtracted; tags record "name r<row> c<col>".  `names` may be empty
// (synthesized as img<i>) but otherwise must parallel `images`.  Images
// smaller than the patch side are skipped; if none remain, DataError.
PatchBatch sample_patches(const std::vector<Mat>& images,
                          const std::vector<std::string>& names, int side,
                          int count, Rng& rng);

// Synthetic line-drawing patches (8x8 only): blank with p = 1/9, a single
// full-length line with p = 2/3 (orientation uniform), or a crossed pair —
// one of each orientation — with p = 2/9.  Line positions are uniform over
// the 8 offsets; lines have intensity 1 on a 0 background and overlaps keep
// the max.  Patches are mean-subtracted afterwards.
PatchBatch gen_synthetic_lines(int count, int side, Rng& rng);

// Model checkpoint files (the text format of serialize_forest/parse_forest).
void save_model(const Forest& forest, const std::string& path);
Forest load_model(const std::string& path);

}  // namespace tsc
