#include "tsc/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tsc/errors.hpp"

namespace tsc {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw DataError(path + ": " + what);
}

// PGM header tokens are separated by whitespace; '#' starts a comment that
// runs to end of line.
std::string next_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

long parse_positive(const std::string& tok) {
  if (tok.empty()) return -1;
  for (char ch : tok)
    if (!std::isdigit(static_cast<unsigned char>(ch))) return -1;
  return std::strtol(tok.c_str(), nullptr, 10);
}

}  // namespace

Mat load_grayscale(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");

  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || magic[1] != '5')
    fail(path, "not a binary PGM (P5) file");

  const long w = parse_positive(next_token(in));
  const long h = parse_positive(next_token(in));
  const long maxval = parse_positive(next_token(in));
  if (w < 1 || h < 1) fail(path, "bad image dimensions");
  if (maxval != 255)
    fail(path, "unsupported maxval " + std::to_string(maxval) +
                   " (only 8-bit, maxval 255)");
  // next_token consumed exactly one whitespace byte after the maxval, so the
  // stream now sits on the first payload byte.

  std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size())
    fail(path, "truncated pixel payload");

  Mat img(static_cast<std::size_t>(h), static_cast<std::size_t>(w));
  for (std::size_t i = 0; i < bytes.size(); ++i)
    img.data()[i] = bytes[i] / 255.0;
  return img;
}

void save_pgm(const Mat& image01, const std::string& path) {
  if (image01.rows() == 0 || image01.cols() == 0)
    throw std::invalid_argument("save_pgm: empty image");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << "P5\n" << image01.cols() << ' ' << image01.rows() << "\n255\n";
  std::vector<unsigned char> bytes(image01.size());
  for (std::size_t i = 0; i < image01.size(); ++i) {
    double v = std::min(1.0, std::max(0.0, image01.data()[i]));
    bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(path, "write failed");
}

namespace {
void mean_subtract_row(double* row, std::size_t n) {
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += row[i];
  mean /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) row[i] -= mean;
}
}  // namespace

PatchBatch sample_patches(const std::vector<Mat>& images,
                          const std::vector<std::string>& names, int side,
                          int count, Rng& rng) {
  if (side < 1) throw std::invalid_argument("sample_patches: side >= 1");
  if (count < 1) throw std::invalid_argument("sample_patches: count >= 1");
  if (!names.empty() && names.size() != images.size())
    throw std::invalid_argument("sample_patches: names/images mismatch");

  // Every valid top-left corner across all images is equally likely.
  struct Source {
    std::size_t image;
    std::size_t rows_avail, cols_avail;
    std::uint64_t cum;  // cumulative corner count up to and including this
  };
  std::vector<Source> sources;
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].rows() < static_cast<std::size_t>(side) ||
        images[i].cols() < static_cast<std::size_t>(side))
      continue;
    const std::size_t ra = images[i].rows() - side + 1;
    const std::size_t ca = images[i].cols() - side + 1;
    total += static_cast<std::uint64_t>(ra) * ca;
    sources.push_back({i, ra, ca, total});
  }
  if (sources.empty())
    throw DataError("sample_patches: no image is at least " +
                    std::to_string(side) + "x" + std::to_string(side));

  const std::size_t m = static_cast<std::size_t>(side) * side;
  PatchBatch batch;
  batch.side = side;
  batch.patches = Mat(static_cast<std::size_t>(count), m);
  batch.tags.reserve(count);

  for (int p = 0; p < count; ++p) {
    const std::uint64_t pick = rng.uniform_int(total);
    const Source* src = &sources.back();
    for (const Source& s : sources)
      if (pick < s.cum) {
        src = &s;
        break;
      }
    const std::uint64_t prev = src->cum - static_cast<std::uint64_t>(src->rows_avail) * src->cols_avail;
    const std::uint64_t local = pick - prev;
    const std::size_t r0 = static_cast<std::size_t>(local / src->cols_avail);
    const std::size_t c0 = static_cast<std::size_t>(local % src->cols_avail);

    const Mat& img = images[src->image];
    double* row = batch.patches.row(p);
    for (int rr = 0; rr < side; ++rr)
      for (int cc = 0; cc < side; ++cc)
        row[rr * side + cc] = img(r0 + rr, c0 + cc);
    mean_subtract_row(row, m);

    std::string name = names.empty() ? "img" + std::to_string(src->image)
                                     : names[src->image];
    batch.tags.push_back(name + " r" + std::to_string(r0) + " c" +
                         std::to_string(c0));
  }
  return batch;
}

PatchBatch gen_synthetic_lines(int count, int side, Rng& rng) {
  if (side != 8)
    throw std::invalid_argument(
        "gen_synthetic_lines: the line protocol is defined for side 8");
  if (count < 1) throw std::invalid_argument("gen_synthetic_lines: count >= 1");

  const std::size_t m = static_cast<std::size_t>(side) * side;
  PatchBatch batch;
  batch.side = side;
  batch.patches = Mat(static_cast<std::size_t>(count), m);
  batch.tags.reserve(count);

  auto draw_v = [&](double* row, int c) {
    for (int r = 0; r < side; ++r) row[r * side + c] = 1.0;
  };
  auto draw_h = [&](double* row, int r) {
    for (int c = 0; c < side; ++c) row[r * side + c] = 1.0;
  };

  for (int p = 0; p < count; ++p) {
    double* row = batch.patches.row(p);
    std::fill(row, row + m, 0.0);
    const double u = rng.u01();
    std::string tag;
    if (u < 1.0 / 9.0) {
      tag = "blank";
    } else if (u < 1.0 / 9.0 + 2.0 / 3.0) {
      const bool vertical = rng.uniform_int(2) == 0;
      const int pos = static_cast<int>(rng.uniform_int(8));
      if (vertical) {
        draw_v(row, pos);
        tag = "v" + std::to_string(pos);
      } else {
        draw_h(row, pos);
        tag = "h" + std::to_string(pos);
      }
    } else {
      // one line of each orientation; overlap keeps the max (both are 1.0)
      const int cpos = static_cast<int>(rng.uniform_int(8));
      const int rpos = static_cast<int>(rng.uniform_int(8));
      draw_v(row, cpos);
      draw_h(row, rpos);
      tag = "v" + std::to_string(cpos) + "h" + std::to_string(rpos);
    }
    mean_subtract_row(row, m);
    batch.tags.push_back(std::move(tag));
  }
  return batch;
}

void save_model(const Forest& forest, const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: no newline translation
  if (!out) fail(path, "cannot open for writing");
  serialize_forest(forest, out);
  if (!out) fail(path, "write failed");
}

Forest load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  try {
    return parse_forest(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace tsc
