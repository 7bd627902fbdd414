#include "topokit/distance.hpp"

#include <algorithm>
#include <cmath>

namespace topokit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1-D lower envelope: out[q] = min_v (q - v)^2 + f[v]. Infinite sites are
// skipped, all values stay exact integers in double precision.
void envelope_1d(const std::vector<double>& f, std::vector<double>& out, std::vector<int>& v,
                 std::vector<double>& z) {
  const int n = static_cast<int>(f.size());
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    double s = -kInf;
    while (k >= 0) {
      const int p = v[k];
      s = ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) / (2.0 * q - 2.0 * p);
      if (s <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = (k == 0) ? -kInf : s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    std::fill(out.begin(), out.end(), kInf);
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[j + 1] < q) ++j;
    const double d = q - v[j];
    out[q] = d * d + f[v[j]];
  }
}

struct Box {
  int r0, c0, r1, c1;
  int height() const { return r1 - r0 + 1; }
  int width() const { return c1 - c0 + 1; }
};

Box bounding_box(std::span<const Vertex> a, std::span<const Vertex> b) {
  Box box{std::numeric_limits<int>::max(), std::numeric_limits<int>::max(), std::numeric_limits<int>::min(),
          std::numeric_limits<int>::min()};
  auto grow = [&box](std::span<const Vertex> pts) {
    for (const Vertex& p : pts) {
      box.r0 = std::min(box.r0, p.row);
      box.c0 = std::min(box.c0, p.col);
      box.r1 = std::max(box.r1, p.row);
      box.c1 = std::max(box.c1, p.col);
    }
  };
  grow(a);
  grow(b);
  return box;
}

RasterU8 mask_in_box(std::span<const Vertex> sources, const Box& box) {
  RasterU8 mask(box.height(), box.width(), 1, 0);
  for (const Vertex& s : sources) mask(s.row - box.r0, s.col - box.c0) = 1;
  return mask;
}

}  // namespace

Raster<std::int64_t> squared_distance_transform(const RasterU8& sources) {
  const int h = sources.height();
  const int w = sources.width();
  Raster<std::int64_t> result(h, w, 1, kNoSource);
  if (h == 0 || w == 0) return result;

  std::vector<double> grid(static_cast<std::size_t>(h) * w);
  const int n = std::max(h, w);
  std::vector<double> f(n), out(n), z(n + 1);
  std::vector<int> v(n);

  // Columns first.
  f.resize(h);
  out.resize(h);
  for (int c = 0; c < w; ++c) {
    for (int r = 0; r < h; ++r) f[r] = sources(r, c) != 0 ? 0.0 : kInf;
    envelope_1d(f, out, v, z);
    for (int r = 0; r < h; ++r) grid[static_cast<std::size_t>(r) * w + c] = out[r];
  }
  f.resize(w);
  out.resize(w);
  for (int r = 0; r < h; ++r) {
    std::copy_n(grid.begin() + static_cast<std::ptrdiff_t>(r) * w, w, f.begin());
    envelope_1d(f, out, v, z);
    for (int c = 0; c < w; ++c) {
      result(r, c) = out[c] == kInf ? kNoSource : static_cast<std::int64_t>(out[c]);
    }
  }
  return result;
}

std::vector<std::int64_t> nearest_squared_distances(std::span<const Vertex> sources,
                                                    std::span<const Vertex> queries) {
  std::vector<std::int64_t> out(queries.size(), kNoSource);
  if (sources.empty() || queries.empty()) return out;
  const Box box = bounding_box(sources, queries);
  const auto dt = squared_distance_transform(mask_in_box(sources, box));
  for (std::size_t i = 0; i < queries.size(); ++i) out[i] = dt(queries[i].row - box.r0, queries[i].col - box.c0);
  return out;
}

std::vector<std::int64_t> nearest_chessboard_distances(std::span<const Vertex> sources,
                                                       std::span<const Vertex> queries) {
  std::vector<std::int64_t> out(queries.size(), kNoSource);
  if (sources.empty() || queries.empty()) return out;
  const Box box = bounding_box(sources, queries);
  const int h = box.height();
  const int w = box.width();
  // Unit-weight 8-neighbour chamfer is exact for the chessboard metric.
  const std::int64_t big = static_cast<std::int64_t>(h) + w + 1;
  Raster<std::int64_t> d(h, w, 1, big);
  for (const Vertex& s : sources) d(s.row - box.r0, s.col - box.c0) = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      std::int64_t best = d(r, c);
      if (c > 0) best = std::min(best, d(r, c - 1) + 1);
      if (r > 0) {
        best = std::min(best, d(r - 1, c) + 1);
        if (c > 0) best = std::min(best, d(r - 1, c - 1) + 1);
        if (c + 1 < w) best = std::min(best, d(r - 1, c + 1) + 1);
      }
      d(r, c) = best;
    }
  }
  for (int r = h - 1; r >= 0; --r) {
    for (int c = w - 1; c >= 0; --c) {
      std::int64_t best = d(r, c);
      if (c + 1 < w) best = std::min(best, d(r, c + 1) + 1);
      if (r + 1 < h) {
        best = std::min(best, d(r + 1, c) + 1);
        if (c + 1 < w) best = std::min(best, d(r + 1, c + 1) + 1);
        if (c > 0) best = std::min(best, d(r + 1, c - 1) + 1);
      }
      d(r, c) = best;
    }
  }
  for (std::size_t i = 0; i < queries.size(); ++i) out[i] = d(queries[i].row - box.r0, queries[i].col - box.c0);
  return out;
}

}  // namespace topokit
