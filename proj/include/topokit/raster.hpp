#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <fmt/core.h>

namespace topokit {

/// Row-major, channel-interleaved H x W x C grid.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int height, int width, int channels = 1, T fill = T{})
      : height_(height), width_(width), channels_(channels) {
    if (height < 0 || width < 0 || channels < 1) {
      throw std::invalid_argument(fmt::format("bad raster shape {}x{}x{}", height, width, channels));
    }
    data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }

  bool contains(int row, int col) const { return row >= 0 && col >= 0 && row < height_ && col < width_; }

  T& operator()(int row, int col, int ch = 0) { return data_[index(row, col, ch)]; }
  const T& operator()(int row, int col, int ch = 0) const { return data_[index(row, col, ch)]; }

  T& at(int row, int col, int ch = 0) {
    check(row, col, ch);
    return data_[index(row, col, ch)];
  }
  const T& at(int row, int col, int ch = 0) const {
    check(row, col, ch);
    return data_[index(row, col, ch)];
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_shape(const Raster& o) const {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }
  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t index(int row, int col, int ch) const {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_ + ch;
  }
  void check(int row, int col, int ch) const {
    if (!contains(row, col) || ch < 0 || ch >= channels_) {
      throw std::out_of_range(fmt::format("raster access ({},{},{}) outside {}x{}x{}", row, col, ch, height_,
                                          width_, channels_));
    }
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

using RasterU8 = Raster<std::uint8_t>;
using RasterU16 = Raster<std::uint16_t>;
using RasterF32 = Raster<float>;

struct Size2 {
  int height = 0;
  int width = 0;
  friend bool operator==(const Size2&, const Size2&) = default;
};

}  // namespace topokit
