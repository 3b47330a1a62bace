#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace synshadow {

// Row-major H x W x C grid. The tag keeps RGB, LAB and matte grids apart at
// the type level even though they share storage.
template <typename T, std::size_t C, typename Tag>
class Raster {
 public:
  using value_type = T;
  static constexpr std::size_t kChannels = C;

  Raster() = default;

  Raster(std::size_t height, std::size_t width, T fill = T{})
      : height_(height), width_(width), data_(height * width * C, fill) {
    detail::require(height >= 1 && width >= 1, "raster dimensions must be positive");
  }

  Raster(std::size_t height, std::size_t width, std::vector<T> data)
      : height_(height), width_(width), data_(std::move(data)) {
    detail::require(height >= 1 && width >= 1, "raster dimensions must be positive");
    detail::require(data_.size() == height * width * C, "raster data length mismatch");
  }

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t pixels() const { return height_ * width_; }
  bool empty() const { return data_.empty(); }

  T& at(std::size_t row, std::size_t col, std::size_t ch = 0) {
    return data_[(row * width_ + col) * C + ch];
  }
  const T& at(std::size_t row, std::size_t col, std::size_t ch = 0) const {
    return data_[(row * width_ + col) * C + ch];
  }

  std::span<T> pixel(std::size_t index) { return {data_.data() + index * C, C}; }
  std::span<const T> pixel(std::size_t index) const { return {data_.data() + index * C, C}; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  template <typename Other>
  bool same_size(const Other& other) const {
    return height_ == other.height() && width_ == other.width();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<T> data_;
};

struct RgbTag {};
struct LabTag {};
struct MatteTag {};
struct MaskTag {};

/// sRGB-encoded intensities normalized to [0,1].
using ImageRGB = Raster<double, 3, RgbTag>;
/// Continuous shadow matte: 1 umbra, (0,1) penumbra, 0 lit.
using MatteMap = Raster<double, 1, MatteTag>;
/// true = shadow. Stored as bytes so the storage is addressable.
using BinaryMask = Raster<unsigned char, 1, MaskTag>;
/// CIELAB (D65), L in [0,100].
using LabImage = Raster<double, 3, LabTag>;

inline constexpr double kDefaultBinarizeThreshold = 0.5;

template <typename R>
bool in_unit_range(const R& r) {
  return std::all_of(r.values().begin(), r.values().end(),
                     [](double v) { return v >= 0.0 && v <= 1.0; });
}

template <typename R>
void clamp_unit(R& r) {
  for (double& v : r.values()) v = std::clamp(v, 0.0, 1.0);
}

inline BinaryMask binarize_matte(const MatteMap& matte,
                                 double threshold = kDefaultBinarizeThreshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0))
    detail::fail_validation("binarize threshold must lie in [0,1]");
  BinaryMask mask(matte.height(), matte.width());
  auto src = matte.values();
  auto dst = mask.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] >= threshold ? 1 : 0;
  return mask;
}

inline std::size_t count_true(const BinaryMask& mask) {
  return static_cast<std::size_t>(
      std::count_if(mask.values().begin(), mask.values().end(), [](unsigned char v) { return v != 0; }));
}

namespace color {

inline double srgb_decode(double v) {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

// sRGB primaries to XYZ. The D65 reference white is the image of RGB white
// under the same matrix so neutral grays land exactly on a = b = 0.
inline constexpr double kRgbToXyz[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                                           {0.2126729, 0.7151522, 0.0721750},
                                           {0.0193339, 0.1191920, 0.9503041}};
inline constexpr double kWhiteX = kRgbToXyz[0][0] + kRgbToXyz[0][1] + kRgbToXyz[0][2];
inline constexpr double kWhiteY = kRgbToXyz[1][0] + kRgbToXyz[1][1] + kRgbToXyz[1][2];
inline constexpr double kWhiteZ = kRgbToXyz[2][0] + kRgbToXyz[2][1] + kRgbToXyz[2][2];

inline double lab_f(double t) {
  constexpr double delta = 6.0 / 29.0;
  return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

inline std::array<double, 3> srgb_to_lab(double r, double g, double b) {
  const double lr = srgb_decode(r);
  const double lg = srgb_decode(g);
  const double lb = srgb_decode(b);
  const auto& m = kRgbToXyz;
  const double x = m[0][0] * lr + m[0][1] * lg + m[0][2] * lb;
  const double y = m[1][0] * lr + m[1][1] * lg + m[1][2] * lb;
  const double z = m[2][0] * lr + m[2][1] * lg + m[2][2] * lb;
  const double fx = lab_f(x / kWhiteX);
  const double fy = lab_f(y / kWhiteY);
  const double fz = lab_f(z / kWhiteZ);
  return {std::max(0.0, 116.0 * fy - 16.0), 500.0 * (fx - fy), 200.0 * (fy - fz)};
}

}  // namespace color

inline LabImage rgb_to_lab(const ImageRGB& img) {
  LabImage lab(img.height(), img.width());
  for (std::size_t i = 0; i < img.pixels(); ++i) {
    auto p = img.pixel(i);
    auto q = lab.pixel(i);
    const auto v = color::srgb_to_lab(p[0], p[1], p[2]);
    q[0] = v[0];
    q[1] = v[1];
    q[2] = v[2];
  }
  return lab;
}

}  // namespace synshadow
