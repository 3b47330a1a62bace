#pragma once

// Affine shadow illumination model. A lit value relates to its shadowed value
// by x_lit = alpha_k + gamma * x_dark with per-channel intercepts and one
// shared slope. SlopeParams (l0, l1, l2, s1) is the sampling-friendly view:
// l_k are the intercepts and s1 the green value a fully lit white pixel takes
// in shadow, so the darkening slope is s1 / (1 - l1).

#include <array>
#include <cmath>
#include <cstddef>
#include <variant>

#include "image.hpp"

namespace synshadow {

struct AffineParams {
  std::array<double, 3> alpha{};  // per-channel intercepts, [0,1)
  double gamma = 1.0;             // shared slope, > 0
};

class SlopeParams {
 public:
  /// Throws ValidationError unless 0 <= l_k < 1, 0 < s1 <= 1 and slope <= 1.
  static SlopeParams make(double l0, double l1, double l2, double s1) {
    for (double l : {l0, l1, l2})
      if (!(l >= 0.0 && l < 1.0)) detail::fail_validation("intercept l_k outside [0,1)");
    if (!(s1 > 0.0 && s1 <= 1.0)) detail::fail_validation("s1 outside (0,1]");
    if (!(s1 / (1.0 - l1) <= 1.0)) detail::fail_validation("attenuation slope exceeds 1");
    return SlopeParams(l0, l1, l2, s1);
  }

  double l0() const { return l_[0]; }
  double l1() const { return l_[1]; }
  double l2() const { return l_[2]; }
  double l(std::size_t k) const { return l_[k]; }
  const std::array<double, 3>& intercepts() const { return l_; }
  double s1() const { return s1_; }
  double slope() const { return s1_ / (1.0 - l_[1]); }

  friend bool operator==(const SlopeParams&, const SlopeParams&) = default;

 private:
  SlopeParams(double l0, double l1, double l2, double s1) : l_{l0, l1, l2}, s1_(s1) {}

  std::array<double, 3> l_;
  double s1_;
};

inline SlopeParams to_slope_params(const AffineParams& p) {
  if (!(p.gamma > 0.0)) detail::fail_validation("gamma must be positive");
  return SlopeParams::make(p.alpha[0], p.alpha[1], p.alpha[2], (1.0 - p.alpha[1]) / p.gamma);
}

inline AffineParams to_affine_params(const SlopeParams& p) {
  return AffineParams{p.intercepts(), (1.0 - p.l1()) / p.s1()};
}

namespace detail {

template <typename F>
ImageRGB map_channels(const ImageRGB& src, F&& f) {
  ImageRGB out(src.height(), src.width());
  auto in = src.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < in.size(); ++i) dst[i] = std::clamp(f(in[i], i % 3), 0.0, 1.0);
  return out;
}

}  // namespace detail

inline double darken_value(double x, double intercept, double slope) {
  const double shifted = x - intercept;
  return shifted >= 0.0 ? slope * shifted : 0.0;
}

/// Fully shadowed version of a shadow-free image.
inline ImageRGB darken(const ImageRGB& x_ns, const SlopeParams& p) {
  const double slope = p.slope();
  const auto& l = p.intercepts();
  return detail::map_channels(x_ns, [&](double v, std::size_t k) { return darken_value(v, l[k], slope); });
}

/// Inverse of darken off the zero branch: x_ns = l_k + x_dark / slope.
inline ImageRGB relit(const ImageRGB& x_dark, const SlopeParams& p) {
  const double gain = (1.0 - p.l1()) / p.s1();
  const auto& l = p.intercepts();
  return detail::map_channels(x_dark, [&](double v, std::size_t k) { return l[k] + gain * v; });
}

inline constexpr double kGammaMin = 1.5;
inline constexpr double kGammaMax = 3.0;

/// Per-channel power law without the exponent range check.
inline ImageRGB apply_power(const ImageRGB& x, double exponent) {
  return detail::map_channels(x, [&](double v, std::size_t) { return std::pow(v, exponent); });
}

inline ImageRGB darken_gamma(const ImageRGB& x_ns, double y) {
  if (!(y >= kGammaMin && y <= kGammaMax)) detail::fail_validation("gamma exponent outside [1.5, 3.0]");
  return apply_power(x_ns, y);
}

using ColorMatrix = std::array<std::array<double, 3>, 3>;

inline constexpr ColorMatrix kIdentityMatrix = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

/// Nonnegative entries and every row sum in (0,1]: such a matrix never maps a
/// pixel above its brightest channel.
inline bool is_darkening_matrix(const ColorMatrix& m) {
  for (const auto& row : m) {
    double sum = 0.0;
    for (double v : row) {
      if (!(v >= 0.0)) return false;
      sum += v;
    }
    if (!(sum > 0.0 && sum <= 1.0)) return false;
  }
  return true;
}

inline ImageRGB darken_color_jitter(const ImageRGB& x_ns, const ColorMatrix& m, bool dark_only) {
  for (const auto& row : m)
    for (double v : row)
      if (!std::isfinite(v)) detail::fail_validation("color matrix has non-finite entries");
  if (dark_only && !is_darkening_matrix(m))
    detail::fail_validation("color matrix violates the darkening constraint");
  ImageRGB out(x_ns.height(), x_ns.width());
  for (std::size_t i = 0; i < x_ns.pixels(); ++i) {
    auto p = x_ns.pixel(i);
    auto q = out.pixel(i);
    for (std::size_t k = 0; k < 3; ++k)
      q[k] = std::clamp(m[k][0] * p[0] + m[k][1] * p[1] + m[k][2] * p[2], 0.0, 1.0);
  }
  return out;
}

struct GammaDarkening {
  double exponent = 2.0;
  friend bool operator==(const GammaDarkening&, const GammaDarkening&) = default;
};

struct ColorJitter {
  ColorMatrix matrix = kIdentityMatrix;
  bool dark_only = false;
  friend bool operator==(const ColorJitter&, const ColorJitter&) = default;
};

/// Any of the supported ways of producing the fully shadowed image.
using Darkening = std::variant<SlopeParams, GammaDarkening, ColorJitter>;

inline ImageRGB apply_darkening(const ImageRGB& x_ns, const Darkening& d) {
  struct Visitor {
    const ImageRGB& x;
    ImageRGB operator()(const SlopeParams& p) const { return darken(x, p); }
    ImageRGB operator()(const GammaDarkening& g) const { return darken_gamma(x, g.exponent); }
    ImageRGB operator()(const ColorJitter& c) const { return darken_color_jitter(x, c.matrix, c.dark_only); }
  };
  return std::visit(Visitor{x_ns}, d);
}

}  // namespace synshadow
