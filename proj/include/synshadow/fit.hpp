#pragma once

// Recovering attenuation parameters from a shadow / shadow-free pair by
// regressing shadowed values on lit values inside the umbra, channel by
// channel, and the slope-scaling augmentation baseline.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "illum.hpp"
#include "image.hpp"
#include "random.hpp"

namespace synshadow {

struct ChannelFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
};

struct FitResult {
  SlopeParams params = SlopeParams::make(0.0, 0.0, 0.0, 1.0);
  std::array<ChannelFit, 3> per_channel{};
  std::size_t n_pixels = 0;
};

/// Fit rejected; carries the per-channel regressions when they were computed.
class FitError : public ValidationError {
 public:
  explicit FitError(const std::string& what, std::optional<std::array<ChannelFit, 3>> per_channel = {})
      : ValidationError(what), per_channel_(per_channel) {}
  const std::optional<std::array<ChannelFit, 3>>& per_channel() const { return per_channel_; }

 private:
  std::optional<std::array<ChannelFit, 3>> per_channel_;
};

enum class SlopeSource { green, mean };
enum class Estimator { ols, theil_sen };

struct FitOptions {
  SlopeSource slope_source = SlopeSource::green;
  Estimator estimator = Estimator::ols;
  std::size_t min_pixels = 100;
  double min_variance = 1e-6;
  // Pixels whose shadowed value is exactly 0 sit on the clamped branch of
  // the darkening and carry no slope information.
  bool skip_zero_shadow = true;
  // Iteratively exclude pixels whose shadow-free value lies below the fitted
  // intercept; noise lifts some clamped pixels above zero.
  bool trim_clamped = true;
};

/// Threshold for turning a synthetic matte into an umbra-only fitting mask.
inline constexpr double kUmbraThreshold = 0.95;

namespace detail {

inline ChannelFit ordinary_least_squares(const std::vector<double>& xs, const std::vector<double>& ys,
                                         double min_variance) {
  const auto n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx / n < min_variance) throw FitError("degenerate regression: shadow-free values have no spread");
  ChannelFit f;
  f.n = xs.size();
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double ss_res = std::max(0.0, syy - f.slope * sxy);
  f.r2 = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return f;
}

inline double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

// Median of pairwise slopes; large inputs use a fixed pseudo-random subset of pairs.
inline ChannelFit theil_sen(const std::vector<double>& xs, const std::vector<double>& ys, double min_variance) {
  ChannelFit f = ordinary_least_squares(xs, ys, min_variance);  // variance check and r² reference
  constexpr std::size_t kMaxPairs = 200000;
  const std::size_t n = xs.size();
  std::vector<double> slopes;
  auto add = [&](std::size_t i, std::size_t j) {
    const double dx = xs[j] - xs[i];
    if (std::abs(dx) > 1e-12) slopes.push_back((ys[j] - ys[i]) / dx);
  };
  if (n * (n - 1) / 2 <= kMaxPairs) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) add(i, j);
  } else {
    RandomStream s(0x7e115e4ULL);
    for (std::size_t k = 0; k < kMaxPairs; ++k) add(s.below(n), s.below(n));
  }
  if (slopes.empty()) throw FitError("degenerate regression: no distinct pairs");
  f.slope = median(std::move(slopes));
  std::vector<double> offsets(n);
  for (std::size_t i = 0; i < n; ++i) offsets[i] = ys[i] - f.slope * xs[i];
  f.intercept = median(std::move(offsets));
  double my = 0.0;
  for (double y : ys) my += y;
  my /= static_cast<double>(n);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = ys[i] - (f.slope * xs[i] + f.intercept);
    ss_res += e * e;
    ss_tot += (ys[i] - my) * (ys[i] - my);
  }
  f.r2 = ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
  return f;
}

}  // namespace detail

/// Regresses x_s on x_ns per channel over the mask, then converts the lines
/// into (l0, l1, l2, s1): l_k is each line's x-intercept and the shared slope
/// comes from the green line (or the mean of the three).
inline FitResult estimate_params(const ImageRGB& x_s, const ImageRGB& x_ns, const BinaryMask& mask,
                                 const FitOptions& opts = {}) {
  if (!x_s.same_size(x_ns) || !x_s.same_size(mask)) detail::fail_validation("fit inputs differ in size");
  const std::size_t masked = count_true(mask);
  if (masked < opts.min_pixels)
    throw FitError("too few masked pixels (" + std::to_string(masked) + " < " + std::to_string(opts.min_pixels) + ")");

  FitResult result;
  result.n_pixels = masked;
  for (std::size_t k = 0; k < 3; ++k) {
    std::vector<double> xs, ys;
    xs.reserve(masked);
    ys.reserve(masked);
    for (std::size_t i = 0; i < mask.pixels(); ++i) {
      if (!mask.values()[i]) continue;
      const double y = x_s.pixel(i)[k];
      if (opts.skip_zero_shadow && y <= 0.0) continue;
      xs.push_back(x_ns.pixel(i)[k]);
      ys.push_back(y);
    }
    auto regress = [&](const std::vector<double>& a, const std::vector<double>& b) {
      if (a.size() < std::max<std::size_t>(opts.min_pixels, 2))
        throw FitError("too few usable pixels in channel " + std::to_string(k));
      return opts.estimator == Estimator::ols ? detail::ordinary_least_squares(a, b, opts.min_variance)
                                              : detail::theil_sen(a, b, opts.min_variance);
    };
    ChannelFit fit = regress(xs, ys);
    // Drop pixels left of the current x-intercept (the clamped branch) and refit.
    for (int round = 0; opts.trim_clamped && round < 20 && fit.slope > 0.0; ++round) {
      const double cut = -fit.intercept / fit.slope;
      std::vector<double> kx, ky;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] <= cut) continue;
        kx.push_back(xs[i]);
        ky.push_back(ys[i]);
      }
      if (kx.size() == xs.size()) break;
      fit = regress(kx, ky);
      xs = std::move(kx);
      ys = std::move(ky);
    }
    result.per_channel[k] = fit;
  }

  const auto& pc = result.per_channel;
  const double slope = opts.slope_source == SlopeSource::green
                           ? pc[1].slope
                           : (pc[0].slope + pc[1].slope + pc[2].slope) / 3.0;
  if (!(slope > 0.0 && slope <= 1.0 + 1e-12))
    throw FitError("recovered slope " + std::to_string(slope) + " outside (0,1]", pc);
  bool flat_intercepts = true;
  for (const auto& c : pc) flat_intercepts = flat_intercepts && std::abs(c.intercept) <= 1e-9;
  if (std::abs(slope - 1.0) <= 1e-9 && flat_intercepts)
    throw FitError("no attenuation: shadow equals shadow-free inside the mask", pc);

  std::array<double, 3> l{};
  for (std::size_t k = 0; k < 3; ++k) {
    if (!(pc[k].slope > 0.0)) throw FitError("non-positive slope in channel " + std::to_string(k), pc);
    l[k] = std::clamp(-pc[k].intercept / pc[k].slope, 0.0, std::nextafter(1.0, 0.0));
  }
  const double s1 = std::min(1.0, std::min(slope, 1.0) * (1.0 - l[1]));
  result.params = SlopeParams::make(l[0], l[1], l[2], s1);
  return result;
}

inline constexpr double kAugmentScaleMin = 0.8;
inline constexpr double kAugmentScaleMax = 1.2;

/// Scales the attenuation slope by `scale` through s1, keeping intercepts.
inline SlopeParams augment_slope(const SlopeParams& p, double scale) {
  if (!(scale >= kAugmentScaleMin && scale <= kAugmentScaleMax))
    detail::fail_validation("augmentation scale outside [0.8, 1.2]");
  const double s1 = scale * p.s1();
  if (s1 / (1.0 - p.l1()) > 1.0) detail::fail_validation("augmented slope exceeds 1");
  return SlopeParams::make(p.l0(), p.l1(), p.l2(), s1);
}

}  // namespace synshadow
