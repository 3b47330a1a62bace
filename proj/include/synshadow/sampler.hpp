#pragma once

// Randomized attenuation parameters. The proposed scheme draws
// l1 ~ U, s1 ~ U, dl0 ~ N, dl2 ~ N independently and sets l0 = l1 + dl0,
// l2 = l1 + dl2. Any tuple whose slope s1 / (1 - l1) exceeds one is thrown
// away as a whole and redrawn.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "illum.hpp"
#include "random.hpp"

namespace synshadow {

enum class Strategy {
  proposed,
  independent,
  zero_intercepts,
  similar_intercepts,
  non_biased,
  color_jitter,
  color_jitter_dark,
  gamma_correction,
};

inline constexpr std::array<std::pair<Strategy, std::string_view>, 8> kStrategyNames = {{
    {Strategy::proposed, "proposed"},
    {Strategy::independent, "independent"},
    {Strategy::zero_intercepts, "zero_intercepts"},
    {Strategy::similar_intercepts, "similar_intercepts"},
    {Strategy::non_biased, "non_biased"},
    {Strategy::color_jitter, "color_jitter"},
    {Strategy::color_jitter_dark, "color_jitter_dark"},
    {Strategy::gamma_correction, "gamma_correction"},
}};

inline std::string_view to_string(Strategy s) {
  for (const auto& [value, name] : kStrategyNames)
    if (value == s) return name;
  return "unknown";
}

inline Strategy parse_strategy(std::string_view name) {
  for (const auto& [value, n] : kStrategyNames)
    if (n == name) return value;
  detail::fail_validation("unknown strategy '" + std::string(name) + "'");
}

/// Strategies that draw (l0, l1, l2, s1) for the affine model.
inline bool uses_affine_model(Strategy s) {
  return s != Strategy::color_jitter && s != Strategy::color_jitter_dark &&
         s != Strategy::gamma_correction;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

struct Gaussian {
  double mean = 0.0;
  double stddev = 1.0;
};

struct SamplerConfig {
  Strategy strategy = Strategy::proposed;
  Range l1_range{0.0, 0.25};
  Range s1_range{0.1, 0.9};
  Gaussian dl0{0.05, 0.025};
  Gaussian dl2{-0.05, 0.025};
  int max_resamples = 100;
  std::uint64_t seed = 0;

  // Non-affine ablations.
  Range gamma_range{kGammaMin, kGammaMax};
  Range jitter_diagonal{0.3, 1.1};
  Range jitter_off_diagonal{-0.1, 0.1};
  Range jitter_dark_diagonal{0.3, 0.9};
  Range jitter_dark_off_diagonal{0.0, 0.05};

  void validate() const {
    auto ordered = [](const Range& r, const char* what) {
      if (!(r.lo < r.hi)) detail::fail_validation(std::string(what) + " range must satisfy lo < hi");
    };
    ordered(l1_range, "l1");
    ordered(s1_range, "s1");
    ordered(gamma_range, "gamma");
    ordered(jitter_diagonal, "jitter diagonal");
    ordered(jitter_off_diagonal, "jitter off-diagonal");
    ordered(jitter_dark_diagonal, "dark jitter diagonal");
    ordered(jitter_dark_off_diagonal, "dark jitter off-diagonal");
    if (!(l1_range.lo >= 0.0 && l1_range.hi < 1.0)) detail::fail_validation("l1 range must lie in [0,1)");
    if (!(s1_range.lo > 0.0 && s1_range.hi <= 1.0)) detail::fail_validation("s1 range must lie in (0,1]");
    if (!(dl0.stddev > 0.0 && dl2.stddev > 0.0)) detail::fail_validation("intercept offset std must be > 0");
    if (max_resamples < 1) detail::fail_validation("max_resamples must be >= 1");
    if (!(gamma_range.lo >= kGammaMin && gamma_range.hi <= kGammaMax))
      detail::fail_validation("gamma range must lie within [1.5, 3.0]");
    if (jitter_dark_off_diagonal.lo < 0.0 || jitter_dark_diagonal.lo <= 0.0)
      detail::fail_validation("dark jitter ranges must be nonnegative");
  }
};

/// One accepted draw with the raw (pre-clamp) offsets kept for diagnostics.
struct ParamDraw {
  double l1 = 0.0;
  double s1 = 0.0;
  double dl0 = 0.0;
  double dl2 = 0.0;
  int attempts = 0;
  SlopeParams params = SlopeParams::make(0.0, 0.0, 0.0, 1.0);
};

namespace detail {

inline double clamp_intercept(double l) {
  return std::clamp(l, 0.0, std::nextafter(1.0, 0.0));
}

}  // namespace detail

inline ParamDraw sample_draw(const SamplerConfig& cfg, RandomStream& stream) {
  if (!uses_affine_model(cfg.strategy))
    detail::fail_validation("strategy '" + std::string(to_string(cfg.strategy)) +
                            "' does not use intercept parameters");
  for (int attempt = 1; attempt <= cfg.max_resamples; ++attempt) {
    ParamDraw d;
    d.attempts = attempt;
    double l0 = 0.0;
    double l2 = 0.0;
    switch (cfg.strategy) {
      case Strategy::independent:
        l0 = stream.uniform(cfg.l1_range.lo, cfg.l1_range.hi);
        d.l1 = stream.uniform(cfg.l1_range.lo, cfg.l1_range.hi);
        l2 = stream.uniform(cfg.l1_range.lo, cfg.l1_range.hi);
        d.s1 = stream.uniform(cfg.s1_range.lo, cfg.s1_range.hi);
        d.dl0 = l0 - d.l1;
        d.dl2 = l2 - d.l1;
        break;
      case Strategy::similar_intercepts:
        d.l1 = stream.uniform(cfg.l1_range.lo, cfg.l1_range.hi);
        d.s1 = stream.uniform(cfg.s1_range.lo, cfg.s1_range.hi);
        l0 = l2 = d.l1;
        break;
      default: {
        d.l1 = cfg.strategy == Strategy::zero_intercepts
                   ? 0.0
                   : stream.uniform(cfg.l1_range.lo, cfg.l1_range.hi);
        d.s1 = stream.uniform(cfg.s1_range.lo, cfg.s1_range.hi);
        const bool centered = cfg.strategy == Strategy::non_biased;
        d.dl0 = stream.normal(centered ? 0.0 : cfg.dl0.mean, cfg.dl0.stddev);
        d.dl2 = stream.normal(centered ? 0.0 : cfg.dl2.mean, cfg.dl2.stddev);
        l0 = d.l1 + d.dl0;
        l2 = d.l1 + d.dl2;
        break;
      }
    }
    l0 = detail::clamp_intercept(l0);
    l2 = detail::clamp_intercept(l2);
    if (d.s1 / (1.0 - d.l1) > 1.0) continue;
    d.params = SlopeParams::make(l0, d.l1, l2, d.s1);
    return d;
  }
  throw RuntimeError("parameter sampling exceeded max_resamples; check sampler ranges");
}

inline SlopeParams sample_params(const SamplerConfig& cfg, RandomStream& stream) {
  return sample_draw(cfg, stream).params;
}

inline ColorMatrix sample_color_matrix(const SamplerConfig& cfg, bool dark_only, RandomStream& stream) {
  const Range diag = dark_only ? cfg.jitter_dark_diagonal : cfg.jitter_diagonal;
  const Range off = dark_only ? cfg.jitter_dark_off_diagonal : cfg.jitter_off_diagonal;
  ColorMatrix m{};
  for (std::size_t r = 0; r < 3; ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
      m[r][c] = r == c ? stream.uniform(diag.lo, diag.hi) : stream.uniform(off.lo, off.hi);
      sum += m[r][c];
    }
    // The slack keeps the rescaled row sum at or below 1 after rounding.
    if (dark_only && sum > 1.0)
      for (double& v : m[r]) v /= sum * (1.0 + 1e-12);
  }
  return m;
}

/// Draws the darkening for any strategy.
inline Darkening sample_darkening(const SamplerConfig& cfg, RandomStream& stream) {
  switch (cfg.strategy) {
    case Strategy::gamma_correction:
      return GammaDarkening{stream.uniform(cfg.gamma_range.lo, cfg.gamma_range.hi)};
    case Strategy::color_jitter:
      return ColorJitter{sample_color_matrix(cfg, false, stream), false};
    case Strategy::color_jitter_dark:
      return ColorJitter{sample_color_matrix(cfg, true, stream), true};
    default:
      return sample_params(cfg, stream);
  }
}

}  // namespace synshadow
