#pragma once

// Online synthesis: blend a shadow-free background with its fully darkened
// version using the matte as alpha, x_s = (1 - m) x_ns + m x_dark.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "csv.hpp"
#include "illum.hpp"
#include "image.hpp"
#include "image_io.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "sampler.hpp"

namespace synshadow {

/// Alpha blend of a shadow-free image and a darkened image of the same size.
inline ImageRGB blend(const ImageRGB& x_ns, const ImageRGB& x_dark, const MatteMap& m) {
  if (!x_ns.same_size(m) || !x_ns.same_size(x_dark))
    detail::fail_validation("image and matte dimensions differ");
  ImageRGB out(x_ns.height(), x_ns.width());
  auto lit = x_ns.values();
  auto dark = x_dark.values();
  auto alpha = m.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    const double a = alpha[i];
    for (std::size_t k = 0; k < 3; ++k) {
      const std::size_t j = 3 * i + k;
      dst[j] = std::clamp((1.0 - a) * lit[j] + a * dark[j], 0.0, 1.0);
    }
  }
  return out;
}

/// Single pass; equal to blend(x_ns, darken(x_ns, p), m).
inline ImageRGB compose_shadow(const ImageRGB& x_ns, const MatteMap& m, const SlopeParams& p) {
  if (!x_ns.same_size(m)) detail::fail_validation("image and matte dimensions differ");
  ImageRGB out(x_ns.height(), x_ns.width());
  const double slope = p.slope();
  const auto& l = p.intercepts();
  const double* lit = x_ns.values().data();
  const double* alpha = m.values().data();
  double* dst = out.values().data();
  const std::size_t n = m.pixels();
  for (std::size_t i = 0; i < n; ++i) {
    const double a = alpha[i];
    for (std::size_t k = 0; k < 3; ++k) {
      const double x = lit[3 * i + k];
      const double d = std::clamp(darken_value(x, l[k], slope), 0.0, 1.0);
      dst[3 * i + k] = std::clamp((1.0 - a) * x + a * d, 0.0, 1.0);
    }
  }
  return out;
}

inline ImageRGB compose_shadow(const ImageRGB& x_ns, const MatteMap& m, const Darkening& d) {
  if (const auto* p = std::get_if<SlopeParams>(&d)) return compose_shadow(x_ns, m, *p);
  if (!x_ns.same_size(m)) detail::fail_validation("image and matte dimensions differ");
  return blend(x_ns, apply_darkening(x_ns, d), m);
}

/// Bilinear resampling with pixel-center alignment; output clamped to [0,1].
inline MatteMap resize_bilinear(const MatteMap& src, std::size_t height, std::size_t width) {
  if (src.height() == height && src.width() == width) return src;
  MatteMap out(height, width);
  const double sy = static_cast<double>(src.height()) / static_cast<double>(height);
  const double sx = static_cast<double>(src.width()) / static_cast<double>(width);
  const auto max_r = static_cast<double>(src.height() - 1);
  const auto max_c = static_cast<double>(src.width() - 1);
  for (std::size_t r = 0; r < height; ++r) {
    const double fy = std::clamp((static_cast<double>(r) + 0.5) * sy - 0.5, 0.0, max_r);
    const auto r0 = static_cast<std::size_t>(fy);
    const std::size_t r1 = std::min(r0 + 1, src.height() - 1);
    const double wy = fy - static_cast<double>(r0);
    for (std::size_t c = 0; c < width; ++c) {
      const double fx = std::clamp((static_cast<double>(c) + 0.5) * sx - 0.5, 0.0, max_c);
      const auto c0 = static_cast<std::size_t>(fx);
      const std::size_t c1 = std::min(c0 + 1, src.width() - 1);
      const double wx = fx - static_cast<double>(c0);
      const double top = (1.0 - wx) * src.at(r0, c0) + wx * src.at(r0, c1);
      const double bottom = (1.0 - wx) * src.at(r1, c0) + wx * src.at(r1, c1);
      out.at(r, c) = std::clamp((1.0 - wy) * top + wy * bottom, 0.0, 1.0);
    }
  }
  return out;
}

struct Provenance {
  std::string background_id;
  std::string matte_id;
  std::uint64_t seed = 0;
  std::uint64_t item = 0;
};

struct Triplet {
  ImageRGB shadow;
  ImageRGB shadow_free;
  MatteMap matte;
  Darkening params;
  Provenance provenance;
};

/// The matte is resized to the background when their sizes differ.
inline Triplet synthesize_triplet(const ImageRGB& background, const MatteMap& matte,
                                  const SamplerConfig& cfg, RandomStream& stream,
                                  Provenance provenance = {}) {
  Triplet t{ImageRGB{}, background, resize_bilinear(matte, background.height(), background.width()),
            sample_darkening(cfg, stream), std::move(provenance)};
  t.shadow = compose_shadow(t.shadow_free, t.matte, t.params);
  return t;
}

// ---------------------------------------------------------------------------
// Batch generation

template <typename Image>
struct Source {
  std::string id;
  std::function<Image()> load;
};

using BackgroundSource = Source<ImageRGB>;
using MatteSource = Source<MatteMap>;

inline BackgroundSource background_file(const std::filesystem::path& path) {
  return {path.filename().string(), [path] { return load_image(path); }};
}

inline MatteSource matte_file(const std::filesystem::path& path) {
  return {path.filename().string(), [path] { return load_matte(path); }};
}

template <typename Image>
Source<Image> in_memory(std::string id, Image img) {
  auto shared = std::make_shared<const Image>(std::move(img));
  return {std::move(id), [shared] { return *shared; }};
}

struct BatchInputs {
  std::vector<BackgroundSource> backgrounds;
  std::vector<MatteSource> mattes;
  // When set, item i uses online_matte(i) instead of drawing from `mattes`.
  std::function<MatteSource(std::uint64_t item)> online_matte;
};

struct PairChoice {
  std::size_t background = 0;
  std::size_t matte = 0;
};

/// Background and matte indices for an item, drawn with replacement.
inline PairChoice choose_pair(std::uint64_t seed, std::uint64_t item, std::size_t backgrounds,
                              std::size_t mattes) {
  RandomStream s = RandomStream::for_item(seed, "pair", item);
  PairChoice c;
  c.background = static_cast<std::size_t>(s.below(backgrounds));
  c.matte = mattes > 0 ? static_cast<std::size_t>(s.below(mattes)) : 0;
  return c;
}

/// Item `item` of the dataset defined by (inputs, cfg); independent of all
/// other items.
inline Triplet synthesize_item(const BatchInputs& inputs, const SamplerConfig& cfg, std::uint64_t item) {
  if (inputs.backgrounds.empty()) detail::fail_validation("no background images");
  if (inputs.mattes.empty() && !inputs.online_matte) detail::fail_validation("no matte images");
  const PairChoice choice = choose_pair(cfg.seed, item, inputs.backgrounds.size(), inputs.mattes.size());
  const BackgroundSource& bg = inputs.backgrounds[choice.background];
  const MatteSource matte_src = inputs.online_matte ? inputs.online_matte(item) : inputs.mattes[choice.matte];
  RandomStream stream = RandomStream::for_item(cfg.seed, "params", item);
  return synthesize_triplet(bg.load(), matte_src.load(), cfg, stream, {bg.id, matte_src.id, cfg.seed, item});
}

inline std::string item_stem(std::uint64_t item) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%06llu", static_cast<unsigned long long>(item));
  return buf;
}

inline const std::vector<std::string>& manifest_header() {
  static const std::vector<std::string> header = {"idx", "background", "matte", "l0",       "l1",
                                                  "l2",  "s1",         "seed",  "strategy", "darkening"};
  return header;
}

/// Manifest row fields in manifest_header() order. Non-affine darkenings
/// leave l0..s1 empty and describe themselves in the last column.
inline std::vector<std::string> manifest_row(const Triplet& t, Strategy strategy) {
  std::vector<std::string> row = {item_stem(t.provenance.item), t.provenance.background_id,
                                  t.provenance.matte_id};
  std::string darkening;
  if (const auto* p = std::get_if<SlopeParams>(&t.params)) {
    for (double v : {p->l0(), p->l1(), p->l2(), p->s1()}) row.push_back(csv::format_double(v));
  } else {
    row.insert(row.end(), 4, "");
    if (const auto* g = std::get_if<GammaDarkening>(&t.params)) {
      darkening = "gamma=" + csv::format_double(g->exponent);
    } else if (const auto* j = std::get_if<ColorJitter>(&t.params)) {
      darkening = "matrix=";
      for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) darkening += (r || c ? ";" : "") + csv::format_double(j->matrix[r][c]);
    }
  }
  row.push_back(std::to_string(t.provenance.seed));
  row.emplace_back(to_string(strategy));
  row.push_back(darkening);
  return row;
}

struct ItemFailure {
  std::uint64_t item = 0;
  std::string message;
};

struct BatchReport {
  std::size_t written = 0;
  std::vector<ItemFailure> failures;
  double seconds = 0.0;
};

struct BatchOptions {
  std::uint64_t count = 0;
  std::filesystem::path out_dir;
  unsigned workers = 1;
};

/// Writes <out>/shadow/<idx>.png, <out>/shadow_free/<idx>.png,
/// <out>/matte/<idx>.png and <out>/manifest.csv. Failed items are reported
/// and skipped; the manifest lists successful items in index order.
inline BatchReport batch_synthesize(const BatchInputs& inputs, const SamplerConfig& cfg,
                                    const BatchOptions& opts) {
  cfg.validate();
  if (inputs.backgrounds.empty()) detail::fail_validation("no background images");
  if (inputs.mattes.empty() && !inputs.online_matte) detail::fail_validation("no matte images");
  namespace fs = std::filesystem;
  for (const char* sub : {"shadow", "shadow_free", "matte"}) fs::create_directories(opts.out_dir / sub);

  const auto start = std::chrono::steady_clock::now();
  std::vector<std::vector<std::string>> rows(opts.count);
  std::vector<std::string> errors(opts.count);
  parallel_for(opts.count, opts.workers, [&](std::size_t i) {
    try {
      const Triplet t = synthesize_item(inputs, cfg, i);
      const std::string stem = item_stem(i) + ".png";
      save_image(t.shadow, opts.out_dir / "shadow" / stem);
      save_image(t.shadow_free, opts.out_dir / "shadow_free" / stem);
      save_image(t.matte, opts.out_dir / "matte" / stem);
      rows[i] = manifest_row(t, cfg.strategy);
    } catch (const std::exception& e) {
      errors[i] = e.what();
      if (errors[i].empty()) errors[i] = "unknown error";
    }
  });

  BatchReport report;
  std::ofstream manifest(opts.out_dir / "manifest.csv", std::ios::binary);
  if (!manifest) throw IoError("cannot write manifest in '" + opts.out_dir.string() + "'");
  csv::write_row(manifest, manifest_header());
  for (std::size_t i = 0; i < opts.count; ++i) {
    if (!errors[i].empty()) {
      report.failures.push_back({i, errors[i]});
      continue;
    }
    csv::write_row(manifest, rows[i]);
    ++report.written;
  }
  if (!manifest.flush()) throw IoError("failed writing manifest");
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

}  // namespace synshadow
