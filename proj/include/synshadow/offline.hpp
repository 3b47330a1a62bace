#pragma once

// Offline matte generation: random scenes from a mesh library, rendered to
// <out>/<idx>.png with a scenes.csv manifest describing each scene.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "compose.hpp"
#include "csv.hpp"
#include "image_io.hpp"
#include "matte.hpp"
#include "parallel.hpp"

namespace synshadow {

struct MeshLibrary {
  std::vector<NamedMesh> meshes;
  std::vector<std::string> failures;  // "<file>: <reason>"
};

/// Loads every .obj in a directory (sorted by name). Files that fail to
/// parse are listed in `failures` rather than aborting the load.
inline MeshLibrary load_mesh_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) detail::fail_validation("mesh directory not found: '" + dir.string() + "'");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".obj") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  MeshLibrary lib;
  for (const auto& f : files) {
    try {
      lib.meshes.push_back({f.stem().string(), load_mesh(f)});
    } catch (const std::exception& e) {
      lib.failures.push_back(f.filename().string() + ": " + e.what());
    }
  }
  return lib;
}

struct RenderedScene {
  SceneConfig scene;
  MatteMap matte;
  std::uint64_t render_seed = 0;
};

/// Scene and matte for item `item`; depends only on (seed, item).
inline RenderedScene render_scene_item(std::span<const NamedMesh> assets, const SceneRanges& ranges,
                                       RenderSettings settings, std::uint64_t seed, std::uint64_t item) {
  RandomStream stream = RandomStream::for_item(seed, "scene", item);
  RenderedScene out;
  out.scene = randomize_scene(assets, ranges, stream);
  out.render_seed = detail::combine(seed, item);
  settings.seed = out.render_seed;
  out.matte = render_matte(out.scene, settings);
  return out;
}

inline const std::vector<std::string>& scene_manifest_header() {
  static const std::vector<std::string> header = {
      "idx", "seed", "render_seed", "mesh_ids", "light_radius", "light_center", "camera", "transforms"};
  return header;
}

inline std::vector<std::string> scene_manifest_row(std::uint64_t item, std::uint64_t seed, const RenderedScene& r) {
  auto vec = [](const Vec3& v) {
    return csv::format_double(v.x) + ";" + csv::format_double(v.y) + ";" + csv::format_double(v.z);
  };
  std::string ids, transforms;
  for (std::size_t i = 0; i < r.scene.occluders.size(); ++i) {
    const auto& o = r.scene.occluders[i];
    const auto& q = o.transform.rotation;
    ids += (i ? "|" : "") + o.mesh_id;
    transforms += (i ? "|" : "") + std::string("scale=") + vec(o.transform.scale) + " rot=" + csv::format_double(q.w) +
                  ";" + csv::format_double(q.x) + ";" + csv::format_double(q.y) + ";" + csv::format_double(q.z) +
                  " t=" + vec(o.transform.translation);
  }
  const auto& cam = r.scene.camera;
  const std::string camera = "pos=" + vec(cam.position) + " fwd=" + vec(cam.forward) + " up=" + vec(cam.up) +
                             " vfov=" + csv::format_double(cam.vfov_deg) + " aspect=" + csv::format_double(cam.aspect);
  return {item_stem(item),
          std::to_string(seed),
          std::to_string(r.render_seed),
          ids,
          csv::format_double(r.scene.light.radius),
          vec(r.scene.light.center),
          camera,
          transforms};
}

struct MatteBatchReport {
  std::size_t written = 0;
  std::vector<ItemFailure> failures;
};

/// Renders `count` mattes into `out_dir`; item i is written as <idx>.png.
/// Every successfully written matte has exactly one scenes.csv row.
inline MatteBatchReport render_matte_batch(std::span<const NamedMesh> assets, const SceneRanges& ranges,
                                           RenderSettings settings, std::uint64_t seed, std::uint64_t count,
                                           const std::filesystem::path& out_dir, unsigned workers) {
  if (assets.empty()) detail::fail_validation("mesh asset library is empty");
  ranges.validate();
  settings.validate();
  settings.workers = 1;  // parallelism is across mattes
  std::filesystem::create_directories(out_dir);
  std::vector<std::vector<std::string>> rows(count);
  std::vector<std::string> errors(count);
  parallel_for(count, workers, [&](std::size_t i) {
    try {
      const RenderedScene r = render_scene_item(assets, ranges, settings, seed, i);
      save_image(r.matte, out_dir / (item_stem(i) + ".png"));
      rows[i] = scene_manifest_row(i, seed, r);
    } catch (const std::exception& e) {
      errors[i] = e.what();
      if (errors[i].empty()) errors[i] = "unknown error";
    }
  });
  MatteBatchReport report;
  std::ofstream manifest(out_dir / "scenes.csv", std::ios::binary);
  if (!manifest) throw IoError("cannot write scenes.csv in '" + out_dir.string() + "'");
  csv::write_row(manifest, scene_manifest_header());
  for (std::size_t i = 0; i < count; ++i) {
    if (!errors[i].empty()) {
      report.failures.push_back({i, errors[i]});
      continue;
    }
    csv::write_row(manifest, rows[i]);
    ++report.written;
  }
  if (!manifest.flush()) throw IoError("failed writing scenes.csv");
  return report;
}

}  // namespace synshadow
