#pragma once

// Software soft-shadow matte renderer. A pinhole camera looks at the ground
// plane z = 0; occluders sit outside the camera view between the plane and a
// spherical light. Each matte pixel is the fraction of the light that the
// occluders hide from the plane point seen through that pixel.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "geometry.hpp"
#include "image.hpp"
#include "mesh.hpp"
#include "parallel.hpp"
#include "random.hpp"

namespace synshadow {

struct Camera {
  Vec3 position{0.0, 0.0, 2.0};
  Vec3 forward{0.0, 0.0, -1.0};
  Vec3 up{0.0, 1.0, 0.0};
  double vfov_deg = 50.0;
  double aspect = 1.0;  // width / height of the image plane

  /// Ray through normalized image coordinates (u, v) in [0,1]², v = 0 at the top.
  Ray ray(double u, double v) const {
    const Vec3 f = normalized(forward);
    const Vec3 right = normalized(cross(f, up));
    const Vec3 true_up = cross(right, f);
    const double half_h = std::tan(vfov_deg * std::numbers::pi / 360.0);
    const double half_w = half_h * aspect;
    const Vec3 dir = f + right * ((2.0 * u - 1.0) * half_w) + true_up * ((1.0 - 2.0 * v) * half_h);
    return {position, dir};
  }

  /// Corner rays in order top-left, top-right, bottom-right, bottom-left.
  std::array<Ray, 4> corner_rays() const { return {ray(0, 0), ray(1, 0), ray(1, 1), ray(0, 1)}; }
};

struct SphereLight {
  Vec3 center{0.0, 0.0, 5.0};
  double radius = 0.0;  // 0 = point light
};

struct Occluder {
  std::string mesh_id;
  TriangleMesh mesh;  // object space
  Transform transform;
};

struct SceneConfig {
  Camera camera;
  SphereLight light;
  std::vector<Occluder> occluders;

  void validate() const {
    if (!(light.center.z > 0.0)) detail::fail_validation("light must be above the ground plane");
    if (!(light.radius >= 0.0)) detail::fail_validation("light radius must be nonnegative");
    if (occluders.empty()) detail::fail_validation("scene needs at least one occluder");
    if (!(camera.vfov_deg > 0.0 && camera.vfov_deg < 180.0 && camera.aspect > 0.0))
      detail::fail_validation("invalid camera field of view");
    for (const auto& o : occluders) {
      o.mesh.validate();
      o.transform.validate();
    }
  }
};

struct RenderSettings {
  int width = 512;
  int height = 512;
  int light_samples = 64;
  std::uint64_t seed = 0;
  unsigned workers = 1;

  void validate() const {
    if (width < 1 || height < 1) detail::fail_validation("render size must be positive");
    if (light_samples < 1) detail::fail_validation("light_samples must be >= 1");
  }
};

/// Intersection of a ray with the ground plane z = 0, if in front of the origin.
inline std::optional<Vec3> intersect_ground(const Ray& ray) {
  if (!(ray.direction.z < 0.0) || !(ray.origin.z > 0.0)) return std::nullopt;
  const double t = -ray.origin.z / ray.direction.z;
  return ray.origin + ray.direction * t;
}

// Bounding volume hierarchy answering "is this segment blocked".
class OcclusionBvh {
 public:
  OcclusionBvh() = default;

  explicit OcclusionBvh(std::vector<Triangle> triangles) : tris_(std::move(triangles)) {
    if (tris_.empty()) return;
    std::vector<std::uint32_t> order(tris_.size());
    for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    nodes_.reserve(2 * tris_.size());
    nodes_.resize(1);
    build(order, 0, order.size(), 0);
    std::vector<Triangle> sorted;
    sorted.reserve(tris_.size());
    for (auto i : order) sorted.push_back(tris_[i]);
    tris_ = std::move(sorted);
  }

  static OcclusionBvh from_scene(const SceneConfig& scene) {
    std::vector<Triangle> tris;
    for (const auto& occ : scene.occluders) {
      const TriangleMesh world = occ.mesh.transformed(occ.transform);
      for (std::size_t i = 0; i < world.triangles.size(); ++i) tris.push_back(world.triangle(i));
    }
    return OcclusionBvh(std::move(tris));
  }

  bool empty() const { return tris_.empty(); }
  std::size_t triangle_count() const { return tris_.size(); }

  /// True if any triangle is hit with t in (t_min, t_max).
  bool occluded(const Ray& ray, double t_min, double t_max) const {
    if (nodes_.empty()) return false;
    const Vec3 inv{1.0 / ray.direction.x, 1.0 / ray.direction.y, 1.0 / ray.direction.z};
    std::array<std::uint32_t, 64> stack;
    std::size_t top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (!slab_hit(node, ray.origin, inv, t_min, t_max)) continue;
      if (node.count > 0) {
        for (std::uint32_t i = node.first; i < node.first + node.count; ++i)
          if (ray_triangle_intersect(ray, tris_[i], t_min, t_max)) return true;
      } else {
        stack[top++] = node.first;
        stack[top++] = node.first + 1;
      }
    }
    return false;
  }

 private:
  struct Node {
    Vec3 lo;
    Vec3 hi;
    std::uint32_t first = 0;  // child index for inner nodes, triangle index for leaves
    std::uint32_t count = 0;  // 0 for inner nodes
  };

  static bool slab_hit(const Node& n, const Vec3& o, const Vec3& inv, double t0, double t1) {
    for (int a = 0; a < 3; ++a) {
      double tn = (n.lo[a] - o[a]) * inv[a];
      double tf = (n.hi[a] - o[a]) * inv[a];
      if (tn > tf) std::swap(tn, tf);
      if (std::isnan(tn) || std::isnan(tf)) continue;  // origin on a slab with zero direction
      t0 = std::max(t0, tn);
      t1 = std::min(t1, tf * (1.0 + 4e-16));
      if (t0 > t1) return false;
    }
    return true;
  }

  // Children of an inner node are stored adjacently; `first` is the left one.
  void build(std::vector<std::uint32_t>& order, std::size_t begin, std::size_t end, std::size_t index) {
    Vec3 lo{INFINITY, INFINITY, INFINITY}, hi{-INFINITY, -INFINITY, -INFINITY};
    Vec3 clo = lo, chi = hi;
    for (std::size_t i = begin; i < end; ++i) {
      const Triangle& t = tris_[order[i]];
      lo = min(lo, min(t.a, min(t.b, t.c)));
      hi = max(hi, max(t.a, max(t.b, t.c)));
      const Vec3 c = (t.a + t.b + t.c) / 3.0;
      clo = min(clo, c);
      chi = max(chi, c);
    }
    nodes_[index].lo = lo;
    nodes_[index].hi = hi;
    const std::size_t n = end - begin;
    const Vec3 ext = chi - clo;
    const int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
    if (n <= 4 || ext[axis] <= 0.0) {
      nodes_[index].first = static_cast<std::uint32_t>(begin);
      nodes_[index].count = static_cast<std::uint32_t>(n);
      return;
    }
    const std::size_t mid = begin + n / 2;
    auto centroid = [&](std::uint32_t i) {
      const Triangle& t = tris_[i];
      return t.a[axis] + t.b[axis] + t.c[axis];
    };
    std::nth_element(order.begin() + static_cast<std::ptrdiff_t>(begin),
                     order.begin() + static_cast<std::ptrdiff_t>(mid),
                     order.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::uint32_t a, std::uint32_t b) { return centroid(a) < centroid(b); });
    const std::size_t left = nodes_.size();
    nodes_.resize(left + 2);
    nodes_[index].first = static_cast<std::uint32_t>(left);
    nodes_[index].count = 0;
    build(order, begin, mid, left);
    build(order, mid, end, left + 1);
  }

  std::vector<Triangle> tris_;
  std::vector<Node> nodes_;
};

namespace detail {

// Shirley-Chiu concentric map from [0,1)² to the unit disk.
inline std::pair<double, double> concentric_disk(double u, double v) {
  const double a = 2.0 * u - 1.0;
  const double b = 2.0 * v - 1.0;
  if (a == 0.0 && b == 0.0) return {0.0, 0.0};
  double r = 0.0;
  double phi = 0.0;
  if (std::abs(a) > std::abs(b)) {
    r = a;
    phi = (std::numbers::pi / 4.0) * (b / a);
  } else {
    r = b;
    phi = std::numbers::pi / 2.0 - (std::numbers::pi / 4.0) * (a / b);
  }
  return {r * std::cos(phi), r * std::sin(phi)};
}

}  // namespace detail

/// Jittered-stratified points on the unit disk. The first k*k points
/// (k = floor(sqrt(n))) come from a k x k jittered grid, the rest are uniform.
inline std::vector<std::pair<double, double>> stratified_disk_samples(int n, RandomStream& stream) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(static_cast<std::size_t>(n));
  const int k = static_cast<int>(std::floor(std::sqrt(static_cast<double>(n))));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      const double u = (i + stream.uniform()) / k;
      const double v = (j + stream.uniform()) / k;
      pts.push_back(detail::concentric_disk(u, v));
    }
  while (static_cast<int>(pts.size()) < n) {
    const double u = stream.uniform();
    pts.push_back(detail::concentric_disk(u, stream.uniform()));
  }
  return pts;
}

/// Number of the `samples` shadow rays from `point` to the light's disk that
/// are blocked. The disk has the sphere's radius and faces `point`.
inline int count_occluded(const OcclusionBvh& bvh, const SphereLight& light, const Vec3& point,
                          int samples, RandomStream& stream) {
  constexpr double kEps = 1e-9;
  if (light.radius <= 0.0) {
    const Ray r{point, light.center - point};
    return bvh.occluded(r, kEps, 1.0 - kEps) ? samples : 0;
  }
  const Vec3 normal = normalized(point - light.center);
  const auto [t1, t2] = orthonormal_basis(normal);
  int blocked = 0;
  for (const auto& [dx, dy] : stratified_disk_samples(samples, stream)) {
    const Vec3 target = light.center + (t1 * dx + t2 * dy) * light.radius;
    if (bvh.occluded(Ray{point, target - point}, kEps, 1.0 - kEps)) ++blocked;
  }
  return blocked;
}

inline double occluded_fraction(const OcclusionBvh& bvh, const SphereLight& light, const Vec3& point,
                                int samples, RandomStream& stream) {
  return static_cast<double>(count_occluded(bvh, light, point, samples, stream)) / samples;
}

/// Plane point seen through the center of pixel (row, col), if any.
inline std::optional<Vec3> pixel_ground_point(const Camera& cam, int width, int height, int row, int col) {
  return intersect_ground(cam.ray((col + 0.5) / width, (row + 0.5) / height));
}

inline MatteMap render_matte(const SceneConfig& scene, const RenderSettings& settings) {
  scene.validate();
  settings.validate();
  const OcclusionBvh bvh = OcclusionBvh::from_scene(scene);
  MatteMap matte(static_cast<std::size_t>(settings.height), static_cast<std::size_t>(settings.width));
  if (bvh.empty()) return matte;
  auto values = matte.values();
  parallel_for(static_cast<std::size_t>(settings.height), settings.workers, [&](std::size_t row) {
    for (int col = 0; col < settings.width; ++col) {
      const std::size_t index = row * static_cast<std::size_t>(settings.width) + static_cast<std::size_t>(col);
      const auto point = pixel_ground_point(scene.camera, settings.width, settings.height, static_cast<int>(row), col);
      if (!point) continue;
      RandomStream stream = RandomStream::for_item(settings.seed, "matte-pixel", index);
      values[index] = occluded_fraction(bvh, scene.light, *point, settings.light_samples, stream);
    }
  });
  return matte;
}

// ---------------------------------------------------------------------------
// Scene randomization

struct NamedMesh {
  std::string id;
  TriangleMesh mesh;
};

struct SceneRanges {
  Range camera_height{1.5, 3.0};
  Range camera_tilt_deg{0.0, 35.0};  // from straight down
  Range vfov_deg{40.0, 60.0};
  double aspect = 1.0;
  Range light_distance{6.0, 12.0};  // from the point the camera looks at
  Range light_elevation_deg{35.0, 75.0};
  Range light_radius{0.0, 0.6};
  Range occluder_scale{0.6, 2.0};  // applied to the unit-normalized mesh
  Range occluder_position{0.2, 0.85};  // fraction along plane target -> light
  std::array<double, 2> occluder_count_weights{0.5, 0.5};  // one, two
  int max_attempts = 2000;

  void validate() const {
    for (const Range* r : {&camera_height, &camera_tilt_deg, &vfov_deg, &light_distance,
                           &light_elevation_deg, &light_radius, &occluder_scale, &occluder_position})
      if (!(r->lo <= r->hi)) detail::fail_validation("scene range must satisfy lo <= hi");
    if (!(camera_height.lo > 0.0)) detail::fail_validation("camera must be above the plane");
    if (!(light_radius.lo >= 0.0)) detail::fail_validation("light radius must be nonnegative");
    if (!(occluder_scale.lo > 0.0)) detail::fail_validation("occluder scale must be positive");
    if (!(occluder_position.lo > 0.0 && occluder_position.hi < 1.0))
      detail::fail_validation("occluder position fraction must lie in (0,1)");
    if (!(light_elevation_deg.lo > 0.0 && light_elevation_deg.hi < 90.0 + 1e-12))
      detail::fail_validation("light elevation must lie in (0,90]");
    if (occluder_count_weights[0] < 0.0 || occluder_count_weights[1] < 0.0 ||
        occluder_count_weights[0] + occluder_count_weights[1] <= 0.0)
      detail::fail_validation("occluder count weights must be nonnegative with a positive sum");
    if (max_attempts < 1) detail::fail_validation("max_attempts must be >= 1");
  }
};

/// Ground-plane quad seen by the camera, or nullopt if a corner ray misses
/// the plane (horizon in view).
inline std::optional<std::array<Vec3, 4>> visible_ground_region(const Camera& cam) {
  std::array<Vec3, 4> quad;
  const auto rays = cam.corner_rays();
  for (std::size_t i = 0; i < 4; ++i) {
    const auto hit = intersect_ground(rays[i]);
    if (!hit) return std::nullopt;
    quad[i] = *hit;
  }
  return quad;
}

inline bool point_in_convex_quad(const std::array<Vec3, 4>& quad, double x, double y) {
  int sign = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    const Vec3& a = quad[i];
    const Vec3& b = quad[(i + 1) % 4];
    const double c = (b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x);
    const int s = c > 0.0 ? 1 : (c < 0.0 ? -1 : 0);
    if (s == 0) continue;
    if (sign == 0) sign = s;
    else if (s != sign) return false;
  }
  return true;
}

/// True when every point lies strictly outside one plane of the camera's
/// view pyramid, which places their convex hull outside the view.
inline bool outside_view(const Camera& cam, std::span<const Vec3> points) {
  const auto rays = cam.corner_rays();
  const Vec3 f = normalized(cam.forward);
  std::array<Vec3, 5> normals;
  for (std::size_t i = 0; i < 4; ++i) {
    Vec3 n = cross(rays[i].direction, rays[(i + 1) % 4].direction);
    if (dot(n, f) > 0.0) n = -n;
    normals[i] = n;
  }
  normals[4] = -f;
  for (const Vec3& n : normals) {
    const bool all_out = std::all_of(points.begin(), points.end(),
                                     [&](const Vec3& p) { return dot(n, p - cam.position) > 0.0; });
    if (all_out) return true;
  }
  return false;
}

/// Placement checks shared by randomize_scene and callers that build scenes
/// by hand: occluder above the plane, clear of the light, outside the view,
/// and casting onto the visible ground region.
inline bool occluder_placement_ok(const SceneConfig& scene, const TriangleMesh& world) {
  const auto region = visible_ground_region(scene.camera);
  if (!region) return false;
  const Vec3 c = scene.light.center;
  for (const Vec3& v : world.vertices) {
    if (!(v.z > 0.0) || !(v.z < c.z)) return false;
    if (norm(v - c) <= scene.light.radius) return false;
  }
  if (!outside_view(scene.camera, world.vertices)) return false;
  for (const Vec3& v : world.vertices) {
    const Vec3 p = c + (v - c) * (c.z / (c.z - v.z));
    if (point_in_convex_quad(*region, p.x, p.y)) return true;
  }
  // No vertex shadow lands in view; accept if the center of the view is covered.
  const auto center = intersect_ground(scene.camera.ray(0.5, 0.5));
  if (!center) return false;
  const Ray probe{c, *center - c};
  for (std::size_t i = 0; i < world.triangles.size(); ++i)
    if (ray_triangle_intersect(probe, world.triangle(i), 1e-9, 1.0)) return true;
  return false;
}

inline SceneConfig randomize_scene(std::span<const NamedMesh> assets, const SceneRanges& ranges,
                                   RandomStream& stream) {
  if (assets.empty()) detail::fail_validation("mesh asset library is empty");
  ranges.validate();
  constexpr double kDeg = std::numbers::pi / 180.0;
  const double p_two = ranges.occluder_count_weights[1] /
                       (ranges.occluder_count_weights[0] + ranges.occluder_count_weights[1]);
  const int count = stream.uniform() < p_two ? 2 : 1;
  std::vector<std::size_t> picks;
  for (int i = 0; i < count; ++i) picks.push_back(stream.below(assets.size()));

  for (int attempt = 0; attempt < ranges.max_attempts; ++attempt) {
    SceneConfig scene;
    const double tilt = stream.uniform(ranges.camera_tilt_deg.lo, ranges.camera_tilt_deg.hi) * kDeg;
    const double azimuth = stream.uniform(0.0, 2.0 * std::numbers::pi);
    scene.camera.position = {0.0, 0.0, stream.uniform(ranges.camera_height.lo, ranges.camera_height.hi)};
    scene.camera.forward = {std::sin(tilt) * std::cos(azimuth), std::sin(tilt) * std::sin(azimuth), -std::cos(tilt)};
    scene.camera.up = tilt > 1e-6 ? Vec3{0.0, 0.0, 1.0} : Vec3{-std::sin(azimuth), std::cos(azimuth), 0.0};
    scene.camera.vfov_deg = stream.uniform(ranges.vfov_deg.lo, ranges.vfov_deg.hi);
    scene.camera.aspect = ranges.aspect;
    const auto region = visible_ground_region(scene.camera);
    const auto look = intersect_ground(scene.camera.ray(0.5, 0.5));
    if (!region || !look) continue;

    const double elevation = stream.uniform(ranges.light_elevation_deg.lo, ranges.light_elevation_deg.hi) * kDeg;
    const double light_azimuth = stream.uniform(0.0, 2.0 * std::numbers::pi);
    const double distance = stream.uniform(ranges.light_distance.lo, ranges.light_distance.hi);
    scene.light.center = *look + Vec3{std::cos(elevation) * std::cos(light_azimuth),
                                      std::cos(elevation) * std::sin(light_azimuth), std::sin(elevation)} *
                                     distance;
    scene.light.radius = stream.uniform(ranges.light_radius.lo, ranges.light_radius.hi);

    bool placed_all = true;
    for (std::size_t pick : picks) {
      const NamedMesh& asset = assets[pick];
      const TriangleMesh unit = asset.mesh.normalized();
      bool placed = false;
      for (int tries = 0; tries < 32 && !placed; ++tries) {
        // Target on the visible plane, then slide toward the light.
        const auto ground = intersect_ground(scene.camera.ray(stream.uniform(), stream.uniform()));
        const double frac = stream.uniform(ranges.occluder_position.lo, ranges.occluder_position.hi);
        const double s = stream.uniform(ranges.occluder_scale.lo, ranges.occluder_scale.hi);
        Transform xf{{s, s, s}, Quaternion::random(stream), {}};
        if (!ground) continue;
        xf.translation = *ground + (scene.light.center - *ground) * frac;
        if (occluder_placement_ok(scene, unit.transformed(xf))) {
          scene.occluders.push_back({asset.id, unit, xf});
          placed = true;
        }
      }
      if (!placed) {
        placed_all = false;
        break;
      }
    }
    if (placed_all) return scene;
  }
  throw RuntimeError("scene placement attempts exhausted");
}

}  // namespace synshadow
