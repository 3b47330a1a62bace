#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"

using namespace synshadow;
using namespace synshadow::testing;

namespace {

RenderSettings settings(int size, int samples, std::uint64_t seed = 1) {
  RenderSettings r;
  r.width = r.height = size;
  r.light_samples = samples;
  r.seed = seed;
  return r;
}

}  // namespace

TEST(RenderMatte, NothingBetweenPlaneAndLightGivesZero) {
  SquareScene sq;
  SceneConfig scene = make_square_scene(sq);
  scene.occluders[0].transform.translation.z = 8.0;  // above the light
  scene.light.radius = 0.3;
  const MatteMap m = render_matte(scene, settings(64, 16));
  for (double v : m.values()) ASSERT_EQ(v, 0.0);
}

TEST(RenderMatte, PointLightSquareMatchesProjection) {
  SquareScene sq;
  const int n = 256;
  const MatteMap m = render_matte(make_square_scene(sq), settings(n, 8));
  auto oracle = [&](int r, int c) {
    const auto [x, y] = square_scene_ground(sq, n, n, r, c);
    return square_point_shadow(sq, x, y);
  };
  int agree = 0, inside = 0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const double v = m.at(r, c);
      ASSERT_TRUE(v == 0.0 || v == 1.0);
      const bool want = oracle(r, c);
      inside += want;
      if ((v == 1.0) == want) {
        ++agree;
        continue;
      }
      // Disagreement must sit on the boundary band.
      bool boundary = false;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc)
          if (r + dr >= 0 && r + dr < n && c + dc >= 0 && c + dc < n && oracle(r + dr, c + dc) != want)
            boundary = true;
      EXPECT_TRUE(boundary) << r << "," << c;
    }
  }
  EXPECT_GE(agree, 0.999 * n * n);
  EXPECT_GT(inside, 1000);
}

TEST(RenderMatte, AreaLightRespectsUmbraAndPenumbraBounds) {
  SquareScene sq;
  sq.light_radius = 0.5;
  const int n = 128;
  const MatteMap m = render_matte(make_square_scene(sq), settings(n, 256));
  int umbra = 0, lit = 0, penumbra = 0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const auto [x, y] = square_scene_ground(sq, n, n, r, c);
      const int cls = square_area_classify(sq, x, y);
      if (cls > 0) {
        ASSERT_EQ(m.at(r, c), 1.0) << r << "," << c;
        ++umbra;
      } else if (cls < 0) {
        ASSERT_EQ(m.at(r, c), 0.0) << r << "," << c;
        ++lit;
      } else if (m.at(r, c) > 0.0 && m.at(r, c) < 1.0) {
        ++penumbra;
      }
    }
  }
  EXPECT_GT(umbra, 100);
  EXPECT_GT(lit, 100);
  EXPECT_GT(penumbra, 100);
}

TEST(RenderMatte, ValuesAreMultiplesOfSampleCount) {
  SquareScene sq;
  sq.light_radius = 0.4;
  for (int samples : {1, 7, 16, 64}) {
    const MatteMap m = render_matte(make_square_scene(sq), settings(48, samples));
    for (double v : m.values()) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
      const double k = v * samples;
      ASSERT_NEAR(k, std::round(k), 1e-9);
    }
  }
}

TEST(RenderMatte, UmbraShrinksAsLightGrows) {
  SquareScene sq;
  std::vector<std::set<std::size_t>> umbras;
  for (double radius : {0.0, 0.2, 0.4, 0.8}) {
    sq.light_radius = radius;
    const MatteMap m = render_matte(make_square_scene(sq), settings(96, 64));
    std::set<std::size_t> u;
    for (std::size_t i = 0; i < m.pixels(); ++i)
      if (m.values()[i] == 1.0) u.insert(i);
    umbras.push_back(std::move(u));
  }
  for (std::size_t k = 1; k < umbras.size(); ++k) {
    EXPECT_LT(umbras[k].size(), umbras[k - 1].size());
    for (std::size_t i : umbras[k]) ASSERT_TRUE(umbras[k - 1].count(i)) << "radius step " << k;
  }
}

TEST(RenderMatte, MonteCarloVarianceDecays) {
  SquareScene sq;
  sq.light_radius = 0.5;
  const SceneConfig scene = make_square_scene(sq);
  const OcclusionBvh bvh = OcclusionBvh::from_scene(scene);
  // A receiver point in the middle of the penumbra along +x.
  const double edge = sq.half_size * sq.light_height / (sq.light_height - sq.occluder_height);
  const Vec3 p{edge, 0.1, 0.0};
  std::vector<double> logn, logv;
  for (int n : {16, 64, 256}) {
    double sum = 0, sq_sum = 0;
    const int trials = 2000;
    for (int t = 0; t < trials; ++t) {
      RandomStream s = RandomStream::for_item(55, "variance", static_cast<std::uint64_t>(t));
      const double f = occluded_fraction(bvh, scene.light, p, n, s);
      sum += f;
      sq_sum += f * f;
    }
    const double mean = sum / trials;
    EXPECT_GT(mean, 0.2);
    EXPECT_LT(mean, 0.8);
    logn.push_back(std::log(n));
    logv.push_back(std::log(sq_sum / trials - mean * mean));
  }
  const double slope = (logv[2] - logv[0]) / (logn[2] - logn[0]);
  // Stratification decays at least as fast as independent sampling.
  EXPECT_LE(slope, -0.9);
}

TEST(RenderMatte, DeterministicAndScheduleIndependent) {
  SquareScene sq;
  sq.light_radius = 0.3;
  RenderSettings a = settings(64, 32, 9);
  const MatteMap m1 = render_matte(make_square_scene(sq), a);
  a.workers = 4;
  const MatteMap m2 = render_matte(make_square_scene(sq), a);
  EXPECT_EQ(m1, m2);
  const MatteMap m3 = render_matte(make_square_scene(sq), settings(64, 32, 10));
  EXPECT_FALSE(m1 == m3);
}

TEST(RenderMatte, InvalidSettingsRejected) {
  const SceneConfig scene = make_square_scene({});
  RenderSettings bad = settings(8, 0);
  EXPECT_THROW(render_matte(scene, bad), ValidationError);
  SceneConfig below = scene;
  below.light.center.z = -1.0;
  EXPECT_THROW(render_matte(below, settings(8, 4)), ValidationError);
  SceneConfig empty = scene;
  empty.occluders.clear();
  EXPECT_THROW(render_matte(empty, settings(8, 4)), ValidationError);
}

TEST(RandomizeScene, ReproducibleForFixedSeed) {
  const auto assets = test_assets();
  SceneRanges ranges;
  RandomStream a = RandomStream::for_item(3, "scene", 0);
  RandomStream b = RandomStream::for_item(3, "scene", 0);
  const SceneConfig s1 = randomize_scene(assets, ranges, a);
  const SceneConfig s2 = randomize_scene(assets, ranges, b);
  const MatteMap m1 = render_matte(s1, settings(32, 8));
  const MatteMap m2 = render_matte(s2, settings(32, 8));
  EXPECT_EQ(m1, m2);
  ASSERT_EQ(s1.occluders.size(), s2.occluders.size());
  EXPECT_EQ(s1.light.radius, s2.light.radius);
  EXPECT_EQ(s1.camera.position.z, s2.camera.position.z);
}

TEST(RandomizeScene, OccludersOutsideViewAndCastIntoIt) {
  const auto assets = test_assets();
  SceneRanges ranges;
  int shadowed = 0;
  const int scenes = 100;
  for (int i = 0; i < scenes; ++i) {
    RandomStream s = RandomStream::for_item(4, "scene", static_cast<std::uint64_t>(i));
    const SceneConfig scene = randomize_scene(assets, ranges, s);
    ASSERT_GE(scene.occluders.size(), 1u);
    ASSERT_LE(scene.occluders.size(), 2u);
    EXPECT_GE(scene.light.radius, ranges.light_radius.lo);
    EXPECT_LE(scene.light.radius, ranges.light_radius.hi);
    for (const auto& o : scene.occluders) {
      const TriangleMesh world = o.mesh.transformed(o.transform);
      ASSERT_TRUE(outside_view(scene.camera, world.vertices));
      // Nothing of the occluder is seen: camera rays to the plane never hit it.
      for (double u = 0.0; u <= 1.0; u += 0.125)
        for (double v = 0.0; v <= 1.0; v += 0.125) {
          const Ray ray = scene.camera.ray(u, v);
          const auto ground = intersect_ground(ray);
          ASSERT_TRUE(ground);
          for (std::size_t t = 0; t < world.triangles.size(); ++t)
            ASSERT_FALSE(ray_triangle_intersect(Ray{ray.origin, *ground - ray.origin}, world.triangle(t), 0.0, 1.0));
        }
    }
    const MatteMap m = render_matte(scene, settings(48, 16));
    shadowed += std::any_of(m.values().begin(), m.values().end(), [](double v) { return v > 0.0; });
  }
  EXPECT_GE(shadowed, 90);
}

TEST(RandomizeScene, OccluderCountFrequency) {
  const auto assets = test_assets();
  SceneRanges ranges;
  int two = 0;
  const int scenes = 10000;
  for (int i = 0; i < scenes; ++i) {
    RandomStream s = RandomStream::for_item(5, "scene", static_cast<std::uint64_t>(i));
    two += randomize_scene(assets, ranges, s).occluders.size() == 2;
  }
  EXPECT_NEAR(static_cast<double>(two) / scenes, 0.5, 0.02);
}

TEST(RandomizeScene, Errors) {
  SceneRanges ranges;
  RandomStream s(6);
  EXPECT_THROW(randomize_scene({}, ranges, s), ValidationError);
  const auto assets = test_assets();
  SceneRanges impossible = ranges;
  impossible.occluder_scale = {500.0, 600.0};  // always swallows the camera
  impossible.max_attempts = 3;
  EXPECT_THROW(randomize_scene(assets, impossible, s), RuntimeError);
  SceneRanges bad = ranges;
  bad.light_radius = {0.5, 0.1};
  EXPECT_THROW(randomize_scene(assets, bad, s), ValidationError);
}
