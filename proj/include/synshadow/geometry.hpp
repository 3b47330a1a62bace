#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>

#include "error.hpp"
#include "random.hpp"

namespace synshadow {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Vec3 operator-() const { return {-x, -y, -z}; }
  constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
  constexpr Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  friend constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }
  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalized(const Vec3& v) { return v / norm(v); }
constexpr Vec3 min(const Vec3& a, const Vec3& b) {
  return {a.x < b.x ? a.x : b.x, a.y < b.y ? a.y : b.y, a.z < b.z ? a.z : b.z};
}
constexpr Vec3 max(const Vec3& a, const Vec3& b) {
  return {a.x > b.x ? a.x : b.x, a.y > b.y ? a.y : b.y, a.z > b.z ? a.z : b.z};
}

/// Any two unit vectors completing `n` to a right-handed orthonormal frame.
inline std::pair<Vec3, Vec3> orthonormal_basis(const Vec3& n) {
  // Duff et al. branchless construction.
  const double sign = std::copysign(1.0, n.z);
  const double a = -1.0 / (sign + n.z);
  const double b = n.x * n.y * a;
  return {{1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x}, {b, sign + n.y * n.y * a, -n.y}};
}

struct Mat3 {
  std::array<std::array<double, 3>, 3> m{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

  constexpr Vec3 operator*(const Vec3& v) const {
    return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
  }
  constexpr double determinant() const {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  }
  friend constexpr bool operator==(const Mat3&, const Mat3&) = default;
};

struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Mat3 to_matrix() const {
    const double n = std::sqrt(w * w + x * x + y * y + z * z);
    const double a = w / n, b = x / n, c = y / n, d = z / n;
    Mat3 r;
    r.m = {{{1 - 2 * (c * c + d * d), 2 * (b * c - a * d), 2 * (b * d + a * c)},
            {2 * (b * c + a * d), 1 - 2 * (b * b + d * d), 2 * (c * d - a * b)},
            {2 * (b * d - a * c), 2 * (c * d + a * b), 1 - 2 * (b * b + c * c)}}};
    return r;
  }

  static Quaternion axis_angle(const Vec3& axis, double angle) {
    const Vec3 u = normalized(axis);
    const double s = std::sin(angle / 2);
    return {std::cos(angle / 2), u.x * s, u.y * s, u.z * s};
  }

  /// Uniformly distributed rotation (Shoemake).
  static Quaternion random(RandomStream& stream) {
    const double u1 = stream.uniform();
    const double u2 = stream.uniform() * 2.0 * std::numbers::pi;
    const double u3 = stream.uniform() * 2.0 * std::numbers::pi;
    const double a = std::sqrt(1.0 - u1);
    const double b = std::sqrt(u1);
    return {b * std::cos(u3), a * std::sin(u2), a * std::cos(u2), b * std::sin(u3)};
  }
};

/// Scale, then rotate, then translate.
struct Transform {
  Vec3 scale{1.0, 1.0, 1.0};
  Quaternion rotation{};
  Vec3 translation{};

  void validate() const {
    if (!(scale.x > 0.0 && scale.y > 0.0 && scale.z > 0.0))
      detail::fail_validation("transform scale must be positive");
    if (!(std::abs(rotation.to_matrix().determinant() - 1.0) <= 1e-9))
      detail::fail_validation("transform rotation is not a proper rotation");
  }

  Vec3 apply(const Vec3& p) const {
    const Vec3 scaled{p.x * scale.x, p.y * scale.y, p.z * scale.z};
    return rotation.to_matrix() * scaled + translation;
  }
};

struct Ray {
  Vec3 origin;
  Vec3 direction;
};

struct Triangle {
  Vec3 a;
  Vec3 b;
  Vec3 c;
};

/// Möller-Trumbore. Returns the ray parameter t of the hit when
/// t_min < t < t_max. Hits on an edge count only for the edge's owning side:
/// a barycentric coordinate of exactly zero is accepted when the opposing
/// edge vector is lexicographically positive, so a ray through an edge
/// shared by two consistently wound triangles hits exactly one of them.
inline std::optional<double> ray_triangle_intersect(const Ray& ray, const Triangle& tri,
                                                    double t_min = 0.0,
                                                    double t_max = std::numeric_limits<double>::infinity()) {
  const Vec3 e1 = tri.b - tri.a;
  const Vec3 e2 = tri.c - tri.a;
  const Vec3 p = cross(ray.direction, e2);
  const double det = dot(e1, p);
  if (det == 0.0 || !std::isfinite(det)) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = ray.origin - tri.a;
  const double u = dot(s, p) * inv;
  const Vec3 q = cross(s, e1);
  const double v = dot(ray.direction, q) * inv;
  const double w = 1.0 - u - v;
  auto owns = [](const Vec3& edge) {
    if (edge.x != 0.0) return edge.x > 0.0;
    if (edge.y != 0.0) return edge.y > 0.0;
    return edge.z > 0.0;
  };
  // Edges in winding order; u weights b (opposite edge c->a), v weights c
  // (opposite a->b), w weights a (opposite b->c).
  auto inside = [&](double bary, const Vec3& edge) { return bary > 0.0 || (bary == 0.0 && owns(edge)); };
  if (!inside(u, tri.a - tri.c) || !inside(v, tri.b - tri.a) || !inside(w, tri.c - tri.b))
    return std::nullopt;
  const double t = dot(e2, q) * inv;
  if (!(t > t_min && t < t_max)) return std::nullopt;
  return t;
}

}  // namespace synshadow
