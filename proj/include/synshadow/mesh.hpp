#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include "geometry.hpp"

namespace synshadow {

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  void validate() const {
    if (triangles.empty()) detail::fail_validation("mesh has no triangles");
    for (const auto& v : vertices)
      if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z))
        detail::fail_validation("mesh has non-finite vertex coordinates");
    for (const auto& t : triangles)
      for (auto i : t)
        if (i >= vertices.size()) detail::fail_validation("mesh triangle index out of range");
  }

  Triangle triangle(std::size_t i) const {
    const auto& t = triangles[i];
    return {vertices[t[0]], vertices[t[1]], vertices[t[2]]};
  }

  std::pair<Vec3, Vec3> bounds() const {
    Vec3 lo{INFINITY, INFINITY, INFINITY};
    Vec3 hi{-INFINITY, -INFINITY, -INFINITY};
    for (const auto& v : vertices) {
      lo = min(lo, v);
      hi = max(hi, v);
    }
    return {lo, hi};
  }

  /// Centered on its bounding box with the largest extent equal to 1.
  TriangleMesh normalized() const {
    const auto [lo, hi] = bounds();
    const Vec3 center = (lo + hi) * 0.5;
    const Vec3 ext = hi - lo;
    const double size = std::max({ext.x, ext.y, ext.z});
    TriangleMesh out = *this;
    for (auto& v : out.vertices) v = size > 0.0 ? (v - center) / size : v - center;
    return out;
  }

  TriangleMesh transformed(const Transform& xf) const {
    TriangleMesh out = *this;
    for (auto& v : out.vertices) v = xf.apply(v);
    return out;
  }
};

namespace detail {

inline bool parse_double(std::string_view token, double& out) {
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

// Resolves the vertex part of an OBJ face token ("7", "7/1", "7//3", "-1").
inline bool parse_face_index(std::string_view token, std::size_t vertex_count, std::uint32_t& out) {
  const auto slash = token.find('/');
  const auto head = token.substr(0, slash);
  long long idx = 0;
  auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), idx);
  if (ec != std::errc() || ptr != head.data() + head.size() || idx == 0) return false;
  const long long resolved = idx > 0 ? idx - 1 : static_cast<long long>(vertex_count) + idx;
  if (resolved < 0 || resolved >= static_cast<long long>(vertex_count)) return false;
  out = static_cast<std::uint32_t>(resolved);
  return true;
}

}  // namespace detail

/// Reads `v` and `f` records; polygons are fan-triangulated from their first
/// vertex. Everything else (normals, UVs, materials, groups) is skipped.
inline TriangleMesh parse_obj(std::istream& in, const std::string& source = "<obj>") {
  TriangleMesh mesh;
  std::string line;
  std::size_t line_no = 0;
  auto malformed = [&](const std::string& why) {
    detail::fail_validation(source + ":" + std::to_string(line_no) + ": " + why);
  };
  std::vector<std::uint32_t> face;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      std::string tok[3];
      double c[3];
      for (int i = 0; i < 3; ++i)
        if (!(ls >> tok[i]) || !detail::parse_double(tok[i], c[i])) malformed("bad vertex record");
      mesh.vertices.push_back({c[0], c[1], c[2]});
    } else if (tag == "f") {
      face.clear();
      std::string tok;
      while (ls >> tok) {
        std::uint32_t idx = 0;
        if (!detail::parse_face_index(tok, mesh.vertices.size(), idx)) malformed("bad face index '" + tok + "'");
        face.push_back(idx);
      }
      if (face.size() < 3) malformed("face with fewer than 3 vertices");
      for (std::size_t i = 1; i + 1 < face.size(); ++i) mesh.triangles.push_back({face[0], face[i], face[i + 1]});
    }
  }
  if (mesh.triangles.empty()) detail::fail_validation(source + ": mesh has no faces");
  mesh.validate();
  return mesh;
}

inline TriangleMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh '" + path.string() + "'");
  return parse_obj(in, path.string());
}

}  // namespace synshadow
