#pragma once

#include <array>
#include <string_view>
#include <vector>

#include <Eigen/Geometry>

#include "hairkit/types.hpp"

namespace hairkit::scalp {

struct RootSet {
  std::vector<Vec2> uv;
  std::vector<Vec3> positions3d;
  std::vector<Mat3> frames;  // columns: tangent_u, bitangent, normal
  std::vector<double> distances;

  size_t size() const { return uv.size(); }
};

// Triangulated scalp patch with per-vertex uv: uv -> (position, frame) by
// barycentric lookup, 3D -> uv by nearest-point projection. The default is an
// analytic UV-unwrapped hemispherical patch on the radius-10 head sphere; any
// triangulated scalp with uv can be substituted (from_obj).
class ScalpMap {
 public:
  // Cap of the sphere |p| = radius over the square x,z in [-w/2, w/2],
  // u -> x, v -> z, sampled on a (grid+1)^2 vertex lattice. Triangle diagonals
  // mirror across u = 0.5 so the map is mirror-symmetric: (u,v) <-> (1-u,v)
  // corresponds to x <-> -x.
  static ScalpMap hemisphere(int grid = 64, double radius = 10.0, double patch_width = 12.0);

  // OBJ with `v`, `vt` and `f i/t j/t k/t` faces.
  static ScalpMap from_obj(std::string_view obj_text);

  Vec3 position(const Vec2& uv) const;
  Mat3 frame(const Vec2& uv) const;

  struct Projection {
    Vec2 uv;
    Vec3 position;  // closest surface point
    double distance;
  };
  Projection project(const Vec3& point) const;

  size_t vertex_count() const { return verts_.size(); }
  const Vec3& vertex(size_t i) const { return verts_[i]; }
  const Vec2& vertex_uv(size_t i) const { return uvs_[i]; }

 private:
  struct Locator;  // uv-space triangle buckets

  void finalize();  // build normals/tangents if absent, AABBs, uv locator

  std::vector<Vec3> verts_;
  std::vector<Vec2> uvs_;
  std::vector<Vec3> normals_;     // per-vertex
  std::vector<Vec3> tangents_;    // per-vertex d(position)/du
  std::vector<std::array<int, 3>> tris_;
  std::vector<Eigen::AlignedBox3d> boxes_;  // per-triangle, for projection early-out
  // uv bucket grid
  int buckets_ = 0;
  std::vector<std::vector<int>> bucket_tris_;
};

// Nearest-scalp-point projection of every root; distance above `max_distance`
// (head units) raises RootOffScalp.
RootSet project_roots(const HairModel& model, const ScalpMap& scalp, double max_distance = 0.05);

// Convenience: store the projected uv back on the model.
void attach_uv(HairModel& model, const RootSet& roots);

// RootSet for a list of uv positions (positions/frames from the scalp map).
RootSet roots_from_uv(const std::vector<Vec2>& uv, const ScalpMap& scalp);

}  // namespace hairkit::scalp
