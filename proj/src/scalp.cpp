#include "hairkit/scalp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace hairkit::scalp {

namespace {

constexpr int kBuckets = 64;

struct Bary {
  double a, b, c;  // weights of the triangle's three vertices
};

// 2D barycentric coordinates of p in the uv triangle (q0, q1, q2).
bool uv_barycentric(const Vec2& p, const Vec2& q0, const Vec2& q1, const Vec2& q2, Bary& out) {
  const Vec2 e1 = q1 - q0, e2 = q2 - q0, d = p - q0;
  const double det = e1.x() * e2.y() - e2.x() * e1.y();
  if (std::abs(det) < 1e-18) return false;
  out.b = (d.x() * e2.y() - e2.x() * d.y()) / det;
  out.c = (e1.x() * d.y() - d.x() * e1.y()) / det;
  out.a = 1.0 - out.b - out.c;
  return true;
}

// Closest point on a 3D triangle (Ericson, Real-Time Collision Detection).
Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c, Bary& bary) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) {
    bary = {1, 0, 0};
    return a;
  }
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) {
    bary = {0, 1, 0};
    return b;
  }
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    bary = {1 - v, v, 0};
    return a + v * ab;
  }
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) {
    bary = {0, 0, 1};
    return c;
  }
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    bary = {1 - w, 0, w};
    return a + w * ac;
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    bary = {0, 1 - w, w};
    return b + w * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  bary = {1 - v - w, v, w};
  return a + ab * v + ac * w;
}

}  // namespace

void ScalpMap::finalize() {
  if (verts_.empty() || tris_.empty())
    throw Error(ErrorCode::FormatError, "scalp mesh has no triangles");

  boxes_.clear();
  boxes_.reserve(tris_.size());
  for (const auto& t : tris_) {
    Eigen::AlignedBox3d box(verts_[t[0]]);
    box.extend(verts_[t[1]]);
    box.extend(verts_[t[2]]);
    boxes_.push_back(box);
  }

  buckets_ = kBuckets;
  bucket_tris_.assign(static_cast<size_t>(buckets_) * buckets_, {});
  auto bucket_of = [&](double x) {
    return std::clamp(static_cast<int>(x * buckets_), 0, buckets_ - 1);
  };
  for (size_t ti = 0; ti < tris_.size(); ++ti) {
    const auto& t = tris_[ti];
    Vec2 lo = uvs_[t[0]].cwiseMin(uvs_[t[1]]).cwiseMin(uvs_[t[2]]);
    Vec2 hi = uvs_[t[0]].cwiseMax(uvs_[t[1]]).cwiseMax(uvs_[t[2]]);
    for (int by = bucket_of(lo.y()); by <= bucket_of(hi.y()); ++by)
      for (int bx = bucket_of(lo.x()); bx <= bucket_of(hi.x()); ++bx)
        bucket_tris_[static_cast<size_t>(by) * buckets_ + bx].push_back(static_cast<int>(ti));
  }
}

ScalpMap ScalpMap::hemisphere(int grid, double radius, double patch_width) {
  if (grid < 2 || grid % 2 != 0)
    throw Error(ErrorCode::FormatError, "hemisphere grid must be even and >= 2");
  if (patch_width * std::numbers::sqrt2 / 2.0 >= radius)
    throw Error(ErrorCode::FormatError, "patch corners fall off the sphere");

  ScalpMap map;
  const int n = grid + 1;
  map.verts_.reserve(static_cast<size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double u = static_cast<double>(i) / grid;
      const double v = static_cast<double>(j) / grid;
      const double x = (u - 0.5) * patch_width;
      const double z = (v - 0.5) * patch_width;
      const double y = std::sqrt(radius * radius - x * x - z * z);
      map.verts_.emplace_back(x, y, z);
      map.uvs_.emplace_back(u, v);
      map.normals_.push_back(Vec3(x, y, z) / radius);
      map.tangents_.push_back(Vec3(patch_width, -x * patch_width / y, 0.0));
    }

  auto vid = [n](int i, int j) { return j * n + i; };
  for (int j = 0; j < grid; ++j)
    for (int i = 0; i < grid; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j);
      const int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      if (i < grid / 2) {  // forward diagonal; mirrored cells get the mirrored split
        map.tris_.push_back({v00, v10, v11});
        map.tris_.push_back({v00, v11, v01});
      } else {
        map.tris_.push_back({v00, v10, v01});
        map.tris_.push_back({v10, v11, v01});
      }
    }
  map.finalize();
  return map;
}

ScalpMap ScalpMap::from_obj(std::string_view obj_text) {
  ScalpMap map;
  std::vector<Vec2> vts;
  std::istringstream in{std::string(obj_text)};
  std::string line;
  // First pass: positions and uv coordinates; faces index both.
  std::vector<std::array<int, 6>> faces;  // v0,t0,v1,t1,v2,t2 (0-based)
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      ls >> x >> y >> z;
      map.verts_.emplace_back(x, y, z);
    } else if (tag == "vt") {
      double u, v;
      ls >> u >> v;
      vts.emplace_back(u, v);
    } else if (tag == "f") {
      std::vector<std::pair<int, int>> corners;
      std::string tok;
      while (ls >> tok) {
        const size_t slash = tok.find('/');
        if (slash == std::string::npos)
          throw Error(ErrorCode::FormatError, "scalp OBJ faces need v/vt indices");
        const int vi = std::stoi(tok.substr(0, slash));
        const int ti = std::stoi(tok.substr(slash + 1));
        corners.emplace_back(vi - 1, ti - 1);
      }
      for (size_t c = 2; c < corners.size(); ++c)
        faces.push_back({corners[0].first, corners[0].second, corners[c - 1].first,
                         corners[c - 1].second, corners[c].first, corners[c].second});
    }
  }
  if (map.verts_.empty() || vts.empty() || faces.empty())
    throw Error(ErrorCode::FormatError, "scalp OBJ needs v, vt and f entries");

  // The map keys on uv per vertex: split vertices that appear with several uv.
  // For simplicity, emit one vertex per (v, vt) pair.
  std::vector<std::vector<std::pair<int, int>>> cache(map.verts_.size());
  std::vector<Vec3> verts;
  std::vector<Vec2> uvs;
  auto emit = [&](int vi, int ti) {
    if (vi < 0 || vi >= static_cast<int>(map.verts_.size()) || ti < 0 ||
        ti >= static_cast<int>(vts.size()))
      throw Error(ErrorCode::FormatError, "scalp OBJ face index out of range");
    for (auto& [t, id] : cache[vi])
      if (t == ti) return id;
    verts.push_back(map.verts_[vi]);
    uvs.push_back(vts[ti]);
    const int id = static_cast<int>(verts.size()) - 1;
    cache[vi].emplace_back(ti, id);
    return id;
  };
  for (const auto& f : faces)
    map.tris_.push_back({emit(f[0], f[1]), emit(f[2], f[3]), emit(f[4], f[5])});
  map.verts_ = std::move(verts);
  map.uvs_ = std::move(uvs);

  // Area-weighted vertex normals; uv-gradient tangents.
  map.normals_.assign(map.verts_.size(), Vec3::Zero());
  map.tangents_.assign(map.verts_.size(), Vec3::Zero());
  for (const auto& t : map.tris_) {
    const Vec3 e1 = map.verts_[t[1]] - map.verts_[t[0]];
    const Vec3 e2 = map.verts_[t[2]] - map.verts_[t[0]];
    const Vec3 fn = e1.cross(e2);  // |fn| = 2 * area: weighting built in
    const Vec2 duv1 = map.uvs_[t[1]] - map.uvs_[t[0]];
    const Vec2 duv2 = map.uvs_[t[2]] - map.uvs_[t[0]];
    const double det = duv1.x() * duv2.y() - duv2.x() * duv1.y();
    Vec3 tangent = Vec3::Zero();
    if (std::abs(det) > 1e-18) tangent = (e1 * duv2.y() - e2 * duv1.y()) / det;
    for (int v : t) {
      map.normals_[v] += fn;
      map.tangents_[v] += tangent;
    }
  }
  for (size_t i = 0; i < map.verts_.size(); ++i) {
    const double n = map.normals_[i].norm();
    if (n > 0) map.normals_[i] /= n;
  }
  map.finalize();
  return map;
}

// Find the triangle containing uv (bucket-accelerated); for off-patch lookups
// fall back to the nearest triangle with clamped barycentric coordinates.
static int locate_uv(const std::vector<Vec2>& uvs, const std::vector<std::array<int, 3>>& tris,
                     const std::vector<std::vector<int>>& bucket_tris, int buckets,
                     const Vec2& uv, Bary& bary) {
  const int bx = std::clamp(static_cast<int>(uv.x() * buckets), 0, buckets - 1);
  const int by = std::clamp(static_cast<int>(uv.y() * buckets), 0, buckets - 1);
  for (int ti : bucket_tris[static_cast<size_t>(by) * buckets + bx]) {
    const auto& t = tris[ti];
    Bary b;
    if (!uv_barycentric(uv, uvs[t[0]], uvs[t[1]], uvs[t[2]], b)) continue;
    if (b.a >= -1e-12 && b.b >= -1e-12 && b.c >= -1e-12) {
      bary = b;
      return ti;
    }
  }
  int tri = -1;
  double best = std::numeric_limits<double>::max();
  for (size_t ti = 0; ti < tris.size(); ++ti) {
    const auto& t = tris[ti];
    Bary b;
    if (!uv_barycentric(uv, uvs[t[0]], uvs[t[1]], uvs[t[2]], b)) continue;
    b.a = std::max(b.a, 0.0);
    b.b = std::max(b.b, 0.0);
    b.c = std::max(b.c, 0.0);
    const double s = b.a + b.b + b.c;
    b.a /= s;
    b.b /= s;
    b.c /= s;
    const Vec2 q = b.a * uvs[t[0]] + b.b * uvs[t[1]] + b.c * uvs[t[2]];
    const double d = (q - uv).squaredNorm();
    if (d < best) {
      best = d;
      bary = b;
      tri = static_cast<int>(ti);
    }
  }
  if (tri < 0) throw Error(ErrorCode::FormatError, "uv lookup failed");
  return tri;
}

Vec3 ScalpMap::position(const Vec2& uv) const {
  Bary bary{1, 0, 0};
  const int tri = locate_uv(uvs_, tris_, bucket_tris_, buckets_, uv, bary);
  const auto& t = tris_[tri];
  return bary.a * verts_[t[0]] + bary.b * verts_[t[1]] + bary.c * verts_[t[2]];
}

Mat3 ScalpMap::frame(const Vec2& uv) const {
  Bary bary{1, 0, 0};
  const int tri = locate_uv(uvs_, tris_, bucket_tris_, buckets_, uv, bary);
  const auto& t = tris_[tri];
  Vec3 n = bary.a * normals_[t[0]] + bary.b * normals_[t[1]] + bary.c * normals_[t[2]];
  Vec3 tu = bary.a * tangents_[t[0]] + bary.b * tangents_[t[1]] + bary.c * tangents_[t[2]];
  n.normalize();
  tu -= tu.dot(n) * n;
  if (tu.squaredNorm() < 1e-24) tu = n.unitOrthogonal();
  tu.normalize();
  Mat3 frame;
  frame.col(0) = tu;
  frame.col(1) = n.cross(tu);
  frame.col(2) = n;
  return frame;
}

ScalpMap::Projection ScalpMap::project(const Vec3& point) const {
  double best = std::numeric_limits<double>::max();
  Projection out{};
  Bary best_bary{1, 0, 0};
  int best_tri = 0;
  for (size_t ti = 0; ti < tris_.size(); ++ti) {
    if (boxes_[ti].squaredExteriorDistance(point) >= best) continue;
    const auto& t = tris_[ti];
    Bary bary;
    const Vec3 q = closest_on_triangle(point, verts_[t[0]], verts_[t[1]], verts_[t[2]], bary);
    const double d = (q - point).squaredNorm();
    if (d < best) {
      best = d;
      out.position = q;
      best_bary = bary;
      best_tri = static_cast<int>(ti);
    }
  }
  const auto& t = tris_[best_tri];
  out.uv = best_bary.a * uvs_[t[0]] + best_bary.b * uvs_[t[1]] + best_bary.c * uvs_[t[2]];
  out.distance = std::sqrt(best);
  return out;
}

RootSet project_roots(const HairModel& model, const ScalpMap& scalp, double max_distance) {
  RootSet roots;
  roots.uv.reserve(model.size());
  for (size_t i = 0; i < model.size(); ++i) {
    const Vec3 root = model.roots.size() > i
                          ? model.roots[i]
                          : Vec3(model.strands[i].points.row(0));
    const auto proj = scalp.project(root);
    if (proj.distance > max_distance)
      throw Error(ErrorCode::RootOffScalp,
                  "root " + std::to_string(i) + " lies " + std::to_string(proj.distance) +
                      " head units off the scalp (cap " + std::to_string(max_distance) + ")");
    roots.uv.push_back(proj.uv);
    roots.positions3d.push_back(proj.position);
    roots.frames.push_back(scalp.frame(proj.uv));
    roots.distances.push_back(proj.distance);
  }
  return roots;
}

void attach_uv(HairModel& model, const RootSet& roots) {
  if (roots.size() != model.size())
    throw Error(ErrorCode::ShapeMismatch, "root set does not match the model");
  model.roots_uv = roots.uv;
}

RootSet roots_from_uv(const std::vector<Vec2>& uv, const ScalpMap& scalp) {
  RootSet roots;
  roots.uv = uv;
  roots.positions3d.reserve(uv.size());
  for (const Vec2& p : uv) {
    roots.positions3d.push_back(scalp.position(p));
    roots.frames.push_back(scalp.frame(p));
    roots.distances.push_back(0.0);
  }
  return roots;
}

}  // namespace hairkit::scalp
