#include "hairkit/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace hairkit::io {

namespace {

// Little-endian scalar cursor (declared host convention; big-endian hosts
// must byte-swap).
struct Reader {
  std::span<const std::byte> bytes;
  size_t pos = 0;

  size_t remaining() const { return bytes.size() - pos; }

  template <typename T>
  T get() {
    if (remaining() < sizeof(T))
      throw Error(ErrorCode::Truncated, "unexpected end of file at byte " + std::to_string(pos));
    T value;
    std::memcpy(&value, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return value;
  }

  void skip(size_t n) {
    if (remaining() < n)
      throw Error(ErrorCode::Truncated, "unexpected end of file at byte " + std::to_string(pos));
    pos += n;
  }
};

template <typename T>
void put(std::vector<std::byte>& out, T value) {
  const auto* p = reinterpret_cast<const std::byte*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

constexpr uint32_t kHairSegmentsBit = 1u << 0;
constexpr uint32_t kHairPointsBit = 1u << 1;
constexpr uint32_t kHairThicknessBit = 1u << 2;
constexpr uint32_t kHairTransparencyBit = 1u << 3;
constexpr uint32_t kHairColorBit = 1u << 4;

// World-space float32 coordinates of one strand, root offset and source scale
// restored — what the on-disk formats store.
Eigen::Matrix<float, Eigen::Dynamic, 3> strand_world_f32(const HairModel& model, size_t i) {
  const Strand& s = model.strands[i];
  Eigen::Matrix<float, Eigen::Dynamic, 3> out(s.points.rows(), 3);
  Vec3 root = Vec3::Zero();
  if (model.root_relative && i < model.roots.size()) root = model.roots[i];
  for (int k = 0; k < s.points.rows(); ++k) {
    Vec3 w = (s.points.row(k).transpose() + root) * model.source_scale;
    out.row(k) = w.cast<float>();
  }
  return out;
}

void append_strand(HairModel& model, PointMat points) {
  Strand s;
  s.points = std::move(points);
  model.roots.push_back(s.points.row(0));
  model.strands.push_back(std::move(s));
}

}  // namespace

HairModel parse_hair_binary(std::span<const std::byte> bytes, ParseStats* stats) {
  if (bytes.size() < 4) throw Error(ErrorCode::Truncated, "file shorter than the magic");
  if (std::memcmp(bytes.data(), "HAIR", 4) != 0)
    throw Error(ErrorCode::BadMagic, "expected magic \"HAIR\"");
  if (bytes.size() < 128) throw Error(ErrorCode::Truncated, "header shorter than 128 bytes");

  Reader r{bytes, 4};
  const uint32_t num_strands = r.get<uint32_t>();
  const uint32_t num_points = r.get<uint32_t>();
  const uint32_t flags = r.get<uint32_t>();
  const uint32_t default_segments = r.get<uint32_t>();
  r.skip(4 + 4 + 12 + 88);  // default thickness/transparency/color, info string

  if (num_strands == 0) throw Error(ErrorCode::ZeroStrands, "header declares 0 strands");
  if (!(flags & kHairPointsBit))
    throw Error(ErrorCode::Truncated, "points array absent (flags bit 1 clear)");

  std::vector<uint32_t> segments(num_strands, default_segments);
  if (flags & kHairSegmentsBit)
    for (uint32_t i = 0; i < num_strands; ++i) segments[i] = r.get<uint16_t>();

  uint64_t total = 0;
  for (uint32_t seg : segments) total += seg + 1u;
  if (total != num_points)
    throw Error(ErrorCode::Truncated, "segment counts imply " + std::to_string(total) +
                                          " points, header declares " + std::to_string(num_points));
  if (r.remaining() < static_cast<size_t>(num_points) * 12)
    throw Error(ErrorCode::Truncated, "point payload shorter than declared");

  HairModel model;
  model.strands.reserve(num_strands);
  int dropped = 0;
  for (uint32_t i = 0; i < num_strands; ++i) {
    const uint32_t n = segments[i] + 1;
    PointMat pts(n, 3);
    for (uint32_t k = 0; k < n; ++k) {
      float x = r.get<float>(), y = r.get<float>(), z = r.get<float>();
      pts.row(k) = Vec3(x, y, z);
    }
    if (n < 2) {
      ++dropped;
      continue;
    }
    append_strand(model, std::move(pts));
  }
  // Per-point thickness/transparency/color channels are skipped.
  (void)kHairThicknessBit;
  (void)kHairTransparencyBit;
  (void)kHairColorBit;
  if (stats) stats->dropped_short_strands += dropped;
  return model;
}

std::vector<std::byte> write_hair_binary(const HairModel& model) {
  uint64_t total = 0;
  for (const Strand& s : model.strands) {
    if (s.points.rows() > 65536)
      throw Error(ErrorCode::WrongLength, ".hair stores uint16 segment counts; strand too long");
    total += static_cast<uint64_t>(s.points.rows());
  }

  std::vector<std::byte> out;
  out.reserve(128 + model.size() * 2 + total * 12);
  out.insert(out.end(), {std::byte('H'), std::byte('A'), std::byte('I'), std::byte('R')});
  put<uint32_t>(out, static_cast<uint32_t>(model.size()));
  put<uint32_t>(out, static_cast<uint32_t>(total));
  put<uint32_t>(out, kHairSegmentsBit | kHairPointsBit);
  put<uint32_t>(out, model.empty() ? 0 : static_cast<uint32_t>(model.strands[0].points.rows() - 1));
  put<float>(out, 1.0f);  // default thickness
  put<float>(out, 0.0f);  // default transparency
  put<float>(out, 0.0f);  // default color
  put<float>(out, 0.0f);
  put<float>(out, 0.0f);
  char info[88] = "exported by hairkit";
  out.insert(out.end(), reinterpret_cast<const std::byte*>(info),
             reinterpret_cast<const std::byte*>(info) + 88);

  for (const Strand& s : model.strands)
    put<uint16_t>(out, static_cast<uint16_t>(s.points.rows() - 1));
  for (size_t i = 0; i < model.size(); ++i) {
    auto pts = strand_world_f32(model, i);
    for (int k = 0; k < pts.rows(); ++k) {
      put<float>(out, pts(k, 0));
      put<float>(out, pts(k, 1));
      put<float>(out, pts(k, 2));
    }
  }
  return out;
}

HairModel parse_data_file(std::span<const std::byte> bytes, ParseStats* stats) {
  Reader r{bytes, 0};
  const int32_t num_strands = r.get<int32_t>();
  if (num_strands < 0) throw Error(ErrorCode::NegativeCount, "negative strand count");

  HairModel model;
  model.strands.reserve(num_strands);
  int dropped = 0;
  for (int32_t i = 0; i < num_strands; ++i) {
    const int32_t n = r.get<int32_t>();
    if (n < 0)
      throw Error(ErrorCode::NegativeCount,
                  "negative point count in strand " + std::to_string(i));
    PointMat pts(n, 3);
    for (int32_t k = 0; k < n; ++k) {
      float x = r.get<float>(), y = r.get<float>(), z = r.get<float>();
      pts.row(k) = Vec3(x, y, z);
    }
    if (n < 2) {
      ++dropped;
      continue;
    }
    append_strand(model, std::move(pts));
  }
  if (stats) stats->dropped_short_strands += dropped;
  return model;
}

std::vector<std::byte> write_data_file(const HairModel& model) {
  std::vector<std::byte> out;
  put<int32_t>(out, static_cast<int32_t>(model.size()));
  for (size_t i = 0; i < model.size(); ++i) {
    auto pts = strand_world_f32(model, i);
    put<int32_t>(out, static_cast<int32_t>(pts.rows()));
    for (int k = 0; k < pts.rows(); ++k) {
      put<float>(out, pts(k, 0));
      put<float>(out, pts(k, 1));
      put<float>(out, pts(k, 2));
    }
  }
  return out;
}

Vec3 world_point(const HairModel& model, size_t strand, int k) {
  const Strand& s = model.strands[strand];
  Vec3 root = Vec3::Zero();
  if (model.root_relative && strand < model.roots.size()) root = model.roots[strand];
  return (s.points.row(k).transpose() + root) * model.source_scale;
}

std::string export_obj(const HairModel& model) {
  if (model.empty()) throw Error(ErrorCode::EmptyModel, "nothing to export");
  uint64_t total = 0;
  for (const Strand& s : model.strands) total += static_cast<uint64_t>(s.points.rows());

  std::string out;
  out.reserve(total * 40);
  out += "# hairkit strands\n# strands " + std::to_string(model.size()) + "\n# points " +
         std::to_string(total) + "\n";
  char line[96];
  for (size_t i = 0; i < model.size(); ++i) {
    for (int k = 0; k < model.strands[i].points.rows(); ++k) {
      Vec3 w = world_point(model, i, k);
      std::snprintf(line, sizeof(line), "v %.9g %.9g %.9g\n", w.x(), w.y(), w.z());
      out += line;
    }
  }
  uint64_t base = 1;
  for (const Strand& s : model.strands) {
    out += "l";
    for (int k = 0; k < s.points.rows(); ++k) out += " " + std::to_string(base + k);
    out += "\n";
    base += static_cast<uint64_t>(s.points.rows());
  }
  return out;
}

HairModel parse_obj(std::string_view text) {
  std::vector<Vec3> verts;
  HairModel model;
  std::istringstream in{std::string(text)};
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z))
        throw Error(ErrorCode::FormatError, "bad vertex at line " + std::to_string(line_no));
      verts.emplace_back(x, y, z);
    } else if (tag == "l") {
      std::vector<long> idx;
      long v;
      while (ls >> v) idx.push_back(v);
      if (idx.size() < 2) continue;
      PointMat pts(idx.size(), 3);
      for (size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] < 1 || static_cast<size_t>(idx[k]) > verts.size())
          throw Error(ErrorCode::FormatError,
                      "vertex index out of range at line " + std::to_string(line_no));
        pts.row(k) = verts[idx[k] - 1];
      }
      append_strand(model, std::move(pts));
    }
    // vt/vn/f lines are ignored: strands are polylines only.
  }
  return model;
}

Strand resample_strand(const Strand& strand, int L) {
  if (L < 2) throw Error(ErrorCode::WrongLength, "resample target must be >= 2 points");
  const auto& p = strand.points;
  const int n = static_cast<int>(p.rows());
  if (n < 2) throw Error(ErrorCode::DegenerateStrand, "strand has fewer than 2 points");

  std::vector<double> cum(n, 0.0);
  for (int i = 1; i < n; ++i) cum[i] = cum[i - 1] + (p.row(i) - p.row(i - 1)).norm();
  const double total = cum[n - 1];
  if (total <= 0.0) throw Error(ErrorCode::DegenerateStrand, "zero arc length");

  Strand out;
  out.points.resize(L, 3);
  out.points.row(0) = p.row(0);
  out.points.row(L - 1) = p.row(n - 1);
  int seg = 0;
  for (int j = 1; j + 1 < L; ++j) {
    const double target = total * j / (L - 1);
    while (seg < n - 2 && cum[seg + 1] < target) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double a = len > 0.0 ? (target - cum[seg]) / len : 0.0;
    out.points.row(j) = p.row(seg) + a * (p.row(seg + 1) - p.row(seg));
  }
  return out;
}

HairModel canonicalize(const HairModel& model, int L, const Eigen::Matrix4d& registration,
                       ParseStats* stats) {
  const bool registered = !registration.isIdentity(0.0);

  // World-space copies (current units), registration applied.
  std::vector<PointMat> world;
  world.reserve(model.size());
  int dropped = 0;
  for (size_t i = 0; i < model.size(); ++i) {
    const Strand& s = model.strands[i];
    if (s.points.rows() < 2) {
      ++dropped;
      continue;
    }
    PointMat pts = s.points;
    if (model.root_relative && i < model.roots.size())
      pts.rowwise() += model.roots[i].transpose();
    if (registered) {
      for (int k = 0; k < pts.rows(); ++k) {
        Eigen::Vector4d h(pts(k, 0), pts(k, 1), pts(k, 2), 1.0);
        pts.row(k) = (registration * h).head<3>();
      }
    }
    double len = 0.0;
    for (int k = 1; k < pts.rows(); ++k) len += (pts.row(k) - pts.row(k - 1)).norm();
    if (len <= 0.0) {  // all-coincident stub: resampling has no direction to follow
      ++dropped;
      continue;
    }
    world.push_back(std::move(pts));
  }
  if (stats) stats->dropped_short_strands += dropped;

  HairModel out;
  out.root_relative = true;
  out.source_scale = model.source_scale;
  if (world.empty()) return out;

  for (PointMat& pts : world) {
    Strand tmp;
    tmp.points = std::move(pts);
    pts = resample_strand(tmp, L).points;
  }

  // Normalize the head bounding sphere (center = AABB center, scaling about
  // the origin) to radius 10.
  Vec3 lo = world[0].row(0), hi = world[0].row(0);
  for (const PointMat& pts : world) {
    lo = lo.cwiseMin(pts.colwise().minCoeff().transpose());
    hi = hi.cwiseMax(pts.colwise().maxCoeff().transpose());
  }
  const Vec3 center = 0.5 * (lo + hi);
  double radius = 0.0;
  for (const PointMat& pts : world)
    for (int k = 0; k < pts.rows(); ++k)
      radius = std::max(radius, (pts.row(k).transpose() - center).norm());
  const double scale = radius > 0.0 ? 10.0 / radius : 1.0;
  out.source_scale = model.source_scale / scale;

  out.strands.reserve(world.size());
  out.roots.reserve(world.size());
  for (PointMat& pts : world) {
    pts *= scale;
    const Vec3 root = pts.row(0);
    pts.rowwise() -= root.transpose();
    Strand s;
    s.points = std::move(pts);
    out.roots.push_back(root);
    out.strands.push_back(std::move(s));
  }
  return out;
}

HairModel load_model(const std::filesystem::path& path, ParseStats* stats) {
  const auto ext = path.extension().string();
  if (ext != ".hair" && ext != ".data" && ext != ".obj")
    throw Error(ErrorCode::FormatError, "unknown model extension: " + ext);
  auto bytes = read_file(path);
  if (ext == ".hair") return parse_hair_binary(bytes, stats);
  if (ext == ".data") return parse_data_file(bytes, stats);
  return parse_obj(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

void save_model(const std::filesystem::path& path, const HairModel& model) {
  const auto ext = path.extension().string();
  if (ext == ".hair") return write_file_atomic(path, write_hair_binary(model));
  if (ext == ".data") return write_file_atomic(path, write_data_file(model));
  if (ext == ".obj") return write_file_atomic(path, export_obj(model));
  throw Error(ErrorCode::FormatError, "unknown model extension: " + ext);
}

std::vector<std::byte> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  in.seekg(0, std::ios::end);
  std::vector<std::byte> bytes(static_cast<size_t>(in.tellg()));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw Error(ErrorCode::IoError, "short read from " + path.string());
  return bytes;
}

std::string read_file_text(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  static std::mt19937_64 rng{std::random_device{}()};
  fs::path tmp = path;
  tmp += ".tmp-" + std::to_string(rng());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot create " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::IoError, "short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path,
                    std::span(reinterpret_cast<const std::byte*>(text.data()), text.size()));
}

}  // namespace hairkit::io
