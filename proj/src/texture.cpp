#include "hairkit/texture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "hairkit/fit.hpp"
#include "hairkit/io.hpp"
#include "hairkit/metrics.hpp"
#include "png.hpp"
#include "wire.hpp"

namespace hairkit::texture {

namespace {

constexpr double kHuberDelta = 1e-3;  // smooth-loss transition inside the bake

void check_shape(int width, int height) {
  if (width < 1 || height < 1)
    throw Error(ErrorCode::WrongShape, "texture dimensions must be positive");
}

const std::vector<Vec2>& uv_of(const HairModel& model) {
  if (!model.roots_uv || model.roots_uv->size() != model.size())
    throw Error(ErrorCode::MissingRoots, "model carries no per-strand scalp uv");
  return *model.roots_uv;
}

}  // namespace

GeometryTexture GeometryTexture::zeros(int width, int height, int channels) {
  check_shape(width, height);
  if (channels < 1) throw Error(ErrorCode::WrongChannelCount, "channel count must be positive");
  GeometryTexture tex;
  tex.width = width;
  tex.height = height;
  tex.channels = channels;
  tex.data.assign(static_cast<size_t>(width) * height * channels, 0.0f);
  tex.baldness.assign(static_cast<size_t>(width) * height, 0.0f);
  return tex;
}

VecX GeometryTexture::texel(int col, int row) const {
  const float* p = at(col, row);
  VecX out(channels);
  for (int c = 0; c < channels; ++c) out[c] = p[c];
  return out;
}

void GeometryTexture::set_texel(int col, int row, const VecX& value) {
  if (value.size() != channels)
    throw Error(ErrorCode::DimensionMismatch, "texel value does not match the channel count");
  float* p = at(col, row);
  for (int c = 0; c < channels; ++c) p[c] = static_cast<float>(value[c]);
}

int texel_of(double coord, int count) {
  return std::clamp(static_cast<int>(std::floor(coord * count)), 0, count - 1);
}

Vec2 texel_center(int col, int row, int width, int height) {
  return {(col + 0.5) / width, (row + 0.5) / height};
}

GeometryTexture init_texture(const HairModel& model, const codec::StrandBasis& basis, int width,
                             int height, double epsilon) {
  check_shape(width, height);
  GeometryTexture tex = GeometryTexture::zeros(width, height, basis.dim());
  const VecX bald = codec::bald_coeffs(basis);
  for (int row = 0; row < height; ++row)
    for (int col = 0; col < width; ++col) {
      tex.set_texel(col, row, bald);
      tex.bald(col, row) = 1.0f;
    }
  if (model.empty()) return tex;

  const auto& uv = uv_of(model);

  // Bucket the roots on the texel grid so each texel only inspects nearby
  // cells, expanding ring by ring until no closer root can exist.
  std::vector<std::vector<int>> cells(tex.texel_count());
  for (size_t i = 0; i < uv.size(); ++i)
    cells[static_cast<size_t>(texel_of(uv[i].y(), height)) * width + texel_of(uv[i].x(), width)]
        .push_back(static_cast<int>(i));

  const double min_cell = std::min(1.0 / width, 1.0 / height);
  const int max_ring = std::max(width, height);
  std::vector<VecX> encoded(model.size());  // filled lazily for winning roots

  for (int row = 0; row < height; ++row)
    for (int col = 0; col < width; ++col) {
      const Vec2 center = texel_center(col, row, width, height);
      double best_d2 = std::numeric_limits<double>::max();
      int best = -1;
      for (int r = 0; r <= max_ring; ++r) {
        if (r > 0) {
          const double reach = std::min(std::sqrt(best_d2), epsilon);
          if ((r - 0.5) * min_cell > reach) break;  // ring is entirely too far
        }
        for (int by = row - r; by <= row + r; ++by) {
          if (by < 0 || by >= height) continue;
          const int step = (by == row - r || by == row + r) ? 1 : 2 * r;
          for (int bx = col - r; bx <= col + r; bx += std::max(step, 1)) {
            if (bx < 0 || bx >= width) continue;
            for (int idx : cells[static_cast<size_t>(by) * width + bx]) {
              const double d2 = (uv[idx] - center).squaredNorm();
              if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
                best_d2 = d2;
                best = idx;
              }
            }
          }
        }
      }
      if (best >= 0 && best_d2 <= epsilon * epsilon) {
        if (encoded[best].size() == 0) encoded[best] = codec::encode(model.strands[best], basis);
        tex.set_texel(col, row, encoded[best]);
        tex.bald(col, row) = 0.0f;
      }
    }
  return tex;
}

TextureFitResult optimize_texture(const GeometryTexture& texture, const HairModel& model,
                                  const codec::StrandBasis& basis, int iters, double lr) {
  if (texture.channels != basis.dim())
    throw Error(ErrorCode::WrongChannelCount, "texture channels do not match the basis");
  TextureFitResult result{texture, {}};
  if (model.empty() || iters <= 0) return result;
  const auto& uv = uv_of(model);

  // Strands grouped by the texel their root samples; bald texels stay frozen.
  struct Active {
    int col, row;
    std::vector<int> strands;
  };
  std::unordered_map<size_t, size_t> index;
  std::vector<Active> active;
  for (size_t i = 0; i < model.size(); ++i) {
    const int col = texel_of(uv[i].x(), texture.width);
    const int row = texel_of(uv[i].y(), texture.height);
    if (texture.is_bald(col, row)) continue;
    const size_t key = static_cast<size_t>(row) * texture.width + col;
    auto [it, fresh] = index.try_emplace(key, active.size());
    if (fresh) active.push_back({col, row, {}});
    active[it->second].strands.push_back(static_cast<int>(i));
  }
  if (active.empty()) return result;

  std::vector<PointMat> gt(model.size());
  size_t constrained = 0;
  for (const Active& a : active)
    for (int s : a.strands) {
      gt[s] = model.strands[s].points;
      if (!model.root_relative) gt[s].rowwise() -= gt[s].row(0);
      if (gt[s].rows() != basis.L)
        throw Error(ErrorCode::WrongLength, "model strands do not match basis.L");
      ++constrained;
    }

  const codec::StrandDecoder decoder(basis);
  const int C = texture.channels;
  VecX params(static_cast<Eigen::Index>(active.size()) * C);
  for (size_t a = 0; a < active.size(); ++a)
    params.segment(static_cast<Eigen::Index>(a) * C, C) =
        result.texture.texel(active[a].col, active[a].row);

  auto state = fit::OptimState::init(params.size(), {.lr = lr});
  VecX grads(params.size());
  result.loss_trace.reserve(iters);
  const double norm = 1.0 / static_cast<double>(constrained);

  for (int iter = 0; iter < iters; ++iter) {
    double loss = 0.0;
    for (size_t a = 0; a < active.size(); ++a) {
      const VecX gamma = params.segment(static_cast<Eigen::Index>(a) * C, C);
      const PointMat pts = decoder.decode_points(gamma);
      PointMat accum = PointMat::Zero(basis.L, 3);
      PointMat g(basis.L, 3);
      for (int s : active[a].strands) {
        loss += metrics::smooth_geometric_loss(pts, gt[s], kHuberDelta, &g);
        accum += g;
      }
      grads.segment(static_cast<Eigen::Index>(a) * C, C) = decoder.backprop(accum);
    }
    loss *= norm;
    grads *= norm;
    if (!grads.allFinite())
      throw Error(ErrorCode::NonFiniteGradient, "texture fit produced a non-finite gradient");
    result.loss_trace.push_back(loss);
    fit::adam_step(params, grads, state);
  }

  for (size_t a = 0; a < active.size(); ++a)
    result.texture.set_texel(active[a].col, active[a].row,
                             params.segment(static_cast<Eigen::Index>(a) * C, C));
  return result;
}

std::vector<codec::StrandCoeffs> sample(const GeometryTexture& texture,
                                        const scalp::RootSet& roots) {
  std::vector<codec::StrandCoeffs> out;
  out.reserve(roots.size());
  for (const Vec2& uv : roots.uv)
    out.push_back(texture.texel(texel_of(uv.x(), texture.width), texel_of(uv.y(), texture.height)));
  return out;
}

HairModel decode_at_roots(const GeometryTexture& texture, const scalp::RootSet& roots,
                          const codec::StrandBasis& basis, bool drop_bald) {
  if (texture.channels != basis.dim())
    throw Error(ErrorCode::WrongChannelCount, "texture channels do not match the basis");
  const codec::StrandDecoder decoder(basis);
  HairModel model;
  model.root_relative = true;
  model.roots_uv.emplace();
  for (size_t i = 0; i < roots.size(); ++i) {
    const int col = texel_of(roots.uv[i].x(), texture.width);
    const int row = texel_of(roots.uv[i].y(), texture.height);
    Strand strand;
    if (texture.is_bald(col, row)) {
      if (drop_bald) continue;
      strand.points = PointMat::Zero(basis.L, 3);  // mask wins: the exact zero strand
    } else {
      strand = decoder.decode(texture.texel(col, row));
    }
    model.strands.push_back(std::move(strand));
    model.roots.push_back(roots.positions3d[i]);
    model.roots_uv->push_back(roots.uv[i]);
  }
  return model;
}

std::pair<GeometryTexture, GeometryTexture> split_channels(const GeometryTexture& texture,
                                                           int low_channels) {
  if (low_channels < 1 || low_channels >= texture.channels)
    throw Error(ErrorCode::WrongChannelCount,
                "split point must leave both sides at least one channel");
  GeometryTexture low = GeometryTexture::zeros(texture.width, texture.height, low_channels);
  GeometryTexture res =
      GeometryTexture::zeros(texture.width, texture.height, texture.channels - low_channels);
  for (int row = 0; row < texture.height; ++row)
    for (int col = 0; col < texture.width; ++col) {
      const float* src = texture.at(col, row);
      std::copy(src, src + low_channels, low.at(col, row));
      std::copy(src + low_channels, src + texture.channels, res.at(col, row));
    }
  low.baldness = texture.baldness;
  res.baldness = texture.baldness;
  return {std::move(low), std::move(res)};
}

GeometryTexture concat_channels(const GeometryTexture& low, const GeometryTexture& res) {
  if (low.width != res.width || low.height != res.height)
    throw Error(ErrorCode::ShapeMismatch, "channel groups differ in resolution");
  GeometryTexture out = GeometryTexture::zeros(low.width, low.height, low.channels + res.channels);
  for (int row = 0; row < low.height; ++row)
    for (int col = 0; col < low.width; ++col) {
      float* dst = out.at(col, row);
      std::copy(low.at(col, row), low.at(col, row) + low.channels, dst);
      std::copy(res.at(col, row), res.at(col, row) + res.channels, dst + low.channels);
    }
  out.baldness = low.baldness;  // the low group carries the mask
  return out;
}

void save_texture(const std::filesystem::path& path, const GeometryTexture& texture) {
  wire::Writer w;
  w.magic("PGT1");
  w.u32(static_cast<uint32_t>(texture.width));
  w.u32(static_cast<uint32_t>(texture.height));
  w.u32(static_cast<uint32_t>(texture.channels));
  w.f32(texture.data.data(), texture.data.size());
  w.f32(texture.baldness.data(), texture.baldness.size());
  io::write_file_atomic(path, w.bytes);
}

GeometryTexture load_texture(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  wire::Reader r{bytes, path.string()};
  r.expect_magic("PGT1");
  const uint32_t width = r.u32(), height = r.u32(), channels = r.u32();
  if (width < 1 || height < 1 || channels < 1)
    throw Error(ErrorCode::WrongShape, "bad texture header in " + path.string());
  GeometryTexture tex =
      GeometryTexture::zeros(static_cast<int>(width), static_cast<int>(height),
                             static_cast<int>(channels));
  r.f32(tex.data.data(), tex.data.size());
  r.f32(tex.baldness.data(), tex.baldness.size());
  if (r.remaining() != 0)
    throw Error(ErrorCode::FormatError, "trailing bytes in " + path.string());
  return tex;
}

std::vector<std::byte> png_preview(const GeometryTexture& texture) {
  const int tiles = texture.channels + 1;  // baldness last
  const int across = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(tiles))));
  const int down = (tiles + across - 1) / across;
  const int W = across * texture.width, H = down * texture.height;
  std::vector<uint8_t> pixels(static_cast<size_t>(W) * H, 0);

  for (int t = 0; t < tiles; ++t) {
    auto value = [&](int col, int row) {
      return t < texture.channels ? texture.at(col, row)[t] : texture.bald(col, row);
    };
    float lo = std::numeric_limits<float>::max(), hi = std::numeric_limits<float>::lowest();
    for (int row = 0; row < texture.height; ++row)
      for (int col = 0; col < texture.width; ++col) {
        lo = std::min(lo, value(col, row));
        hi = std::max(hi, value(col, row));
      }
    const float scale = hi > lo ? 255.0f / (hi - lo) : 0.0f;
    const int x0 = (t % across) * texture.width, y0 = (t / across) * texture.height;
    for (int row = 0; row < texture.height; ++row)
      for (int col = 0; col < texture.width; ++col)
        pixels[static_cast<size_t>(y0 + row) * W + x0 + col] =
            static_cast<uint8_t>(std::lround((value(col, row) - lo) * scale));
  }
  return detail::write_png_gray8(W, H, pixels);
}

}  // namespace hairkit::texture
