#include "hairkit/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "hairkit/io.hpp"
#include "hairkit/pca.hpp"
#include "hairkit/synthetic.hpp"
#include "wire.hpp"

namespace hairkit::model {

namespace {

using texture::GeometryTexture;

void check_space(const TexturePCA& space) {
  if (space.dim < 1 || space.mean.size() != space.flat_size() ||
      space.components.rows() != space.dim || space.components.cols() != space.flat_size())
    throw Error(ErrorCode::DimensionMismatch, "texture space not fitted");
}

// Flattening order: data row-major (row, column, channel), then the baldness
// plane when the mask participates.
VecX flatten_texture(const GeometryTexture& tex, bool with_mask) {
  const size_t n = tex.data.size();
  VecX flat(static_cast<Eigen::Index>(n + (with_mask ? tex.baldness.size() : 0)));
  for (size_t i = 0; i < n; ++i) flat[static_cast<Eigen::Index>(i)] = tex.data[i];
  if (with_mask)
    for (size_t i = 0; i < tex.baldness.size(); ++i)
      flat[static_cast<Eigen::Index>(n + i)] = tex.baldness[i];
  return flat;
}

GeometryTexture unflatten_texture(const VecX& flat, const TexturePCA& space) {
  GeometryTexture tex = GeometryTexture::zeros(space.width, space.height, space.channels);
  const size_t n = tex.data.size();
  for (size_t i = 0; i < n; ++i) tex.data[i] = static_cast<float>(flat[static_cast<Eigen::Index>(i)]);
  if (space.has_mask)
    for (size_t i = 0; i < tex.baldness.size(); ++i)
      tex.baldness[i] = static_cast<float>(flat[static_cast<Eigen::Index>(n + i)]);
  return tex;
}

TexturePCA fit_space(const std::vector<GeometryTexture>& corpus, int dim, bool with_mask,
                     const char* what) {
  if (corpus.size() < 2)
    throw Error(ErrorCode::TooFewSamples, std::string(what) + " space needs at least 2 textures");
  if (dim < 1) throw Error(ErrorCode::DimensionMismatch, "space dimension must be positive");
  const GeometryTexture& first = corpus.front();
  for (const GeometryTexture& t : corpus)
    if (t.width != first.width || t.height != first.height || t.channels != first.channels)
      throw Error(ErrorCode::ShapeMismatch, std::string(what) + " corpus shapes differ");

  const Eigen::Index n = static_cast<Eigen::Index>(corpus.size());
  MatX rows(n, flatten_texture(first, with_mask).size());
  for (Eigen::Index i = 0; i < n; ++i)
    rows.row(i) = flatten_texture(corpus[i], with_mask).transpose();

  pca::Result res = pca::fit_svd(rows, dim, pca::Padding::Zero);
  TexturePCA space;
  space.width = first.width;
  space.height = first.height;
  space.channels = first.channels;
  space.has_mask = with_mask;
  space.dim = dim;
  space.mean = std::move(res.mean);
  space.components = std::move(res.components);
  space.variance = std::move(res.variance);
  space.total_variance = res.total_variance;
  space.rank = res.rank;
  return space;
}

// Bilinear parents of an output texel center on the guide grid, edge-clamped.
// When the clamp collapses an axis (both parents identical), the canonical
// convention puts the whole axis weight on the lower parent; fit_upsampler
// uses the same convention, so exact-bilinear corpora round-trip.
struct Parents {
  int x0, x1, y0, y1;
  double fx, fy;
};

Parents parents_of(int col, int row, int gw, int gh, int ow, int oh) {
  Parents p;
  const double x = std::clamp((col + 0.5) * gw / ow - 0.5, 0.0, gw - 1.0);
  const double y = std::clamp((row + 0.5) * gh / oh - 0.5, 0.0, gh - 1.0);
  p.x0 = static_cast<int>(std::floor(x));
  p.y0 = static_cast<int>(std::floor(y));
  p.x1 = std::min(p.x0 + 1, gw - 1);
  p.y1 = std::min(p.y0 + 1, gh - 1);
  p.fx = p.x1 == p.x0 ? 0.0 : x - p.x0;
  p.fy = p.y1 == p.y0 ? 0.0 : y - p.y0;
  return p;
}

int nearest_guide_texel(int col, int row, int gw, int gh, int ow, int oh) {
  const int gc = texture::texel_of((col + 0.5) / ow, gw);
  const int gr = texture::texel_of((row + 0.5) / oh, gh);
  return gr * gw + gc;
}

void check_factor(const GeometryTexture& guide, int factor) {
  if (factor < 1 || guide.width < 1 || guide.height < 1)
    throw Error(ErrorCode::WrongShape, "bad upsample factor");
}

}  // namespace

GeometryTexture downsample_guide(const GeometryTexture& full, int factor, int low_channels) {
  if (factor < 1 || full.width % factor != 0 || full.height % factor != 0)
    throw Error(ErrorCode::WrongShape, "texture resolution is not a multiple of the factor");
  if (low_channels < 1 || low_channels > full.channels)
    throw Error(ErrorCode::WrongChannelCount, "low channel count exceeds the texture");

  GeometryTexture guide =
      GeometryTexture::zeros(full.width / factor, full.height / factor, low_channels);
  VecX accum(low_channels);
  for (int gr = 0; gr < guide.height; ++gr)
    for (int gc = 0; gc < guide.width; ++gc) {
      accum.setZero();
      int hairy = 0;
      // Average the non-bald texels of the block; fully bald blocks average
      // everything (all texels hold the bald special vector) and stay bald.
      for (int pass = 0; pass < 2 && hairy == 0; ++pass) {
        const bool want_bald = pass == 1;
        for (int r = gr * factor; r < (gr + 1) * factor; ++r)
          for (int c = gc * factor; c < (gc + 1) * factor; ++c) {
            if (full.is_bald(c, r) != want_bald) continue;
            const float* src = full.at(c, r);
            for (int ch = 0; ch < low_channels; ++ch) accum[ch] += src[ch];
            ++hairy;
          }
        if (pass == 1) guide.bald(gc, gr) = 1.0f;
      }
      guide.set_texel(gc, gr, accum / std::max(hairy, 1));
    }
  return guide;
}

GeometryTexture upsample_nearest(const GeometryTexture& guide, int factor) {
  check_factor(guide, factor);
  GeometryTexture out =
      GeometryTexture::zeros(guide.width * factor, guide.height * factor, guide.channels);
  for (int row = 0; row < out.height; ++row)
    for (int col = 0; col < out.width; ++col) {
      const int gc = col / factor, gr = row / factor;
      std::copy(guide.at(gc, gr), guide.at(gc, gr) + guide.channels, out.at(col, row));
      out.bald(col, row) = guide.bald(gc, gr);
    }
  return out;
}

UpsamplerField bilinear_field(int guide_width, int guide_height, int out_width, int out_height,
                              int channels) {
  if (guide_width < 1 || guide_height < 1 || out_width < 1 || out_height < 1 || channels < 1)
    throw Error(ErrorCode::WrongShape, "bad upsampler field shape");
  UpsamplerField field;
  field.guide_width = guide_width;
  field.guide_height = guide_height;
  field.out_width = out_width;
  field.out_height = out_height;
  field.channels = channels;
  field.neighbors.reserve(field.texel_count());
  field.weights.reserve(field.texel_count());
  field.delta.assign(field.texel_count(), VecX::Zero(channels));
  for (int row = 0; row < out_height; ++row)
    for (int col = 0; col < out_width; ++col) {
      const Parents p = parents_of(col, row, guide_width, guide_height, out_width, out_height);
      field.neighbors.push_back({p.y0 * guide_width + p.x0, p.y0 * guide_width + p.x1,
                                 p.y1 * guide_width + p.x0, p.y1 * guide_width + p.x1});
      field.weights.emplace_back((1 - p.fx) * (1 - p.fy), p.fx * (1 - p.fy), (1 - p.fx) * p.fy,
                                 p.fx * p.fy);
    }
  return field;
}

GeometryTexture blend_upsample(const GeometryTexture& guide, const UpsamplerField& field) {
  if (guide.width != field.guide_width || guide.height != field.guide_height)
    throw Error(ErrorCode::ShapeMismatch, "guide does not match the upsampler field");
  if (guide.channels != field.channels)
    throw Error(ErrorCode::WrongChannelCount, "guide channels do not match the upsampler field");
  const int texels = field.guide_width * field.guide_height;
  GeometryTexture out =
      GeometryTexture::zeros(field.out_width, field.out_height, field.channels);
  VecX value(field.channels);
  for (int row = 0; row < out.height; ++row)
    for (int col = 0; col < out.width; ++col) {
      const size_t t = static_cast<size_t>(row) * out.width + col;
      value = field.delta[t];
      for (int n = 0; n < 4; ++n) {
        const int32_t g = field.neighbors[t][n];
        if (g < 0 || g >= texels)
          throw Error(ErrorCode::IndexOutOfRange, "upsampler neighbor index out of range");
        value += field.weights[t][n] * guide.texel(g % guide.width, g / guide.width);
      }
      out.set_texel(col, row, value);
      const int nearest = nearest_guide_texel(col, row, guide.width, guide.height, out.width,
                                              out.height);
      out.bald(col, row) = guide.bald(nearest % guide.width, nearest / guide.width);
    }
  return out;
}

GeometryTexture upsample_bilinear(const GeometryTexture& guide, int factor) {
  check_factor(guide, factor);
  return blend_upsample(guide, bilinear_field(guide.width, guide.height, guide.width * factor,
                                              guide.height * factor, guide.channels));
}

UpsamplerField fit_upsampler(
    const std::vector<std::pair<GeometryTexture, GeometryTexture>>& pairs, double ridge) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyCorpus, "upsampler fit needs training pairs");
  const auto& [g0, t0] = pairs.front();
  if (g0.channels != t0.channels)
    throw Error(ErrorCode::WrongChannelCount, "guide and target channel counts differ");
  for (const auto& [g, t] : pairs)
    if (g.width != g0.width || g.height != g0.height || t.width != t0.width ||
        t.height != t0.height || g.channels != g0.channels || t.channels != t0.channels)
      throw Error(ErrorCode::ShapeMismatch, "upsampler training pairs differ in shape");

  UpsamplerField field = bilinear_field(g0.width, g0.height, t0.width, t0.height, g0.channels);
  const int C = g0.channels;
  const Eigen::Index P = static_cast<Eigen::Index>(pairs.size());

  for (size_t t = 0; t < field.texel_count(); ++t) {
    const int col = static_cast<int>(t) % t0.width, row = static_cast<int>(t) / t0.width;
    // Collapse duplicate (edge-clamped) parents so the system stays identified;
    // the first occurrence carries the weight.
    std::array<int, 4> slot_of{};
    std::array<int32_t, 4> unique{};
    int m = 0;
    for (int n = 0; n < 4; ++n) {
      int found = -1;
      for (int u = 0; u < m; ++u)
        if (unique[u] == field.neighbors[t][n]) found = u;
      if (found < 0) {
        unique[m] = field.neighbors[t][n];
        found = m++;
      }
      slot_of[n] = found;
    }

    MatX H = MatX::Zero(m + C, m + C);
    VecX rhs = VecX::Zero(m + C);
    MatX G(C, m);
    for (Eigen::Index p = 0; p < P; ++p) {
      const GeometryTexture& guide = pairs[p].first;
      for (int u = 0; u < m; ++u)
        G.col(u) = guide.texel(unique[u] % guide.width, unique[u] / guide.width);
      const VecX target = pairs[p].second.texel(col, row);
      H.topLeftCorner(m, m).noalias() += G.transpose() * G;
      H.topRightCorner(m, C) += G.transpose();
      H.bottomLeftCorner(C, m) += G;
      rhs.head(m).noalias() += G.transpose() * target;
      rhs.tail(C) += target;
    }
    H.bottomRightCorner(C, C) += (static_cast<double>(P) + ridge) * MatX::Identity(C, C);

    const VecX z = H.completeOrthogonalDecomposition().solve(rhs);
    field.weights[t].setZero();
    for (int u = 0; u < m; ++u)
      for (int n = 0; n < 4; ++n)
        if (slot_of[n] == u) {
          field.weights[t][n] = z[u];  // first occurrence carries the weight
          break;
        }
    field.delta[t] = z.tail(C);
  }
  return field;
}

TexturePCA fit_guide_space(const std::vector<GeometryTexture>& guides, int dim) {
  return fit_space(guides, dim, /*with_mask=*/true, "guide");
}

TexturePCA fit_residual_space(const std::vector<GeometryTexture>& residuals, int dim) {
  return fit_space(residuals, dim, /*with_mask=*/false, "residual");
}

GeometryTexture synth_guide(const VecX& theta, const TexturePCA& space) {
  check_space(space);
  if (theta.size() != space.dim)
    throw Error(ErrorCode::DimensionMismatch, "theta does not match the space dimension");
  return unflatten_texture(space.mean + space.components.transpose() * theta, space);
}

GeometryTexture synth_residual(const VecX& beta, const TexturePCA& space) {
  return synth_guide(beta, space);
}

VecX encode_texture(const GeometryTexture& tex, const TexturePCA& space) {
  check_space(space);
  if (tex.width != space.width || tex.height != space.height || tex.channels != space.channels)
    throw Error(ErrorCode::ShapeMismatch, "texture does not match the space shape");
  return space.components * (flatten_texture(tex, space.has_mask) - space.mean);
}

GeometryTexture compose_texture(const VecX& theta, const VecX& beta, const ModelAssets& assets) {
  const GeometryTexture guide = synth_guide(theta, assets.guide_space);
  const GeometryTexture low = blend_upsample(guide, assets.upsampler);
  const GeometryTexture residual = synth_residual(beta, assets.residual_space);
  if (residual.width != low.width || residual.height != low.height)
    throw Error(ErrorCode::AssetMismatch, "residual space does not match the upsampler output");
  return texture::concat_channels(low, residual);
}

HairModel evaluate_model(const VecX& theta, const VecX& beta, const scalp::RootSet& roots,
                         const ModelAssets& assets, bool keep_bald) {
  const GeometryTexture tex = compose_texture(theta, beta, assets);
  return texture::decode_at_roots(tex, roots, assets.basis, /*drop_bald=*/!keep_bald);
}

VecX sample_params(const TexturePCA& space, uint64_t seed, double scale, bool plain_gaussian) {
  check_space(space);
  synthetic::Rng rng(seed);
  VecX out(space.dim);
  for (int i = 0; i < space.dim; ++i) {
    const double sd = plain_gaussian ? 1.0 : std::sqrt(std::max(space.variance[i], 0.0));
    out[i] = rng.normal() * scale * sd;
  }
  return out;
}

void save_texture_pca(const std::filesystem::path& path, const TexturePCA& space) {
  wire::Writer w;
  w.magic("PTP1");
  w.u32(static_cast<uint32_t>(space.dim));
  w.u32(static_cast<uint32_t>(space.width));
  w.u32(static_cast<uint32_t>(space.height));
  w.u32(static_cast<uint32_t>(space.channels));
  w.u32(space.has_mask ? 1 : 0);
  w.f64(space.mean.data(), space.mean.size());
  for (int i = 0; i < space.dim; ++i)
    w.f64(space.components.row(i).eval().data(), space.components.cols());
  w.f64(space.variance.data(), space.variance.size());
  w.f64(&space.total_variance, 1);
  w.u32(static_cast<uint32_t>(space.rank));
  io::write_file_atomic(path, w.bytes);
}

TexturePCA load_texture_pca(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  wire::Reader r{bytes, path.string()};
  r.expect_magic("PTP1");
  TexturePCA space;
  space.dim = static_cast<int>(r.u32());
  space.width = static_cast<int>(r.u32());
  space.height = static_cast<int>(r.u32());
  space.channels = static_cast<int>(r.u32());
  space.has_mask = r.u32() != 0;
  if (space.dim < 1 || space.width < 1 || space.height < 1 || space.channels < 1)
    throw Error(ErrorCode::FormatError, "bad texture-space header in " + path.string());
  space.mean.resize(space.flat_size());
  r.f64(space.mean.data(), space.mean.size());
  space.components.resize(space.dim, space.flat_size());
  VecX rowbuf(space.flat_size());
  for (int i = 0; i < space.dim; ++i) {
    r.f64(rowbuf.data(), rowbuf.size());
    space.components.row(i) = rowbuf;
  }
  // Trailing variance/total/rank blocks are optional for older writers.
  if (r.remaining() >= static_cast<size_t>(space.dim) * 8) {
    space.variance.resize(space.dim);
    r.f64(space.variance.data(), space.dim);
  } else {
    space.variance = VecX::Zero(space.dim);
  }
  if (r.remaining() >= 8)
    r.f64(&space.total_variance, 1);
  else
    space.total_variance = space.variance.sum();
  space.rank = r.remaining() >= 4 ? static_cast<int>(r.u32()) : space.dim;
  return space;
}

void save_upsampler(const std::filesystem::path& path, const UpsamplerField& field) {
  wire::Writer w;
  w.magic("PUF1");
  w.u32(static_cast<uint32_t>(field.guide_width));
  w.u32(static_cast<uint32_t>(field.guide_height));
  w.u32(static_cast<uint32_t>(field.out_width));
  w.u32(static_cast<uint32_t>(field.out_height));
  w.u32(static_cast<uint32_t>(field.channels));
  for (size_t t = 0; t < field.texel_count(); ++t) {
    w.u32(static_cast<uint32_t>(field.neighbors[t][0]));
    w.u32(static_cast<uint32_t>(field.neighbors[t][1]));
    w.u32(static_cast<uint32_t>(field.neighbors[t][2]));
    w.u32(static_cast<uint32_t>(field.neighbors[t][3]));
    w.f64(field.weights[t].data(), 4);
    w.f64(field.delta[t].data(), field.channels);
  }
  io::write_file_atomic(path, w.bytes);
}

UpsamplerField load_upsampler(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  wire::Reader r{bytes, path.string()};
  r.expect_magic("PUF1");
  UpsamplerField field;
  field.guide_width = static_cast<int>(r.u32());
  field.guide_height = static_cast<int>(r.u32());
  field.out_width = static_cast<int>(r.u32());
  field.out_height = static_cast<int>(r.u32());
  field.channels = static_cast<int>(r.u32());
  if (field.guide_width < 1 || field.guide_height < 1 || field.out_width < 1 ||
      field.out_height < 1 || field.channels < 1)
    throw Error(ErrorCode::FormatError, "bad upsampler header in " + path.string());
  const int texels = field.guide_width * field.guide_height;
  field.neighbors.resize(field.texel_count());
  field.weights.resize(field.texel_count());
  field.delta.assign(field.texel_count(), VecX::Zero(field.channels));
  for (size_t t = 0; t < field.texel_count(); ++t) {
    for (int n = 0; n < 4; ++n) {
      field.neighbors[t][n] = static_cast<int32_t>(r.u32());
      if (field.neighbors[t][n] < 0 || field.neighbors[t][n] >= texels)
        throw Error(ErrorCode::IndexOutOfRange, "upsampler neighbor out of range in " +
                                                    path.string());
    }
    r.f64(field.weights[t].data(), 4);
    r.f64(field.delta[t].data(), field.channels);
  }
  if (r.remaining() != 0)
    throw Error(ErrorCode::FormatError, "trailing bytes in " + path.string());
  return field;
}

void save_assets(const std::filesystem::path& dir, const ModelAssets& assets) {
  std::filesystem::create_directories(dir);
  codec::save_basis(dir / "strand_basis.psb", assets.basis);
  save_texture_pca(dir / "guide_space.ptp", assets.guide_space);
  save_texture_pca(dir / "residual_space.ptp", assets.residual_space);
  save_upsampler(dir / "upsampler.puf", assets.upsampler);

  std::ostringstream manifest;
  manifest << "format: hairkit-assets 1\n"
           << "basis: strand_basis.psb L=" << assets.basis.L << " coeffs=" << assets.basis.dim()
           << "\n"
           << "guide_space: guide_space.ptp dim=" << assets.guide_space.dim << " shape="
           << assets.guide_space.width << "x" << assets.guide_space.height << "x"
           << assets.guide_space.channels << " mask=1\n"
           << "residual_space: residual_space.ptp dim=" << assets.residual_space.dim << " shape="
           << assets.residual_space.width << "x" << assets.residual_space.height << "x"
           << assets.residual_space.channels << " mask=0\n"
           << "upsampler: upsampler.puf guide=" << assets.upsampler.guide_width << "x"
           << assets.upsampler.guide_height << " out=" << assets.upsampler.out_width << "x"
           << assets.upsampler.out_height << " channels=" << assets.upsampler.channels << "\n"
           << "channel_split: low-first " << assets.upsampler.channels << "+"
           << assets.residual_space.channels << "\n"
           << "mask_policy: guide mask, threshold 0.5, nearest-upsampled, frozen after bake\n";
  io::write_file_atomic(dir / "manifest.txt", manifest.str());
}

ModelAssets load_assets(const std::filesystem::path& dir) {
  const std::string manifest = io::read_file_text(dir / "manifest.txt");
  if (manifest.rfind("format: hairkit-assets", 0) != 0)
    throw Error(ErrorCode::FormatError, "unrecognized asset manifest in " + dir.string());

  ModelAssets assets;
  assets.basis = codec::load_basis(dir / "strand_basis.psb");
  assets.guide_space = load_texture_pca(dir / "guide_space.ptp");
  assets.residual_space = load_texture_pca(dir / "residual_space.ptp");
  assets.upsampler = load_upsampler(dir / "upsampler.puf");

  const auto& up = assets.upsampler;
  if (assets.guide_space.width != up.guide_width ||
      assets.guide_space.height != up.guide_height ||
      assets.guide_space.channels != up.channels || !assets.guide_space.has_mask ||
      assets.residual_space.width != up.out_width ||
      assets.residual_space.height != up.out_height || assets.residual_space.has_mask ||
      assets.basis.dim() != up.channels + assets.residual_space.channels)
    throw Error(ErrorCode::AssetMismatch, "asset bundle shapes disagree in " + dir.string());
  return assets;
}

}  // namespace hairkit::model
