#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "hairkit/codec.hpp"
#include "hairkit/scalp.hpp"
#include "hairkit/texture.hpp"
#include "hairkit/types.hpp"

namespace hairkit::model {

// PCA space over flattened textures. Flattening order: data row-major (row,
// column, channel), then — when the mask participates — the baldness plane
// appended row-major. Rows beyond `rank` are zero-padded (dim may exceed the
// corpus size); padded rows carry zero variance.
struct TexturePCA {
  int width = 0, height = 0, channels = 0;
  bool has_mask = false;
  int dim = 0;
  VecX mean;        // flat_size()
  MatX components;  // dim x flat_size()
  VecX variance;    // dim
  double total_variance = 0.0;
  int rank = 0;

  int flat_size() const {
    return width * height * (channels + (has_mask ? 1 : 0));
  }
  bool zero_padded() const { return rank < dim; }
};

// Per-output-texel blend over 4 guide texels: out = sum_n w[n] guide[nbr[n]] + delta.
struct UpsamplerField {
  int guide_width = 0, guide_height = 0;
  int out_width = 0, out_height = 0;
  int channels = 0;
  std::vector<std::array<int32_t, 4>> neighbors;  // flat row-major guide indices
  std::vector<Eigen::Vector4d> weights;
  std::vector<VecX> delta;  // one length-`channels` vector per output texel

  size_t texel_count() const { return static_cast<size_t>(out_width) * out_height; }
};

// Block-average channels 0..low_channels-1 over the non-bald texels of each
// factor x factor block; fully bald blocks average all texels (which hold the
// bald special vector) and stay bald.
texture::GeometryTexture downsample_guide(const texture::GeometryTexture& full, int factor = 8,
                                          int low_channels = 10);

// factor x factor replication; the mask is replicated alongside.
texture::GeometryTexture upsample_nearest(const texture::GeometryTexture& guide, int factor = 8);

// Texel-center-aligned bilinear interpolation with edge clamp. The mask is
// upsampled nearest (baldness stays binary).
texture::GeometryTexture upsample_bilinear(const texture::GeometryTexture& guide, int factor = 8);

// The exact bilinear-parents field (delta = 0); upsample_bilinear is
// blend_upsample over this field, so the two agree identically.
UpsamplerField bilinear_field(int guide_width, int guide_height, int out_width, int out_height,
                              int channels);

texture::GeometryTexture blend_upsample(const texture::GeometryTexture& guide,
                                        const UpsamplerField& field);

// Ridge-regularized per-texel least squares over the corpus:
//   min_{w, delta} sum_pairs |G w + delta - t|^2 + 0.1 |delta|^2
// with neighbors fixed to the 4 bilinear parents; the minimum-norm solution is
// taken when the system is singular.
UpsamplerField fit_upsampler(
    const std::vector<std::pair<texture::GeometryTexture, texture::GeometryTexture>>& pairs,
    double ridge = 0.1);

TexturePCA fit_guide_space(const std::vector<texture::GeometryTexture>& guides, int dim = 512);
TexturePCA fit_residual_space(const std::vector<texture::GeometryTexture>& residuals,
                              int dim = 512);

// mean + theta^T components, reshaped. For spaces with a mask channel the
// synthesized mask is thresholded at 0.5 into the baldness plane (the
// continuous value is kept in the plane; is_bald applies the threshold).
texture::GeometryTexture synth_guide(const VecX& theta, const TexturePCA& space);
texture::GeometryTexture synth_residual(const VecX& beta, const TexturePCA& space);

// Orthogonal projection of a texture onto the space (training-side encode).
VecX encode_texture(const texture::GeometryTexture& tex, const TexturePCA& space);

struct ModelAssets {
  codec::StrandBasis basis;
  TexturePCA guide_space;     // has_mask = true
  TexturePCA residual_space;  // has_mask = false
  UpsamplerField upsampler;
};

// F(G(theta)) concatenated with D(beta): the full-resolution 64-channel
// texture. Baldness comes from the nearest-upsampled guide mask (the
// full-resolution map governs bald roots).
texture::GeometryTexture compose_texture(const VecX& theta, const VecX& beta,
                                         const ModelAssets& assets);

// M(theta, beta, R): sample the composed texture at the roots and decode.
// Bald roots decode to zero-length strands; they are dropped unless keep_bald.
HairModel evaluate_model(const VecX& theta, const VecX& beta, const scalp::RootSet& roots,
                         const ModelAssets& assets, bool keep_bald = false);

// Deterministic parameter sampling: standard normal per component scaled by
// `scale`, and — unless plain_gaussian — by the component standard deviation.
// Plain Gaussian sampling of a PCA space collapses to near-identical outputs;
// it is kept as a documented demonstration.
VecX sample_params(const TexturePCA& space, uint64_t seed, double scale = 1.0,
                   bool plain_gaussian = false);

// "PTP1" container: magic, uint32 dim, W, H, C, has_mask, float64 mean and
// components; trailing float64 variances, float64 total_variance and uint32
// rank follow for round-tripping (readers tolerate their absence).
void save_texture_pca(const std::filesystem::path& path, const TexturePCA& space);
TexturePCA load_texture_pca(const std::filesystem::path& path);

// "PUF1" container: magic, uint32 guide W/H, out W/H, C, then per output texel
// int32 neighbors[4], float64 weights[4], float64 delta[C].
void save_upsampler(const std::filesystem::path& path, const UpsamplerField& field);
UpsamplerField load_upsampler(const std::filesystem::path& path);

// Asset bundle: strand_basis.psb + guide_space.ptp + residual_space.ptp +
// upsampler.puf + manifest.txt (shapes, channel-split order, mask policy).
void save_assets(const std::filesystem::path& dir, const ModelAssets& assets);
ModelAssets load_assets(const std::filesystem::path& dir);

}  // namespace hairkit::model
