#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include "hairkit/codec.hpp"
#include "hairkit/scalp.hpp"
#include "hairkit/types.hpp"

namespace hairkit::texture {

// H x W grid of strand-coefficient vectors plus a baldness mask. Texel (i,j)
// covers uv [i/W,(i+1)/W) x [j/H,(j+1)/H) with center ((i+0.5)/W, (j+0.5)/H);
// i indexes u (columns), j indexes v (rows). Storage is float32 row-major
// (row, column, channel) to match the PGT1 container; math promotes to double.
struct GeometryTexture {
  int width = 0, height = 0, channels = 0;
  std::vector<float> data;      // height * width * channels
  std::vector<float> baldness;  // height * width, in [0,1]; >= 0.5 means bald

  static GeometryTexture zeros(int width, int height, int channels);

  float* at(int col, int row) { return data.data() + (static_cast<size_t>(row) * width + col) * channels; }
  const float* at(int col, int row) const {
    return data.data() + (static_cast<size_t>(row) * width + col) * channels;
  }
  float& bald(int col, int row) { return baldness[static_cast<size_t>(row) * width + col]; }
  float bald(int col, int row) const { return baldness[static_cast<size_t>(row) * width + col]; }
  bool is_bald(int col, int row) const { return bald(col, row) >= 0.5f; }

  VecX texel(int col, int row) const;
  void set_texel(int col, int row, const VecX& value);
  size_t texel_count() const { return static_cast<size_t>(width) * height; }
};

int texel_of(double coord, int count);  // floor(coord * count) clamped to [0, count)
Vec2 texel_center(int col, int row, int width, int height);

// Appendix-style two-step baking, step 1: each texel stores encode(strand of
// the nearest root) when that root is within uv distance epsilon of the texel
// center, else the bald special vector. Collisions resolve by smaller uv
// distance, ties by lower strand index. An empty model yields an all-bald
// texture.
GeometryTexture init_texture(const HairModel& model, const codec::StrandBasis& basis, int width,
                             int height, double epsilon = 0.01);

struct TextureFitResult {
  GeometryTexture texture;
  std::vector<double> loss_trace;  // one smooth-geo objective value per iteration
};

// Step 2: Adam refinement of the texels sampled by the model's roots, under
// the smooth geometric loss against the model's strands. Baldness is frozen
// after init; bald texels keep their special vector.
TextureFitResult optimize_texture(const GeometryTexture& texture, const HairModel& model,
                                  const codec::StrandBasis& basis, int iters = 500,
                                  double lr = 0.001);

// Nearest-texel lookup per root. Bald texels hold (and therefore yield) the
// zero-length special vector.
std::vector<codec::StrandCoeffs> sample(const GeometryTexture& texture,
                                        const scalp::RootSet& roots);

// Decode the texture at the given roots. Bald texels produce the exact zero
// strand; with drop_bald they are omitted from the output model.
HairModel decode_at_roots(const GeometryTexture& texture, const scalp::RootSet& roots,
                          const codec::StrandBasis& basis, bool drop_bald = false);

// Channel split at `low_channels` (default 10): returns (low, residual), both
// sharing the baldness mask. concat_channels is its inverse.
std::pair<GeometryTexture, GeometryTexture> split_channels(const GeometryTexture& texture,
                                                           int low_channels = 10);
GeometryTexture concat_channels(const GeometryTexture& low, const GeometryTexture& res);

// "PGT1" container: magic, uint32 W, H, C, float32 data (row, column,
// channel), float32 baldness.
void save_texture(const std::filesystem::path& path, const GeometryTexture& texture);
GeometryTexture load_texture(const std::filesystem::path& path);

// Inspection-only montage (one grayscale tile per channel, min-max normalized,
// baldness last); explicitly not a round-trip format.
std::vector<std::byte> png_preview(const GeometryTexture& texture);

}  // namespace hairkit::texture
