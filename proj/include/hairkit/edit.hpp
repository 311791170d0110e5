#pragma once

#include <string>
#include <string_view>

#include "hairkit/codec.hpp"
#include "hairkit/scalp.hpp"
#include "hairkit/types.hpp"

namespace hairkit::edit {

// decode(truncate(encode(s), n)) per strand; roots unchanged.
HairModel smooth_hair(const HairModel& model, const codec::StrandBasis& basis, int n);

enum class TransferMode {
  TexelAligned,  // both models baked to textures on a shared grid (default)
  IndexAligned,  // equal strand counts, per-index transfer (unbaked wigs)
};

struct TransferOptions {
  int split = 10;
  TransferMode mode = TransferMode::TexelAligned;
  int texture_width = 256, texture_height = 256;
  double epsilon = 0.01;
};

// Low coefficients from structure_src, high coefficients from detail_src,
// decoded at structure_src's roots.
HairModel transfer_style(const HairModel& structure_src, const HairModel& detail_src,
                         const codec::StrandBasis& basis, const TransferOptions& opts = {});

struct ParamPair {
  VecX theta, beta;
};

enum class InterpMode { Joint, ThetaOnly, BetaOnly };

// Linear interpolation of the selected blocks; unselected blocks copy from a.
ParamPair interpolate_params(const ParamPair& a, const ParamPair& b, double t,
                             InterpMode mode = InterpMode::Joint);

// Plain-text key=value recipe for the CLI edit subcommands.
struct EditRecipe {
  std::string operation;  // smooth | transfer | interp
  int n = 10;             // smooth: retained coefficients
  int split = 10;
  double t = 0.0;
  std::string mode;       // transfer: texel|index; interp: joint|theta|beta
  std::string source_a, source_b;
};

EditRecipe parse_recipe(std::string_view text);
std::string write_recipe(const EditRecipe& recipe);

}  // namespace hairkit::edit
