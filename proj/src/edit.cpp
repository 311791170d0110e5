#include "hairkit/edit.hpp"

#include <sstream>

#include "hairkit/texture.hpp"

namespace hairkit::edit {

HairModel smooth_hair(const HairModel& model, const codec::StrandBasis& basis, int n) {
  if (n < 0 || n > basis.dim())
    throw Error(ErrorCode::DimensionMismatch,
                "retained coefficient count must be in [0, " + std::to_string(basis.dim()) + "]");
  HairModel out = model;
  for (Strand& strand : out.strands)
    strand = codec::decode(codec::truncate(codec::encode(strand, basis), n), basis);
  return out;
}

namespace {

HairModel transfer_texel_aligned(const HairModel& structure_src, const HairModel& detail_src,
                                 const codec::StrandBasis& basis, const TransferOptions& opts) {
  const texture::GeometryTexture structure_tex = texture::init_texture(
      structure_src, basis, opts.texture_width, opts.texture_height, opts.epsilon);
  const texture::GeometryTexture detail_tex = texture::init_texture(
      detail_src, basis, opts.texture_width, opts.texture_height, opts.epsilon);

  HairModel out = structure_src;
  const auto& uv = *structure_src.roots_uv;  // init_texture guarantees presence
  for (size_t i = 0; i < out.size(); ++i) {
    const int col = texture::texel_of(uv[i].x(), structure_tex.width);
    const int row = texture::texel_of(uv[i].y(), structure_tex.height);
    const VecX merged = codec::transfer_detail(structure_tex.texel(col, row),
                                               detail_tex.texel(col, row), opts.split);
    out.strands[i] = codec::decode(merged, basis);
  }
  return out;
}

HairModel transfer_index_aligned(const HairModel& structure_src, const HairModel& detail_src,
                                 const codec::StrandBasis& basis, int split) {
  if (structure_src.size() != detail_src.size())
    throw Error(ErrorCode::AlignmentMismatch,
                "index-aligned transfer needs equal strand counts (" +
                    std::to_string(structure_src.size()) + " vs " +
                    std::to_string(detail_src.size()) + ")");
  HairModel out = structure_src;
  for (size_t i = 0; i < out.size(); ++i) {
    const VecX merged = codec::transfer_detail(codec::encode(structure_src.strands[i], basis),
                                               codec::encode(detail_src.strands[i], basis), split);
    out.strands[i] = codec::decode(merged, basis);
  }
  return out;
}

}  // namespace

HairModel transfer_style(const HairModel& structure_src, const HairModel& detail_src,
                         const codec::StrandBasis& basis, const TransferOptions& opts) {
  return opts.mode == TransferMode::TexelAligned
             ? transfer_texel_aligned(structure_src, detail_src, basis, opts)
             : transfer_index_aligned(structure_src, detail_src, basis, opts.split);
}

ParamPair interpolate_params(const ParamPair& a, const ParamPair& b, double t, InterpMode mode) {
  if (a.theta.size() != b.theta.size() || a.beta.size() != b.beta.size())
    throw Error(ErrorCode::DimensionMismatch, "parameter pairs differ in dimension");
  ParamPair out = a;
  if (mode != InterpMode::BetaOnly) out.theta = (1.0 - t) * a.theta + t * b.theta;
  if (mode != InterpMode::ThetaOnly) out.beta = (1.0 - t) * a.beta + t * b.beta;
  return out;
}

EditRecipe parse_recipe(std::string_view text) {
  EditRecipe recipe;
  std::istringstream in{std::string(text)};
  std::string line;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::FormatError,
                  "recipe line " + std::to_string(lineno) + " is not key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "operation")
        recipe.operation = value;
      else if (key == "n")
        recipe.n = std::stoi(value);
      else if (key == "split")
        recipe.split = std::stoi(value);
      else if (key == "t")
        recipe.t = std::stod(value);
      else if (key == "mode")
        recipe.mode = value;
      else if (key == "source_a")
        recipe.source_a = value;
      else if (key == "source_b")
        recipe.source_b = value;
      else
        throw Error(ErrorCode::FormatError, "unknown recipe key \"" + key + "\"");
    } catch (const std::invalid_argument&) {
      throw Error(ErrorCode::FormatError, "bad value for recipe key \"" + key + "\"");
    } catch (const std::out_of_range&) {
      throw Error(ErrorCode::FormatError, "bad value for recipe key \"" + key + "\"");
    }
  }
  if (recipe.operation != "smooth" && recipe.operation != "transfer" &&
      recipe.operation != "interp")
    throw Error(ErrorCode::FormatError, "recipe operation must be smooth, transfer or interp");
  if (recipe.t < 0.0 || recipe.t > 1.0)
    throw Error(ErrorCode::FormatError, "recipe t must lie in [0, 1]");
  if (recipe.split < 0 || recipe.split > 64)
    throw Error(ErrorCode::FormatError, "recipe split must lie in [0, 64]");
  return recipe;
}

std::string write_recipe(const EditRecipe& recipe) {
  std::ostringstream out;
  out << "operation=" << recipe.operation << "\n";
  if (recipe.operation == "smooth") out << "n=" << recipe.n << "\n";
  if (recipe.operation == "transfer") {
    out << "split=" << recipe.split << "\n";
    if (!recipe.mode.empty()) out << "mode=" << recipe.mode << "\n";
  }
  if (recipe.operation == "interp") {
    out << "t=" << recipe.t << "\n";
    if (!recipe.mode.empty()) out << "mode=" << recipe.mode << "\n";
  }
  if (!recipe.source_a.empty()) out << "source_a=" << recipe.source_a << "\n";
  if (!recipe.source_b.empty()) out << "source_b=" << recipe.source_b << "\n";
  return out.str();
}

}  // namespace hairkit::edit
