// hairkit command-line front end. Every subcommand reads/writes the container
// formats defined by the library, emits progress on stderr, and exits with
// 0 = success, 1 = usage error, 2 = input/parse error, 3 = numerical failure.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hairkit/codec.hpp"
#include "hairkit/edit.hpp"
#include "hairkit/fit.hpp"
#include "hairkit/io.hpp"
#include "hairkit/metrics.hpp"
#include "hairkit/model.hpp"
#include "hairkit/scalp.hpp"
#include "hairkit/synthetic.hpp"
#include "hairkit/texture.hpp"

namespace fs = std::filesystem;
using namespace hairkit;

namespace {

void progress(const std::string& line) { std::fprintf(stderr, "[hairkit] %s\n", line.c_str()); }

bool numerical_failure(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteGradient:
    case ErrorCode::DivergenceDetected:
    case ErrorCode::DegenerateVariance:
    case ErrorCode::DegenerateStrand:
      return true;
    default:
      return false;
  }
}

scalp::ScalpMap load_scalp(const std::string& spec) {
  if (spec == "hemisphere") return scalp::ScalpMap::hemisphere();
  if (!fs::exists(spec))
    throw Error(ErrorCode::IoError, "scalp \"" + spec + "\" is neither 'hemisphere' nor a file");
  return scalp::ScalpMap::from_obj(io::read_file_text(spec));
}

// Make sure the model carries scalp uv (bake/fit/transfer need it).
void ensure_uv(HairModel& model, const scalp::ScalpMap& scalp) {
  if (model.roots_uv) return;
  const auto roots = scalp::project_roots(model, scalp);
  scalp::attach_uv(model, roots);
}

scalp::RootSet grid_roots(int grid, const scalp::ScalpMap& scalp) {
  std::vector<Vec2> uv;
  uv.reserve(static_cast<size_t>(grid) * grid);
  for (int row = 0; row < grid; ++row)
    for (int col = 0; col < grid; ++col) uv.push_back(texture::texel_center(col, row, grid, grid));
  return scalp::roots_from_uv(uv, scalp);
}

// A corpus argument is either one model file or a directory of them.
std::vector<fs::path> gather_model_files(const fs::path& in) {
  std::vector<fs::path> files;
  if (fs::is_directory(in)) {
    for (const auto& entry : fs::directory_iterator(in)) {
      const auto ext = entry.path().extension().string();
      if (ext == ".hair" || ext == ".data" || ext == ".obj") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(in);
  }
  if (files.empty()) throw Error(ErrorCode::EmptyCorpus, "no model files under " + in.string());
  return files;
}

std::vector<fs::path> gather_texture_files(const fs::path& in) {
  std::vector<fs::path> files;
  if (fs::is_directory(in)) {
    for (const auto& entry : fs::directory_iterator(in))
      if (entry.path().extension() == ".pgt") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(in);
  }
  if (files.empty()) throw Error(ErrorCode::EmptyCorpus, "no textures under " + in.string());
  return files;
}

Eigen::Matrix4d load_registration(const std::string& path) {
  if (path.empty()) return Eigen::Matrix4d::Identity();
  std::istringstream in(io::read_file_text(path));
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      if (!(in >> m(r, c)))
        throw Error(ErrorCode::FormatError, "registration file needs 16 numbers: " + path);
  return m;
}

// Plain-text gamma table: one row of coefficients per strand.
void write_gamma_table(const fs::path& path, const std::vector<codec::StrandCoeffs>& gammas) {
  std::ostringstream out;
  out << "# hairkit gamma table strands=" << gammas.size()
      << " dim=" << (gammas.empty() ? 0 : gammas.front().size()) << "\n";
  out.precision(17);
  for (const auto& gamma : gammas) {
    for (Eigen::Index i = 0; i < gamma.size(); ++i) out << (i ? " " : "") << gamma[i];
    out << "\n";
  }
  io::write_file_atomic(path, out.str());
}

std::vector<codec::StrandCoeffs> read_gamma_table(const fs::path& path, int dim) {
  std::istringstream in(io::read_file_text(path));
  std::vector<codec::StrandCoeffs> gammas;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    codec::StrandCoeffs gamma(dim);
    for (int i = 0; i < dim; ++i)
      if (!(row >> gamma[i]))
        throw Error(ErrorCode::FormatError,
                    "gamma row " + std::to_string(gammas.size() + 1) + " needs " +
                        std::to_string(dim) + " values: " + path.string());
    gammas.push_back(std::move(gamma));
  }
  return gammas;
}

void write_loss_trace(const fs::path& path, const std::vector<double>& trace) {
  std::ostringstream out;
  out << "# iteration objective\n";
  out.precision(12);
  for (size_t i = 0; i < trace.size(); ++i) out << i << " " << trace[i] << "\n";
  io::write_file_atomic(path, out.str());
}

void print_variance_table(const codec::StrandBasis& basis) {
  const VecX curve = codec::explained_variance_curve(basis);
  std::printf("# component variance cumulative\n");
  for (int i = 0; i < basis.dim(); ++i)
    std::printf("%d %.12g %.12g\n", i, basis.explained_variance[i], curve[i]);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hairkit: frequency-domain strand codec, scalp geometry textures and the "
               "linear parametric hair model"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file; command-line flags take precedence");
  int threads = 0;
  app.add_option("--threads", threads,
                 "cap worker threads (0 = library default; the pipeline itself is sequential)")
      ->each([](const std::string& value) {
        try {
          const int n = std::stoi(value);
          if (n > 0) Eigen::setNbThreads(n);
        } catch (...) {  // the typed conversion reports bad values as a usage error
        }
      });

  // ---- convert ------------------------------------------------------------
  auto* convert = app.add_subcommand(
      "convert", "convert between .hair/.data/.obj, optionally canonicalizing; "
                 "--synthetic-count generates the bundled procedural wig instead of reading");
  std::string conv_in, conv_out, conv_registration;
  int conv_points = 0, conv_synth = 0;
  uint64_t conv_seed = 1;
  bool conv_canonical = false;
  double conv_curl_radius = 0.6, conv_curl_turns = 3.0, conv_length = 7.0;
  convert->add_option("--in", conv_in, "input model (.hair/.data/.obj)");
  convert->add_option("--out", conv_out, "output model path")->required();
  convert->add_flag("--canonicalize", conv_canonical,
                    "register, resample, scale head to radius 10, make roots relative");
  convert->add_option("--points", conv_points,
                      "resample every strand to this count (default 100 when canonicalizing)");
  convert->add_option("--registration", conv_registration,
                      "text file with a row-major 4x4 affine applied while canonicalizing");
  convert->add_option("--synthetic-count", conv_synth,
                      "generate this many procedural strands on the default scalp");
  convert->add_option("--seed", conv_seed, "seed for --synthetic-count (default 1)");
  convert->add_option("--curl-radius", conv_curl_radius, "synthetic wig curl radius (default 0.6)");
  convert->add_option("--curl-turns", conv_curl_turns, "synthetic wig curl turns (default 3)");
  convert->add_option("--length", conv_length, "synthetic wig strand length (default 7)");
  convert->callback([&] {
    HairModel model;
    io::ParseStats stats;
    if (conv_synth > 0) {
      synthetic::WigStyle style;
      style.curl_radius = conv_curl_radius;
      style.curl_turns = conv_curl_turns;
      style.length = conv_length;
      const int L = conv_points > 0 ? conv_points : 100;
      model = synthetic::make_wig(scalp::ScalpMap::hemisphere(), conv_synth, L, conv_seed, style);
      progress("generated " + std::to_string(model.size()) + " synthetic strands");
    } else {
      if (conv_in.empty())
        throw CLI::ValidationError("convert", "--in or --synthetic-count is required");
      model = io::load_model(conv_in, &stats);
      progress("loaded " + std::to_string(model.size()) + " strands from " + conv_in +
               " (dropped " + std::to_string(stats.dropped_short_strands) + " short)");
      if (conv_canonical)
        model = io::canonicalize(model, conv_points > 0 ? conv_points : 100,
                                 load_registration(conv_registration), &stats);
      else if (conv_points > 0)
        for (auto& strand : model.strands) strand = io::resample_strand(strand, conv_points);
    }
    io::save_model(conv_out, model);
    progress("wrote " + conv_out);
  });

  // ---- resample -----------------------------------------------------------
  auto* resample = app.add_subcommand("resample", "uniform arc-length resampling to --points");
  std::string rs_in, rs_out;
  int rs_points = 100;
  resample->add_option("--in", rs_in)->required();
  resample->add_option("--out", rs_out)->required();
  resample->add_option("--points", rs_points, "points per strand (default 100)");
  resample->callback([&] {
    HairModel model = io::load_model(rs_in);
    for (auto& strand : model.strands) strand = io::resample_strand(strand, rs_points);
    io::save_model(rs_out, model);
    progress("resampled " + std::to_string(model.size()) + " strands to " +
             std::to_string(rs_points) + " points");
  });

  // ---- fit-basis ----------------------------------------------------------
  auto* fit_basis = app.add_subcommand(
      "fit-basis", "fit the frequency-domain PCA strand basis from a model file or directory");
  std::string fb_in, fb_out;
  int fb_coeffs = 64, fb_points = 100;
  fit_basis->add_option("--in", fb_in, "corpus model file or directory")->required();
  fit_basis->add_option("--out", fb_out, "output basis (.psb)")->required();
  fit_basis->add_option("--coeffs", fb_coeffs, "retained components |gamma| (default 64)");
  fit_basis->add_option("--points", fb_points, "canonical strand length L (default 100)");
  fit_basis->callback([&] {
    std::vector<Strand> corpus;
    for (const auto& file : gather_model_files(fb_in)) {
      HairModel model = io::load_model(file);
      for (auto& strand : model.strands) corpus.push_back(io::resample_strand(strand, fb_points));
    }
    progress("fitting basis on " + std::to_string(corpus.size()) + " strands, |gamma|=" +
             std::to_string(fb_coeffs));
    const auto basis = codec::fit_basis(corpus, fb_coeffs);
    codec::save_basis(fb_out, basis);
    print_variance_table(basis);
    progress("wrote " + fb_out);
  });

  // ---- variance -----------------------------------------------------------
  auto* variance = app.add_subcommand("variance", "print the cumulative variance table of a basis");
  std::string var_basis;
  variance->add_option("--basis", var_basis)->required();
  variance->callback([&] { print_variance_table(codec::load_basis(var_basis)); });

  // ---- encode / decode ----------------------------------------------------
  auto* encode = app.add_subcommand("encode", "encode every strand to a gamma coefficient table");
  std::string enc_in, enc_basis, enc_out;
  int enc_points = 0;
  encode->add_option("--in", enc_in)->required();
  encode->add_option("--basis", enc_basis)->required();
  encode->add_option("--out", enc_out, "output text table")->required();
  encode->add_option("--points", enc_points, "resample to this length first (default: basis L)");
  encode->callback([&] {
    const auto basis = codec::load_basis(enc_basis);
    HairModel model = io::load_model(enc_in);
    std::vector<codec::StrandCoeffs> gammas;
    gammas.reserve(model.size());
    const int L = enc_points > 0 ? enc_points : basis.L;
    for (const auto& strand : model.strands)
      gammas.push_back(codec::encode(io::resample_strand(strand, L), basis));
    write_gamma_table(enc_out, gammas);
    progress("encoded " + std::to_string(gammas.size()) + " strands");
  });

  auto* decode = app.add_subcommand("decode", "decode a gamma table back to strands");
  std::string dec_in, dec_basis, dec_out, dec_roots;
  decode->add_option("--in", dec_in, "gamma text table")->required();
  decode->add_option("--basis", dec_basis)->required();
  decode->add_option("--out", dec_out)->required();
  decode->add_option("--roots", dec_roots,
                     "re-root each decoded strand onto this model's roots (rigid shift)");
  decode->callback([&] {
    const auto basis = codec::load_basis(dec_basis);
    const auto gammas = read_gamma_table(dec_in, basis.dim());
    HairModel model;
    for (const auto& gamma : gammas) {
      model.strands.push_back(codec::decode(gamma, basis));
      model.roots.emplace_back(model.strands.back().points.row(0));
    }
    if (!dec_roots.empty()) {
      const HairModel donor = io::load_model(dec_roots);
      if (donor.size() != model.size())
        throw Error(ErrorCode::AlignmentMismatch,
                    "--roots model has " + std::to_string(donor.size()) + " strands, table has " +
                        std::to_string(model.size()));
      for (size_t i = 0; i < model.size(); ++i) {
        Strand& strand = model.strands[i];
        const Vec3 shift = donor.roots[i] - Vec3(strand.points.row(0));
        strand.points.rowwise() += shift.transpose();
        model.roots[i] = donor.roots[i];
      }
      model.roots_uv = donor.roots_uv;
    }
    io::save_model(dec_out, model);
    progress("decoded " + std::to_string(model.size()) + " strands");
  });

  // ---- bake / fit-texture -------------------------------------------------
  auto* bake = app.add_subcommand(
      "bake", "nearest-root geometry-texture initialization with a baldness mask");
  std::string bk_in, bk_basis, bk_out, bk_scalp = "hemisphere", bk_preview;
  int bk_width = 256, bk_height = 256;
  double bk_epsilon = 0.01;
  bake->add_option("--in", bk_in)->required();
  bake->add_option("--basis", bk_basis)->required();
  bake->add_option("--out", bk_out, "output texture (.pgt)")->required();
  bake->add_option("--width", bk_width, "texture width (default 256)");
  bake->add_option("--height", bk_height, "texture height (default 256)");
  bake->add_option("--epsilon", bk_epsilon, "uv claim radius (default 0.01)");
  bake->add_option("--scalp", bk_scalp, "'hemisphere' or a scalp OBJ (default hemisphere)");
  bake->add_option("--preview", bk_preview, "also write a PNG channel montage here");
  bake->callback([&] {
    HairModel model = io::load_model(bk_in);
    ensure_uv(model, load_scalp(bk_scalp));
    const auto basis = codec::load_basis(bk_basis);
    const auto tex = texture::init_texture(model, basis, bk_width, bk_height, bk_epsilon);
    texture::save_texture(bk_out, tex);
    if (!bk_preview.empty()) io::write_file_atomic(bk_preview, texture::png_preview(tex));
    size_t live = 0;
    for (int row = 0; row < tex.height; ++row)
      for (int col = 0; col < tex.width; ++col) live += !tex.is_bald(col, row);
    progress("baked " + std::to_string(model.size()) + " strands into " + bk_out + " (" +
             std::to_string(live) + " live texels)");
  });

  auto* fit_texture = app.add_subcommand(
      "fit-texture", "refine a baked texture against its source strands (Adam, smooth geo loss)");
  std::string ft_in, ft_model, ft_basis, ft_out, ft_scalp = "hemisphere", ft_trace;
  int ft_iters = 500;
  double ft_lr = 0.001;
  fit_texture->add_option("--in", ft_in, "baked texture (.pgt)")->required();
  fit_texture->add_option("--model", ft_model, "ground-truth strands")->required();
  fit_texture->add_option("--basis", ft_basis)->required();
  fit_texture->add_option("--out", ft_out)->required();
  fit_texture->add_option("--iters", ft_iters, "Adam iterations (default 500)");
  fit_texture->add_option("--lr", ft_lr, "Adam learning rate (default 0.001)");
  fit_texture->add_option("--scalp", ft_scalp, "'hemisphere' or a scalp OBJ");
  fit_texture->add_option("--trace", ft_trace, "write the per-iteration loss trace here");
  fit_texture->callback([&] {
    HairModel model = io::load_model(ft_model);
    ensure_uv(model, load_scalp(ft_scalp));
    const auto basis = codec::load_basis(ft_basis);
    const auto tex = texture::load_texture(ft_in);
    const auto fitted = texture::optimize_texture(tex, model, basis, ft_iters, ft_lr);
    texture::save_texture(ft_out, fitted.texture);
    if (!ft_trace.empty()) write_loss_trace(ft_trace, fitted.loss_trace);
    if (!fitted.loss_trace.empty())
      progress("loss " + std::to_string(fitted.loss_trace.front()) + " -> " +
               std::to_string(fitted.loss_trace.back()) + " over " +
               std::to_string(fitted.loss_trace.size()) + " iterations");
    progress("wrote " + ft_out);
  });

  // ---- downsample / upsample ----------------------------------------------
  auto* downsample = app.add_subcommand(
      "downsample", "masked block-average a full texture into a guide texture");
  std::string ds_in, ds_out;
  int ds_factor = 8, ds_low = 10;
  downsample->add_option("--in", ds_in)->required();
  downsample->add_option("--out", ds_out)->required();
  downsample->add_option("--factor", ds_factor, "block size (default 8)");
  downsample->add_option("--low-channels", ds_low, "guide channel count (default 10)");
  downsample->callback([&] {
    const auto tex = texture::load_texture(ds_in);
    texture::save_texture(ds_out, model::downsample_guide(tex, ds_factor, ds_low));
    progress("wrote " + ds_out);
  });

  auto* upsample = app.add_subcommand("upsample", "expand a guide texture to full resolution");
  std::string us_in, us_out, us_mode = "bilinear", us_field;
  int us_factor = 8;
  upsample->add_option("--in", us_in)->required();
  upsample->add_option("--out", us_out)->required();
  upsample->add_option("--factor", us_factor, "upsampling factor (default 8)");
  upsample
      ->add_option("--mode", us_mode, "nearest | bilinear | blend (default bilinear)")
      ->check(CLI::IsMember({"nearest", "bilinear", "blend"}));
  upsample->add_option("--field", us_field, "fitted upsampler (.puf), required for --mode blend");
  upsample->callback([&] {
    const auto guide = texture::load_texture(us_in);
    texture::GeometryTexture out;
    if (us_mode == "nearest")
      out = model::upsample_nearest(guide, us_factor);
    else if (us_mode == "bilinear")
      out = model::upsample_bilinear(guide, us_factor);
    else {
      if (us_field.empty())
        throw CLI::ValidationError("upsample", "--mode blend requires --field");
      out = model::blend_upsample(guide, model::load_upsampler(us_field));
    }
    texture::save_texture(us_out, out);
    progress("wrote " + us_out);
  });

  // ---- fit-spaces / fit-upsampler ------------------------------------------
  auto* fit_spaces = app.add_subcommand(
      "fit-spaces", "fit the guide (theta) and residual (beta) PCA spaces from full textures; "
                    "--out-assets also fits the upsampler and writes a complete asset bundle");
  std::string fsp_in, fsp_basis, fsp_out_guide, fsp_out_residual, fsp_out_assets;
  int fsp_dim = 512, fsp_factor = 8, fsp_low = 10;
  fit_spaces->add_option("--in", fsp_in, "texture file or directory (.pgt)")->required();
  fit_spaces->add_option("--dim", fsp_dim, "space dimensionality (default 512)");
  fit_spaces->add_option("--factor", fsp_factor, "guide downsampling factor (default 8)");
  fit_spaces->add_option("--low-channels", fsp_low, "guide channel count (default 10)");
  fit_spaces->add_option("--out-guide", fsp_out_guide, "guide space output (.ptp)");
  fit_spaces->add_option("--out-residual", fsp_out_residual, "residual space output (.ptp)");
  fit_spaces->add_option("--basis", fsp_basis, "strand basis (.psb), required for --out-assets");
  fit_spaces->add_option("--out-assets", fsp_out_assets, "write basis+spaces+upsampler bundle");
  fit_spaces->callback([&] {
    if (fsp_out_guide.empty() && fsp_out_residual.empty() && fsp_out_assets.empty())
      throw CLI::ValidationError(
          "fit-spaces", "pick an output: --out-guide, --out-residual and/or --out-assets");
    std::vector<texture::GeometryTexture> guides, residuals;
    std::vector<std::pair<texture::GeometryTexture, texture::GeometryTexture>> pairs;
    const bool want_assets = !fsp_out_assets.empty();
    for (const auto& file : gather_texture_files(fsp_in)) {
      const auto tex = texture::load_texture(file);
      auto [low, res] = texture::split_channels(tex, fsp_low);
      guides.push_back(model::downsample_guide(tex, fsp_factor, fsp_low));
      if (want_assets) pairs.emplace_back(guides.back(), std::move(low));
      residuals.push_back(std::move(res));
    }
    progress("fitting spaces on " + std::to_string(guides.size()) + " textures, dim=" +
             std::to_string(fsp_dim));
    model::ModelAssets assets;
    assets.guide_space = model::fit_guide_space(guides, fsp_dim);
    assets.residual_space = model::fit_residual_space(residuals, fsp_dim);
    if (!fsp_out_guide.empty()) model::save_texture_pca(fsp_out_guide, assets.guide_space);
    if (!fsp_out_residual.empty())
      model::save_texture_pca(fsp_out_residual, assets.residual_space);
    if (want_assets) {
      if (fsp_basis.empty())
        throw CLI::ValidationError("fit-spaces", "--out-assets requires --basis");
      assets.basis = codec::load_basis(fsp_basis);
      assets.upsampler = model::fit_upsampler(pairs);
      model::save_assets(fsp_out_assets, assets);
      progress("wrote asset bundle " + fsp_out_assets);
    }
  });

  auto* fit_upsampler = app.add_subcommand(
      "fit-upsampler", "fit per-texel blend weights from (guide, full-low) texture pairs");
  std::string fu_in, fu_out;
  int fu_factor = 8, fu_low = 10;
  double fu_ridge = 0.1;
  fit_upsampler->add_option("--in", fu_in, "full-texture file or directory")->required();
  fit_upsampler->add_option("--out", fu_out, "output field (.puf)")->required();
  fit_upsampler->add_option("--factor", fu_factor, "block factor (default 8)");
  fit_upsampler->add_option("--low-channels", fu_low, "guide channels (default 10)");
  fit_upsampler->add_option("--ridge", fu_ridge, "delta ridge weight (default 0.1)");
  fit_upsampler->callback([&] {
    std::vector<std::pair<texture::GeometryTexture, texture::GeometryTexture>> pairs;
    for (const auto& file : gather_texture_files(fu_in)) {
      const auto tex = texture::load_texture(file);
      auto low = texture::split_channels(tex, fu_low).first;
      pairs.emplace_back(model::downsample_guide(tex, fu_factor, fu_low), std::move(low));
    }
    progress("fitting upsampler on " + std::to_string(pairs.size()) + " pairs");
    model::save_upsampler(fu_out, model::fit_upsampler(pairs, fu_ridge));
    progress("wrote " + fu_out);
  });

  // ---- synth / parameterize / sample-random --------------------------------
  auto* synth = app.add_subcommand(
      "synth", "compose a texture (and optionally strands) from (theta, beta)");
  std::string sy_assets, sy_params, sy_out, sy_out_hair, sy_scalp = "hemisphere";
  uint64_t sy_seed = 1;
  double sy_scale = 1.0;
  int sy_grid = 32;
  bool sy_keep_bald = false;
  synth->add_option("--assets", sy_assets, "asset bundle directory")->required();
  synth->add_option("--params", sy_params, "parameter file (.pfr); default: sample from --seed");
  synth->add_option("--seed", sy_seed, "sampling seed when --params is absent (default 1)");
  synth->add_option("--scale", sy_scale, "sampling scale in standard deviations (default 1)");
  synth->add_option("--out", sy_out, "output texture (.pgt)");
  synth->add_option("--out-hair", sy_out_hair, "also decode strands at a uv grid");
  synth->add_option("--grid", sy_grid, "decode grid resolution (default 32)");
  synth->add_option("--scalp", sy_scalp, "'hemisphere' or a scalp OBJ");
  synth->add_flag("--keep-bald", sy_keep_bald, "keep zero-length strands at bald texels");
  synth->callback([&] {
    const auto assets = model::load_assets(sy_assets);
    VecX theta, beta;
    if (!sy_params.empty()) {
      std::tie(theta, beta) = fit::load_fit_params(sy_params);
    } else {
      theta = model::sample_params(assets.guide_space, sy_seed, sy_scale);
      beta = model::sample_params(assets.residual_space, sy_seed + 1, sy_scale);
    }
    if (sy_out.empty() && sy_out_hair.empty())
      throw CLI::ValidationError("synth", "--out or --out-hair is required");
    if (!sy_out.empty()) {
      texture::save_texture(sy_out, model::compose_texture(theta, beta, assets));
      progress("wrote " + sy_out);
    }
    if (!sy_out_hair.empty()) {
      const auto roots = grid_roots(sy_grid, load_scalp(sy_scalp));
      const HairModel wig = model::evaluate_model(theta, beta, roots, assets, sy_keep_bald);
      io::save_model(sy_out_hair, wig);
      progress("wrote " + std::to_string(wig.size()) + " strands to " + sy_out_hair);
    }
  });

  auto* parameterize = app.add_subcommand(
      "parameterize", "fit (theta, beta) to a target texture: theta-only warm-up, then joint "
                      "Adam with cosine annealing");
  std::string pm_target, pm_assets, pm_out, pm_trace;
  fit::ParameterizeOptions pm_opts;
  parameterize->add_option("--target", pm_target, "target texture (.pgt)")->required();
  parameterize->add_option("--assets", pm_assets, "asset bundle directory")->required();
  parameterize->add_option("--out", pm_out, "output parameters (.pfr)")->required();
  parameterize->add_option("--warmup", pm_opts.warmup_iters,
                           "theta-only iterations (default 1000)");
  parameterize->add_option("--joint", pm_opts.joint_iters, "joint iterations (default 4000)");
  parameterize->add_option("--lr", pm_opts.lr, "initial learning rate (default 0.1)");
  parameterize->add_option("--checkpoint", pm_opts.checkpoint_every,
                           "checkpoint interval (default 100)");
  parameterize->add_option("--trace", pm_trace, "extra loss-trace destination");
  parameterize->callback([&] {
    const auto assets = model::load_assets(pm_assets);
    const auto target = texture::load_texture(pm_target);
    progress("parameterizing: warmup=" + std::to_string(pm_opts.warmup_iters) +
             " joint=" + std::to_string(pm_opts.joint_iters));
    const auto result = fit::parameterize_hair(target, assets, pm_opts);
    fit::save_fit_result(pm_out, result);
    if (!pm_trace.empty()) write_loss_trace(pm_trace, result.loss_trace);
    if (!result.loss_trace.empty())
      progress("objective " + std::to_string(result.loss_trace.front()) + " -> " +
               std::to_string(result.loss_trace.back()));
    std::printf("%s", metrics::report_text(result.final_report).c_str());
    progress("wrote " + pm_out);
  });

  auto* sample_random = app.add_subcommand(
      "sample-random", "draw variance-scaled random (theta, beta) from the texture spaces");
  std::string sr_assets, sr_out, sr_out_hair, sr_scalp = "hemisphere";
  uint64_t sr_seed = 1;
  double sr_scale = 1.0;
  int sr_grid = 32;
  bool sr_plain = false, sr_keep_bald = false;
  sample_random->add_option("--assets", sr_assets)->required();
  sample_random->add_option("--out", sr_out, "output parameters (.pfr)")->required();
  sample_random->add_option("--seed", sr_seed, "deterministic sampling seed (default 1)");
  sample_random->add_option("--scale", sr_scale, "standard-deviation scale (default 1)");
  sample_random->add_flag("--plain", sr_plain, "unit-variance sampling (skip variance scaling)");
  sample_random->add_option("--out-hair", sr_out_hair, "also decode strands at a uv grid");
  sample_random->add_option("--grid", sr_grid, "decode grid resolution (default 32)");
  sample_random->add_option("--scalp", sr_scalp, "'hemisphere' or a scalp OBJ");
  sample_random->add_flag("--keep-bald", sr_keep_bald, "keep zero-length bald strands");
  sample_random->callback([&] {
    const auto assets = model::load_assets(sr_assets);
    fit::FitResult result;
    result.theta = model::sample_params(assets.guide_space, sr_seed, sr_scale, sr_plain);
    result.beta = model::sample_params(assets.residual_space, sr_seed + 1, sr_scale, sr_plain);
    fit::save_fit_result(sr_out, result);
    progress("wrote " + sr_out);
    if (!sr_out_hair.empty()) {
      const auto roots = grid_roots(sr_grid, load_scalp(sr_scalp));
      const HairModel wig =
          model::evaluate_model(result.theta, result.beta, roots, assets, sr_keep_bald);
      io::save_model(sr_out_hair, wig);
      progress("wrote " + std::to_string(wig.size()) + " strands to " + sr_out_hair);
    }
  });

  // ---- eval -----------------------------------------------------------------
  auto* eval = app.add_subcommand(
      "eval", "strand-space comparison of two models (key=value lines on stdout)");
  std::string ev_pred, ev_gt;
  int ev_points = 0;
  eval->add_option("--pred", ev_pred)->required();
  eval->add_option("--gt", ev_gt)->required();
  eval->add_option("--points", ev_points, "resample both models first (default: no resample)");
  eval->callback([&] {
    HairModel pred = io::load_model(ev_pred);
    HairModel gt = io::load_model(ev_gt);
    if (ev_points > 0)
      for (auto* m : {&pred, &gt})
        for (auto& strand : m->strands) strand = io::resample_strand(strand, ev_points);
    std::printf("%s", metrics::report_text(metrics::compare(pred, gt)).c_str());
  });

  // ---- editing: smooth / transfer / interp ----------------------------------
  auto* smooth = app.add_subcommand("smooth", "re-encode every strand keeping n coefficients");
  std::string sm_in, sm_basis, sm_out, sm_recipe;
  int sm_n = 10;
  smooth->add_option("--in", sm_in)->required();
  smooth->add_option("--basis", sm_basis)->required();
  smooth->add_option("--out", sm_out)->required();
  smooth->add_option("--n", sm_n, "retained coefficients (default 10)");
  smooth->add_option("--recipe", sm_recipe, "key=value recipe file (flags take precedence)");
  smooth->callback([&] {
    if (!sm_recipe.empty()) {
      const auto recipe = edit::parse_recipe(io::read_file_text(sm_recipe));
      if (recipe.operation != "smooth")
        throw Error(ErrorCode::FormatError, "recipe operation is not smooth");
      if (smooth->count("--n") == 0) sm_n = recipe.n;
    }
    const auto basis = codec::load_basis(sm_basis);
    const HairModel out = edit::smooth_hair(io::load_model(sm_in), basis, sm_n);
    io::save_model(sm_out, out);
    progress("smoothed " + std::to_string(out.size()) + " strands at n=" + std::to_string(sm_n));
  });

  auto* transfer = app.add_subcommand(
      "transfer", "combine one wig's structure with another's curl detail");
  std::string tr_structure, tr_detail, tr_basis, tr_out, tr_mode = "texel", tr_recipe;
  std::string tr_scalp = "hemisphere";
  edit::TransferOptions tr_opts;
  transfer->add_option("--structure", tr_structure, "structure (low coefficients) source")
      ->required();
  transfer->add_option("--detail", tr_detail, "detail (high coefficients) source")->required();
  transfer->add_option("--basis", tr_basis)->required();
  transfer->add_option("--out", tr_out)->required();
  transfer->add_option("--split", tr_opts.split, "low/high split index (default 10)");
  transfer->add_option("--mode", tr_mode, "texel | index (default texel)")
      ->check(CLI::IsMember({"texel", "index"}));
  transfer->add_option("--width", tr_opts.texture_width, "texel-mode bake width (default 256)");
  transfer->add_option("--height", tr_opts.texture_height, "texel-mode bake height (default 256)");
  transfer->add_option("--epsilon", tr_opts.epsilon, "texel-mode claim radius (default 0.01)");
  transfer->add_option("--scalp", tr_scalp, "'hemisphere' or a scalp OBJ");
  transfer->add_option("--recipe", tr_recipe, "key=value recipe file (flags take precedence)");
  transfer->callback([&] {
    if (!tr_recipe.empty()) {
      const auto recipe = edit::parse_recipe(io::read_file_text(tr_recipe));
      if (recipe.operation != "transfer")
        throw Error(ErrorCode::FormatError, "recipe operation is not transfer");
      if (transfer->count("--split") == 0) tr_opts.split = recipe.split;
      if (transfer->count("--mode") == 0 && !recipe.mode.empty()) tr_mode = recipe.mode;
    }
    tr_opts.mode = tr_mode == "index" ? edit::TransferMode::IndexAligned
                                      : edit::TransferMode::TexelAligned;
    const auto basis = codec::load_basis(tr_basis);
    HairModel structure = io::load_model(tr_structure);
    HairModel detail = io::load_model(tr_detail);
    if (tr_opts.mode == edit::TransferMode::TexelAligned) {
      const auto scalp = load_scalp(tr_scalp);
      ensure_uv(structure, scalp);
      ensure_uv(detail, scalp);
    }
    const HairModel out = edit::transfer_style(structure, detail, basis, tr_opts);
    io::save_model(tr_out, out);
    progress("transferred detail onto " + std::to_string(out.size()) + " strands");
  });

  auto* interp = app.add_subcommand("interp", "linear interpolation between two parameter files");
  std::string ip_a, ip_b, ip_out, ip_mode = "joint", ip_recipe;
  double ip_t = 0.5;
  interp->add_option("--a", ip_a, "endpoint parameters at t=0 (.pfr)")->required();
  interp->add_option("--b", ip_b, "endpoint parameters at t=1 (.pfr)")->required();
  interp->add_option("--out", ip_out)->required();
  interp->add_option("--t", ip_t, "blend position in [0,1] (default 0.5)");
  interp->add_option("--mode", ip_mode, "joint | theta | beta (default joint)")
      ->check(CLI::IsMember({"joint", "theta", "beta"}));
  interp->add_option("--recipe", ip_recipe, "key=value recipe file (flags take precedence)");
  interp->callback([&] {
    if (!ip_recipe.empty()) {
      const auto recipe = edit::parse_recipe(io::read_file_text(ip_recipe));
      if (recipe.operation != "interp")
        throw Error(ErrorCode::FormatError, "recipe operation is not interp");
      if (interp->count("--t") == 0) ip_t = recipe.t;
      if (interp->count("--mode") == 0 && !recipe.mode.empty()) ip_mode = recipe.mode;
    }
    if (ip_t < 0.0 || ip_t > 1.0)
      throw CLI::ValidationError("interp", "--t must lie in [0, 1]");
    edit::ParamPair a, b;
    std::tie(a.theta, a.beta) = fit::load_fit_params(ip_a);
    std::tie(b.theta, b.beta) = fit::load_fit_params(ip_b);
    const auto mode = ip_mode == "theta"  ? edit::InterpMode::ThetaOnly
                      : ip_mode == "beta" ? edit::InterpMode::BetaOnly
                                          : edit::InterpMode::Joint;
    const auto mixed = edit::interpolate_params(a, b, ip_t, mode);
    fit::FitResult result;
    result.theta = mixed.theta;
    result.beta = mixed.beta;
    fit::save_fit_result(ip_out, result);
    progress("wrote " + ip_out);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // --help exits 0; any parse problem is a usage error
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return numerical_failure(e.code()) ? 3 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
