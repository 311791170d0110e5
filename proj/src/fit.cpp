#include "hairkit/fit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "hairkit/io.hpp"
#include "wire.hpp"

namespace hairkit::fit {

double LrSchedule::factor(long step) const {
  if (kind == Kind::Constant) return 1.0;
  const long T = std::max(total_steps, 1L);
  const double phase = static_cast<double>(std::min(step, T)) / static_cast<double>(T);
  return floor_ratio + (1.0 - floor_ratio) * 0.5 * (1.0 + std::cos(std::numbers::pi * phase));
}

OptimState OptimState::init(Eigen::Index n, AdamHyper hp, LrSchedule schedule) {
  OptimState state;
  state.m = VecX::Zero(n);
  state.v = VecX::Zero(n);
  state.hp = hp;
  state.schedule = schedule;
  return state;
}

void adam_step(VecX& params, const VecX& grads, OptimState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw Error(ErrorCode::ShapeMismatch, "parameter/gradient/state sizes disagree");
  if (!grads.allFinite())
    throw Error(ErrorCode::NonFiniteGradient, "non-finite gradient passed to the optimizer");
  const double lr = state.hp.lr * state.schedule.factor(state.step);
  state.step += 1;
  state.m = state.hp.beta1 * state.m + (1.0 - state.hp.beta1) * grads;
  state.v = state.hp.beta2 * state.v + (1.0 - state.hp.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.hp.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.hp.beta2, static_cast<double>(state.step));
  params -= lr * (state.m / c1).cwiseQuotient(((state.v / c2).cwiseSqrt().array() + state.hp.eps).matrix());
}

namespace {

using texture::GeometryTexture;

void check_target(const GeometryTexture& target, const model::ModelAssets& assets) {
  const auto& up = assets.upsampler;
  const int channels = up.channels + assets.residual_space.channels;
  if (target.width != up.out_width || target.height != up.out_height ||
      target.channels != channels || assets.basis.dim() != channels)
    throw Error(ErrorCode::AssetMismatch, "target texture does not match the model assets");
}

double huber(double x, double delta) {
  const double a = std::abs(x);
  return a <= delta ? 0.5 * x * x / delta : a - 0.5 * delta;
}

double huber_grad(double x, double delta) {
  return std::clamp(x / delta, -1.0, 1.0);
}

// Full-resolution texel indices of the guide-texel-center evaluation grid.
std::vector<int> eval_grid(const model::ModelAssets& assets) {
  const auto& up = assets.upsampler;
  std::vector<int> texels;
  texels.reserve(static_cast<size_t>(up.guide_width) * up.guide_height);
  for (int gr = 0; gr < up.guide_height; ++gr)
    for (int gc = 0; gc < up.guide_width; ++gc) {
      const Vec2 c = texture::texel_center(gc, gr, up.guide_width, up.guide_height);
      texels.push_back(texture::texel_of(c.y(), up.out_height) * up.out_width +
                       texture::texel_of(c.x(), up.out_width));
    }
  return texels;
}

// Strand-space comparison of two textures decoded texel by texel (masks not
// applied) over the given texel list.
metrics::StrandPairReport texture_report(const GeometryTexture& a, const GeometryTexture& b,
                                         const codec::StrandBasis& basis,
                                         const std::vector<int>& texels) {
  const codec::StrandDecoder decoder(basis);
  HairModel ma, mb;
  ma.root_relative = mb.root_relative = true;
  for (int t : texels) {
    const int col = t % a.width, row = t / a.width;
    ma.strands.push_back(decoder.decode(a.texel(col, row)));
    mb.strands.push_back(decoder.decode(b.texel(col, row)));
    ma.roots.emplace_back(Vec3::Zero());
    mb.roots.emplace_back(Vec3::Zero());
  }
  return metrics::compare(ma, mb);
}

}  // namespace

Objective parameterize_objective(const VecX& theta, const VecX& beta,
                                 const GeometryTexture& target, const model::ModelAssets& assets,
                                 const ParameterizeOptions& opts, bool want_grads) {
  check_target(target, assets);
  const auto& up = assets.upsampler;
  const int low = up.channels;
  const int C = target.channels;
  const GeometryTexture composed = model::compose_texture(theta, beta, assets);

  Objective obj;
  const size_t values = target.data.size();
  const double tex_norm = 1.0 / static_cast<double>(values);

  // Texture term: Huber-smoothed L1, per-texel-channel mean, and its gradient
  // wrt every composed data value (masks do not participate).
  std::vector<double> dgrad;
  if (want_grads) dgrad.assign(values, 0.0);
  for (size_t i = 0; i < values; ++i) {
    const double diff = static_cast<double>(composed.data[i]) - target.data[i];
    obj.tex_term += huber(diff, opts.huber_delta);
    if (want_grads) dgrad[i] = opts.tex_weight * tex_norm * huber_grad(diff, opts.huber_delta);
  }
  obj.tex_term *= tex_norm;

  // Geometry term on the guide-center evaluation grid, per-point mean.
  const codec::StrandDecoder decoder(assets.basis);
  const std::vector<int> grid = eval_grid(assets);
  const double geo_norm = 1.0 / (static_cast<double>(grid.size()) * assets.basis.L);
  for (int t : grid) {
    const int col = t % composed.width, row = t / composed.width;
    const PointMat pred = decoder.decode_points(composed.texel(col, row));
    const PointMat gt = decoder.decode_points(target.texel(col, row));
    PointMat pgrad(assets.basis.L, 3);
    obj.geo_term +=
        metrics::smooth_geometric_loss(pred, gt, opts.huber_delta, want_grads ? &pgrad : nullptr);
    if (want_grads) {
      const VecX ggrad = decoder.backprop(pgrad) * (opts.geo_weight * geo_norm);
      double* cell = &dgrad[(static_cast<size_t>(row) * composed.width + col) * C];
      for (int ch = 0; ch < C; ++ch) cell[ch] += ggrad[ch];
    }
  }
  obj.geo_term *= geo_norm;
  obj.value = opts.tex_weight * obj.tex_term + opts.geo_weight * obj.geo_term;
  if (!want_grads) return obj;

  // Pull the combined data gradient back through the two linear chains. The
  // residual channels feed D(beta) directly; the low channels go through the
  // blend transpose into the guide data plane, then into G(theta). The guide
  // mask plane gets no gradient (thresholding is discrete).
  const auto& res_space = assets.residual_space;
  VecX res_flat(res_space.flat_size());
  for (size_t t = 0; t < composed.texel_count(); ++t)
    for (int ch = low; ch < C; ++ch)
      res_flat[static_cast<Eigen::Index>(t) * res_space.channels + (ch - low)] =
          dgrad[t * C + ch];
  obj.grad_beta = res_space.components * res_flat;

  const auto& guide_space = assets.guide_space;
  VecX guide_flat = VecX::Zero(guide_space.flat_size());
  for (size_t t = 0; t < composed.texel_count(); ++t)
    for (int n = 0; n < 4; ++n) {
      const double w = up.weights[t][n];
      if (w == 0.0) continue;
      const Eigen::Index base = static_cast<Eigen::Index>(up.neighbors[t][n]) * low;
      for (int ch = 0; ch < low; ++ch) guide_flat[base + ch] += w * dgrad[t * C + ch];
    }
  obj.grad_theta = guide_space.components * guide_flat;
  return obj;
}

FitResult parameterize_hair(const GeometryTexture& target, const model::ModelAssets& assets,
                            const ParameterizeOptions& opts) {
  check_target(target, assets);
  FitResult result;
  result.theta = VecX::Zero(assets.guide_space.dim);
  result.beta = VecX::Zero(assets.residual_space.dim);

  const long total = static_cast<long>(opts.warmup_iters) + opts.joint_iters;
  LrSchedule schedule{opts.schedule, total, opts.lr_floor_ratio};
  VecX params(result.theta.size() + result.beta.size());
  params << result.theta, result.beta;
  auto state = OptimState::init(params.size(), {.lr = opts.lr}, schedule);
  VecX grads(params.size());
  result.loss_trace.reserve(total);

  for (long iter = 0; iter < total; ++iter) {
    result.theta = params.head(result.theta.size());
    result.beta = params.tail(result.beta.size());
    Objective obj = parameterize_objective(result.theta, result.beta, target, assets, opts);
    if (!std::isfinite(obj.value))
      throw Error(ErrorCode::DivergenceDetected, "objective diverged at iteration " +
                                                     std::to_string(iter));
    result.loss_trace.push_back(obj.value);
    grads << obj.grad_theta, obj.grad_beta;
    if (iter < opts.warmup_iters) grads.tail(result.beta.size()).setZero();  // theta-only phase
    adam_step(params, grads, state);
  }
  result.theta = params.head(result.theta.size());
  result.beta = params.tail(result.beta.size());

  // Final report over the full non-bald texel grid of the target.
  const GeometryTexture composed = model::compose_texture(result.theta, result.beta, assets);
  std::vector<int> texels;
  for (int row = 0; row < target.height; ++row)
    for (int col = 0; col < target.width; ++col)
      if (!target.is_bald(col, row)) texels.push_back(row * target.width + col);
  if (texels.empty())  // fully bald target: fall back to the evaluation grid
    texels = eval_grid(assets);
  result.final_report = texture_report(composed, target, assets.basis, texels);
  return result;
}

FitResult embed_strand_set(const HairModel& model, const model::ModelAssets& assets,
                           const scalp::ScalpMap& scalp, const EmbedOptions& opts) {
  if (model.empty()) throw Error(ErrorCode::EmptyModel, "cannot embed an empty model");
  if (opts.texture_width != assets.upsampler.out_width ||
      opts.texture_height != assets.upsampler.out_height)
    throw Error(ErrorCode::AssetMismatch, "embed texture size must match the upsampler output");

  HairModel attached = model;
  const scalp::RootSet roots = scalp::project_roots(attached, scalp);
  scalp::attach_uv(attached, roots);  // bake, report and decode share one uv set

  GeometryTexture baked =
      texture::init_texture(attached, assets.basis, opts.texture_width, opts.texture_height,
                            opts.epsilon);
  texture::TextureFitResult fitted =
      texture::optimize_texture(baked, attached, assets.basis, opts.texture_iters,
                                opts.texture_lr);

  FitResult result = parameterize_hair(fitted.texture, assets, opts.fit);
  result.texture_loss_trace = std::move(fitted.loss_trace);
  result.texture_report =
      metrics::compare(texture::decode_at_roots(fitted.texture, roots, assets.basis), attached);

  // Strand-space closed loop: the parametric model evaluated at the model's
  // own roots against the model itself.
  HairModel reconstructed =
      model::evaluate_model(result.theta, result.beta, roots, assets, /*keep_bald=*/true);
  result.final_report = metrics::compare(reconstructed, attached);
  return result;
}

void save_fit_result(const std::filesystem::path& params_path, const FitResult& result) {
  wire::Writer w;
  w.magic("PFR1");
  w.u32(static_cast<uint32_t>(result.theta.size()));
  w.u32(static_cast<uint32_t>(result.beta.size()));
  w.f64(result.theta.data(), result.theta.size());
  w.f64(result.beta.data(), result.beta.size());
  io::write_file_atomic(params_path, w.bytes);

  std::ostringstream trace;
  trace << "# iteration objective\n";
  trace.precision(12);
  for (size_t i = 0; i < result.loss_trace.size(); ++i)
    trace << i << " " << result.loss_trace[i] << "\n";
  std::filesystem::path trace_path = params_path;
  trace_path.replace_extension(".trace.txt");
  io::write_file_atomic(trace_path, trace.str());
}

std::pair<VecX, VecX> load_fit_params(const std::filesystem::path& params_path) {
  const auto bytes = io::read_file(params_path);
  wire::Reader r{bytes, params_path.string()};
  r.expect_magic("PFR1");
  const uint32_t nt = r.u32(), nb = r.u32();
  VecX theta(nt), beta(nb);
  r.f64(theta.data(), nt);
  r.f64(beta.data(), nb);
  return {std::move(theta), std::move(beta)};
}

}  // namespace hairkit::fit
