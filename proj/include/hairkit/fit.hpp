#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "hairkit/metrics.hpp"
#include "hairkit/model.hpp"
#include "hairkit/scalp.hpp"
#include "hairkit/texture.hpp"
#include "hairkit/types.hpp"

namespace hairkit::fit {

struct AdamHyper {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct LrSchedule {
  enum class Kind { Constant, Cosine };
  Kind kind = Kind::Constant;
  long total_steps = 0;       // cosine period
  double floor_ratio = 1e-3;  // lr_min = floor_ratio * lr0

  double factor(long step) const;  // multiplier applied to the base lr
};

struct OptimState {
  long step = 0;
  VecX m, v;  // first/second moment accumulators
  AdamHyper hp;
  LrSchedule schedule;

  static OptimState init(Eigen::Index n, AdamHyper hp = {}, LrSchedule schedule = {});
};

// One bias-corrected Adam update, in place. Deterministic.
void adam_step(VecX& params, const VecX& grads, OptimState& state);

struct ParameterizeOptions {
  int warmup_iters = 1000;  // theta only
  int joint_iters = 4000;
  double lr = 0.1;
  LrSchedule::Kind schedule = LrSchedule::Kind::Cosine;
  double lr_floor_ratio = 1e-3;
  double tex_weight = 1.0;   // lambda_tex
  double geo_weight = 1.0;   // lambda_geo
  double huber_delta = 1e-3;
  int checkpoint_every = 100;
};

struct FitResult {
  VecX theta, beta;
  std::vector<double> loss_trace;                           // one objective per iteration
  metrics::StrandPairReport final_report;                   // strand space, full grid
  std::optional<metrics::StrandPairReport> texture_report;  // embed: texture-fit stage
  std::optional<std::vector<double>> texture_loss_trace;    // embed: texture-fit trace
};

// Objective |F(G(theta)) (+) D(beta) - T|_1 (Huber surrogate, per-texel-channel
// mean) + L_geo on strands decoded at the guide-texel-center evaluation grid
// (smooth surrogate, per-point mean). Exposed for gradient checking.
struct Objective {
  double value = 0.0;
  double tex_term = 0.0, geo_term = 0.0;
  VecX grad_theta, grad_beta;
};
Objective parameterize_objective(const VecX& theta, const VecX& beta,
                                 const texture::GeometryTexture& target,
                                 const model::ModelAssets& assets,
                                 const ParameterizeOptions& opts, bool want_grads = true);

// Warm-up on theta only, then joint Adam with cosine annealing, from
// theta = beta = 0. final_report compares decoded strands against the target
// texture over the full non-bald texel grid.
FitResult parameterize_hair(const texture::GeometryTexture& target,
                            const model::ModelAssets& assets,
                            const ParameterizeOptions& opts = {});

struct EmbedOptions {
  int texture_width = 256, texture_height = 256;
  double epsilon = 0.01;
  int texture_iters = 500;
  double texture_lr = 0.001;
  ParameterizeOptions fit;
};

// Bake + optimize a geometry texture for the model, then parameterize it.
// texture_report covers the baking stage (decoded texture vs model strands);
// final_report compares the parametric reconstruction against the model at its
// own roots.
FitResult embed_strand_set(const HairModel& model, const model::ModelAssets& assets,
                           const scalp::ScalpMap& scalp, const EmbedOptions& opts = {});

// Parameter vectors as "PFR1" (uint32 |theta|, |beta|, float64 arrays) plus a
// plain-text "iteration objective" trace alongside.
void save_fit_result(const std::filesystem::path& params_path, const FitResult& result);
std::pair<VecX, VecX> load_fit_params(const std::filesystem::path& params_path);

}  // namespace hairkit::fit
