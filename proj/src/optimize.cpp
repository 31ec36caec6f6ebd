#include "dfit/optimize.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dfit/render.hpp"

namespace dfit {

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double softplus_inv(double y) {
  if (!(y > 0.0)) throw std::invalid_argument("softplus_inv: argument must be > 0");
  if (y > 20.0) return y;  // exp(-y) below double resolution
  return std::log(std::expm1(y));
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void OptimConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw std::invalid_argument("adam betas must lie in [0,1)");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (lr_decay_every < 1) throw std::invalid_argument("lr_decay_every must be >= 1");
  if (!(init_sigma > 0.0)) throw std::invalid_argument("init_sigma must be > 0");
}

double OptimConfig::lr_at(int epoch) const {
  const int decays = (epoch - 1) / lr_decay_every;
  return lr * std::pow(lr_decay, decays);
}

OptimState::OptimState(GridSpec s, double theta_fill) : spec(s) {
  spec.validate();
  const auto n = static_cast<size_t>(spec.num_voxels());
  theta.assign(n, theta_fill);
  m.assign(n, 0.0);
  v.assign(n, 0.0);
}

OptimState init_from_lift(const FeatureGrid& lifted, double gain) {
  if (lifted.channels != 1)
    throw std::invalid_argument("init_from_lift: expected a single-channel grid");
  OptimState state(lifted.spec);
  for (size_t i = 0; i < state.theta.size(); ++i)
    state.theta[i] = softplus_inv(std::max(gain * lifted.data[i], 1e-6));
  return state;
}

void adam_step(OptimState& state, const std::vector<double>& grad,
               const OptimConfig& config, double lr_override) {
  if (grad.size() != state.theta.size())
    throw std::invalid_argument("adam_step: gradient shape mismatch");
  for (double g : grad)
    if (!std::isfinite(g)) throw std::invalid_argument("adam_step: non-finite gradient");

  const double lr = lr_override >= 0.0 ? lr_override : config.lr;
  state.t += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < grad.size(); ++i) {
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * grad[i];
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    state.theta[i] -= lr * mhat / (std::sqrt(vhat) + config.adam_eps);
  }
}

Vec3 default_camera(const GridSpec& spec) {
  const Vec3 e = spec.extent();
  return {spec.origin.x + 0.5 * e.x, spec.origin.y + 0.5 * e.y, 2.0};
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

// Backpropagates upstream depth/opacity gradients through the given rays into
// the sigma grid. Rays with zero upstream are skipped. In deterministic mode
// the reduction is sequential; otherwise per-thread partials are reduced in
// thread order (reproducible for a fixed thread count).
void backward_rays(const DensityField& field, const std::vector<Ray>& rays,
                   const std::vector<double>& up_depth,
                   const std::vector<double>* up_opacity, double step,
                   bool parallel, std::vector<double>& grad_sigma) {
  const auto nvox = grad_sigma.size();
  const auto nrays = static_cast<std::int64_t>(rays.size());

  auto process = [&](std::int64_t p, detail::MarchBuffers& buf, std::vector<double>& out) {
    const double ud = up_depth[p];
    const double uo = up_opacity ? (*up_opacity)[p] : 0.0;
    if (ud == 0.0 && uo == 0.0) return;
    detail::march(field, rays[p], step, buf, true);
    if (buf.samples.count() == 0) return;
    const std::vector<double> g =
        render_ray_grad(buf.samples, rays[p].background_depth, ud, uo);
    for (size_t s = 0; s < g.size(); ++s) {
      if (!buf.inside[s] || g[s] == 0.0) continue;
      const TrilinearStencil& st = buf.stencils[s];
      for (int c = 0; c < 8; ++c) out[st.idx[c]] += g[s] * st.w[c];
    }
  };

  if (!parallel) {
    detail::MarchBuffers buf;
    for (std::int64_t p = 0; p < nrays; ++p) process(p, buf, grad_sigma);
    return;
  }

  const int nthreads = omp_get_max_threads();
  std::vector<std::vector<double>> partial(nthreads);
#pragma omp parallel
  {
    const int tid = omp_get_thread_num();
    partial[tid].assign(nvox, 0.0);
    detail::MarchBuffers buf;
#pragma omp for schedule(static)
    for (std::int64_t p = 0; p < nrays; ++p) process(p, buf, partial[tid]);
  }
  for (int t = 0; t < nthreads; ++t) {
    if (partial[t].empty()) continue;
    for (size_t i = 0; i < nvox; ++i) grad_sigma[i] += partial[t][i];
  }
}

}  // namespace

ObjectiveEval evaluate_objective(const GridSpec& spec, const std::vector<double>& theta,
                                 const Raster& gt_height, const Mask* height_mask,
                                 const RankPairs* pairs, const Mask* sky, int pano_w,
                                 int pano_h, const OptimConfig& config) {
  spec.validate();
  if (gt_height.width != spec.nx || gt_height.height != spec.ny)
    throw std::invalid_argument("ground-truth height map does not match the grid footprint");
  if (theta.size() != static_cast<size_t>(spec.num_voxels()))
    throw std::invalid_argument("theta shape mismatch");

  const double step = config.step > 0.0 ? config.step : default_step(spec);
  const bool want_pano = pairs != nullptr || sky != nullptr;
  if (want_pano && (pano_w < 1 || pano_h < 1))
    throw std::invalid_argument("street supervision requires panorama dimensions");

  // sigma = softplus(theta)
  std::vector<double> sigma(theta.size());
#pragma omp parallel for schedule(static) if (config.parallel)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(theta.size()); ++i)
    sigma[i] = softplus(theta[i]);
  const DensityField field(spec, std::move(sigma));

  // Forward: top-down depths -> height map.
  const std::vector<Ray> topdown = make_topdown_rays(spec);
  const double top = spec.top_z();
  Raster height(spec.nx, spec.ny);
#pragma omp parallel if (config.parallel)
  {
    detail::MarchBuffers buf;
#pragma omp for schedule(static)
    for (std::int64_t p = 0; p < static_cast<std::int64_t>(topdown.size()); ++p) {
      detail::march(field, topdown[p], step, buf, false);
      const RenderResult r = render_ray(buf.samples, topdown[p].background_depth);
      height.data[p] = std::clamp(top - r.depth, 0.0, top);
    }
  }
  const LossValue lh = scale_invariant_loss(height, gt_height, height_mask);

  // Forward: panorama depth/opacity when street supervision is present.
  Vec3 cam = config.cam.value_or(default_camera(spec));
  PanoRender pano;
  RankingLoss rank;
  LossValue skyv;
  if (want_pano) {
    pano = render_depth_pano(field, cam, pano_w, pano_h, step, config.parallel);
    if (pairs) rank = ranking_loss(pano.depth, *pairs, config.rank_convention);
    if (sky) skyv = sky_loss(pano.opacity, *sky);
  }

  ObjectiveEval out;
  out.loss = total_loss(lh.value, pairs ? rank.mean : 0.0, sky ? skyv.value : 0.0,
                        config.alpha);
  out.height = height;

  // Backward into the sigma grid. height = top - depth, so the depth upstream
  // is the negated height gradient; the clamp is inactive in exact arithmetic.
  std::vector<double> grad_sigma(theta.size(), 0.0);
  const bool par_reduce = config.parallel && !config.deterministic;
  {
    std::vector<double> up_depth(lh.grad.size());
    for (size_t i = 0; i < up_depth.size(); ++i) up_depth[i] = -lh.grad.data[i];
    backward_rays(field, topdown, up_depth, nullptr, step, par_reduce, grad_sigma);
  }
  if (want_pano) {
    const std::vector<Ray> pano_rays = make_pano_rays(spec, cam, pano_w, pano_h);
    std::vector<double> up_depth(pano_rays.size(), 0.0);
    std::vector<double> up_opacity(pano_rays.size(), 0.0);
    if (pairs)
      for (size_t i = 0; i < up_depth.size(); ++i)
        up_depth[i] = config.alpha * rank.grad.data[i];
    if (sky)
      for (size_t i = 0; i < up_opacity.size(); ++i)
        up_opacity[i] = config.alpha * skyv.grad.data[i];
    backward_rays(field, pano_rays, up_depth, &up_opacity, step, par_reduce, grad_sigma);
  }

  // Chain through the softplus parameterization.
  out.grad_theta.resize(theta.size());
#pragma omp parallel for schedule(static) if (config.parallel)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(theta.size()); ++i)
    out.grad_theta[i] = grad_sigma[i] * logistic(theta[i]);
  return out;
}

FitResult fit_field(const GridSpec& spec, const Raster& gt_height,
                    const std::optional<StreetSupervision>& street,
                    const std::optional<FeatureGrid>& init, const OptimConfig& config,
                    const Mask* height_mask) {
  config.validate();
  spec.validate();

  OptimState state = init ? init_from_lift(*init, config.init_gain)
                          : OptimState(spec, softplus_inv(config.init_sigma));
  if (init && !(init->spec == spec))
    throw std::invalid_argument("fit_field: init grid does not match the target grid");

  int pano_w = 0, pano_h = 0;
  if (street) {
    if (!street->oracle_depth && !street->fixed_pairs)
      throw std::invalid_argument(
          "fit_field: street supervision needs a reference panorama or fixed pairs");
    pano_w = street->sky.width;
    pano_h = street->sky.height;
    if (street->oracle_depth &&
        (street->oracle_depth->width != pano_w || street->oracle_depth->height != pano_h))
      throw std::invalid_argument("fit_field: sky mask does not match the panorama");
  }

  std::vector<TraceRow> trace;
  trace.reserve(config.epochs);
  RankPairs pairs;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const RankPairs* pairs_ptr = nullptr;
    const Mask* sky_ptr = nullptr;
    if (street) {
      if (street->fixed_pairs) {
        pairs_ptr = &*street->fixed_pairs;
      } else {
        if (config.resample_pairs_each_epoch || epoch == 1)
          pairs = sample_rank_pairs(
              *street->oracle_depth, config.rank_pairs, config.pair_min_dist,
              config.pair_max_dist, config.tau_rel,
              derive_seed(config.seed, config.resample_pairs_each_epoch ? epoch : 1));
        pairs_ptr = &pairs;
      }
      sky_ptr = &street->sky;
    }

    ObjectiveEval eval = evaluate_objective(spec, state.theta, gt_height, height_mask,
                                            pairs_ptr, sky_ptr, pano_w, pano_h, config);
    const double lr = config.lr_at(epoch);
    trace.push_back({epoch, eval.loss, lr});
    state.trace.push_back(eval.loss);
    if (!std::isfinite(eval.loss.l_total))
      throw FitDiverged("fit_field: objective diverged at epoch " + std::to_string(epoch),
                        trace);
    adam_step(state, eval.grad_theta, config, lr);
  }

  std::vector<double> sigma(state.theta.size());
  for (size_t i = 0; i < sigma.size(); ++i) sigma[i] = softplus(state.theta[i]);
  return {DensityField(spec, std::move(sigma)), std::move(trace)};
}

}  // namespace dfit
