#include "dfit/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "dfit/losses.hpp"
#include "dfit/optimize.hpp"
#include "dfit/render.hpp"
#include "dfit/scene.hpp"

namespace dfit {

namespace {

constexpr double kFloor = 1e-7;

double rel_err(double analytic, double fd) {
  return std::abs(analytic - fd) / std::max(std::abs(fd), kFloor);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0,1)
  return lo + u * (hi - lo);
}

// Analytic per-sample gradients of depth and opacity vs central differences.
void check_render(std::mt19937_64& rng, GradCheckReport& rep) {
  constexpr double h = 1e-4;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 64);
    const bool with_bg = trial % 2 == 1;
    RaySamples s;
    double d = uniform(rng, 0.05, 0.5);
    for (int i = 0; i < n; ++i) {
      const double delta = uniform(rng, 0.2, 1.0);
      // lower bound keeps sigma - h valid for the central difference
      s.sigma.push_back(uniform(rng, 2e-4, 2.0));
      s.delta.push_back(delta);
      s.dist.push_back(d + 0.5 * delta);
      d += delta;
    }
    const std::optional<double> bg = with_bg ? std::optional<double>(d + 1.0) : std::nullopt;

    const std::vector<double> gd = render_ray_grad(s, bg, 1.0, 0.0);
    const std::vector<double> go = render_ray_grad(s, bg, 0.0, 1.0);
    for (int i = 0; i < n; ++i) {
      RaySamples sp = s, sm = s;
      sp.sigma[i] += h;
      sm.sigma[i] = std::max(sm.sigma[i] - h, 0.0);
      const double dh = sp.sigma[i] - sm.sigma[i];
      const RenderResult rp = render_ray(sp, bg);
      const RenderResult rm = render_ray(sm, bg);
      const double fd_d = (rp.depth - rm.depth) / dh;
      const double fd_o = (rp.opacity - rm.opacity) / dh;
      double& slot = with_bg ? rep.render_background : rep.render_depth;
      slot = std::max(slot, rel_err(gd[i], fd_d));
      if (!with_bg) rep.render_opacity = std::max(rep.render_opacity, rel_err(go[i], fd_o));
    }
  }
}

void check_si_loss(std::mt19937_64& rng, GradCheckReport& rep) {
  constexpr double h = 1e-5;
  const int w = 12, ht = 9;
  Raster pred(w, ht), gt(w, ht);
  Mask mask(w, ht, 0);
  for (size_t i = 0; i < pred.size(); ++i) {
    pred.data[i] = uniform(rng, 0.1, 30.0);
    gt.data[i] = uniform(rng, 0.1, 30.0);
    mask.data[i] = rng() % 5 == 0 ? 1 : 0;
  }
  const LossValue l = scale_invariant_loss(pred, gt, &mask);
  for (size_t i = 0; i < pred.size(); ++i) {
    Raster p2 = pred;
    p2.data[i] = pred.data[i] + h;
    const double fp = scale_invariant_loss(p2, gt, &mask).value;
    p2.data[i] = pred.data[i] - h;
    const double fm = scale_invariant_loss(p2, gt, &mask).value;
    rep.si_loss = std::max(rep.si_loss, rel_err(l.grad.data[i], (fp - fm) / (2 * h)));
  }
}

void check_rank_loss(std::mt19937_64& rng, GradCheckReport& rep) {
  constexpr double h = 1e-5;
  const int w = 32, ht = 16;
  Raster depth(w, ht), pred(w, ht);
  for (size_t i = 0; i < depth.size(); ++i) {
    depth.data[i] = uniform(rng, 0.5, 40.0);
    pred.data[i] = uniform(rng, 0.5, 40.0);
  }
  const RankPairs pairs = sample_rank_pairs(depth, 128, 2.0, 8.0, 0.02, rng());
  for (const RankConvention conv :
       {RankConvention::kFormula, RankConvention::kOrderAligned}) {
    const RankingLoss l = ranking_loss(pred, pairs, conv);
    for (size_t i = 0; i < pred.size(); ++i) {
      if (l.grad.data[i] == 0.0) continue;  // untouched pixel
      Raster p2 = pred;
      p2.data[i] = pred.data[i] + h;
      const double fp = ranking_loss(p2, pairs, conv).mean;
      p2.data[i] = pred.data[i] - h;
      const double fm = ranking_loss(p2, pairs, conv).mean;
      rep.rank_loss = std::max(rep.rank_loss, rel_err(l.grad.data[i], (fp - fm) / (2 * h)));
    }
  }
}

void check_sky_loss(std::mt19937_64& rng, GradCheckReport& rep) {
  constexpr double h = 1e-5;
  const int w = 24, ht = 12;
  Raster opacity(w, ht);
  Mask sky(w, ht);
  for (size_t i = 0; i < opacity.size(); ++i) {
    opacity.data[i] = uniform(rng, 0.05, 0.95);  // away from the |.| kinks
    sky.data[i] = rng() % 2;
  }
  const LossValue l = sky_loss(opacity, sky);
  for (size_t i = 0; i < opacity.size(); ++i) {
    Raster o2 = opacity;
    o2.data[i] = opacity.data[i] + h;
    const double fp = sky_loss(o2, sky).value;
    o2.data[i] = opacity.data[i] - h;
    const double fm = sky_loss(o2, sky).value;
    rep.sky_loss = std::max(rep.sky_loss, rel_err(l.grad.data[i], (fp - fm) / (2 * h)));
  }
}

// Full objective (rendered height + street losses) on a tiny grid, probed at
// random parameter entries.
void check_composite(std::mt19937_64& rng, GradCheckReport& rep) {
  constexpr double h = 1e-4;
  GridSpec spec;
  spec.nx = spec.ny = spec.nz = 8;
  const int pano_w = 8, pano_h = 4;

  SceneSpec scene;
  scene.footprint_x = scene.footprint_y = 8.0;
  scene.boxes = {{1.0, 1.0, 3.0, 3.0, 5.0}, {5.0, 5.0, 2.0, 2.0, 3.0}};
  scene.cam = {4.5, 4.5, 1.5};

  OptimConfig config;
  config.cam = scene.cam;
  config.alpha = 1.0;
  config.parallel = false;

  const Raster gt = rasterize_height(scene, spec);
  const PanoTruth truth = raycast_pano_depth(scene, scene.cam, pano_w, pano_h, false);
  const RankPairs pairs = sample_rank_pairs(truth.depth, 64, 1.0, 3.0, 0.02, rng());

  std::vector<double> theta(spec.num_voxels());
  for (double& t : theta) t = softplus_inv(uniform(rng, 0.05, 0.5));

  const ObjectiveEval eval = evaluate_objective(spec, theta, gt, nullptr, &pairs,
                                                &truth.sky, pano_w, pano_h, config);
  auto value_at = [&](const std::vector<double>& th) {
    return evaluate_objective(spec, th, gt, nullptr, &pairs, &truth.sky, pano_w, pano_h,
                              config)
        .loss.l_total;
  };
  for (int probe = 0; probe < 32; ++probe) {
    const size_t i = rng() % theta.size();
    std::vector<double> th = theta;
    th[i] = theta[i] + h;
    const double fp = value_at(th);
    th[i] = theta[i] - h;
    const double fm = value_at(th);
    rep.composite = std::max(rep.composite, rel_err(eval.grad_theta[i], (fp - fm) / (2 * h)));
  }
}

}  // namespace

bool GradCheckReport::pass() const {
  return render_depth < kTol && render_opacity < kTol && render_background < kTol &&
         si_loss < kTol && rank_loss < kTol && sky_loss < kTol &&
         composite < kTolComposite;
}

GradCheckReport run_gradcheck(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  GradCheckReport rep;
  check_render(rng, rep);
  check_si_loss(rng, rep);
  check_rank_loss(rng, rep);
  check_sky_loss(rng, rep);
  check_composite(rng, rep);
  return rep;
}

void print_report(std::ostream& os, const GradCheckReport& r) {
  auto line = [&](const char* name, double err, double tol) {
    os << name << " max_rel_err=" << err << " tol=" << tol
       << (err < tol ? "  ok" : "  FAIL") << "\n";
  };
  line("render/depth      ", r.render_depth, GradCheckReport::kTol);
  line("render/opacity    ", r.render_opacity, GradCheckReport::kTol);
  line("render/background ", r.render_background, GradCheckReport::kTol);
  line("loss/scale-inv    ", r.si_loss, GradCheckReport::kTol);
  line("loss/ranking      ", r.rank_loss, GradCheckReport::kTol);
  line("loss/sky          ", r.sky_loss, GradCheckReport::kTol);
  line("composite         ", r.composite, GradCheckReport::kTolComposite);
}

}  // namespace dfit
