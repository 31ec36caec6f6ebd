#include "dfit/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace dfit {

namespace {

constexpr double kPi = std::numbers::pi;

struct Accum {
  double depth = 0.0;
  double opacity = 0.0;
};

// Front-to-back compositing core shared by render_ray and the raster kernels.
Accum accumulate(const RaySamples& s, std::optional<double> background_depth,
                 std::vector<double>* weights_out) {
  Accum acc;
  double transmittance = 1.0;
  if (weights_out) {
    weights_out->clear();
    weights_out->reserve(s.count());
  }
  for (size_t i = 0; i < s.count(); ++i) {
    const double alpha = -std::expm1(-s.sigma[i] * s.delta[i]);  // 1 - exp(-sigma*delta)
    const double w = transmittance * alpha;
    acc.depth += w * s.dist[i];
    acc.opacity += w;
    transmittance *= 1.0 - alpha;
    if (weights_out) weights_out->push_back(w);
  }
  if (background_depth) {
    acc.depth += (1.0 - acc.opacity) * *background_depth;
    acc.opacity = 1.0;
  }
  return acc;
}

// Exit distance from inside an AABB along dir (slab method). Assumes the
// origin is inside; returns 0 for degenerate directions.
double aabb_exit(const Vec3& lo, const Vec3& hi, const Vec3& o, const Vec3& d) {
  double t_exit = std::numeric_limits<double>::infinity();
  const double ox[3] = {o.x, o.y, o.z};
  const double dx[3] = {d.x, d.y, d.z};
  const double lox[3] = {lo.x, lo.y, lo.z};
  const double hix[3] = {hi.x, hi.y, hi.z};
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dx[a]) < 1e-15) continue;
    const double t1 = (lox[a] - ox[a]) / dx[a];
    const double t2 = (hix[a] - ox[a]) / dx[a];
    t_exit = std::min(t_exit, std::max(t1, t2));
  }
  return std::isfinite(t_exit) ? std::max(t_exit, 0.0) : 0.0;
}

}  // namespace

void RaySamples::validate() const {
  if (delta.size() != sigma.size() || dist.size() != sigma.size())
    throw std::invalid_argument("ray samples: array lengths differ");
  double prev = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < sigma.size(); ++i) {
    if (!(sigma[i] >= 0.0) || !std::isfinite(sigma[i]))
      throw std::invalid_argument("ray samples: sigma must be finite and >= 0");
    if (!(delta[i] > 0.0) || !std::isfinite(delta[i]))
      throw std::invalid_argument("ray samples: delta must be finite and > 0");
    if (!(dist[i] > prev) || !std::isfinite(dist[i]))
      throw std::invalid_argument("ray samples: dist must be finite and strictly increasing");
    prev = dist[i];
  }
}

RenderResult render_ray(const RaySamples& samples, std::optional<double> background_depth) {
  samples.validate();
  RenderResult r;
  const Accum acc = accumulate(samples, background_depth, &r.weights);
  r.depth = acc.depth;
  r.opacity = acc.opacity;
  return r;
}

std::vector<double> render_ray_grad(const RaySamples& samples,
                                    std::optional<double> background_depth,
                                    double upstream_depth, double upstream_opacity) {
  samples.validate();
  const size_t n = samples.count();

  // With a background the composited opacity is constant 1, so only the
  // depth channel backpropagates; its extra term is -background * dO/dsigma.
  double up_d = upstream_depth;
  double up_o = upstream_opacity;
  if (background_depth) {
    up_o = -upstream_depth * *background_depth;
  }

  // Forward pass for weights and transmittance after each sample.
  std::vector<double> w(n), trans_after(n);
  double transmittance = 1.0;
  for (size_t i = 0; i < n; ++i) {
    const double alpha = -std::expm1(-samples.sigma[i] * samples.delta[i]);
    w[i] = transmittance * alpha;
    transmittance *= 1.0 - alpha;
    trans_after[i] = transmittance;  // = T_i * exp(-sigma_i delta_i)
  }

  // dw_k/dsigma_i = delta_i * T_{i+1}      for k == i
  //              = -delta_i * w_k          for k > i
  // so the adjoint needs only suffix sums of w_k and w_k d_k.
  std::vector<double> grad(n);
  double suffix_w = 0.0, suffix_wd = 0.0;
  for (size_t ii = n; ii-- > 0;) {
    const double d_depth = samples.delta[ii] * (trans_after[ii] * samples.dist[ii] - suffix_wd);
    const double d_opac = samples.delta[ii] * (trans_after[ii] - suffix_w);
    grad[ii] = up_d * d_depth + up_o * d_opac;
    suffix_w += w[ii];
    suffix_wd += w[ii] * samples.dist[ii];
  }
  return grad;
}

std::vector<Ray> make_topdown_rays(const GridSpec& spec) {
  spec.validate();
  const double top = spec.top_z();
  // Rays stop at the virtual ground plane z=0 (or the grid bottom if the grid
  // sits entirely above it); the backstop composites at the plane distance.
  const double t_far = std::min(spec.grid_height(), std::max(top, 0.0));
  std::vector<Ray> rays;
  rays.reserve(static_cast<size_t>(spec.nx) * spec.ny);
  for (int j = 0; j < spec.ny; ++j) {
    for (int i = 0; i < spec.nx; ++i) {
      Ray r;
      r.origin = {spec.origin.x + (i + 0.5) * spec.voxel.x,
                  spec.origin.y + (j + 0.5) * spec.voxel.y, top};
      r.dir = {0.0, 0.0, -1.0};
      r.t_near = 0.0;
      r.t_far = t_far;
      r.background_depth = top;
      rays.push_back(r);
    }
  }
  return rays;
}

Vec3 equirect_dir(double phi, double lambda) {
  const double cl = std::cos(lambda);
  return {cl * std::sin(phi), -cl * std::cos(phi), std::sin(lambda)};
}

void equirect_pixel_angles(double u, double v, int w, int h, double& phi, double& lambda) {
  phi = 2.0 * kPi * (u + 0.5) / w;
  lambda = kPi / 2.0 - kPi * (v + 0.5) / h;
}

void equirect_angles_of(const Vec3& dir, double& phi, double& lambda) {
  const double horiz = std::hypot(dir.x, dir.y);
  lambda = std::atan2(dir.z, horiz);
  phi = std::atan2(dir.x, -dir.y);
  if (phi < 0.0) phi += 2.0 * kPi;
}

std::vector<Ray> make_pano_rays(const GridSpec& spec, const Vec3& cam, int pano_w,
                                int pano_h) {
  spec.validate();
  if (pano_w < 1 || pano_h < 1)
    throw std::invalid_argument("panorama dimensions must be >= 1");
  if (!cam.finite() || !spec.contains(cam))
    throw std::invalid_argument("panorama camera must lie inside the grid extent");

  const Vec3 lo = spec.origin;
  const Vec3 hi = spec.origin + spec.extent();
  std::vector<Ray> rays;
  rays.reserve(static_cast<size_t>(pano_w) * pano_h);
  for (int v = 0; v < pano_h; ++v) {
    for (int u = 0; u < pano_w; ++u) {
      double phi, lambda;
      equirect_pixel_angles(u, v, pano_w, pano_h, phi, lambda);
      Ray r;
      r.origin = cam;
      r.dir = equirect_dir(phi, lambda);
      r.t_near = 0.0;
      r.t_far = aabb_exit(lo, hi, cam, r.dir);
      rays.push_back(r);
    }
  }
  return rays;
}

double default_step(const GridSpec& spec) {
  return 0.5 * std::min({spec.voxel.x, spec.voxel.y, spec.voxel.z});
}

namespace detail {

void march(const DensityField& field, const Ray& ray, double step, MarchBuffers& buf,
           bool record_stencils) {
  if (!(step > 0.0)) throw std::invalid_argument("marching step must be > 0");
  buf.samples.sigma.clear();
  buf.samples.delta.clear();
  buf.samples.dist.clear();
  buf.stencils.clear();
  buf.inside.clear();

  const double length = ray.t_far - ray.t_near;
  if (!(length > 0.0)) return;  // degenerate ray: empty samples

  const auto n = static_cast<std::int64_t>(std::ceil(length / step - 1e-12));
  for (std::int64_t i = 0; i < std::max<std::int64_t>(n, 1); ++i) {
    const double t0 = ray.t_near + i * step;
    const double t1 = std::min(ray.t_near + (i + 1) * step, ray.t_far);
    const double delta = t1 - t0;
    if (!(delta > 0.0)) break;
    const double d = 0.5 * (t0 + t1);
    const Vec3 p = ray.origin + ray.dir * d;

    TrilinearStencil st;
    const bool in = trilinear_stencil(field.spec(), p, st);
    double sigma = 0.0;
    if (in)
      for (int c = 0; c < 8; ++c) sigma += st.w[c] * field.sigma()[st.idx[c]];

    buf.samples.sigma.push_back(sigma);
    buf.samples.delta.push_back(delta);
    buf.samples.dist.push_back(d);
    if (record_stencils) {
      buf.stencils.push_back(st);
      buf.inside.push_back(in ? 1 : 0);
    }
  }
}

}  // namespace detail

RaySamples sample_along_ray(const DensityField& field, const Ray& ray, double step) {
  detail::MarchBuffers buf;
  detail::march(field, ray, step, buf, false);
  return std::move(buf.samples);
}

Raster render_height_map(const DensityField& field, double step, bool parallel) {
  const GridSpec& spec = field.spec();
  if (step <= 0.0) step = default_step(spec);
  const std::vector<Ray> rays = make_topdown_rays(spec);
  const double top = spec.top_z();

  Raster height(spec.nx, spec.ny);
#pragma omp parallel if (parallel)
  {
    detail::MarchBuffers buf;
#pragma omp for schedule(static)
    for (std::int64_t p = 0; p < static_cast<std::int64_t>(rays.size()); ++p) {
      detail::march(field, rays[p], step, buf, false);
      const Accum acc = accumulate(buf.samples, rays[p].background_depth, nullptr);
      height.data[p] = std::clamp(top - acc.depth, 0.0, top);
    }
  }
  return height;
}

PanoRender render_depth_pano(const DensityField& field, const Vec3& cam, int pano_w,
                             int pano_h, double step, bool parallel) {
  const GridSpec& spec = field.spec();
  if (step <= 0.0) step = default_step(spec);
  const std::vector<Ray> rays = make_pano_rays(spec, cam, pano_w, pano_h);

  PanoRender out{Raster(pano_w, pano_h), Raster(pano_w, pano_h)};
#pragma omp parallel if (parallel)
  {
    detail::MarchBuffers buf;
#pragma omp for schedule(static)
    for (std::int64_t p = 0; p < static_cast<std::int64_t>(rays.size()); ++p) {
      detail::march(field, rays[p], step, buf, false);
      const Accum acc = accumulate(buf.samples, std::nullopt, nullptr);
      out.depth.data[p] = acc.depth;
      out.opacity.data[p] = acc.opacity;
    }
  }
  return out;
}

}  // namespace dfit
