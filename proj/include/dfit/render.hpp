#pragma once

#include <optional>
#include <vector>

#include "dfit/grid.hpp"
#include "dfit/raster.hpp"

namespace dfit {

struct Ray {
  Vec3 origin;
  Vec3 dir;  // unit-norm
  double t_near = 0.0;
  double t_far = 0.0;
  std::optional<double> background_depth;  // opaque backstop composited at this depth
};

/// Per-ray sample arrays: sigma_i (1/m), delta_i (step, m), dist_i (from the
/// ray origin, m). delta > 0 and dist strictly increasing.
struct RaySamples {
  std::vector<double> sigma;
  std::vector<double> delta;
  std::vector<double> dist;

  size_t count() const { return sigma.size(); }
  void validate() const;
};

struct RenderResult {
  double depth = 0.0;    // expected termination distance
  double opacity = 0.0;  // 1 - final transmittance, in [0,1]
  std::vector<double> weights;
};

/// Front-to-back compositing:
///   w_i = T_i * (1 - exp(-sigma_i * delta_i)),  T_i = exp(-sum_{j<i} sigma_j delta_j)
///   depth = sum w_i d_i,  opacity = sum w_i.
/// With a background, depth += (1 - opacity) * background_depth and opacity = 1.
RenderResult render_ray(const RaySamples& samples, std::optional<double> background_depth);

/// Analytic d(loss)/d(sigma_i) for upstream dL/d(depth), dL/d(opacity).
/// Exact adjoint of render_ray, including the background term.
std::vector<double> render_ray_grad(const RaySamples& samples,
                                    std::optional<double> background_depth,
                                    double upstream_depth, double upstream_opacity);

/// One downward ray per (x,y) column: origin at the column center on the grid
/// top plane, direction (0,0,-1), backed by a virtual opaque ground at z=0.
std::vector<Ray> make_topdown_rays(const GridSpec& spec);

// Equirectangular mapping. Pixel (u,v) of a w x h panorama:
//   azimuth   phi    = 2*pi*(u+0.5)/w
//   elevation lambda = pi/2 - pi*(v+0.5)/h      (top row = zenith)
// Direction (cos(lambda)sin(phi), -cos(lambda)cos(phi), sin(lambda)).
Vec3 equirect_dir(double phi, double lambda);
void equirect_pixel_angles(double u, double v, int w, int h, double& phi, double& lambda);
/// Inverse of equirect_dir; phi in [0, 2*pi), lambda in [-pi/2, pi/2].
void equirect_angles_of(const Vec3& dir, double& phi, double& lambda);

/// One ray per panorama pixel from `cam` (must lie inside the grid extent);
/// t_far is the grid exit distance, no background (residual transparency = sky).
std::vector<Ray> make_pano_rays(const GridSpec& spec, const Vec3& cam, int pano_w,
                                int pano_h);

/// Uniform midpoint sampling with the last interval truncated at t_far.
/// Degenerate rays (t_far <= t_near) yield empty samples.
RaySamples sample_along_ray(const DensityField& field, const Ray& ray, double step);

/// Default marching step: half the smallest voxel dimension.
double default_step(const GridSpec& spec);

/// Per-column rendered surface height in meters: top_z - depth of the
/// backed top-down ray, clamped to [0, top_z]. Empty columns render 0.
Raster render_height_map(const DensityField& field, double step = 0.0,
                         bool parallel = true);

struct PanoRender {
  Raster depth;
  Raster opacity;
};

PanoRender render_depth_pano(const DensityField& field, const Vec3& cam, int pano_w,
                             int pano_h, double step = 0.0, bool parallel = true);

namespace detail {

/// Reusable per-thread marching buffers. `stencils`/`inside` are filled only
/// when requested (backward passes scatter through the recorded stencils).
struct MarchBuffers {
  RaySamples samples;
  std::vector<TrilinearStencil> stencils;
  std::vector<std::uint8_t> inside;
};

void march(const DensityField& field, const Ray& ray, double step, MarchBuffers& buf,
           bool record_stencils);

}  // namespace detail

}  // namespace dfit
