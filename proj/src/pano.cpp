#include "dfit/pano.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dfit/parallel.hpp"
#include "dfit/render.hpp"

namespace dfit {

namespace {

constexpr double kPi = std::numbers::pi;

double deg2rad(double d) { return d * kPi / 180.0; }

// Bilinear fetch in pixel space with azimuthal wrap in u and clamp in v.
double sample_bilinear_wrapped(const Raster& pano, double u, double v) {
  const int w = pano.width, h = pano.height;
  const double vc = std::clamp(v, 0.0, static_cast<double>(h - 1));
  const int v0 = std::min(static_cast<int>(vc), h - 2 >= 0 ? h - 2 : 0);
  const int v1 = std::min(v0 + 1, h - 1);
  const double fv = h > 1 ? vc - v0 : 0.0;

  double uw = std::fmod(u, static_cast<double>(w));
  if (uw < 0.0) uw += w;
  const int u0 = static_cast<int>(uw) % w;
  const int u1 = (u0 + 1) % w;
  const double fu = uw - std::floor(uw);

  const double a = pano.at(u0, v0) * (1.0 - fu) + pano.at(u1, v0) * fu;
  const double b = pano.at(u0, v1) * (1.0 - fu) + pano.at(u1, v1) * fu;
  return a * (1.0 - fv) + b * fv;
}

}  // namespace

void CutoutSpec::validate() const {
  if (!(fov_deg > 0.0) || !(fov_deg < 180.0))
    throw std::invalid_argument("cutout fov must lie in (0, 180) degrees");
  if (out_w < 1 || out_h < 1)
    throw std::invalid_argument("cutout output dimensions must be >= 1");
}

double sample_pano(const Raster& pano, double phi, double lambda) {
  const double u = phi / (2.0 * kPi) * pano.width - 0.5;
  const double v = (0.5 - lambda / kPi) * pano.height - 0.5;
  return sample_bilinear_wrapped(pano, u, v);
}

Raster extract_cutout(const Raster& pano, const CutoutSpec& spec) {
  spec.validate();
  const double t = std::tan(0.5 * deg2rad(spec.fov_deg));
  const double heading = deg2rad(spec.heading_deg);
  const double pitch = deg2rad(spec.pitch_deg);
  const double roll = deg2rad(spec.roll_deg);

  // World frame of the cutout camera: forward along azimuth `heading` on the
  // horizon, tilted by pitch; right/up follow.
  const Vec3 f0 = equirect_dir(heading, pitch);
  const Vec3 r0 = equirect_dir(heading + kPi / 2.0, 0.0);
  const Vec3 u0{f0.y * r0.z - f0.z * r0.y, f0.z * r0.x - f0.x * r0.z,
                f0.x * r0.y - f0.y * r0.x};  // up = forward x right
  // Roll rotates right/up about the forward axis.
  const double cr = std::cos(roll), sr = std::sin(roll);
  const Vec3 right = r0 * cr + u0 * sr;
  const Vec3 up = u0 * cr - r0 * sr;

  Raster out(spec.out_w, spec.out_h);
  for (int j = 0; j < spec.out_h; ++j) {
    const double b = 2.0 * (j + 0.5) / spec.out_h - 1.0;
    for (int i = 0; i < spec.out_w; ++i) {
      const double a = 2.0 * (i + 0.5) / spec.out_w - 1.0;
      const Vec3 dir = f0 + right * (a * t) + up * (-b * t);
      double phi, lambda;
      equirect_angles_of(dir, phi, lambda);
      out.at(i, j) = sample_pano(pano, phi, lambda);
    }
  }
  return out;
}

FeatureGrid lift_pano_to_grid(const std::vector<Raster>& channels, const GridSpec& spec,
                              const Vec3& cam, bool parallel) {
  spec.validate();
  if (channels.empty()) throw std::invalid_argument("lift: need >= 1 channel");
  for (const Raster& c : channels) require_same_shape(c, channels.front(), "lift channels");
  if (!cam.finite() || !spec.contains(cam))
    throw std::invalid_argument("lift: camera must lie inside the grid extent");

  const int C = static_cast<int>(channels.size());
  FeatureGrid grid(spec, C);
  const std::int64_t n = spec.num_voxels();
  parallel_for(n, parallel, [&](std::int64_t vox) {
    const int i = static_cast<int>(vox % spec.nx);
    const int j = static_cast<int>((vox / spec.nx) % spec.ny);
    const int k = static_cast<int>(vox / (static_cast<std::int64_t>(spec.nx) * spec.ny));
    const Vec3 d = spec.voxel_center(i, j, k) - cam;
    if (d.norm() < 1e-12) {
      for (int c = 0; c < C; ++c) grid.at(c, vox) = 0.0;
      return;
    }
    double phi, lambda;
    equirect_angles_of(d, phi, lambda);
    for (int c = 0; c < C; ++c) grid.at(c, vox) = sample_pano(channels[c], phi, lambda);
  });
  return grid;
}

FeatureGrid lift_pano_to_grid(const Raster& pano, const GridSpec& spec, const Vec3& cam,
                              bool parallel) {
  return lift_pano_to_grid(std::vector<Raster>{pano}, spec, cam, parallel);
}

FeatureGrid lift_multiscale(const std::vector<std::vector<Raster>>& scales,
                            const GridSpec& spec, const Vec3& cam, bool parallel) {
  if (scales.empty()) throw std::invalid_argument("lift_multiscale: need >= 1 scale");
  const size_t C = scales.front().size();
  for (const auto& s : scales)
    if (s.size() != C)
      throw std::invalid_argument("lift_multiscale: channel count mismatch across scales");

  FeatureGrid acc = lift_pano_to_grid(scales.front(), spec, cam, parallel);
  for (size_t s = 1; s < scales.size(); ++s) {
    const FeatureGrid g = lift_pano_to_grid(scales[s], spec, cam, parallel);
    for (size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += g.data[i];
  }
  return acc;
}

}  // namespace dfit
