#pragma once

#include <vector>

#include "dfit/grid.hpp"
#include "dfit/raster.hpp"

namespace dfit {

/// Perspective cutout parameters. Headings follow the panorama azimuth
/// (0 = -y, 90 = +x); pitch tilts up, roll turns about the view axis.
struct CutoutSpec {
  double heading_deg = 0.0;
  double fov_deg = 90.0;
  double pitch_deg = 0.0;
  double roll_deg = 0.0;
  int out_w = 256;
  int out_h = 256;

  void validate() const;
};

/// Bilinear panorama lookup at continuous angles; azimuth wraps, elevation
/// clamps to the pole rows.
double sample_pano(const Raster& pano, double phi, double lambda);

/// Gnomonic projection of an equirectangular panorama. Output pixel (a,b) in
/// [-1,1]^2 maps to the camera-frame direction (a tan(fov/2), 1, -b tan(fov/2)),
/// rotated by roll/pitch/heading into the world.
Raster extract_cutout(const Raster& pano, const CutoutSpec& spec);

/// Backprojects panorama values along their rays: every voxel receives the
/// panorama sample in the direction (voxel center - cam), so the lifted value
/// is constant along each panoramic ray. The voxel containing the camera
/// (zero direction) gets 0.
FeatureGrid lift_pano_to_grid(const std::vector<Raster>& channels, const GridSpec& spec,
                              const Vec3& cam, bool parallel = true);
FeatureGrid lift_pano_to_grid(const Raster& pano, const GridSpec& spec, const Vec3& cam,
                              bool parallel = true);

/// Sum of lift_pano_to_grid over scales; all scales must agree in channel count.
FeatureGrid lift_multiscale(const std::vector<std::vector<Raster>>& scales,
                            const GridSpec& spec, const Vec3& cam, bool parallel = true);

}  // namespace dfit
