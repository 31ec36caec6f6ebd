#pragma once

#include <string>
#include <vector>

#include "dfit/grid.hpp"
#include "dfit/raster.hpp"

namespace dfit {

/// Axis-aligned building footprint: x/y of the min corner, w/l extents along
/// x/y, all meters. Boxes rest on the ground plane z = 0.
struct SceneBox {
  double x = 0.0, y = 0.0;
  double w = 0.0, l = 0.0;
  double height = 0.0;
};

/// Box-world scene on a flat ground plane at z = 0, with a fixed street-view
/// camera. All desk-scale ground truth derives from this.
struct SceneSpec {
  double footprint_x = 256.0;
  double footprint_y = 256.0;
  std::vector<SceneBox> boxes;
  Vec3 cam{128.0, 128.0, 2.0};

  /// Boxes must lie within the footprint, have positive extents, heights in
  /// (0, max_height], and pairwise non-overlapping footprints.
  void validate(double max_height = 64.0) const;
};

/// Pixel height = tallest box covering the pixel center (centers-inside,
/// half-open box intervals), else 0.
Raster rasterize_height(const SceneSpec& scene, const GridSpec& grid);

struct PanoTruth {
  Raster depth;  // nearest hit distance; 0 on sky pixels
  Mask sky;      // nonzero where the ray hits neither box nor ground
};

/// Exact analytic ray/box and ray/ground intersections per equirectangular
/// pixel. Ground hits count only inside the scene footprint. The camera must
/// be above ground, inside the footprint, and outside every box.
PanoTruth raycast_pano_depth(const SceneSpec& scene, const Vec3& cam, int pano_w,
                             int pano_h, bool parallel = true);

/// Binary occupancy: sigma_hi where the voxel center lies inside a box or
/// below the ground surface (z < 0), else 0. Grids whose extent dips below
/// z = 0 therefore carry the ground as their submerged layers.
DensityField occupancy_field(const SceneSpec& scene, const GridSpec& grid,
                             double sigma_hi = 1e3);

struct NamedScene {
  std::string name;
  SceneSpec spec;
};

/// Fixed scene library: "flat" (no boxes), "two-box" (equal footprints,
/// heights 10 and 25), "dense" (courtyard of 6 boxes).
std::vector<NamedScene> canonical_scenes();
const SceneSpec& canonical_scene(const std::string& name);

}  // namespace dfit
