#include "dfit/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dfit/parallel.hpp"
#include "dfit/render.hpp"

namespace dfit {

namespace {

bool covers(const SceneBox& b, double x, double y) {
  return x >= b.x && x < b.x + b.w && y >= b.y && y < b.y + b.l;
}

// Ray/AABB slab test; returns the nearest positive hit distance or +inf.
double ray_box_hit(const Vec3& o, const Vec3& d, const SceneBox& b) {
  double t_enter = -std::numeric_limits<double>::infinity();
  double t_exit = std::numeric_limits<double>::infinity();
  const double lo[3] = {b.x, b.y, 0.0};
  const double hi[3] = {b.x + b.w, b.y + b.l, b.height};
  const double oo[3] = {o.x, o.y, o.z};
  const double dd[3] = {d.x, d.y, d.z};
  for (int a = 0; a < 3; ++a) {
    if (std::abs(dd[a]) < 1e-15) {
      if (oo[a] < lo[a] || oo[a] > hi[a]) return std::numeric_limits<double>::infinity();
      continue;
    }
    double t1 = (lo[a] - oo[a]) / dd[a];
    double t2 = (hi[a] - oo[a]) / dd[a];
    if (t1 > t2) std::swap(t1, t2);
    t_enter = std::max(t_enter, t1);
    t_exit = std::min(t_exit, t2);
  }
  if (t_enter > t_exit || t_exit <= 0.0) return std::numeric_limits<double>::infinity();
  return std::max(t_enter, 0.0);
}

}  // namespace

void SceneSpec::validate(double max_height) const {
  if (!(footprint_x > 0.0) || !(footprint_y > 0.0))
    throw std::invalid_argument("scene footprint must be positive");
  for (const SceneBox& b : boxes) {
    if (!(b.w > 0.0) || !(b.l > 0.0))
      throw std::invalid_argument("box extents must be positive");
    if (!(b.height > 0.0) || !(b.height <= max_height))
      throw std::invalid_argument("box height must lie in (0, " +
                                  std::to_string(max_height) + "]");
    if (b.x < 0.0 || b.y < 0.0 || b.x + b.w > footprint_x || b.y + b.l > footprint_y)
      throw std::invalid_argument("box footprint exceeds the scene footprint");
  }
  for (size_t i = 0; i < boxes.size(); ++i)
    for (size_t j = i + 1; j < boxes.size(); ++j) {
      const SceneBox& a = boxes[i];
      const SceneBox& b = boxes[j];
      if (a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.l && b.y < a.y + a.l)
        throw std::invalid_argument("box footprints overlap");
    }
}

Raster rasterize_height(const SceneSpec& scene, const GridSpec& grid) {
  scene.validate(grid.grid_height());
  Raster out(grid.nx, grid.ny, 0.0);
  for (int j = 0; j < grid.ny; ++j) {
    const double y = grid.origin.y + (j + 0.5) * grid.voxel.y;
    for (int i = 0; i < grid.nx; ++i) {
      const double x = grid.origin.x + (i + 0.5) * grid.voxel.x;
      double h = 0.0;
      for (const SceneBox& b : scene.boxes)
        if (covers(b, x, y)) h = std::max(h, b.height);
      out.at(i, j) = h;
    }
  }
  return out;
}

PanoTruth raycast_pano_depth(const SceneSpec& scene, const Vec3& cam, int pano_w,
                             int pano_h, bool parallel) {
  scene.validate();
  if (pano_w < 1 || pano_h < 1)
    throw std::invalid_argument("panorama dimensions must be >= 1");
  if (!(cam.z > 0.0))
    throw std::invalid_argument("camera must sit above the ground plane");
  if (cam.x < 0.0 || cam.x > scene.footprint_x || cam.y < 0.0 || cam.y > scene.footprint_y)
    throw std::invalid_argument("camera must lie inside the scene footprint");
  for (const SceneBox& b : scene.boxes)
    if (covers(b, cam.x, cam.y) && cam.z < b.height)
      throw std::invalid_argument("camera lies inside a box");

  PanoTruth out{Raster(pano_w, pano_h, 0.0), Mask(pano_w, pano_h, 0)};
  const std::int64_t n = static_cast<std::int64_t>(pano_w) * pano_h;
  parallel_for(n, parallel, [&](std::int64_t p) {
    const int u = static_cast<int>(p % pano_w);
    const int v = static_cast<int>(p / pano_w);
    double phi, lambda;
    equirect_pixel_angles(u, v, pano_w, pano_h, phi, lambda);
    const Vec3 dir = equirect_dir(phi, lambda);

    double best = std::numeric_limits<double>::infinity();
    if (dir.z < 0.0) {
      const double t = -cam.z / dir.z;
      const double gx = cam.x + t * dir.x;
      const double gy = cam.y + t * dir.y;
      if (gx >= 0.0 && gx <= scene.footprint_x && gy >= 0.0 && gy <= scene.footprint_y)
        best = t;
    }
    for (const SceneBox& b : scene.boxes)
      best = std::min(best, ray_box_hit(cam, dir, b));

    if (std::isfinite(best)) {
      out.depth.data[p] = best;
    } else {
      out.sky.data[p] = 1;
    }
  });
  return out;
}

DensityField occupancy_field(const SceneSpec& scene, const GridSpec& grid,
                             double sigma_hi) {
  if (!(sigma_hi > 0.0)) throw std::invalid_argument("sigma_hi must be > 0");
  scene.validate(std::max(grid.grid_height(), grid.top_z()));
  DensityField field(grid, 0.0);
  for (int k = 0; k < grid.nz; ++k) {
    const double z = grid.origin.z + (k + 0.5) * grid.voxel.z;
    for (int j = 0; j < grid.ny; ++j) {
      const double y = grid.origin.y + (j + 0.5) * grid.voxel.y;
      for (int i = 0; i < grid.nx; ++i) {
        const double x = grid.origin.x + (i + 0.5) * grid.voxel.x;
        bool inside = z < 0.0;  // below the ground surface
        for (const SceneBox& b : scene.boxes) {
          if (inside) break;
          inside = covers(b, x, y) && z >= 0.0 && z < b.height;
        }
        if (inside) field.at(i, j, k) = sigma_hi;
      }
    }
  }
  return field;
}

std::vector<NamedScene> canonical_scenes() {
  std::vector<NamedScene> all;

  SceneSpec flat;
  all.push_back({"flat", flat});

  SceneSpec two_box;
  two_box.boxes = {
      {78.0, 118.0, 20.0, 20.0, 10.0},
      {158.0, 118.0, 20.0, 20.0, 25.0},
  };
  all.push_back({"two-box", two_box});

  SceneSpec dense;  // courtyard around the camera
  dense.boxes = {
      {118.0, 150.0, 20.0, 14.0, 20.0}, {118.0, 92.0, 20.0, 14.0, 16.0},
      {150.0, 118.0, 14.0, 20.0, 25.0}, {92.0, 118.0, 14.0, 20.0, 12.0},
      {146.0, 144.0, 16.0, 16.0, 30.0}, {94.0, 94.0, 16.0, 16.0, 10.0},
  };
  all.push_back({"dense", dense});

  for (const NamedScene& s : all) s.spec.validate();
  return all;
}

const SceneSpec& canonical_scene(const std::string& name) {
  static const std::vector<NamedScene> all = canonical_scenes();
  for (const NamedScene& s : all)
    if (s.name == name) return s.spec;
  throw std::invalid_argument("unknown canonical scene '" + name +
                              "' (have: flat, two-box, dense)");
}

}  // namespace dfit
