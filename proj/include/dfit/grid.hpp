#pragma once

#include <cstdint>
#include <vector>

#include "dfit/geometry.hpp"

namespace dfit {

/// Axis-aligned voxel grid geometry. x = east (image column), y = north
/// (image row, increasing northward), z = up. `origin` is the world
/// position of the grid's min corner; voxel center (i,j,k) sits at
/// origin + (i+0.5, j+0.5, k+0.5) * voxel.
struct GridSpec {
  int nx = 256, ny = 256, nz = 64;
  Vec3 voxel{1.0, 1.0, 1.0};   // meters per voxel, per axis
  Vec3 origin{0.0, 0.0, 0.0};  // world min corner, meters

  void validate() const;

  std::int64_t num_voxels() const {
    return static_cast<std::int64_t>(nx) * ny * nz;
  }
  Vec3 extent() const { return {nx * voxel.x, ny * voxel.y, nz * voxel.z}; }
  double top_z() const { return origin.z + nz * voxel.z; }
  double grid_height() const { return nz * voxel.z; }

  /// Continuous voxel coordinates; voxel center (i,j,k) maps to (i+0.5, ...).
  Vec3 world_to_voxel(const Vec3& p) const;
  Vec3 voxel_to_world(const Vec3& v) const;
  Vec3 voxel_center(int i, int j, int k) const;

  /// True if p lies inside the closed world extent.
  bool contains(const Vec3& p) const;

  std::int64_t index(int i, int j, int k) const {
    return (static_cast<std::int64_t>(k) * ny + j) * nx + i;  // x-fastest
  }

  bool operator==(const GridSpec&) const = default;
};

/// 8-corner interpolation footprint of a world point; indices may repeat
/// where lattice coordinates were clamped at the boundary. Weights sum to 1.
struct TrilinearStencil {
  std::int64_t idx[8];
  double w[8];
};

/// Computes the stencil for p. Returns false (stencil untouched) when p is
/// outside the grid's world extent.
bool trilinear_stencil(const GridSpec& spec, const Vec3& p, TrilinearStencil& out);

/// Voxel grid of extinction coefficients sigma >= 0, 1/m, x-fastest storage.
class DensityField {
 public:
  explicit DensityField(GridSpec spec, double fill = 0.0);
  DensityField(GridSpec spec, std::vector<double> sigma);

  const GridSpec& spec() const { return spec_; }
  const std::vector<double>& sigma() const { return sigma_; }
  std::vector<double>& sigma() { return sigma_; }

  double& at(int i, int j, int k) { return sigma_[spec_.index(i, j, k)]; }
  double at(int i, int j, int k) const { return sigma_[spec_.index(i, j, k)]; }

  /// Trilinear interpolation of sigma at world point p; 0 outside the extent.
  double sample(const Vec3& p) const;

 private:
  GridSpec spec_;
  std::vector<double> sigma_;
};

/// C-channel grid, channel-major (channel c at data[c * num_voxels + index]).
struct FeatureGrid {
  GridSpec spec;
  int channels = 1;
  std::vector<double> data;

  FeatureGrid() = default;
  FeatureGrid(GridSpec s, int c, double fill = 0.0);

  double& at(int c, std::int64_t vox) { return data[c * spec.num_voxels() + vox]; }
  double at(int c, std::int64_t vox) const { return data[c * spec.num_voxels() + vox]; }
};

}  // namespace dfit
