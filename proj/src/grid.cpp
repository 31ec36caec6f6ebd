#include "dfit/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dfit {

void GridSpec::validate() const {
  if (nx < 1 || ny < 1 || nz < 1)
    throw std::invalid_argument("grid counts must be >= 1");
  if (!(voxel.x > 0.0) || !(voxel.y > 0.0) || !(voxel.z > 0.0))
    throw std::invalid_argument("voxel sizes must be > 0");
  if (!voxel.finite() || !origin.finite())
    throw std::invalid_argument("grid geometry must be finite");
}

Vec3 GridSpec::world_to_voxel(const Vec3& p) const {
  if (!p.finite()) throw std::invalid_argument("world_to_voxel: non-finite point");
  return {(p.x - origin.x) / voxel.x, (p.y - origin.y) / voxel.y,
          (p.z - origin.z) / voxel.z};
}

Vec3 GridSpec::voxel_to_world(const Vec3& v) const {
  return {origin.x + v.x * voxel.x, origin.y + v.y * voxel.y,
          origin.z + v.z * voxel.z};
}

Vec3 GridSpec::voxel_center(int i, int j, int k) const {
  return voxel_to_world({i + 0.5, j + 0.5, k + 0.5});
}

bool GridSpec::contains(const Vec3& p) const {
  const Vec3 e = extent();
  return p.x >= origin.x && p.x <= origin.x + e.x && p.y >= origin.y &&
         p.y <= origin.y + e.y && p.z >= origin.z && p.z <= origin.z + e.z;
}

namespace {

// Lattice coordinate (voxel-center frame), lower corner index and fraction.
// q is clamped to [0, n-1] so boundary samples extend the edge value.
inline void axis_split(double q, int n, int& i0, double& f) {
  if (q < 0.0) q = 0.0;
  const double qmax = static_cast<double>(n - 1);
  if (q > qmax) q = qmax;
  i0 = static_cast<int>(q);
  if (i0 > n - 2) i0 = n > 1 ? n - 2 : 0;
  f = q - i0;
  if (n == 1) f = 0.0;
}

}  // namespace

bool trilinear_stencil(const GridSpec& spec, const Vec3& p, TrilinearStencil& out) {
  if (!p.finite()) throw std::invalid_argument("trilinear_stencil: non-finite point");
  if (!spec.contains(p)) return false;

  const Vec3 q = spec.world_to_voxel(p);
  int i0, j0, k0;
  double fx, fy, fz;
  axis_split(q.x - 0.5, spec.nx, i0, fx);
  axis_split(q.y - 0.5, spec.ny, j0, fy);
  axis_split(q.z - 0.5, spec.nz, k0, fz);
  const int i1 = spec.nx > 1 ? i0 + 1 : i0;
  const int j1 = spec.ny > 1 ? j0 + 1 : j0;
  const int k1 = spec.nz > 1 ? k0 + 1 : k0;

  const double gx = 1.0 - fx, gy = 1.0 - fy, gz = 1.0 - fz;
  out.idx[0] = spec.index(i0, j0, k0); out.w[0] = gx * gy * gz;
  out.idx[1] = spec.index(i1, j0, k0); out.w[1] = fx * gy * gz;
  out.idx[2] = spec.index(i0, j1, k0); out.w[2] = gx * fy * gz;
  out.idx[3] = spec.index(i1, j1, k0); out.w[3] = fx * fy * gz;
  out.idx[4] = spec.index(i0, j0, k1); out.w[4] = gx * gy * fz;
  out.idx[5] = spec.index(i1, j0, k1); out.w[5] = fx * gy * fz;
  out.idx[6] = spec.index(i0, j1, k1); out.w[6] = gx * fy * fz;
  out.idx[7] = spec.index(i1, j1, k1); out.w[7] = fx * fy * fz;
  return true;
}

DensityField::DensityField(GridSpec spec, double fill) : spec_(spec) {
  spec_.validate();
  if (!(fill >= 0.0) || !std::isfinite(fill))
    throw std::invalid_argument("density fill must be finite and >= 0");
  sigma_.assign(static_cast<size_t>(spec_.num_voxels()), fill);
}

DensityField::DensityField(GridSpec spec, std::vector<double> sigma)
    : spec_(spec), sigma_(std::move(sigma)) {
  spec_.validate();
  if (sigma_.size() != static_cast<size_t>(spec_.num_voxels()))
    throw std::invalid_argument("sigma length " + std::to_string(sigma_.size()) +
                                " does not match voxel count " +
                                std::to_string(spec_.num_voxels()));
  for (double s : sigma_)
    if (!(s >= 0.0) || !std::isfinite(s))
      throw std::invalid_argument("density values must be finite and >= 0");
}

double DensityField::sample(const Vec3& p) const {
  TrilinearStencil st;
  if (!trilinear_stencil(spec_, p, st)) return 0.0;
  double acc = 0.0;
  for (int c = 0; c < 8; ++c) acc += st.w[c] * sigma_[st.idx[c]];
  return acc;
}

FeatureGrid::FeatureGrid(GridSpec s, int c, double fill) : spec(s), channels(c) {
  spec.validate();
  if (c < 1) throw std::invalid_argument("feature grid needs >= 1 channel");
  data.assign(static_cast<size_t>(c) * spec.num_voxels(), fill);
}

}  // namespace dfit
