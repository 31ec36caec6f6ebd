// Timings of the ray kernels, OpenMP against the sequential path. The two
// paths must agree bitwise for the renders (disjoint pixel writes); the
// parallel gradient reduction may differ in the last bits.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <string>

#include "dfit/optimize.hpp"
#include "dfit/render.hpp"
#include "dfit/scene.hpp"

using namespace dfit;

namespace {

template <class F>
double time_ms(F&& fn, int reps = 3) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

void row(const std::string& name, double serial_ms, double parallel_ms) {
  std::printf("%-28s %10.1f ms %10.1f ms %8.2fx\n", name.c_str(), serial_ms, parallel_ms,
              serial_ms / parallel_ms);
}

}  // namespace

int main() {
  GridSpec grid;  // 256 x 256 x 64 at 1 m
  const SceneSpec& scene = canonical_scene("dense");
  const DensityField field = occupancy_field(scene, grid);
  const Raster gt = rasterize_height(scene, grid);
  const PanoTruth truth = raycast_pano_depth(scene, scene.cam, 256, 128);

  std::printf("threads: %d\n", omp_get_max_threads());
  std::printf("%-28s %13s %13s %9s\n", "kernel", "serial", "openmp", "speedup");

  Raster sink_h;
  row("render_height_map",
      time_ms([&] { sink_h = render_height_map(field, 0.0, false); }),
      time_ms([&] { sink_h = render_height_map(field, 0.0, true); }));

  PanoRender sink_p;
  row("render_depth_pano 256x128",
      time_ms([&] { sink_p = render_depth_pano(field, scene.cam, 256, 128, 0.0, false); }),
      time_ms([&] { sink_p = render_depth_pano(field, scene.cam, 256, 128, 0.0, true); }));

  row("raycast_pano_depth 256x128",
      time_ms([&] { raycast_pano_depth(scene, scene.cam, 256, 128, false); }),
      time_ms([&] { raycast_pano_depth(scene, scene.cam, 256, 128, true); }));

  // One full objective evaluation (forward + backward), as run per epoch.
  OptimConfig cfg;
  cfg.cam = scene.cam;
  std::vector<double> theta(grid.num_voxels(), softplus_inv(0.01));
  const RankPairs pairs = sample_rank_pairs(truth.depth, 2048, 10, 30, 0.02, 7);
  auto epoch = [&](bool parallel, bool deterministic) {
    OptimConfig c = cfg;
    c.parallel = parallel;
    c.deterministic = deterministic;
    evaluate_objective(grid, theta, gt, nullptr, &pairs, &truth.sky, 256, 128, c);
  };
  row("fit epoch (deterministic)", time_ms([&] { epoch(false, true); }, 2),
      time_ms([&] { epoch(true, true); }, 2));
  row("fit epoch (thread-reduce)", time_ms([&] { epoch(false, false); }, 2),
      time_ms([&] { epoch(true, false); }, 2));
  return 0;
}
