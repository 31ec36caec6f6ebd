#include "dfit/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>

#include "CLI11.hpp"
#include "dfit/gradcheck.hpp"
#include "dfit/io.hpp"
#include "dfit/metrics.hpp"
#include "dfit/optimize.hpp"
#include "dfit/pano.hpp"
#include "dfit/render.hpp"
#include "dfit/scene.hpp"

namespace dfit {

namespace {

Vec3 parse_vec3(const std::string& s) {
  Vec3 v;
  char c1, c2;
  std::istringstream ss(s);
  if (!(ss >> v.x >> c1 >> v.y >> c2 >> v.z) || c1 != ',' || c2 != ',')
    throw std::invalid_argument("expected 'x,y,z', got '" + s + "'");
  return v;
}

std::pair<int, int> parse_size(const std::string& s) {
  int w = 0, h = 0;
  char x;
  std::istringstream ss(s);
  if (!(ss >> w >> x >> h) || (x != 'x' && x != 'X') || w < 1 || h < 1)
    throw std::invalid_argument("expected 'WxH', got '" + s + "'");
  return {w, h};
}

struct SceneGenArgs {
  std::string spec_path, canonical, out_dir;
  double res = 1.0;
  std::string pano_size = "256x128";
};

void cmd_scene_gen(const SceneGenArgs& a) {
  if (a.spec_path.empty() == a.canonical.empty())
    throw std::invalid_argument("scene gen: give exactly one of <spec.json> or --canonical");
  SceneSpec scene = a.canonical.empty() ? read_scene_json(a.spec_path)
                                        : canonical_scene(a.canonical);
  scene.validate();

  GridSpec grid;
  grid.nx = static_cast<int>(std::lround(scene.footprint_x / a.res));
  grid.ny = static_cast<int>(std::lround(scene.footprint_y / a.res));
  grid.voxel = {a.res, a.res, 1.0};
  const auto [pw, ph] = parse_size(a.pano_size);

  namespace fs = std::filesystem;
  fs::create_directories(a.out_dir);
  const Raster height = rasterize_height(scene, grid);
  const PanoTruth truth = raycast_pano_depth(scene, scene.cam, pw, ph);
  write_pfm((fs::path(a.out_dir) / "height.pfm").string(), height);
  write_pfm((fs::path(a.out_dir) / "pano_depth.pfm").string(), truth.depth);
  write_pgm((fs::path(a.out_dir) / "sky.pgm").string(), truth.sky);
  write_scene_json((fs::path(a.out_dir) / "scene.json").string(), scene);
  std::cout << "wrote height.pfm (" << grid.nx << "x" << grid.ny << "), pano_depth.pfm ("
            << pw << "x" << ph << "), sky.pgm, scene.json to " << a.out_dir << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"density-field toolkit: fit voxel density grids to overhead height maps "
               "and street-view depth constraints via volumetric rendering"};
  app.require_subcommand(1);

  // ---- scene gen ----
  auto* scene_cmd = app.add_subcommand("scene", "synthetic scene oracles");
  scene_cmd->require_subcommand(1);
  auto* gen = scene_cmd->add_subcommand(
      "gen", "emit ground-truth height map, depth panorama, and sky mask");
  SceneGenArgs sg;
  gen->add_option("spec", sg.spec_path, "scene JSON file");
  gen->add_option("--canonical", sg.canonical, "canonical scene name (flat, two-box, dense)");
  gen->add_option("--out-dir", sg.out_dir, "output directory")->required();
  gen->add_option("--res", sg.res, "height raster resolution, m/px (default 1)");
  gen->add_option("--pano-size", sg.pano_size, "panorama size WxH (default 256x128)");
  gen->callback([&] { cmd_scene_gen(sg); });

  // ---- render ----
  auto* render_cmd = app.add_subcommand("render", "volumetric rendering of a density field");
  render_cmd->require_subcommand(1);
  struct {
    std::string field, out, out_depth, out_opacity, cam, size = "256x128";
    double step = 0.0;
    bool serial = false;
  } rn;
  auto* rh = render_cmd->add_subcommand("height", "top-down height map");
  rh->add_option("--field", rn.field, "input .df32")->required();
  rh->add_option("--out", rn.out, "output height PFM")->required();
  rh->add_option("--step", rn.step, "sampling step, m (default half min voxel)");
  rh->add_flag("--no-parallel", rn.serial, "single-threaded rendering");
  rh->callback([&] {
    const DensityField field = read_df32(rn.field);
    write_pfm(rn.out, render_height_map(field, rn.step, !rn.serial));
  });
  auto* rp = render_cmd->add_subcommand("pano", "equirectangular depth/opacity panorama");
  rp->add_option("--field", rn.field, "input .df32")->required();
  rp->add_option("--cam", rn.cam, "camera position x,y,z (default grid center, z=2)");
  rp->add_option("--size", rn.size, "panorama size WxH (default 256x128)");
  rp->add_option("--step", rn.step, "sampling step, m");
  rp->add_option("--out-depth", rn.out_depth, "output depth PFM")->required();
  rp->add_option("--out-opacity", rn.out_opacity, "output opacity PFM")->required();
  rp->add_flag("--no-parallel", rn.serial, "single-threaded rendering");
  rp->callback([&] {
    const DensityField field = read_df32(rn.field);
    const Vec3 cam = rn.cam.empty() ? default_camera(field.spec()) : parse_vec3(rn.cam);
    const auto [w, h] = parse_size(rn.size);
    const PanoRender pano = render_depth_pano(field, cam, w, h, rn.step, !rn.serial);
    write_pfm(rn.out_depth, pano.depth);
    write_pfm(rn.out_opacity, pano.opacity);
  });

  // ---- optimize ----
  auto* opt = app.add_subcommand("optimize", "fit a density field to supervision");
  struct {
    std::string gt, pano, sky, pairs, mask, out, trace, cam;
    OptimConfig config;
    int nz = 64;
    double vxy = 1.0, vz = 1.0;
    bool nondeterministic = false, serial = false, rank_formula = false;
  } op;
  opt->add_option("--gt", op.gt, "ground-truth height PFM")->required();
  opt->add_option("--pano", op.pano, "street-view depth panorama PFM (rank-label source)");
  opt->add_option("--sky", op.sky, "sky mask PGM (required with street supervision)");
  opt->add_option("--pairs", op.pairs, "fixed rank pairs CSV (otherwise resampled per epoch)");
  opt->add_option("--mask", op.mask, "height supervision mask PGM (nonzero = excluded)");
  opt->add_option("--alpha", op.config.alpha, "street-loss weight (default 1)");
  opt->add_option("--lr", op.config.lr, "learning rate (default 0.05)");
  opt->add_option("--epochs", op.config.epochs, "epochs (default 200)");
  opt->add_option("--seed", op.config.seed, "RNG seed for pair sampling");
  opt->add_option("--step", op.config.step, "ray sampling step, m");
  opt->add_option("--cam", op.cam, "panorama camera x,y,z");
  opt->add_option("--k", op.config.rank_pairs, "rank pairs per epoch (default 2048)");
  opt->add_option("--min", op.config.pair_min_dist, "min pair separation, px (default 10)");
  opt->add_option("--max", op.config.pair_max_dist, "max pair separation, px (default 30)");
  opt->add_option("--tau", op.config.tau_rel, "relative tie band (default 0.02)");
  opt->add_option("--init-sigma", op.config.init_sigma, "initial density (default 0.01)");
  opt->add_option("--nz", op.nz, "vertical voxel count (default 64)");
  opt->add_option("--vz", op.vz, "vertical voxel size, m (default 1)");
  opt->add_option("--vxy", op.vxy, "horizontal voxel size, m (default 1)");
  opt->add_flag("--rank-formula", op.rank_formula,
                "use the published ranking branches verbatim instead of the "
                "order-aligned form");
  opt->add_flag("--nondeterministic", op.nondeterministic,
                "parallel gradient reduction (faster, reproducible only for a "
                "fixed thread count)");
  opt->add_flag("--no-parallel", op.serial, "disable OpenMP");
  opt->add_option("--out", op.out, "output field .df32")->required();
  opt->add_option("--trace", op.trace, "output loss trace CSV")->required();
  opt->callback([&] {
    const Raster gt = read_pfm(op.gt);
    GridSpec grid;
    grid.nx = gt.width;
    grid.ny = gt.height;
    grid.nz = op.nz;
    grid.voxel = {op.vxy, op.vxy, op.vz};

    OptimConfig config = op.config;
    if (!op.cam.empty()) config.cam = parse_vec3(op.cam);
    config.deterministic = !op.nondeterministic;
    config.parallel = !op.serial;
    if (op.rank_formula) config.rank_convention = RankConvention::kFormula;

    std::optional<Mask> mask;
    if (!op.mask.empty()) mask = read_pgm(op.mask);

    std::optional<StreetSupervision> street;
    if (!op.pano.empty() || !op.pairs.empty()) {
      if (op.sky.empty())
        throw std::invalid_argument("street supervision requires --sky");
      StreetSupervision s;
      if (!op.pano.empty()) s.oracle_depth = read_pfm(op.pano);
      if (!op.pairs.empty()) s.fixed_pairs = read_pairs_csv(op.pairs);
      s.sky = read_pgm(op.sky);
      street = std::move(s);
    }

    try {
      const FitResult result =
          fit_field(grid, gt, street, std::nullopt, config, mask ? &*mask : nullptr);
      write_df32(op.out, result.field);
      write_trace_csv(op.trace, result.trace);
      std::cout << "fit " << config.epochs << " epochs; final l_total="
                << result.trace.back().loss.l_total << "\n";
    } catch (const FitDiverged& e) {
      write_trace_csv(op.trace, e.trace);  // keep the partial trace on disk
      throw;
    }
  });

  // ---- metrics ----
  auto* met = app.add_subcommand("metrics", "MAE / RMSE / SSIM between two rasters");
  struct {
    std::string pred, gt;
    bool csv = false;
  } me;
  met->add_option("--pred", me.pred, "predicted raster PFM")->required();
  met->add_option("--gt", me.gt, "ground-truth raster PFM")->required();
  met->add_flag("--csv", me.csv, "emit a CSV row instead of the aligned table");
  met->callback([&] {
    const MetricReport r = evaluate(read_pfm(me.pred), read_pfm(me.gt));
    char buf[160];
    if (me.csv) {
      std::printf("mae,rmse,ssim\n");
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g\n", r.mae, r.rmse, r.ssim);
    } else {
      std::snprintf(buf, sizeof(buf), "mae=%.9g rmse=%.9g ssim=%.9g\n", r.mae, r.rmse,
                    r.ssim);
    }
    std::cout << buf;
  });

  // ---- gradcheck ----
  auto* gc = app.add_subcommand("gradcheck", "finite-difference checks of all gradients");
  std::uint64_t gc_seed = 0;
  gc->add_option("--seed", gc_seed, "RNG seed (default 0)");
  bool gc_failed = false;
  gc->callback([&] {
    const GradCheckReport rep = run_gradcheck(gc_seed);
    print_report(std::cout, rep);
    gc_failed = !rep.pass();
  });

  // ---- pairs ----
  auto* pr = app.add_subcommand("pairs", "sample labeled rank pairs from a depth raster");
  struct {
    std::string depth, out;
    int k = 2048;
    double min = 10.0, max = 30.0, tau = 0.02;
    std::uint64_t seed = 0;
  } pa;
  pr->add_option("--depth", pa.depth, "depth raster PFM")->required();
  pr->add_option("--k", pa.k, "number of pairs (default 2048)");
  pr->add_option("--min", pa.min, "min separation, px (default 10)");
  pr->add_option("--max", pa.max, "max separation, px (default 30)");
  pr->add_option("--tau", pa.tau, "relative tie band (default 0.02)");
  pr->add_option("--seed", pa.seed, "RNG seed");
  pr->add_option("--out", pa.out, "output CSV (stdout when omitted)");
  pr->callback([&] {
    const RankPairs pairs =
        sample_rank_pairs(read_pfm(pa.depth), pa.k, pa.min, pa.max, pa.tau, pa.seed);
    if (pa.out.empty())
      write_pairs_csv(std::cout, pairs);
    else
      write_pairs_csv(pa.out, pairs);
  });

  // ---- cutout ----
  auto* co = app.add_subcommand("cutout", "perspective cutout from an equirectangular panorama");
  struct {
    std::string pano, out, size = "256x256";
    double heading = 0.0, fov = 90.0, pitch = 0.0, roll = 0.0;
  } cu;
  co->add_option("--pano", cu.pano, "panorama PFM")->required();
  co->add_option("--heading", cu.heading, "heading, degrees")->required();
  co->add_option("--fov", cu.fov, "field of view, degrees (default 90)");
  co->add_option("--pitch", cu.pitch, "pitch, degrees (default 0)");
  co->add_option("--roll", cu.roll, "roll, degrees (default 0)");
  co->add_option("--size", cu.size, "output size WxH (default 256x256)");
  co->add_option("--out", cu.out, "output PFM")->required();
  co->callback([&] {
    CutoutSpec spec;
    spec.heading_deg = cu.heading;
    spec.fov_deg = cu.fov;
    spec.pitch_deg = cu.pitch;
    spec.roll_deg = cu.roll;
    std::tie(spec.out_w, spec.out_h) = parse_size(cu.size);
    write_pfm(cu.out, extract_cutout(read_pfm(cu.pano), spec));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return gc_failed ? 2 : 0;
}

}  // namespace dfit
