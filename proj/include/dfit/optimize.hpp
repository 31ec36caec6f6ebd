#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "dfit/grid.hpp"
#include "dfit/losses.hpp"
#include "dfit/raster.hpp"

namespace dfit {

double softplus(double x);
double softplus_inv(double y);  // y > 0
double logistic(double x);

struct OptimConfig {
  double alpha = 1.0;  // street-loss weight
  double lr = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs = 200;
  int lr_decay_every = 100;  // epochs between decays
  double lr_decay = 0.1;
  std::uint64_t seed = 0;
  double step = 0.0;             // ray sampling step; 0 = half min voxel
  std::optional<Vec3> cam;       // panorama camera; default footprint center, z = 2
  int rank_pairs = 2048;
  double pair_min_dist = 10.0;
  double pair_max_dist = 30.0;
  double tau_rel = 0.02;
  double init_sigma = 0.01;      // uniform density when no lifted init is given
  double init_gain = 1.0;        // scale applied to a lifted init
  bool resample_pairs_each_epoch = true;
  RankConvention rank_convention = RankConvention::kOrderAligned;
  bool deterministic = true;  // sequential gradient reduction (bitwise reproducible)
  bool parallel = true;       // OpenMP over rays/pixels

  void validate() const;
  double lr_at(int epoch) const;  // epoch is 1-based
};

/// Raw parameter grid theta with sigma = softplus(theta) > 0, plus Adam
/// moment accumulators.
struct OptimState {
  GridSpec spec;
  std::vector<double> theta;
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;
  std::vector<LossBreakdown> trace;

  explicit OptimState(GridSpec s, double theta_fill = 0.0);
};

/// theta = softplus^-1(max(gain * lifted, 1e-6)); single-channel grids only.
OptimState init_from_lift(const FeatureGrid& lifted, double gain);

/// Standard bias-corrected Adam update; increments state.t. `lr_override`
/// < 0 uses config.lr.
void adam_step(OptimState& state, const std::vector<double>& grad,
               const OptimConfig& config, double lr_override = -1.0);

/// Street-view supervision for fitting: reference depth panorama (rank-label
/// source), sky mask, and optionally a fixed pair set (otherwise pairs are
/// resampled each epoch from a seed derived from config.seed + epoch, which
/// requires the reference panorama).
struct StreetSupervision {
  std::optional<Raster> oracle_depth;
  Mask sky;
  std::optional<RankPairs> fixed_pairs;
};

struct TraceRow {
  int epoch = 0;
  LossBreakdown loss;
  double lr = 0.0;
};

struct FitResult {
  DensityField field;
  std::vector<TraceRow> trace;
};

/// Thrown when the objective goes non-finite; carries the trace so far.
class FitDiverged : public std::runtime_error {
 public:
  FitDiverged(std::string msg, std::vector<TraceRow> t)
      : std::runtime_error(std::move(msg)), trace(std::move(t)) {}
  std::vector<TraceRow> trace;
};

/// One forward/backward evaluation of the composite objective at theta:
/// renders the height map (and the depth/opacity panorama when street
/// supervision is given), evaluates the losses, and backpropagates through
/// the renderer and the softplus parameterization.
struct ObjectiveEval {
  LossBreakdown loss;
  std::vector<double> grad_theta;
  Raster height;
};

ObjectiveEval evaluate_objective(const GridSpec& spec, const std::vector<double>& theta,
                                 const Raster& gt_height, const Mask* height_mask,
                                 const RankPairs* pairs, const Mask* sky, int pano_w,
                                 int pano_h, const OptimConfig& config);

/// Gradient-descent fit of the density field to the supervision. Returns the
/// final field and the per-epoch loss trace.
FitResult fit_field(const GridSpec& spec, const Raster& gt_height,
                    const std::optional<StreetSupervision>& street,
                    const std::optional<FeatureGrid>& init, const OptimConfig& config,
                    const Mask* height_mask = nullptr);

/// Panorama camera used when the config leaves it unset: horizontal center
/// of the grid at 2 m eye level.
Vec3 default_camera(const GridSpec& spec);

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace dfit
