#pragma once

#include <cstdint>
#include <vector>

#include "dfit/raster.hpp"

namespace dfit {

/// One sampled pixel pair with its depth-order label:
/// r = +1 when the reference depth at (iu,iv) is less than at (ju,jv),
/// r = -1 when greater, r = 0 within the relative tie band.
struct RankPair {
  int iu = 0, iv = 0;
  int ju = 0, jv = 0;
  int r = 0;
};

struct RankPairs {
  std::vector<RankPair> pairs;
  std::uint64_t seed = 0;
};

/// Which branch the +1/-1 labels select. `kFormula` keeps the published
/// piecewise definition verbatim; `kOrderAligned` swaps the two softplus
/// branches so the loss actually decreases when the predicted order matches
/// the labels (the verbatim form penalizes the stated order).
enum class RankConvention { kFormula, kOrderAligned };

struct LossValue {
  double value = 0.0;
  Raster grad;  // d(value)/d(pred), per pixel
};

/// Scale-invariant log loss: (1/2N) sum (log y - log yhat + zeta)^2 with
/// zeta the mean log ratio; values are clamped to eps = 1e-3 before the log.
/// mask (optional): nonzero pixels are excluded. Errors when no pixel remains
/// or inputs are not finite.
LossValue scale_invariant_loss(const Raster& pred, const Raster& gt,
                               const Mask* mask = nullptr);
constexpr double kLogEps = 1e-3;

/// Seeded pair sampling: first pixel uniform, second uniform in the pixel
/// annulus [min_dist, max_dist] around it with azimuthal wrap in u. Labels
/// come from `depth` with tie band tau_rel * max(d_i, d_j, eps).
RankPairs sample_rank_pairs(const Raster& depth, int k, double min_dist, double max_dist,
                            double tau_rel, std::uint64_t seed);

struct RankingLoss {
  double sum = 0.0;         // plain sum over pairs
  double mean = 0.0;        // sum / K (the term used in the total loss)
  Raster grad;              // d(mean)/d(pred)
};

/// Pairwise ordinal loss: softplus of the signed difference for ordered
/// pairs, squared difference for ties; evaluated with a stable log1p(exp).
RankingLoss ranking_loss(const Raster& pred, const RankPairs& pairs,
                         RankConvention convention = RankConvention::kFormula);

/// (1/N)(sum_{non-sky} |O-1| + sum_{sky} |O|), N = total rays. The
/// subgradient at the kinks is 0.
LossValue sky_loss(const Raster& opacity, const Mask& sky);

struct LossBreakdown {
  double l_h = 0.0;
  double l_rank = 0.0;
  double l_sky = 0.0;
  double l_total = 0.0;
  double alpha = 1.0;
};

/// l_total = l_h + alpha * (l_rank + l_sky).
LossBreakdown total_loss(double l_h, double l_rank, double l_sky, double alpha = 1.0);

}  // namespace dfit
