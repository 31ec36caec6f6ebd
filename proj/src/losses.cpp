#include "dfit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace dfit {

namespace {

double stable_softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Unbiased bounded draw; kept explicit so seeded sequences do not depend on
// the standard library's distribution implementations.
std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - bound + 1;
  for (;;) {
    const std::uint64_t v = rng();
    const std::uint64_t r = v % bound;
    if (v - r <= limit) return r;
  }
}

}  // namespace

LossValue scale_invariant_loss(const Raster& pred, const Raster& gt, const Mask* mask) {
  require_same_shape(pred, gt, "scale_invariant_loss");
  if (mask && (mask->width != pred.width || mask->height != pred.height))
    throw std::invalid_argument("scale_invariant_loss: mask shape mismatch");

  const size_t n = pred.size();
  std::vector<double> log_ratio(n, 0.0);
  std::vector<std::uint8_t> used(n, 0);
  size_t count = 0;
  double mean_ratio = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (mask && mask->data[i]) continue;
    const double p = pred.data[i], g = gt.data[i];
    if (!std::isfinite(p) || !std::isfinite(g))
      throw std::invalid_argument("scale_invariant_loss: non-finite input");
    log_ratio[i] = std::log(std::max(p, kLogEps)) - std::log(std::max(g, kLogEps));
    used[i] = 1;
    mean_ratio += log_ratio[i];
    ++count;
  }
  if (count == 0) throw std::invalid_argument("scale_invariant_loss: no unmasked pixels");
  mean_ratio /= static_cast<double>(count);

  LossValue out;
  out.grad = Raster(pred.width, pred.height, 0.0);
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (!used[i]) continue;
    const double r = log_ratio[i] - mean_ratio;
    acc += r * r;
    // d/d(pred): residual mean cancels, leaving r / (N * pred); the clamp
    // below eps contributes nothing.
    if (pred.data[i] > kLogEps)
      out.grad.data[i] = r / (static_cast<double>(count) * pred.data[i]);
  }
  out.value = acc / (2.0 * static_cast<double>(count));
  return out;
}

RankPairs sample_rank_pairs(const Raster& depth, int k, double min_dist, double max_dist,
                            double tau_rel, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("sample_rank_pairs: k must be >= 1");
  const double diag = std::hypot(depth.width, depth.height);
  if (!(min_dist > 0.0) || !(min_dist <= max_dist) || !(max_dist < diag))
    throw std::invalid_argument("sample_rank_pairs: need 0 < min_dist <= max_dist < diagonal");

  const int w = depth.width, h = depth.height;
  const int reach = static_cast<int>(std::ceil(max_dist));
  std::mt19937_64 rng(seed);

  RankPairs out;
  out.seed = seed;
  out.pairs.reserve(k);
  constexpr int kMaxTries = 65536;
  for (int p = 0; p < k; ++p) {
    RankPair pr;
    pr.iu = static_cast<int>(draw_below(rng, w));
    pr.iv = static_cast<int>(draw_below(rng, h));
    bool found = false;
    for (int attempt = 0; attempt < kMaxTries; ++attempt) {
      const int du = static_cast<int>(draw_below(rng, 2 * reach + 1)) - reach;
      const int dv = static_cast<int>(draw_below(rng, 2 * reach + 1)) - reach;
      const double d = std::hypot(du, dv);
      if (d < min_dist || d > max_dist) continue;
      const int jv = pr.iv + dv;
      if (jv < 0 || jv >= h) continue;
      pr.ju = ((pr.iu + du) % w + w) % w;  // azimuthal wrap
      pr.jv = jv;
      found = true;
      break;
    }
    if (!found)
      throw std::runtime_error("sample_rank_pairs: annulus [" + std::to_string(min_dist) +
                               ", " + std::to_string(max_dist) +
                               "] is unsatisfiable for this raster");

    const double di = depth.at(pr.iu, pr.iv);
    const double dj = depth.at(pr.ju, pr.jv);
    const double band = tau_rel * std::max({di, dj, kLogEps});
    if (std::abs(di - dj) <= band)
      pr.r = 0;
    else
      pr.r = di < dj ? +1 : -1;
    out.pairs.push_back(pr);
  }
  return out;
}

RankingLoss ranking_loss(const Raster& pred, const RankPairs& pairs,
                         RankConvention convention) {
  RankingLoss out;
  out.grad = Raster(pred.width, pred.height, 0.0);
  if (pairs.pairs.empty()) return out;

  const double inv_k = 1.0 / static_cast<double>(pairs.pairs.size());
  for (const RankPair& pr : pairs.pairs) {
    if (pr.iu < 0 || pr.iu >= pred.width || pr.iv < 0 || pr.iv >= pred.height ||
        pr.ju < 0 || pr.ju >= pred.width || pr.jv < 0 || pr.jv >= pred.height)
      throw std::invalid_argument("ranking_loss: pair index out of bounds");

    const double yi = pred.at(pr.iu, pr.iv);
    const double yj = pred.at(pr.ju, pr.jv);
    int r = pr.r;
    if (convention == RankConvention::kOrderAligned && r != 0) r = -r;

    double psi, dpsi_dyi;
    if (r == +1) {
      psi = stable_softplus(yj - yi);
      dpsi_dyi = -sigmoid(yj - yi);
    } else if (r == -1) {
      psi = stable_softplus(yi - yj);
      dpsi_dyi = sigmoid(yi - yj);
    } else {
      const double diff = yi - yj;
      psi = diff * diff;
      dpsi_dyi = 2.0 * diff;
    }
    out.sum += psi;
    out.grad.at(pr.iu, pr.iv) += dpsi_dyi * inv_k;
    out.grad.at(pr.ju, pr.jv) -= dpsi_dyi * inv_k;
  }
  out.mean = out.sum * inv_k;
  return out;
}

LossValue sky_loss(const Raster& opacity, const Mask& sky) {
  if (opacity.width != sky.width || opacity.height != sky.height)
    throw std::invalid_argument("sky_loss: mask shape mismatch");
  for (double o : opacity.data)
    if (!(o >= 0.0) || !(o <= 1.0))
      throw std::invalid_argument("sky_loss: opacity must lie in [0,1]");

  LossValue out;
  out.grad = Raster(opacity.width, opacity.height, 0.0);
  const double inv_n = 1.0 / static_cast<double>(opacity.size());
  double acc = 0.0;
  for (size_t i = 0; i < opacity.size(); ++i) {
    const double o = opacity.data[i];
    if (sky.data[i]) {
      acc += std::abs(o);
      out.grad.data[i] = sign0(o) * inv_n;
    } else {
      acc += std::abs(o - 1.0);
      out.grad.data[i] = sign0(o - 1.0) * inv_n;
    }
  }
  out.value = acc * inv_n;
  return out;
}

LossBreakdown total_loss(double l_h, double l_rank, double l_sky, double alpha) {
  if (!std::isfinite(l_h) || !std::isfinite(l_rank) || !std::isfinite(l_sky) ||
      !std::isfinite(alpha))
    throw std::invalid_argument("total_loss: non-finite term");
  LossBreakdown b;
  b.l_h = l_h;
  b.l_rank = l_rank;
  b.l_sky = l_sky;
  b.alpha = alpha;
  b.l_total = l_h + alpha * (l_rank + l_sky);
  return b;
}

}  // namespace dfit
