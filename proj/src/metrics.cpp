#include "dfit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dfit/parallel.hpp"

namespace dfit {

double mae(const Raster& pred, const Raster& gt) {
  require_same_shape(pred, gt, "mae");
  double acc = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) acc += std::abs(gt.data[i] - pred.data[i]);
  return acc / static_cast<double>(pred.size());
}

double rmse(const Raster& pred, const Raster& gt) {
  require_same_shape(pred, gt, "rmse");
  double acc = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double d = gt.data[i] - pred.data[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

namespace {

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> g(size);
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    g[i] = std::exp(-(i - c) * (i - c) / (2.0 * sigma * sigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Valid-mode separable convolution: horizontal then vertical.
Raster conv_valid(const Raster& img, const std::vector<double>& g, bool parallel) {
  const int k = static_cast<int>(g.size());
  const int ow = img.width - k + 1;
  const int oh = img.height - k + 1;
  Raster mid(ow, img.height);
  parallel_for(img.height, parallel, [&](std::int64_t v) {
    for (int u = 0; u < ow; ++u) {
      double acc = 0.0;
      for (int t = 0; t < k; ++t) acc += g[t] * img.at(u + t, static_cast<int>(v));
      mid.at(u, static_cast<int>(v)) = acc;
    }
  });
  Raster out(ow, oh);
  parallel_for(oh, parallel, [&](std::int64_t v) {
    for (int u = 0; u < ow; ++u) {
      double acc = 0.0;
      for (int t = 0; t < k; ++t) acc += g[t] * mid.at(u, static_cast<int>(v) + t);
      out.at(u, static_cast<int>(v)) = acc;
    }
  });
  return out;
}

Raster multiply(const Raster& a, const Raster& b) {
  Raster out(a.width, a.height);
  for (size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] * b.data[i];
  return out;
}

}  // namespace

double ssim(const Raster& pred, const Raster& gt, std::optional<double> data_range,
            const SsimConfig& cfg, bool parallel) {
  require_same_shape(pred, gt, "ssim");
  if (cfg.window < 1 || cfg.window % 2 == 0)
    throw std::invalid_argument("ssim: window must be odd and >= 1");
  if (pred.width < cfg.window || pred.height < cfg.window)
    throw std::invalid_argument("ssim: image smaller than the window");

  double range;
  if (data_range) {
    range = *data_range;
  } else {
    const auto [lo, hi] = std::minmax_element(gt.data.begin(), gt.data.end());
    range = *hi - *lo;
  }
  range = std::max(range, 1e-6);
  const double c1 = (cfg.k1 * range) * (cfg.k1 * range);
  const double c2 = (cfg.k2 * range) * (cfg.k2 * range);

  const std::vector<double> g = gaussian_window(cfg.window, cfg.sigma);
  const Raster mu_x = conv_valid(pred, g, parallel);
  const Raster mu_y = conv_valid(gt, g, parallel);
  const Raster ex2 = conv_valid(multiply(pred, pred), g, parallel);
  const Raster ey2 = conv_valid(multiply(gt, gt), g, parallel);
  const Raster exy = conv_valid(multiply(pred, gt), g, parallel);

  double acc = 0.0;
  for (size_t i = 0; i < mu_x.size(); ++i) {
    const double mx = mu_x.data[i], my = mu_y.data[i];
    const double vx = ex2.data[i] - mx * mx;
    const double vy = ey2.data[i] - my * my;
    const double cxy = exy.data[i] - mx * my;
    acc += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) /
           ((mx * mx + my * my + c1) * (vx + vy + c2));
  }
  return acc / static_cast<double>(mu_x.size());
}

MetricReport evaluate(const Raster& pred, const Raster& gt,
                      std::optional<double> data_range) {
  MetricReport r;
  r.mae = mae(pred, gt);
  r.rmse = rmse(pred, gt);
  const auto [lo, hi] = std::minmax_element(gt.data.begin(), gt.data.end());
  r.data_range = std::max(data_range.value_or(*hi - *lo), 1e-6);
  r.ssim = ssim(pred, gt, r.data_range);
  r.n = static_cast<long>(pred.size());
  return r;
}

}  // namespace dfit
