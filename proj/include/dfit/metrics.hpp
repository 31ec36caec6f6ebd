#pragma once

#include <optional>

#include "dfit/raster.hpp"

namespace dfit {

struct SsimConfig {
  int window = 11;        // odd
  double sigma = 1.5;     // Gaussian window std, pixels
  double k1 = 0.01;
  double k2 = 0.03;
};

struct MetricReport {
  double mae = 0.0;
  double rmse = 0.0;
  double ssim = 0.0;
  long n = 0;
  SsimConfig ssim_config;
  double data_range = 0.0;
};

double mae(const Raster& pred, const Raster& gt);
double rmse(const Raster& pred, const Raster& gt);

/// Mean local SSIM over all fully-interior Gaussian windows. data_range
/// defaults to max(gt) - min(gt), floored at 1e-6. Errors when either image
/// dimension is smaller than the window.
double ssim(const Raster& pred, const Raster& gt,
            std::optional<double> data_range = std::nullopt,
            const SsimConfig& cfg = {}, bool parallel = true);

MetricReport evaluate(const Raster& pred, const Raster& gt,
                      std::optional<double> data_range = std::nullopt);

}  // namespace dfit
