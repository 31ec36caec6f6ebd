#pragma once

#include <cstdint>
#include <iosfwd>

namespace dfit {

/// Max relative errors of the analytic gradients against central finite
/// differences (denominator floored at 1e-7). Rendering and loss suites must
/// come in below 1e-4, the end-to-end composite below 1e-3.
struct GradCheckReport {
  double render_depth = 0.0;
  double render_opacity = 0.0;
  double render_background = 0.0;
  double si_loss = 0.0;
  double rank_loss = 0.0;
  double sky_loss = 0.0;
  double composite = 0.0;

  static constexpr double kTol = 1e-4;
  static constexpr double kTolComposite = 1e-3;

  bool pass() const;
};

GradCheckReport run_gradcheck(std::uint64_t seed);
void print_report(std::ostream& os, const GradCheckReport& r);

}  // namespace dfit
