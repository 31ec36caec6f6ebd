#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "dfit/grid.hpp"
#include "dfit/losses.hpp"
#include "dfit/optimize.hpp"
#include "dfit/raster.hpp"
#include "dfit/scene.hpp"

namespace dfit {

/// Portable FloatMap, grayscale: header "Pf\n<w> <h>\n-1.0\n", then
/// little-endian float32 rows bottom-to-top. A non-negative scale is rejected.
Raster read_pfm(const std::string& path);
void write_pfm(const std::string& path, const Raster& raster);

/// Binary PGM (P5), maxval 255; nonzero bytes mark sky/invalid pixels.
Mask read_pgm(const std::string& path);
void write_pgm(const std::string& path, const Mask& mask);

/// Density-field container: line 1 "DF32", line 2
/// "nx ny nz vx vy vz ox oy oz", then nx*ny*nz little-endian float32,
/// x-fastest. Payload length is validated against the header.
DensityField read_df32(const std::string& path);
void write_df32(const std::string& path, const DensityField& field);

/// {"footprint":[x,y],"boxes":[{"x","y","w","l","height"}...],"camera":[x,y,z]}
SceneSpec read_scene_json(const std::string& path);
void write_scene_json(const std::string& path, const SceneSpec& scene);

/// Header "i_u,i_v,j_u,j_v,r", one pair per line. The sampling seed is not
/// serialized.
RankPairs read_pairs_csv(const std::string& path);
void write_pairs_csv(const std::string& path, const RankPairs& pairs);
void write_pairs_csv(std::ostream& os, const RankPairs& pairs);

/// Header "epoch,l_h,l_rank,l_sky,l_total,lr". Values are printed with 17
/// significant digits so doubles round-trip exactly.
std::vector<TraceRow> read_trace_csv(const std::string& path);
void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace);

}  // namespace dfit
