#include "dfit/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dfit {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what,
                       std::streamoff offset = -1) {
  std::string msg = path + ": " + what;
  if (offset >= 0) msg += " (byte offset " + std::to_string(offset) + ")";
  throw std::runtime_error(msg);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open for writing");
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open for reading");
  return f;
}

static_assert(sizeof(float) == 4, "float32 storage assumed");

void write_f32_le(std::ostream& s, const float* data, size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    s.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * 4));
  } else {
    for (size_t i = 0; i < count; ++i) {
      std::uint32_t u;
      std::memcpy(&u, &data[i], 4);
      const char b[4] = {static_cast<char>(u), static_cast<char>(u >> 8),
                         static_cast<char>(u >> 16), static_cast<char>(u >> 24)};
      s.write(b, 4);
    }
  }
}

void read_f32_le(const char* bytes, float* out, size_t count) {
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out, bytes, count * 4);
  } else {
    for (size_t i = 0; i < count; ++i) {
      const auto* b = reinterpret_cast<const unsigned char*>(bytes + 4 * i);
      const std::uint32_t u = static_cast<std::uint32_t>(b[0]) |
                              (static_cast<std::uint32_t>(b[1]) << 8) |
                              (static_cast<std::uint32_t>(b[2]) << 16) |
                              (static_cast<std::uint32_t>(b[3]) << 24);
      std::memcpy(&out[i], &u, 4);
    }
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Reads the full remaining stream and checks the exact payload size.
std::vector<char> read_payload(std::ifstream& f, const std::string& path,
                               size_t expected_bytes) {
  const std::streamoff data_start = f.tellg();
  std::vector<char> bytes(expected_bytes);
  f.read(bytes.data(), static_cast<std::streamsize>(expected_bytes));
  const auto got = static_cast<size_t>(f.gcount());
  if (got != expected_bytes)
    fail(path,
         "truncated payload: expected " + std::to_string(expected_bytes) +
             " bytes, got " + std::to_string(got),
         data_start + static_cast<std::streamoff>(got));
  f.peek();
  if (!f.eof())
    fail(path, "trailing bytes after payload of " + std::to_string(expected_bytes),
         data_start + static_cast<std::streamoff>(expected_bytes));
  return bytes;
}

}  // namespace

Raster read_pfm(const std::string& path) {
  std::ifstream f = open_in(path);
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  f >> magic;
  if (magic != "Pf") {
    if (magic == "PF") fail(path, "color PFM not supported, expected grayscale 'Pf'", 0);
    fail(path, "bad magic '" + magic + "', expected 'Pf'", 0);
  }
  if (!(f >> w >> h) || w < 1 || h < 1)
    fail(path, "bad dimensions in header", f.tellg());
  if (!(f >> scale)) fail(path, "missing scale in header", f.tellg());
  if (scale >= 0.0)
    fail(path, "non-negative scale " + format_double(scale) +
                   " (big-endian payloads are not supported)");
  f.get();  // single whitespace after the scale

  const size_t count = static_cast<size_t>(w) * h;
  const std::vector<char> bytes = read_payload(f, path, count * 4);
  std::vector<float> vals(count);
  read_f32_le(bytes.data(), vals.data(), count);

  Raster out(w, h);
  for (int v = 0; v < h; ++v) {  // stored bottom-to-top
    const float* row = vals.data() + static_cast<size_t>(h - 1 - v) * w;
    for (int u = 0; u < w; ++u) out.at(u, v) = row[u];
  }
  return out;
}

void write_pfm(const std::string& path, const Raster& raster) {
  std::ofstream f = open_out(path);
  f << "Pf\n" << raster.width << " " << raster.height << "\n-1.0\n";
  std::vector<float> row(raster.width);
  for (int v = raster.height - 1; v >= 0; --v) {
    for (int u = 0; u < raster.width; ++u)
      row[u] = static_cast<float>(raster.at(u, v));
    write_f32_le(f, row.data(), row.size());
  }
  if (!f) fail(path, "write failed");
}

Mask read_pgm(const std::string& path) {
  std::ifstream f = open_in(path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  f >> magic;
  if (magic != "P5") fail(path, "bad magic '" + magic + "', expected 'P5'", 0);
  if (!(f >> w >> h >> maxval) || w < 1 || h < 1)
    fail(path, "bad dimensions in header", f.tellg());
  if (maxval < 1 || maxval > 255)
    fail(path, "unsupported maxval " + std::to_string(maxval), f.tellg());
  f.get();

  const size_t count = static_cast<size_t>(w) * h;
  const std::vector<char> bytes = read_payload(f, path, count);
  Mask out(w, h);
  std::memcpy(out.data.data(), bytes.data(), count);
  return out;
}

void write_pgm(const std::string& path, const Mask& mask) {
  std::ofstream f = open_out(path);
  f << "P5\n" << mask.width << " " << mask.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(mask.data.data()),
          static_cast<std::streamsize>(mask.size()));
  if (!f) fail(path, "write failed");
}

DensityField read_df32(const std::string& path) {
  std::ifstream f = open_in(path);
  std::string magic;
  std::getline(f, magic);
  if (magic != "DF32") fail(path, "bad magic '" + magic + "', expected 'DF32'", 0);

  std::string header;
  if (!std::getline(f, header)) fail(path, "missing geometry line", f.tellg());
  GridSpec spec;
  {
    std::istringstream hs(header);
    if (!(hs >> spec.nx >> spec.ny >> spec.nz >> spec.voxel.x >> spec.voxel.y >>
          spec.voxel.z >> spec.origin.x >> spec.origin.y >> spec.origin.z))
      fail(path, "malformed geometry line '" + header + "'", 5);
  }
  spec.validate();

  const auto count = static_cast<size_t>(spec.num_voxels());
  const std::streamoff data_start = f.tellg();
  std::vector<char> bytes(count * 4);
  f.read(bytes.data(), static_cast<std::streamsize>(count * 4));
  const auto got = static_cast<size_t>(f.gcount());
  if (got != count * 4)
    fail(path,
         "payload size mismatch: header expects " + std::to_string(count * 4) +
             " bytes (" + std::to_string(count) + " voxels), file provides " +
             std::to_string(got),
         data_start + static_cast<std::streamoff>(got));
  f.peek();
  if (!f.eof())
    fail(path, "payload size mismatch: trailing bytes after the expected " +
                   std::to_string(count * 4));

  std::vector<float> vals(count);
  read_f32_le(bytes.data(), vals.data(), count);
  std::vector<double> sigma(count);
  for (size_t i = 0; i < count; ++i) sigma[i] = vals[i];
  return DensityField(spec, std::move(sigma));
}

void write_df32(const std::string& path, const DensityField& field) {
  const GridSpec& s = field.spec();
  std::ofstream f = open_out(path);
  f << "DF32\n"
    << s.nx << " " << s.ny << " " << s.nz << " " << format_double(s.voxel.x) << " "
    << format_double(s.voxel.y) << " " << format_double(s.voxel.z) << " "
    << format_double(s.origin.x) << " " << format_double(s.origin.y) << " "
    << format_double(s.origin.z) << "\n";
  std::vector<float> vals(field.sigma().size());
  for (size_t i = 0; i < vals.size(); ++i) vals[i] = static_cast<float>(field.sigma()[i]);
  write_f32_le(f, vals.data(), vals.size());
  if (!f) fail(path, "write failed");
}

SceneSpec read_scene_json(const std::string& path) {
  std::ifstream f = open_in(path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::parse_error& e) {
    fail(path, std::string("JSON parse error: ") + e.what(),
         static_cast<std::streamoff>(e.byte));
  }
  SceneSpec scene;
  try {
    if (j.contains("footprint")) {
      scene.footprint_x = j["footprint"].at(0).get<double>();
      scene.footprint_y = j["footprint"].at(1).get<double>();
    }
    if (j.contains("camera")) {
      scene.cam = {j["camera"].at(0).get<double>(), j["camera"].at(1).get<double>(),
                   j["camera"].at(2).get<double>()};
    }
    for (const auto& b : j.value("boxes", nlohmann::json::array())) {
      scene.boxes.push_back({b.at("x").get<double>(), b.at("y").get<double>(),
                             b.at("w").get<double>(), b.at("l").get<double>(),
                             b.at("height").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    fail(path, std::string("bad scene JSON: ") + e.what());
  }
  return scene;
}

void write_scene_json(const std::string& path, const SceneSpec& scene) {
  nlohmann::json j;
  j["footprint"] = {scene.footprint_x, scene.footprint_y};
  j["camera"] = {scene.cam.x, scene.cam.y, scene.cam.z};
  j["boxes"] = nlohmann::json::array();
  for (const SceneBox& b : scene.boxes)
    j["boxes"].push_back(
        {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"l", b.l}, {"height", b.height}});
  std::ofstream f = open_out(path);
  f << j.dump(2) << "\n";
  if (!f) fail(path, "write failed");
}

RankPairs read_pairs_csv(const std::string& path) {
  std::ifstream f = open_in(path);
  std::string line;
  RankPairs out;
  size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("i_u", 0) == 0) continue;  // header
    RankPair p;
    char comma;
    std::istringstream ls(line);
    if (!(ls >> p.iu >> comma >> p.iv >> comma >> p.ju >> comma >> p.jv >> comma >> p.r))
      fail(path, "malformed pair line " + std::to_string(lineno) + ": '" + line + "'");
    if (p.r < -1 || p.r > 1)
      fail(path, "rank label out of range on line " + std::to_string(lineno));
    out.pairs.push_back(p);
  }
  return out;
}

void write_pairs_csv(std::ostream& os, const RankPairs& pairs) {
  os << "i_u,i_v,j_u,j_v,r\n";
  for (const RankPair& p : pairs.pairs)
    os << p.iu << "," << p.iv << "," << p.ju << "," << p.jv << "," << p.r << "\n";
}

void write_pairs_csv(const std::string& path, const RankPairs& pairs) {
  std::ofstream f = open_out(path);
  write_pairs_csv(f, pairs);
  if (!f) fail(path, "write failed");
}

std::vector<TraceRow> read_trace_csv(const std::string& path) {
  std::ifstream f = open_in(path);
  std::string line;
  std::vector<TraceRow> rows;
  size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("epoch", 0) == 0) continue;
    TraceRow r;
    char comma;
    std::istringstream ls(line);
    if (!(ls >> r.epoch >> comma >> r.loss.l_h >> comma >> r.loss.l_rank >> comma >>
          r.loss.l_sky >> comma >> r.loss.l_total >> comma >> r.lr))
      fail(path, "malformed trace line " + std::to_string(lineno) + ": '" + line + "'");
    rows.push_back(r);
  }
  return rows;
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& trace) {
  std::ofstream f = open_out(path);
  f << "epoch,l_h,l_rank,l_sky,l_total,lr\n";
  for (const TraceRow& r : trace)
    f << r.epoch << "," << format_double(r.loss.l_h) << "," << format_double(r.loss.l_rank)
      << "," << format_double(r.loss.l_sky) << "," << format_double(r.loss.l_total) << ","
      << format_double(r.lr) << "\n";
  if (!f) fail(path, "write failed");
}

}  // namespace dfit
