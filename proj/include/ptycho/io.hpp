/* IO.HPP  On-disk formats: the dataset container (meta.json + positions.bin
 *         + frames.bin), raw complex-grid files, run manifests, and metric
 *         reports. All binary payloads are little-endian; frames hold
 *         intensities (detectors measure intensities; amplitudes are square
 *         roots taken on load).
 * Copyright (C) 2026 liveptycho contributors
 * Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)
 */
#pragma once

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ptycho/analysis.hpp"
#include "ptycho/grid.hpp"

static_assert(std::endian::native == std::endian::little,
              "container formats are little-endian; big-endian hosts are unsupported");

namespace ptycho {

using json = nlohmann::json;
namespace fs = std::filesystem;

/// User/configuration mistakes; the CLI exits 2 on these.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Bad or unreadable data; the CLI exits 3 on these.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class FrameDtype { f32, f64 };

inline std::string to_string(FrameDtype d) { return d == FrameDtype::f32 ? "f32" : "f64"; }
inline FrameDtype frame_dtype_from_string(const std::string& s) {
  if (s == "f32") return FrameDtype::f32;
  if (s == "f64") return FrameDtype::f64;
  throw DataError("unknown frame dtype: " + s);
}

/// A full scan: diffraction intensities with window positions on a fixed
/// object canvas. positions are integer top-left corners; centers keep the
/// (y, x) window centers as written to disk.
struct ScanDataset {
  GridShape object_shape;
  GridShape probe_shape;
  std::vector<RealGrid> intensities;
  std::vector<ScanPosition> positions;
  std::vector<std::array<double, 2>> centers;

  std::size_t size() const { return intensities.size(); }
};

namespace detail {

template <typename T>
void write_raw(std::ofstream& out, const T* data, std::size_t count) {
  out.write(reinterpret_cast<const char*>(data), std::streamsize(count * sizeof(T)));
}

template <typename T>
void read_raw(std::ifstream& in, T* data, std::size_t count) {
  in.read(reinterpret_cast<char*>(data), std::streamsize(count * sizeof(T)));
  if (!in) throw DataError("unexpected end of binary file");
}

inline std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  return out;
}

inline std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open for reading: " + path.string());
  return in;
}

}  // namespace detail

inline constexpr char kCgridMagic[8] = {'C', 'G', 'R', 'I', 'D', '0', '1', '\0'};

inline void write_cgrid(const fs::path& path, const ComplexGrid& grid) {
  auto out = detail::open_out(path);
  out.write(kCgridMagic, 8);
  const std::uint32_t h = std::uint32_t(grid.height()), w = std::uint32_t(grid.width());
  detail::write_raw(out, &h, 1);
  detail::write_raw(out, &w, 1);
  detail::write_raw(out, grid.data().data(), std::size_t(grid.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

inline ComplexGrid read_cgrid(const fs::path& path) {
  auto in = detail::open_in(path);
  char magic[8];
  detail::read_raw(in, magic, 8);
  if (std::memcmp(magic, kCgridMagic, 8) != 0)
    throw DataError("not a cgrid file: " + path.string());
  std::uint32_t h = 0, w = 0;
  detail::read_raw(in, &h, 1);
  detail::read_raw(in, &w, 1);
  if (h == 0 || w == 0 || std::uint64_t(h) * w > (1ull << 30))
    throw DataError("cgrid dimensions out of range: " + path.string());
  ComplexGrid grid(int(h), int(w));
  detail::read_raw(in, grid.data().data(), std::size_t(grid.size()));
  return grid;
}

inline void write_dataset(const fs::path& dir, const ScanDataset& ds,
                          FrameDtype dtype = FrameDtype::f32) {
  if (ds.size() == 0 || ds.size() != ds.positions.size() || ds.size() != ds.centers.size())
    throw DataError("write_dataset: inconsistent dataset");
  fs::create_directories(dir);

  json meta;
  meta["version"] = 1;
  meta["k"] = ds.size();
  meta["probe_shape"] = {ds.probe_shape.height, ds.probe_shape.width};
  meta["object_shape"] = {ds.object_shape.height, ds.object_shape.width};
  meta["frame_dtype"] = to_string(dtype);
  meta["endianness"] = "LE";
  {
    std::ofstream out(dir / "meta.json", std::ios::trunc);
    if (!out) throw DataError("cannot write meta.json");
    out << meta.dump(2) << "\n";
  }
  {
    auto out = detail::open_out(dir / "positions.bin");
    for (const auto& c : ds.centers) detail::write_raw(out, c.data(), 2);
  }
  {
    auto out = detail::open_out(dir / "frames.bin");
    for (const auto& frame : ds.intensities) {
      require_same_shape(frame.shape(), ds.probe_shape, "write_dataset");
      if (dtype == FrameDtype::f64) {
        detail::write_raw(out, frame.data().data(), std::size_t(frame.size()));
      } else {
        std::vector<float> narrowed(frame.data().begin(), frame.data().end());
        detail::write_raw(out, narrowed.data(), narrowed.size());
      }
    }
  }
}

inline ScanDataset read_dataset(const fs::path& dir) {
  json meta;
  {
    std::ifstream in(dir / "meta.json");
    if (!in) throw DataError("cannot read " + (dir / "meta.json").string());
    try {
      in >> meta;
    } catch (const json::exception& e) {
      throw DataError(std::string("malformed meta.json: ") + e.what());
    }
  }
  ScanDataset ds;
  try {
    if (meta.at("version").get<int>() != 1) throw DataError("unsupported container version");
    if (meta.at("endianness").get<std::string>() != "LE")
      throw DataError("unsupported endianness");
    ds.probe_shape = {meta.at("probe_shape").at(0).get<int>(),
                      meta.at("probe_shape").at(1).get<int>()};
    ds.object_shape = {meta.at("object_shape").at(0).get<int>(),
                       meta.at("object_shape").at(1).get<int>()};
    const auto k = meta.at("k").get<std::int64_t>();
    const auto dtype = frame_dtype_from_string(meta.at("frame_dtype").get<std::string>());
    if (k <= 0) throw DataError("container has no frames");
    if (ds.probe_shape.height <= 0 || ds.probe_shape.width <= 0 ||
        ds.object_shape.height < ds.probe_shape.height ||
        ds.object_shape.width < ds.probe_shape.width)
      throw DataError("container shapes are invalid");

    auto pos_in = detail::open_in(dir / "positions.bin");
    for (std::int64_t i = 0; i < k; ++i) {
      std::array<double, 2> c{};
      detail::read_raw(pos_in, c.data(), 2);
      ds.centers.push_back(c);
      const ScanPosition pos{int(std::llround(c[0] - ds.probe_shape.height / 2.0)),
                             int(std::llround(c[1] - ds.probe_shape.width / 2.0))};
      if (pos.y < 0 || pos.x < 0 || pos.y + ds.probe_shape.height > ds.object_shape.height ||
          pos.x + ds.probe_shape.width > ds.object_shape.width)
        throw DataError("scan position out of object bounds");
      ds.positions.push_back(pos);
    }
    char probe_byte;
    if (pos_in.read(&probe_byte, 1)) throw DataError("positions.bin longer than meta K");

    auto frames_in = detail::open_in(dir / "frames.bin");
    const std::size_t n = std::size_t(ds.probe_shape.pixels());
    std::vector<float> f32buf(dtype == FrameDtype::f32 ? n : 0);
    for (std::int64_t i = 0; i < k; ++i) {
      RealGrid frame(ds.probe_shape.height, ds.probe_shape.width);
      if (dtype == FrameDtype::f64) {
        detail::read_raw(frames_in, frame.data().data(), n);
      } else {
        detail::read_raw(frames_in, f32buf.data(), n);
        for (std::size_t p = 0; p < n; ++p) frame[p] = double(f32buf[p]);
      }
      if (!all_finite(frame) || !all_nonnegative(frame))
        throw DataError("frame " + std::to_string(i) + " has negative or non-finite intensities");
      ds.intensities.push_back(std::move(frame));
    }
    if (frames_in.read(&probe_byte, 1)) throw DataError("frames.bin longer than meta K");
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed meta.json: ") + e.what());
  }
  return ds;
}

/// Number belonging in a persisted report: non-finite and absent values map
/// to JSON null.
inline json json_number_or_null(const std::optional<double>& v) {
  if (!v.has_value() || !std::isfinite(*v)) return nullptr;
  return *v;
}

inline json report_to_json(const ReconReport& report) {
  json j;
  j["e0_full"] = json_number_or_null(report.e0_full);
  j["e0_central"] = json_number_or_null(report.e0_central);
  j["psnr_amp_full"] = json_number_or_null(report.psnr_amp_full);
  j["psnr_amp_central"] = json_number_or_null(report.psnr_amp_central);
  j["overlap_ratio"] = json_number_or_null(report.overlap_ratio);
  j["projections_evaluated"] = report.projections_evaluated;
  j["wall_time_sec"] = json_number_or_null(report.wall_time_sec);
  return j;
}

inline void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

inline json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read " + path.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw DataError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

/// The manifest echoes the subcommand and its full flag set (minus the
/// output directory, so a replay into a fresh directory is byte-identical).
inline void write_manifest(const fs::path& dir, const std::string& command, const json& args,
                           const std::string& version) {
  json m;
  m["tool"] = "ptycho";
  m["version"] = version;
  m["command"] = command;
  m["args"] = args;
  write_json_file(dir / "manifest.json", m);
}

}  // namespace ptycho
