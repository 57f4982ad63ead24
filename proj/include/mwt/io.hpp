#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mwt/core.hpp"

namespace mwt {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "MWTI" raster: char[4] magic | u32 rows | u32 cols | f32 pixels, row-major (y outer).
/// Little-endian. See docs/formats.md.
void write_image(const std::filesystem::path& path, const RealImage& image);
RealImage read_image(const std::filesystem::path& path);

/// "MWTM" measurement matrix: char[4] magic | u32 n_rx | u32 n_tx | f64 frequency_hz |
/// n_tx x (f64 x, f64 y) | n_rx x (f64 x, f64 y) | n_rx*n_tx x (f32 re, f32 im),
/// receiver-major (all transmitters for receiver 0 first).
struct MeasurementFile {
  double frequency_hz = 0.0;
  std::vector<Point2> transmitters;
  std::vector<Point2> receivers;
  ScatterMatrix data;  // n_rx x n_tx
};

void write_measurements(const std::filesystem::path& path, const MeasurementFile& m);
MeasurementFile read_measurements(const std::filesystem::path& path);

/// 8-bit binary PGM, image row 0 (smallest y) drawn at the bottom. Values are mapped
/// linearly from [lo, hi] to [0, 255] and clamped.
void write_pgm(const std::filesystem::path& path, const RealImage& image, double lo, double hi);

std::vector<unsigned char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace mwt
