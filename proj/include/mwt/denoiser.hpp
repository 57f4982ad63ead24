#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mwt/regularizers.hpp"

namespace mwt {

/// Binary weight file ("SSDW", little-endian):
///   char[4] magic "SSDW" | u8 version (=1) | u32 layer_count |
///   layer_count x { u8 kind | u32 rank | u32 dims[rank] | f32 data[prod(dims)] } |
///   u32 crc32 of every preceding byte (magic included).
/// Layer kinds: 1 dense weight [out, in], 2 dense bias [out], 3 conv weight
/// [out, in, 3, 3], 4 conv bias [out]. See docs/formats.md for the layer order.
enum class LayerKind : std::uint8_t { dense_weight = 1, dense_bias = 2, conv_weight = 3, conv_bias = 4 };

enum class WeightFileErrc { io = 1, bad_magic, bad_version, bad_checksum, bad_shape };

class WeightFileError : public std::runtime_error {
 public:
  WeightFileError(WeightFileErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  WeightFileErrc code() const { return code_; }

 private:
  WeightFileErrc code_;
};

struct Tensor {
  LayerKind kind = LayerKind::dense_weight;
  std::vector<std::uint32_t> shape;
  std::vector<float> data;

  std::size_t numel() const;
};

std::uint32_t crc32(const std::uint8_t* data, std::size_t size);

/// The fixed noise-prediction network:
///   time: sinusoidal embedding (64) -> dense 64->128 -> SiLU -> dense 128->128
///         (split into 4 x 32 per-block channel biases)
///   image: conv3x3 1->32, 4 x residual block
///         { conv3x3 32->32, + time bias, SiLU, conv3x3 32->32, skip add },
///         conv3x3 32->1. Zero padding, stride 1.
class DenoiserModel final : public NoisePredictor {
 public:
  static constexpr int kChannels = 32;
  static constexpr int kBlocks = 4;
  static constexpr int kTimeDim = 64;
  static constexpr int kHiddenDim = 128;
  static constexpr std::uint8_t kFormatVersion = 1;

  /// Expected (kind, shape) of every layer, in file order.
  static std::vector<std::pair<LayerKind, std::vector<std::uint32_t>>> layout();

  explicit DenoiserModel(std::vector<Tensor> layers);

  static DenoiserModel load(const std::filesystem::path& path);
  static DenoiserModel parse(const std::vector<std::uint8_t>& bytes);
  std::vector<std::uint8_t> serialize() const;
  void save(const std::filesystem::path& path) const;

  /// Weights drawn from a scaled uniform distribution; for tests and smoke runs.
  static DenoiserModel random(std::uint64_t seed);

  const std::vector<Tensor>& layers() const { return layers_; }

  /// xi_phi(x_t, t) for a single-channel image (row = y, column = x).
  Image run(const Image& x_t, int t) const;

  Image predict(const Image& x_t, int t, const Image&) const override { return run(x_t, t); }
  std::string name() const override { return "weights"; }

 private:
  std::vector<Tensor> layers_;
};

/// Golden vectors ("SSDG", little-endian):
///   char[4] "SSDG" | u8 version (=1) | u32 count |
///   count x { u32 t | u32 rows | u32 cols | f32 input[rows*cols] | f32 output[rows*cols] } |
///   u32 crc32 of every preceding byte. Pixels are row-major (y outer, x inner).
struct GoldenVector {
  int t = 0;
  Image input;
  Image output;
};

std::vector<GoldenVector> load_golden(const std::filesystem::path& path);
void save_golden(const std::filesystem::path& path, const std::vector<GoldenVector>& vectors);

}  // namespace mwt
