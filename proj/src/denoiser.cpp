#include "mwt/denoiser.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

namespace mwt {

namespace {

using FeatureMap = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;  // channels x (H*W)
using RowMajorF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(std::uint8_t(v >> (8 * i)));
  }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void raw(const char* s, std::size_t n) { bytes.insert(bytes.end(), s, s + n); }
  void finish() { u32(crc32(bytes.data(), bytes.size())); }

  std::vector<std::uint8_t> bytes;
};

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size, WeightFileErrc overrun)
      : data_(data), size_(size), overrun_(overrun) {}

  std::uint8_t u8() {
    need(1);
    return data_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(data_[pos_ + std::size_t(i)]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  void need(std::size_t n) const {
    if (pos_ + n > size_) throw WeightFileError(overrun_, "unexpected end of payload");
  }
  std::size_t remaining() const { return size_ - pos_; }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
  WeightFileErrc overrun_;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WeightFileError(WeightFileErrc::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WeightFileError(WeightFileErrc::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw WeightFileError(WeightFileErrc::io, "write failed for " + path.string());
}

// Validates magic, version and trailing CRC; returns a reader over the body.
ByteReader open_container(const std::vector<std::uint8_t>& bytes, const char* magic, const char* what) {
  if (bytes.size() < 5 || std::memcmp(bytes.data(), magic, 4) != 0)
    throw WeightFileError(WeightFileErrc::bad_magic, std::string(what) + ": bad magic");
  if (bytes[4] != DenoiserModel::kFormatVersion)
    throw WeightFileError(WeightFileErrc::bad_version,
                          std::string(what) + ": unsupported version " + std::to_string(int(bytes[4])));
  if (bytes.size() < 9) throw WeightFileError(WeightFileErrc::bad_checksum, std::string(what) + ": truncated");
  const std::size_t body_end = bytes.size() - 4;
  ByteReader trailer(bytes.data() + body_end, 4, WeightFileErrc::bad_checksum);
  if (trailer.u32() != crc32(bytes.data(), body_end))
    throw WeightFileError(WeightFileErrc::bad_checksum, std::string(what) + ": checksum mismatch");
  return ByteReader(bytes.data() + 5, body_end - 5, WeightFileErrc::bad_shape);
}

float silu(float x) { return x / (1.0f + std::exp(-x)); }

// 3x3 convolution, zero padding, stride 1. weight is [out][in][3][3] row-major.
FeatureMap conv3x3(const FeatureMap& in, int height, int width, const Tensor& weight, const Tensor& bias) {
  const int cin = int(weight.shape[1]);
  const int cout = int(weight.shape[0]);
  const Eigen::Index pixels = Eigen::Index(height) * width;
  FeatureMap cols = FeatureMap::Zero(Eigen::Index(cin) * 9, pixels);
  for (int c = 0; c < cin; ++c)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const Eigen::Index row = Eigen::Index(c) * 9 + ky * 3 + kx;
        for (int y = 0; y < height; ++y) {
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= height) continue;
          for (int x = 0; x < width; ++x) {
            const int sx = x + kx - 1;
            if (sx < 0 || sx >= width) continue;
            cols(row, Eigen::Index(y) * width + x) = in(c, Eigen::Index(sy) * width + sx);
          }
        }
      }
  const Eigen::Map<const RowMajorF> w(weight.data.data(), cout, Eigen::Index(cin) * 9);
  const Eigen::Map<const Eigen::VectorXf> b(bias.data.data(), cout);
  FeatureMap out = w * cols;
  out.colwise() += b;
  return out;
}

}  // namespace

std::uint32_t crc32(const std::uint8_t* data, std::size_t size) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (size > 0) {
    const uInt chunk = uInt(std::min<std::size_t>(size, 1u << 30));
    crc = ::crc32(crc, data, chunk);
    data += chunk;
    size -= chunk;
  }
  return std::uint32_t(crc);
}

std::size_t Tensor::numel() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::vector<std::pair<LayerKind, std::vector<std::uint32_t>>> DenoiserModel::layout() {
  using L = LayerKind;
  const std::uint32_t c = kChannels;
  std::vector<std::pair<LayerKind, std::vector<std::uint32_t>>> l = {
      {L::dense_weight, {kHiddenDim, kTimeDim}},
      {L::dense_bias, {kHiddenDim}},
      {L::dense_weight, {kChannels * kBlocks, kHiddenDim}},
      {L::dense_bias, {kChannels * kBlocks}},
      {L::conv_weight, {c, 1, 3, 3}},
      {L::conv_bias, {c}},
  };
  for (int b = 0; b < kBlocks; ++b)
    for (int conv = 0; conv < 2; ++conv) {
      l.push_back({L::conv_weight, {c, c, 3, 3}});
      l.push_back({L::conv_bias, {c}});
    }
  l.push_back({L::conv_weight, {1, c, 3, 3}});
  l.push_back({L::conv_bias, {1}});
  return l;
}

DenoiserModel::DenoiserModel(std::vector<Tensor> layers) : layers_(std::move(layers)) {
  const auto expected = layout();
  if (layers_.size() != expected.size())
    throw WeightFileError(WeightFileErrc::bad_shape, "expected " + std::to_string(expected.size()) + " layers, got " +
                                                         std::to_string(layers_.size()));
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (layers_[i].kind != expected[i].first || layers_[i].shape != expected[i].second)
      throw WeightFileError(WeightFileErrc::bad_shape, "layer " + std::to_string(i) + " has unexpected kind or shape");
    if (layers_[i].data.size() != layers_[i].numel())
      throw WeightFileError(WeightFileErrc::bad_shape, "layer " + std::to_string(i) + " data size mismatch");
  }
}

DenoiserModel DenoiserModel::parse(const std::vector<std::uint8_t>& bytes) {
  ByteReader in = open_container(bytes, "SSDW", "weight file");
  const std::uint32_t count = in.u32();
  if (count != layout().size())
    throw WeightFileError(WeightFileErrc::bad_shape, "unexpected layer count " + std::to_string(count));
  std::vector<Tensor> layers(count);
  for (auto& t : layers) {
    t.kind = LayerKind(in.u8());
    const std::uint32_t rank = in.u32();
    if (rank == 0 || rank > 4) throw WeightFileError(WeightFileErrc::bad_shape, "unsupported tensor rank");
    t.shape.resize(rank);
    for (auto& d : t.shape) d = in.u32();
    const std::size_t n = t.numel();
    in.need(4 * n);
    t.data.resize(n);
    for (auto& v : t.data) v = in.f32();
  }
  if (in.remaining() != 0) throw WeightFileError(WeightFileErrc::bad_shape, "trailing bytes after last layer");
  return DenoiserModel(std::move(layers));
}

DenoiserModel DenoiserModel::load(const std::filesystem::path& path) { return parse(read_file(path)); }

std::vector<std::uint8_t> DenoiserModel::serialize() const {
  ByteWriter out;
  out.raw("SSDW", 4);
  out.u8(kFormatVersion);
  out.u32(std::uint32_t(layers_.size()));
  for (const auto& t : layers_) {
    out.u8(std::uint8_t(t.kind));
    out.u32(std::uint32_t(t.shape.size()));
    for (auto d : t.shape) out.u32(d);
    for (float v : t.data) out.f32(v);
  }
  out.finish();
  return out.bytes;
}

void DenoiserModel::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

DenoiserModel DenoiserModel::random(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Tensor> layers;
  for (const auto& [kind, shape] : layout()) {
    Tensor t{kind, shape, {}};
    const std::size_t fan_in = shape.size() > 1 ? t.numel() / shape[0] : 1;
    const float bound = 1.0f / std::sqrt(float(fan_in));
    std::uniform_real_distribution<float> u(-bound, bound);
    t.data.resize(t.numel());
    for (auto& v : t.data) v = u(rng);
    layers.push_back(std::move(t));
  }
  return DenoiserModel(std::move(layers));
}

Image DenoiserModel::run(const Image& x_t, int t) const {
  const int height = int(x_t.rows()), width = int(x_t.cols());

  // Time path.
  Eigen::VectorXf emb(kTimeDim);
  const int half = kTimeDim / 2;
  for (int i = 0; i < half; ++i) {
    const float freq = std::exp(-std::log(10000.0f) * float(i) / float(half));
    emb(i) = std::sin(float(t) * freq);
    emb(i + half) = std::cos(float(t) * freq);
  }
  auto dense = [](const Tensor& w, const Tensor& b, const Eigen::VectorXf& x) -> Eigen::VectorXf {
    const Eigen::Map<const RowMajorF> wm(w.data.data(), w.shape[0], w.shape[1]);
    return wm * x + Eigen::Map<const Eigen::VectorXf>(b.data.data(), b.shape[0]);
  };
  Eigen::VectorXf hidden = dense(layers_[0], layers_[1], emb).unaryExpr(&silu);
  const Eigen::VectorXf time_bias = dense(layers_[2], layers_[3], hidden);

  // Image path; pixels row-major (y outer).
  FeatureMap feat(1, Eigen::Index(height) * width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) feat(0, Eigen::Index(y) * width + x) = float(x_t(y, x));
  feat = conv3x3(feat, height, width, layers_[4], layers_[5]);
  for (int b = 0; b < kBlocks; ++b) {
    const std::size_t base = 6 + 4 * std::size_t(b);
    FeatureMap h = conv3x3(feat, height, width, layers_[base], layers_[base + 1]);
    h.colwise() += time_bias.segment(b * kChannels, kChannels);
    h = h.unaryExpr(&silu);
    feat += conv3x3(h, height, width, layers_[base + 2], layers_[base + 3]);
  }
  const FeatureMap out = conv3x3(feat, height, width, layers_[22], layers_[23]);

  Image result(height, width);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) result(y, x) = out(0, Eigen::Index(y) * width + x);
  return result;
}

std::vector<GoldenVector> load_golden(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  ByteReader in = open_container(bytes, "SSDG", "golden file");
  const std::uint32_t count = in.u32();
  std::vector<GoldenVector> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    GoldenVector g;
    g.t = int(in.u32());
    const std::uint32_t rows = in.u32(), cols = in.u32();
    in.need(8 * std::size_t(rows) * cols);
    g.input.resize(rows, cols);
    g.output.resize(rows, cols);
    for (std::uint32_t y = 0; y < rows; ++y)
      for (std::uint32_t x = 0; x < cols; ++x) g.input(y, x) = in.f32();
    for (std::uint32_t y = 0; y < rows; ++y)
      for (std::uint32_t x = 0; x < cols; ++x) g.output(y, x) = in.f32();
    out.push_back(std::move(g));
  }
  return out;
}

void save_golden(const std::filesystem::path& path, const std::vector<GoldenVector>& vectors) {
  ByteWriter out;
  out.raw("SSDG", 4);
  out.u8(DenoiserModel::kFormatVersion);
  out.u32(std::uint32_t(vectors.size()));
  for (const auto& g : vectors) {
    out.u32(std::uint32_t(g.t));
    out.u32(std::uint32_t(g.input.rows()));
    out.u32(std::uint32_t(g.input.cols()));
    for (Eigen::Index y = 0; y < g.input.rows(); ++y)
      for (Eigen::Index x = 0; x < g.input.cols(); ++x) out.f32(float(g.input(y, x)));
    for (Eigen::Index y = 0; y < g.output.rows(); ++y)
      for (Eigen::Index x = 0; x < g.output.cols(); ++x) out.f32(float(g.output(y, x)));
  }
  out.finish();
  write_file(path, out.bytes);
}

}  // namespace mwt
