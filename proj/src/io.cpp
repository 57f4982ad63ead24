#include "mwt/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

namespace mwt {

namespace {

// Host is assumed little-endian (x86-64 / aarch64); checked at compile time.
static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

class Writer {
 public:
  template <class T>
  void put(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void magic(const char* m) { bytes_.insert(bytes_.end(), m, m + 4); }
  void flush(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
    out.write(bytes_.data(), std::streamsize(bytes_.size()));
    if (!out) throw FormatError("write failed for '" + path.string() + "'");
  }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  Reader(const std::filesystem::path& path) : bytes_(read_file(path)), name_(path.string()) {}
  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void expect_magic(const char* m) {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, m, 4) != 0) throw FormatError(name_ + ": bad magic, expected " + m);
    pos_ += 4;
  }
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw FormatError(name_ + ": truncated file");
  }
  void expect_end() const {
    if (pos_ != bytes_.size()) throw FormatError(name_ + ": trailing bytes");
  }

 private:
  std::vector<unsigned char> bytes_;
  std::string name_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  out << contents;
  if (!out) throw FormatError("write failed for '" + path.string() + "'");
}

void write_image(const std::filesystem::path& path, const RealImage& image) {
  Writer w;
  w.magic("MWTI");
  w.put(std::uint32_t(image.rows()));
  w.put(std::uint32_t(image.cols()));
  for (Eigen::Index r = 0; r < image.rows(); ++r)
    for (Eigen::Index c = 0; c < image.cols(); ++c) w.put(float(image(r, c)));
  w.flush(path);
}

RealImage read_image(const std::filesystem::path& path) {
  Reader r(path);
  r.expect_magic("MWTI");
  const auto rows = r.get<std::uint32_t>();
  const auto cols = r.get<std::uint32_t>();
  r.need(std::size_t(rows) * cols * sizeof(float));
  RealImage image(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) image(i, j) = r.get<float>();
  r.expect_end();
  return image;
}

void write_measurements(const std::filesystem::path& path, const MeasurementFile& m) {
  if (m.data.rows() != Eigen::Index(m.receivers.size()) || m.data.cols() != Eigen::Index(m.transmitters.size()))
    throw std::invalid_argument("measurement matrix does not match the antenna lists");
  Writer w;
  w.magic("MWTM");
  w.put(std::uint32_t(m.data.rows()));
  w.put(std::uint32_t(m.data.cols()));
  w.put(m.frequency_hz);
  for (const auto& p : m.transmitters) w.put(p.x()), w.put(p.y());
  for (const auto& p : m.receivers) w.put(p.x()), w.put(p.y());
  for (Eigen::Index j = 0; j < m.data.rows(); ++j)
    for (Eigen::Index l = 0; l < m.data.cols(); ++l) {
      w.put(float(m.data(j, l).real()));
      w.put(float(m.data(j, l).imag()));
    }
  w.flush(path);
}

MeasurementFile read_measurements(const std::filesystem::path& path) {
  Reader r(path);
  r.expect_magic("MWTM");
  const auto n_rx = r.get<std::uint32_t>();
  const auto n_tx = r.get<std::uint32_t>();
  MeasurementFile m;
  m.frequency_hz = r.get<double>();
  r.need((std::size_t(n_rx) + n_tx) * 2 * sizeof(double));
  for (std::uint32_t l = 0; l < n_tx; ++l) {
    const double x = r.get<double>();
    m.transmitters.emplace_back(x, r.get<double>());
  }
  for (std::uint32_t j = 0; j < n_rx; ++j) {
    const double x = r.get<double>();
    m.receivers.emplace_back(x, r.get<double>());
  }
  r.need(std::size_t(n_rx) * n_tx * 2 * sizeof(float));
  m.data.resize(n_rx, n_tx);
  for (std::uint32_t j = 0; j < n_rx; ++j)
    for (std::uint32_t l = 0; l < n_tx; ++l) {
      const float re = r.get<float>();
      m.data(j, l) = Complex(re, r.get<float>());
    }
  r.expect_end();
  return m;
}

void write_pgm(const std::filesystem::path& path, const RealImage& image, double lo, double hi) {
  std::string out = "P5\n" + std::to_string(image.cols()) + " " + std::to_string(image.rows()) + "\n255\n";
  const double span = hi > lo ? hi - lo : 1.0;
  for (Eigen::Index r = image.rows() - 1; r >= 0; --r)
    for (Eigen::Index c = 0; c < image.cols(); ++c) {
      const double v = std::clamp((image(r, c) - lo) / span, 0.0, 1.0);
      out.push_back(char(static_cast<unsigned char>(std::lround(255.0 * v))));
    }
  write_file(path, out);
}

}  // namespace mwt
