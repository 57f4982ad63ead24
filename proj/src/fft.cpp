#include "mwt/fft.hpp"

#include <mutex>
#include <utility>

namespace mwt {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }
}  // namespace

Fft2d::Fft2d(int rows, int cols, bool measure) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("FFT shape must be positive");
  const unsigned flags = (measure ? FFTW_MEASURE : FFTW_ESTIMATE) | FFTW_UNALIGNED;
  // Planning may overwrite the buffer, so plan on scratch storage.
  ComplexMatrix scratch(rows, cols);
  std::lock_guard lock(planner_mutex());
  // Column-major rows x cols is row-major cols x rows for FFTW.
  forward_ = fftw_plan_dft_2d(cols, rows, as_fftw(scratch.data()), as_fftw(scratch.data()), FFTW_FORWARD, flags);
  backward_ = fftw_plan_dft_2d(cols, rows, as_fftw(scratch.data()), as_fftw(scratch.data()), FFTW_BACKWARD, flags);
  if (!forward_ || !backward_) throw std::runtime_error("FFTW planning failed");
}

Fft2d::~Fft2d() {
  std::lock_guard lock(planner_mutex());
  if (forward_) fftw_destroy_plan(forward_);
  if (backward_) fftw_destroy_plan(backward_);
}

Fft2d::Fft2d(Fft2d&& other) noexcept
    : rows_(other.rows_),
      cols_(other.cols_),
      forward_(std::exchange(other.forward_, nullptr)),
      backward_(std::exchange(other.backward_, nullptr)) {}

Fft2d& Fft2d::operator=(Fft2d&& other) noexcept {
  if (this != &other) {
    std::swap(rows_, other.rows_);
    std::swap(cols_, other.cols_);
    std::swap(forward_, other.forward_);
    std::swap(backward_, other.backward_);
  }
  return *this;
}

void Fft2d::check(const ComplexMatrix& data) const {
  if (data.rows() != rows_ || data.cols() != cols_) throw std::invalid_argument("FFT shape mismatch");
}

void Fft2d::forward(ComplexMatrix& data) const {
  check(data);
  fftw_execute_dft(forward_, as_fftw(data.data()), as_fftw(data.data()));
}

void Fft2d::inverse(ComplexMatrix& data) const {
  check(data);
  fftw_execute_dft(backward_, as_fftw(data.data()), as_fftw(data.data()));
  data /= double(rows_) * cols_;
}

int next_fast_size(int minimum) {
  for (int n = std::max(minimum, 1);; ++n) {
    int m = n;
    for (int p : {2, 3, 5, 7})
      while (m % p == 0) m /= p;
    if (m == 1) return n;
  }
}

}  // namespace mwt
