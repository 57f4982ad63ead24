#pragma once

#include <fftw3.h>

#include "mwt/core.hpp"

namespace mwt {

/// In-place 2D DFT on column-major Eigen matrices of a fixed shape.
/// Plans are created once; execution is thread-safe on distinct matrices.
class Fft2d {
 public:
  /// `measure` lets FFTW time candidate plans; the chosen plan (and so the last bits
  /// of every result) can then differ between runs, so reproducible paths leave it off.
  Fft2d(int rows, int cols, bool measure = false);
  ~Fft2d();
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;
  Fft2d(Fft2d&& other) noexcept;
  Fft2d& operator=(Fft2d&& other) noexcept;

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  /// Unnormalized forward transform, sum_x f(x) exp(-2 pi i j.x / n).
  void forward(ComplexMatrix& data) const;
  /// Inverse transform including the 1/(rows*cols) factor.
  void inverse(ComplexMatrix& data) const;

 private:
  void check(const ComplexMatrix& data) const;

  int rows_ = 0;
  int cols_ = 0;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// Smallest n >= minimum whose prime factors are all in {2, 3, 5, 7}.
int next_fast_size(int minimum);

}  // namespace mwt
