#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "mwt/core.hpp"

namespace mwt {

/// Discrete variance-preserving schedule with linearly spaced betas,
/// beta_t = beta_min + (beta_max - beta_min) (t - 1) / (T - 1), t = 1..T,
/// alpha_bar_t = prod_{v <= t} (1 - beta_v), sigma_t = sqrt(1 - alpha_bar_t).
class DiffusionSchedule {
 public:
  struct Entry {
    double sigma;
    double alpha_bar;
    double snr;  // sqrt(alpha_bar) / sigma
  };

  explicit DiffusionSchedule(int t_max = 1000, double beta_min = 1e-4, double beta_max = 0.02);

  int t_max() const { return t_max_; }
  double beta_min() const { return beta_min_; }
  double beta_max() const { return beta_max_; }
  double beta(int t) const;

  /// Throws std::out_of_range unless 1 <= t <= T.
  Entry lookup(int t) const;

 private:
  int t_max_;
  double beta_min_;
  double beta_max_;
  std::vector<Entry> table_;  // index t - 1
};

using Image = RealImage;

/// x_t = sqrt(alpha_bar_t) x0 + sigma_t noise.
Image perturb(const DiffusionSchedule& schedule, const Image& x0, int t, const Image& noise);

struct FlipState {
  bool horizontal = false;  // reverse columns (x)
  bool vertical = false;    // reverse rows (y)

  friend bool operator==(const FlipState&, const FlipState&) = default;
};

/// Flips are involutions, so the same call undoes them.
Image apply_flip(const Image& image, FlipState state);

/// Draws an independent horizontal and vertical coin (horizontal first).
FlipState draw_flip(std::mt19937_64& rng);

struct FlippedImage {
  Image image;
  FlipState state;

  Image unflip(const Image& flipped) const { return apply_flip(flipped, state); }
};

FlippedImage flip_wrap(const Image& x0, std::mt19937_64& rng);

/// x0 = 2 clip(chi, 0, chi_max) / chi_max - 1.
Image normalize_contrast(const Image& chi, double chi_max);
/// Inverse of normalize_contrast on [0, chi_max].
Image denormalize_image(const Image& x0, double chi_max);
/// Chain rule of normalize_contrast: 2 / chi_max inside [0, chi_max], 0 outside.
Image denormalize_gradient(const Image& grad_x0, const Image& chi, double chi_max);

/// weight * sum sqrt(|grad chi|^2 + eps^2) with forward differences (zero past the border).
double tv_value(const Image& chi, double weight, double eps = 1e-8);
Image tv_gradient(const Image& chi, double weight, double eps = 1e-8);

/// Noise-prediction model xi_phi(x_t, t). `drawn_noise` is the noise that produced
/// x_t; only oracle stand-ins may look at it.
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  virtual Image predict(const Image& x_t, int t, const Image& drawn_noise) const = 0;
  virtual std::string name() const = 0;
};

/// Returns the drawn noise itself, so the regularisation gradient vanishes.
class ZeroPrior final : public NoisePredictor {
 public:
  Image predict(const Image&, int, const Image& drawn_noise) const override { return drawn_noise; }
  std::string name() const override { return "zero"; }
};

/// Attributes everything a fixed Gaussian blur removes from x_t to noise:
/// xi = (x_t - G * x_t) / sigma_t, with reflecting borders (flip-equivariant).
class SmoothingPrior final : public NoisePredictor {
 public:
  explicit SmoothingPrior(DiffusionSchedule schedule, double blur_sigma_px = 1.5);
  Image predict(const Image& x_t, int t, const Image& drawn_noise) const override;
  std::string name() const override { return "smooth"; }

 private:
  DiffusionSchedule schedule_;
  std::vector<double> taps_;
};

/// Separable Gaussian blur with reflecting borders.
Image gaussian_blur(const Image& image, const std::vector<double>& taps);
std::vector<double> gaussian_taps(double sigma_px);

struct SsdResult {
  Image gradient;  // w.r.t. x0, in the orientation of the input
  double lambda_t = 0.0;
  FlipState flip;
};

/// lambda_t (xi_phi(x_t, t) - xi_t) with lambda_t = lambda / SNR_t, for an explicit
/// noise draw (in the flipped frame) and flip state. No network differentiation
/// is needed: the stop-gradient makes the residual itself the gradient.
SsdResult ssd_gradient(const NoisePredictor& model, const DiffusionSchedule& schedule, const Image& x0, int t,
                       double lambda, const Image& noise, FlipState flip);

/// Draws the flip state (when `use_flips`) and then the noise, column-major, from `rng`.
SsdResult ssd_gradient(const NoisePredictor* model, const DiffusionSchedule& schedule, const Image& x0, int t,
                       double lambda, std::mt19937_64& rng, bool use_flips = true);

Image standard_normal_image(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

}  // namespace mwt
