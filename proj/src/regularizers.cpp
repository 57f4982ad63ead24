#include "mwt/regularizers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mwt {

DiffusionSchedule::DiffusionSchedule(int t_max, double beta_min, double beta_max)
    : t_max_(t_max), beta_min_(beta_min), beta_max_(beta_max) {
  if (t_max < 2) throw std::invalid_argument("schedule needs T >= 2");
  if (!(beta_min > 0.0 && beta_min < beta_max && beta_max < 1.0))
    throw std::invalid_argument("schedule needs 0 < beta_min < beta_max < 1");
  table_.reserve(std::size_t(t_max));
  double alpha_bar = 1.0;
  for (int t = 1; t <= t_max; ++t) {
    alpha_bar *= 1.0 - beta(t);
    const double sigma = std::sqrt(1.0 - alpha_bar);
    table_.push_back({sigma, alpha_bar, std::sqrt(alpha_bar) / sigma});
  }
}

double DiffusionSchedule::beta(int t) const {
  return beta_min_ + (beta_max_ - beta_min_) * double(t - 1) / double(t_max_ - 1);
}

DiffusionSchedule::Entry DiffusionSchedule::lookup(int t) const {
  if (t < 1 || t > t_max_)
    throw std::out_of_range("timestep " + std::to_string(t) + " outside [1, " + std::to_string(t_max_) + "]");
  return table_[std::size_t(t - 1)];
}

Image perturb(const DiffusionSchedule& schedule, const Image& x0, int t, const Image& noise) {
  if (x0.rows() != noise.rows() || x0.cols() != noise.cols()) throw std::invalid_argument("noise shape mismatch");
  const auto e = schedule.lookup(t);
  return std::sqrt(e.alpha_bar) * x0 + e.sigma * noise;
}

Image apply_flip(const Image& image, FlipState state) {
  Image out = image;
  if (state.horizontal) out = out.rowwise().reverse().eval();
  if (state.vertical) out = out.colwise().reverse().eval();
  return out;
}

FlipState draw_flip(std::mt19937_64& rng) {
  FlipState s;
  s.horizontal = (rng() >> 63) != 0;
  s.vertical = (rng() >> 63) != 0;
  return s;
}

FlippedImage flip_wrap(const Image& x0, std::mt19937_64& rng) {
  if (x0.rows() != x0.cols()) throw std::invalid_argument("flip_wrap expects a square image");
  const FlipState s = draw_flip(rng);
  return {apply_flip(x0, s), s};
}

Image normalize_contrast(const Image& chi, double chi_max) {
  if (!(chi_max > 0.0)) throw std::invalid_argument("chi_max must be positive");
  return 2.0 * chi.cwiseMax(0.0).cwiseMin(chi_max) / chi_max - Image::Ones(chi.rows(), chi.cols());
}

Image denormalize_image(const Image& x0, double chi_max) { return (x0.array() + 1.0) * (chi_max / 2.0); }

Image denormalize_gradient(const Image& grad_x0, const Image& chi, double chi_max) {
  const auto inside = (chi.array() >= 0.0 && chi.array() <= chi_max).cast<double>();
  return grad_x0.array() * inside * (2.0 / chi_max);
}

double tv_value(const Image& chi, double weight, double eps) {
  const Eigen::Index rows = chi.rows(), cols = chi.cols();
  double sum = 0.0;
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double dx = c + 1 < cols ? chi(r, c + 1) - chi(r, c) : 0.0;
      const double dy = r + 1 < rows ? chi(r + 1, c) - chi(r, c) : 0.0;
      sum += std::sqrt(dx * dx + dy * dy + eps * eps);
    }
  return weight * sum;
}

Image tv_gradient(const Image& chi, double weight, double eps) {
  const Eigen::Index rows = chi.rows(), cols = chi.cols();
  Image g = Image::Zero(rows, cols);
  if (weight == 0.0) return g;
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double dx = c + 1 < cols ? chi(r, c + 1) - chi(r, c) : 0.0;
      const double dy = r + 1 < rows ? chi(r + 1, c) - chi(r, c) : 0.0;
      const double s = std::sqrt(dx * dx + dy * dy + eps * eps);
      if (c + 1 < cols) {
        g(r, c + 1) += dx / s;
        g(r, c) -= dx / s;
      }
      if (r + 1 < rows) {
        g(r + 1, c) += dy / s;
        g(r, c) -= dy / s;
      }
    }
  return weight * g;
}

std::vector<double> gaussian_taps(double sigma_px) {
  if (!(sigma_px > 0.0)) throw std::invalid_argument("blur width must be positive");
  const int radius = int(std::ceil(3.0 * sigma_px));
  std::vector<double> taps(std::size_t(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) sum += taps[std::size_t(i + radius)] = std::exp(-0.5 * i * i / (sigma_px * sigma_px));
  for (auto& t : taps) t /= sum;
  return taps;
}

namespace {
// Reflect about the edge sample: -1 -> 0, n -> n - 1 (half-sample symmetric).
Eigen::Index reflect(Eigen::Index i, Eigen::Index n) {
  while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
  return i;
}
}  // namespace

Image gaussian_blur(const Image& image, const std::vector<double>& taps) {
  const Eigen::Index rows = image.rows(), cols = image.cols();
  const Eigen::Index radius = Eigen::Index(taps.size() / 2);
  Image tmp(rows, cols), out(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (Eigen::Index k = -radius; k <= radius; ++k) acc += taps[std::size_t(k + radius)] * image(reflect(r + k, rows), c);
      tmp(r, c) = acc;
    }
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) {
      double acc = 0.0;
      for (Eigen::Index k = -radius; k <= radius; ++k) acc += taps[std::size_t(k + radius)] * tmp(r, reflect(c + k, cols));
      out(r, c) = acc;
    }
  return out;
}

SmoothingPrior::SmoothingPrior(DiffusionSchedule schedule, double blur_sigma_px)
    : schedule_(std::move(schedule)), taps_(gaussian_taps(blur_sigma_px)) {}

Image SmoothingPrior::predict(const Image& x_t, int t, const Image&) const {
  const auto e = schedule_.lookup(t);
  return (x_t - gaussian_blur(x_t, taps_)) / e.sigma;
}

Image standard_normal_image(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Image z(rows, cols);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = gauss(rng);
  return z;
}

SsdResult ssd_gradient(const NoisePredictor& model, const DiffusionSchedule& schedule, const Image& x0, int t,
                       double lambda, const Image& noise, FlipState flip) {
  const auto e = schedule.lookup(t);
  SsdResult result;
  result.lambda_t = lambda / e.snr;
  result.flip = flip;
  const Image flipped = apply_flip(x0, flip);
  const Image x_t = perturb(schedule, flipped, t, noise);
  const Image residual = model.predict(x_t, t, noise) - noise;
  result.gradient = apply_flip(result.lambda_t * residual, flip);
  return result;
}

SsdResult ssd_gradient(const NoisePredictor* model, const DiffusionSchedule& schedule, const Image& x0, int t,
                       double lambda, std::mt19937_64& rng, bool use_flips) {
  if (!model) throw std::invalid_argument("denoiser not loaded");
  schedule.lookup(t);
  const FlipState flip = use_flips ? draw_flip(rng) : FlipState{};
  const Image noise = standard_normal_image(x0.rows(), x0.cols(), rng);
  return ssd_gradient(*model, schedule, x0, t, lambda, noise, flip);
}

}  // namespace mwt
