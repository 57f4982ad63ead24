#include "mwt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mwt {

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;

Eigen::Matrix<double, kWindow, kWindow> gaussian_window() {
  Eigen::Matrix<double, kWindow, 1> g;
  for (int i = 0; i < kWindow; ++i) {
    const double x = i - kWindow / 2;
    g(i) = std::exp(-0.5 * x * x / (kWindowSigma * kWindowSigma));
  }
  g /= g.sum();
  return g * g.transpose();
}

double range_of(const RealImage& x) { return x.maxCoeff() - x.minCoeff(); }

}  // namespace

double ssim(const RealImage& a, const RealImage& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw std::invalid_argument("ssim: shape mismatch");
  if (a.rows() < kWindow || a.cols() < kWindow) throw std::invalid_argument("ssim: image smaller than the window");
  double L = std::max(range_of(a), range_of(b));
  if (L <= 0.0) L = 1.0;
  const double c1 = (0.01 * L) * (0.01 * L);
  const double c2 = (0.03 * L) * (0.03 * L);
  static const auto w = gaussian_window();

  double total = 0.0;
  const Eigen::Index nr = a.rows() - kWindow + 1, nc = a.cols() - kWindow + 1;
  for (Eigen::Index c = 0; c < nc; ++c)
    for (Eigen::Index r = 0; r < nr; ++r) {
      const auto pa = a.block<kWindow, kWindow>(r, c);
      const auto pb = b.block<kWindow, kWindow>(r, c);
      const double mu_a = (w.array() * pa.array()).sum();
      const double mu_b = (w.array() * pb.array()).sum();
      const double va = (w.array() * pa.array().square()).sum() - mu_a * mu_a;
      const double vb = (w.array() * pb.array().square()).sum() - mu_b * mu_b;
      const double cov = (w.array() * pa.array() * pb.array()).sum() - mu_a * mu_b;
      total += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / ((mu_a * mu_a + mu_b * mu_b + c1) * (va + vb + c2));
    }
  return total / double(nr * nc);
}

double psnr(const RealImage& reference, const RealImage& test) {
  if (reference.rows() != test.rows() || reference.cols() != test.cols())
    throw std::invalid_argument("psnr: shape mismatch");
  const double mse = (reference - test).squaredNorm() / double(reference.size());
  if (mse == 0.0) return kPsnrCap;
  double R = range_of(reference);
  if (R <= 0.0) R = 1.0;
  return std::min(kPsnrCap, 10.0 * std::log10(R * R / mse));
}

CompositeScores composite_score(const std::vector<MethodMetrics>& methods) {
  if (methods.size() < 2) throw std::invalid_argument("composite score needs at least two methods");
  CompositeScores s;
  auto minmax = [&](auto field, double& lo, double& hi) {
    lo = hi = methods.front().*field;
    for (const auto& m : methods) {
      lo = std::min(lo, m.*field);
      hi = std::max(hi, m.*field);
    }
  };
  minmax(&MethodMetrics::ssim, s.ssim_min, s.ssim_max);
  minmax(&MethodMetrics::psnr_db, s.psnr_min, s.psnr_max);
  auto norm = [](double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 1.0; };
  for (const auto& m : methods) {
    s.ssim_norm.push_back(norm(m.ssim, s.ssim_min, s.ssim_max));
    s.psnr_norm.push_back(norm(m.psnr_db, s.psnr_min, s.psnr_max));
    s.score.push_back(0.5 * (s.ssim_norm.back() + s.psnr_norm.back()));
  }
  return s;
}

}  // namespace mwt
