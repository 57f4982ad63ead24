#pragma once

#include <string>
#include <vector>

#include "mwt/core.hpp"

namespace mwt {

/// Mean SSIM over all fully contained 11x11 windows (Gaussian weights, sigma 1.5,
/// K1 = 0.01, K2 = 0.03). The dynamic range L is the larger of the two image ranges
/// (1 if both are flat), which keeps ssim(a, b) == ssim(b, a).
double ssim(const RealImage& a, const RealImage& b);

/// PSNR in dB using the dynamic range of `reference`; capped at 100 dB.
double psnr(const RealImage& reference, const RealImage& test);

inline constexpr double kPsnrCap = 100.0;

struct MethodMetrics {
  std::string method;
  double ssim = 0.0;
  double psnr_db = 0.0;
};

struct CompositeScores {
  std::vector<double> score;  // per method, same order as the input
  std::vector<double> ssim_norm;
  std::vector<double> psnr_norm;
  double ssim_min = 0.0, ssim_max = 0.0;
  double psnr_min = 0.0, psnr_max = 0.0;
};

/// Min-max normalise each metric across methods and average them. A metric on which
/// every method ties normalises to 1. LPIPS is not part of the score.
CompositeScores composite_score(const std::vector<MethodMetrics>& methods);

}  // namespace mwt
