#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "mwt/denoiser.hpp"
#include "mwt/regularizers.hpp"

using namespace mwt;
using Catch::Approx;

namespace {

Image random_image(int r, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return standard_normal_image(r, c, rng);
}

// xi_hat = (x_t - sqrt(abar) x_t) / sigma
class ScaledStandIn final : public NoisePredictor {
 public:
  explicit ScaledStandIn(DiffusionSchedule s) : s_(std::move(s)) {}
  Image predict(const Image& x_t, int t, const Image&) const override {
    const auto e = s_.lookup(t);
    return (x_t - std::sqrt(e.alpha_bar) * x_t) / e.sigma;
  }
  std::string name() const override { return "scaled"; }

 private:
  DiffusionSchedule s_;
};

const std::filesystem::path kData = MWT_TEST_DATA;

}  // namespace

TEST_CASE("schedule endpoints and identities") {
  const DiffusionSchedule s;
  CHECK(s.lookup(1).alpha_bar == Approx(1.0 - 1e-4).epsilon(1e-15));
  CHECK(s.beta(1) == 1e-4);
  CHECK(s.beta(1000) == Approx(0.02).epsilon(1e-15));
  for (int t = 1; t <= 1000; ++t) {
    const auto e = s.lookup(t);
    CHECK(e.alpha_bar + e.sigma * e.sigma == Approx(1.0).epsilon(1e-14));
    CHECK(e.snr == Approx(std::sqrt(e.alpha_bar) / e.sigma).epsilon(1e-14));
    if (t > 1) {
      CHECK(e.sigma > s.lookup(t - 1).sigma);
      CHECK(e.snr < s.lookup(t - 1).snr);
    }
  }
  CHECK(s.lookup(1000).sigma < 1.0);
  CHECK(std::sqrt(s.lookup(1000).alpha_bar) < 0.1);
  CHECK_THROWS_AS(s.lookup(0), std::out_of_range);
  CHECK_THROWS_AS(s.lookup(1001), std::out_of_range);
}

TEST_CASE("snr is one where sigma is 1/sqrt 2") {
  const DiffusionSchedule s;
  int t = 1;
  while (s.lookup(t).sigma < std::sqrt(0.5)) ++t;
  const auto lo = s.lookup(t - 1), hi = s.lookup(t);
  CHECK(lo.snr > 1.0);
  CHECK(hi.snr <= 1.0);
  const double sig = std::sqrt(0.5);
  CHECK(std::sqrt(1 - sig * sig) / sig == Approx(1.0).epsilon(1e-15));
}

TEST_CASE("perturb") {
  const DiffusionSchedule s;
  const Image x0 = random_image(6, 6, 1).cwiseMax(-1.0).cwiseMin(1.0);
  const Image zero = Image::Zero(6, 6);
  CHECK((perturb(s, x0, 300, zero) - std::sqrt(s.lookup(300).alpha_bar) * x0).norm() < 1e-15 * x0.norm());
  const Image noise = random_image(6, 6, 2);
  CHECK((perturb(s, x0, 1000, noise) - noise).cwiseAbs().maxCoeff() < 0.1);
  CHECK_THROWS_AS(perturb(s, x0, 10, Image::Zero(5, 6)), std::invalid_argument);

  SECTION("Monte-Carlo second moment") {
    Image x(2, 2);
    x << -1.0, 0.5, 0.0, 1.0;
    const int t = 250;
    const auto e = s.lookup(t);
    std::mt19937_64 rng(7);
    Image sum = Image::Zero(2, 2), sum2 = Image::Zero(2, 2);
    const int draws = 10000;
    for (int k = 0; k < draws; ++k) {
      const Image xt = perturb(s, x, t, standard_normal_image(2, 2, rng));
      sum += xt;
      sum2 += xt.cwiseAbs2();
    }
    // E[x_t^2] = abar x0^2 + sigma^2
    const Image expected = (e.alpha_bar * x.cwiseAbs2()).array() + e.sigma * e.sigma;
    for (Eigen::Index i = 0; i < 4; ++i)
      CHECK(std::abs(sum2.data()[i] / draws - expected.data()[i]) < 0.05 * expected.data()[i]);
  }
}

TEST_CASE("flips") {
  const Image x = random_image(5, 5, 3);
  for (bool h : {false, true})
    for (bool v : {false, true}) {
      const FlipState st{h, v};
      CHECK(apply_flip(apply_flip(x, st), st) == x);
    }
  CHECK(apply_flip(x, {true, false})(0, 0) == x(0, 4));
  CHECK(apply_flip(x, {false, true})(0, 0) == x(4, 0));

  Image sym = Image::Zero(4, 4);
  sym.block(1, 1, 2, 2).setConstant(3.0);
  for (bool h : {false, true})
    for (bool v : {false, true}) CHECK(apply_flip(sym, {h, v}) == sym);

  std::mt19937_64 rng(2024);
  int counts[4] = {0, 0, 0, 0};
  for (int k = 0; k < 1000; ++k) {
    const FlippedImage f = flip_wrap(x, rng);
    CHECK(f.unflip(f.image) == x);
    ++counts[2 * f.state.horizontal + f.state.vertical];
  }
  for (int c : counts) CHECK(std::abs(c / 1000.0 - 0.25) <= 0.04);
}

TEST_CASE("contrast normalisation") {
  const double cmax = 2.5;
  CHECK((normalize_contrast(Image::Zero(3, 3), cmax).array() == -1.0).all());
  CHECK((normalize_contrast(Image::Constant(3, 3, cmax), cmax).array() == 1.0).all());
  const Image chi = (random_image(4, 4, 4).array().abs() * 0.8).cwiseMin(cmax);
  CHECK((denormalize_image(normalize_contrast(chi, cmax), cmax) - chi).cwiseAbs().maxCoeff() < 1e-15);
  Image mixed(1, 3);
  mixed << -0.5, 1.0, 3.0;
  const Image g = denormalize_gradient(Image::Ones(1, 3), mixed, cmax);
  CHECK(g(0, 0) == 0.0);
  CHECK(g(0, 1) == 2.0 / cmax);
  CHECK(g(0, 2) == 0.0);
}

TEST_CASE("TV gradient") {
  CHECK(tv_gradient(Image::Constant(8, 8, 0.7), 1.0).norm() == 0.0);
  const Image chi = random_image(8, 8, 5);
  CHECK(tv_gradient(chi, 0.0).norm() == 0.0);
  const double w = 0.3;
  const Image g = tv_gradient(chi, w);
  Image fd(8, 8);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < chi.size(); ++i) {
    Image p = chi, m = chi;
    p.data()[i] += h;
    m.data()[i] -= h;
    fd.data()[i] = (tv_value(p, w) - tv_value(m, w)) / (2 * h);
  }
  CHECK((fd - g).norm() / g.norm() < 1e-5);
}

TEST_CASE("SSD gradient examples") {
  const DiffusionSchedule s;
  const Image x0 = random_image(8, 8, 6).cwiseMax(-1.0).cwiseMin(1.0);
  const Image noise = random_image(8, 8, 7);
  const ZeroPrior perfect;
  CHECK(ssd_gradient(perfect, s, x0, 250, 0.5, noise, {true, true}).gradient.norm() == 0.0);
  const SmoothingPrior smooth(s);
  CHECK(ssd_gradient(smooth, s, x0, 250, 0.0, noise, {false, true}).gradient.norm() == 0.0);

  SECTION("linear in lambda") {
    for (bool flips : {false, true}) {
      std::mt19937_64 r1(9), r2(9);
      const Image g1 = ssd_gradient(&smooth, s, x0, 100, 0.3, r1, flips).gradient;
      const Image g2 = ssd_gradient(&smooth, s, x0, 100, 0.6, r2, flips).gradient;
      CHECK(g1.norm() > 0.0);
      CHECK(g2 == 2.0 * g1);
    }
  }

  SECTION("lambda_t snr = lambda") {
    for (int t : {1, 17, 500, 1000}) {
      const SsdResult r = ssd_gradient(perfect, s, x0, t, 0.5, noise, {});
      CHECK(r.lambda_t * s.lookup(t).snr == Approx(0.5).epsilon(1e-15));
    }
  }

  SECTION("4x4 by hand") {
    Image x(4, 4), z(4, 4);
    x << -1, -0.5, 0, 0.5,  //
        1, 0.25, -0.25, 0,  //
        0.75, -0.75, 0.1, -0.1,  //
        0.2, 0.3, -0.9, 0.9;
    z << 0.3, -1.2, 0.8, 0.05,  //
        -0.4, 1.5, -0.6, 0.9,  //
        2.0, -0.1, 0.0, -1.7,  //
        0.6, 0.4, -0.3, 1.1;
    const int t = 123;
    const double lambda = 0.5;
    const ScaledStandIn standin(s);
    // flip both axes: the noise is drawn in the flipped frame
    const SsdResult r = ssd_gradient(standin, s, x, t, lambda, z, {true, true});
    const auto e = s.lookup(t);
    const double lt = lambda * e.sigma / std::sqrt(e.alpha_bar);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const double xt = std::sqrt(e.alpha_bar) * x(3 - i, 3 - j) + e.sigma * z(i, j);
        const double hat = (xt - std::sqrt(e.alpha_bar) * xt) / e.sigma;
        CHECK(r.gradient(3 - i, 3 - j) == Approx(lt * (hat - z(i, j))).epsilon(1e-13));
      }
  }
}

TEST_CASE("flip equivariance in expectation with the smoothing stand-in") {
  const DiffusionSchedule s;
  const SmoothingPrior smooth(s);
  const Image x0 = random_image(8, 8, 11).cwiseMax(-1.0).cwiseMin(1.0);
  const FlipState f{true, false};
  const Image xf = apply_flip(x0, f);
  const int t = 200;
  Image mean = Image::Zero(8, 8), mean_f = Image::Zero(8, 8);
  std::mt19937_64 rng(12);
  const int pairs = 5000;
  for (int k = 0; k < pairs; ++k) {
    const Image z = standard_normal_image(8, 8, rng);
    const FlipState st{bool(rng() & 1), bool(rng() & 1)};
    for (const Image& zz : {Image(z), Image(-z)}) {
      mean += ssd_gradient(smooth, s, x0, t, 1.0, zz, st).gradient;
      mean_f += ssd_gradient(smooth, s, xf, t, 1.0, zz, st).gradient;
    }
  }
  mean /= 2.0 * pairs;
  mean_f /= 2.0 * pairs;
  CHECK(mean.norm() > 1e-3);
  CHECK((mean_f - apply_flip(mean, f)).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("denoiser layout and inference") {
  const DenoiserModel m = DenoiserModel::random(3);
  const auto layout = DenoiserModel::layout();
  REQUIRE(m.layers().size() == layout.size());
  for (std::size_t k = 0; k < layout.size(); ++k) {
    CHECK(m.layers()[k].kind == layout[k].first);
    CHECK(m.layers()[k].shape == layout[k].second);
  }
  CHECK(layout.front().second == std::vector<std::uint32_t>{128, 64});
  CHECK(layout.back().second == std::vector<std::uint32_t>{1});

  const Image x = (random_image(16, 16, 13) * 2.0).cwiseMax(-2.0).cwiseMin(2.0);
  for (int t : {1, 250, 999, 1000}) {
    const Image y = m.run(x, t);
    CHECK(y.rows() == 16);
    CHECK(y.cols() == 16);
    CHECK(y.allFinite());
    CHECK(m.run(x, t) == y);
  }
  CHECK(m.run(x, 10) != m.run(x, 900));
}

TEST_CASE("denoiser serialisation round trip and errors") {
  const DenoiserModel m = DenoiserModel::random(4);
  const auto bytes = m.serialize();
  const DenoiserModel back = DenoiserModel::parse(bytes);
  const Image x = random_image(8, 8, 14);
  CHECK(back.run(x, 40) == m.run(x, 40));

  auto code_of = [](const std::vector<std::uint8_t>& b) {
    try {
      DenoiserModel::parse(b);
    } catch (const WeightFileError& e) {
      return int(e.code());
    }
    return 0;
  };
  auto truncated = bytes;
  truncated.resize(bytes.size() - 100);
  CHECK(code_of(truncated) == int(WeightFileErrc::bad_checksum));
  auto version = bytes;
  version[4] = 2;
  CHECK(code_of(version) == int(WeightFileErrc::bad_version));
  auto magic = bytes;
  magic[0] = 'X';
  CHECK(code_of(magic) == int(WeightFileErrc::bad_magic));
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  CHECK(code_of(flipped) == int(WeightFileErrc::bad_checksum));
  CHECK_THROWS_AS(DenoiserModel::load(kData / "does_not_exist.ssdw"), WeightFileError);

  std::vector<Tensor> layers = m.layers();
  layers[0].shape = {64, 128};
  CHECK_THROWS_AS(DenoiserModel(layers), WeightFileError);
}

TEST_CASE("denoiser golden vectors") {
  for (const char* stem : {"denoiser_random", "prior_shapes"}) {
    const auto golden_path = kData / (std::string(stem) + ".ssdg");
    if (!std::filesystem::exists(golden_path)) {
      FAIL("missing " << golden_path);
    }
    INFO(stem);
    const DenoiserModel m = DenoiserModel::load(kData / (std::string(stem) + ".ssdw"));
    const auto golden = load_golden(golden_path);
    REQUIRE(!golden.empty());
    for (const auto& g : golden) {
      const Image y = m.run(g.input, g.t);
      const double scale = std::max(1.0, g.output.cwiseAbs().maxCoeff());
      CHECK((y - g.output).cwiseAbs().maxCoeff() / scale < 1e-5);
    }
  }
}
