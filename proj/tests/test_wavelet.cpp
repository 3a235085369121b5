#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "anet/wavelet.hpp"

using namespace anet;

namespace {

double energy(const std::vector<double>& v) {
  return std::inner_product(v.begin(), v.end(), v.begin(), 0.0);
}

std::vector<double> random_signal(size_t n, std::mt19937& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  std::vector<double> x(n);
  for (auto& v : x) v = d(rng);
  return x;
}

}  // namespace

TEST_CASE("embedded sym4 filter passes its own validation") {
  CHECK_NOTHROW(validate_sym4());
  double sum = 0, en = 0;
  for (double h : kSym4Lo) {
    sum += h;
    en += h * h;
  }
  CHECK(sum == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(en == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("constant signal has vanishing detail coefficients") {
  std::vector<double> x(64, 3.7);
  auto dec = dwt(x, 4);
  for (const auto& level : dec.details)
    for (double c : level) CHECK(std::abs(c) < 1e-10);
  // each level scales a constant approximation by sqrt(2)
  for (double a : dec.approx)
    CHECK(a == doctest::Approx(3.7 * 4.0).epsilon(1e-10));
}

TEST_CASE("analysis/synthesis round-trip is exact for any length") {
  std::mt19937 rng(11);
  for (int seed = 0; seed < 50; ++seed) {
    std::uniform_int_distribution<size_t> len(64, 1024);
    const size_t n = len(rng);
    auto x = random_signal(n, rng);
    auto dec = dwt(x, 4);
    auto back = idwt(dec);
    REQUIRE(back.size() == n);
    for (size_t i = 0; i < n; ++i) CHECK(std::abs(back[i] - x[i]) < 1e-8);
  }
}

TEST_CASE("round-trip handles odd and prime lengths") {
  std::mt19937 rng(12);
  for (size_t n : {65u, 101u, 359u, 360u, 361u, 650000u % 997u}) {
    auto x = random_signal(n, rng);
    auto back = idwt(dwt(x, 4));
    REQUIRE(back.size() == n);
    for (size_t i = 0; i < n; ++i) CHECK(std::abs(back[i] - x[i]) < 1e-8);
  }
}

TEST_CASE("transform preserves energy (Parseval)") {
  std::mt19937 rng(13);
  for (size_t n : {64u, 127u, 360u, 500u}) {
    auto x = random_signal(n, rng);
    auto dec = dwt(x, 4);
    double e = energy(dec.approx);
    for (const auto& level : dec.details) e += energy(level);
    CHECK(e == doctest::Approx(energy(x)).epsilon(1e-10));
  }
}

TEST_CASE("dwt input validation") {
  std::vector<double> tiny(4, 1.0);
  CHECK_THROWS_AS(dwt(tiny, 1), std::invalid_argument);
  std::vector<double> x(64, 1.0);
  CHECK_THROWS_AS(dwt(x, 0), std::invalid_argument);
  CHECK_THROWS_AS(dwt(x, 20), std::invalid_argument);  // runs out of samples
}

TEST_CASE("soft threshold examples and contraction") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
  CHECK(soft_threshold(0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-0.99, 1.0) == 0.0);
  CHECK(soft_threshold(7.0, 0.0) == 7.0);
  std::mt19937 rng(14);
  std::normal_distribution<double> d(0.0, 2.0);
  for (int i = 0; i < 200; ++i) {
    const double x = d(rng);
    const double y = soft_threshold(x, 0.8);
    CHECK(std::abs(y) <= std::abs(x));
    CHECK(y * x >= 0.0);  // never flips sign
  }
}

TEST_CASE("denoising a noisy sine moves it closer to the clean signal") {
  const size_t n = 720;
  std::vector<double> clean(n), noisy(n);
  std::mt19937 rng(15);
  std::normal_distribution<double> noise(0.0, 0.25);
  for (size_t i = 0; i < n; ++i) {
    clean[i] = std::sin(2.0 * M_PI * 3.0 * i / n) +
               0.5 * std::sin(2.0 * M_PI * 7.0 * i / n);
    noisy[i] = clean[i] + noise(rng);
  }
  auto den = denoise(noisy, 4);
  REQUIRE(den.size() == n);
  double mse_before = 0, mse_after = 0;
  for (size_t i = 0; i < n; ++i) {
    mse_before += (noisy[i] - clean[i]) * (noisy[i] - clean[i]);
    mse_after += (den[i] - clean[i]) * (den[i] - clean[i]);
  }
  CHECK(mse_after < 0.5 * mse_before);
}

TEST_CASE("denoising never increases signal energy") {
  std::mt19937 rng(16);
  for (size_t n : {128u, 360u, 411u}) {
    auto x = random_signal(n, rng);
    auto den = denoise(x, 4);
    CHECK(energy(den) <= energy(x) + 1e-8);
    // thresholding again can only shrink further
    auto den2 = denoise(den, 4);
    CHECK(energy(den2) <= energy(den) + 1e-8);
  }
}

TEST_CASE("a noise-free smooth signal survives denoising nearly unchanged") {
  const size_t n = 360;
  std::vector<double> x(n);
  for (size_t i = 0; i < n; ++i) x[i] = std::sin(2.0 * M_PI * 2.0 * i / n);
  auto den = denoise(x, 4);
  double mse = 0;
  for (size_t i = 0; i < n; ++i) mse += (den[i] - x[i]) * (den[i] - x[i]);
  CHECK(mse / n < 1e-3);
}

TEST_CASE("normalize produces zero mean and unit variance") {
  std::mt19937 rng(17);
  auto x = random_signal(360, rng, 5.0);
  for (auto& v : x) v += 12.0;
  auto z = normalize(x);
  REQUIRE(z.size() == x.size());
  double mean = std::accumulate(z.begin(), z.end(), 0.0) / z.size();
  double var = 0;
  for (double v : z) var += (v - mean) * (v - mean);
  var /= z.size();
  CHECK(std::abs(mean) < 1e-10);
  CHECK(var == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("normalize maps a constant beat to zeros") {
  std::vector<double> flat(360, 4.2);
  for (double v : normalize(flat)) CHECK(v == 0.0);
}

TEST_CASE("normalize is invariant to affine shifts of the input") {
  std::mt19937 rng(18);
  auto x = random_signal(100, rng);
  auto y = x;
  for (auto& v : y) v = 3.0 * v - 7.0;
  auto zx = normalize(x);
  auto zy = normalize(y);
  for (size_t i = 0; i < x.size(); ++i)
    CHECK(zx[i] == doctest::Approx(zy[i]).epsilon(1e-9));
}
