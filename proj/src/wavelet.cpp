#include "anet/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace anet {

const std::array<double, 8> kSym4Lo = {
    -0.07576571478927333, -0.02963552764599851, 0.49761866763201545,
    0.8037387518059161,   0.29785779560527736,  -0.09921954357684722,
    -0.012603967262037833, 0.0322231006040427};

namespace {

std::array<double, 8> highpass() {
  std::array<double, 8> g{};
  for (int n = 0; n < 8; ++n)
    g[n] = (n % 2 == 0 ? 1.0 : -1.0) * kSym4Lo[7 - n];
  return g;
}

const std::array<double, 8> kSym4Hi = highpass();

}  // namespace

void validate_sym4() {
  double sum = 0, energy = 0;
  for (double h : kSym4Lo) {
    sum += h;
    energy += h * h;
  }
  if (std::abs(sum - std::sqrt(2.0)) > 1e-10)
    throw std::runtime_error("sym4 filter: sum != sqrt(2)");
  if (std::abs(energy - 1.0) > 1e-10)
    throw std::runtime_error("sym4 filter: energy != 1");
  for (int s = 1; s <= 3; ++s) {
    double dot = 0;
    for (int n = 0; n + 2 * s < 8; ++n) dot += kSym4Lo[n] * kSym4Lo[n + 2 * s];
    if (std::abs(dot) > 1e-10)
      throw std::runtime_error("sym4 filter: even-shift orthogonality violated");
  }
}

namespace {

// One analysis level on an even-length signal: rows of the orthogonal
// transform are periodic shifts of the filters by 2.
void analyze(const std::vector<double>& x, std::vector<double>& a,
             std::vector<double>& d) {
  const int n = static_cast<int>(x.size());
  const int half = n / 2;
  a.assign(half, 0.0);
  d.assign(half, 0.0);
  for (int k = 0; k < half; ++k) {
    double sa = 0, sd = 0;
    for (int m = 0; m < 8; ++m) {
      const double xv = x[(2 * k + m) % n];
      sa += xv * kSym4Lo[m];
      sd += xv * kSym4Hi[m];
    }
    a[k] = sa;
    d[k] = sd;
  }
}

std::vector<double> synthesize(const std::vector<double>& a,
                               const std::vector<double>& d) {
  const int half = static_cast<int>(a.size());
  const int n = 2 * half;
  std::vector<double> x(n, 0.0);
  for (int k = 0; k < half; ++k)
    for (int m = 0; m < 8; ++m) {
      const int idx = (2 * k + m) % n;
      x[idx] += a[k] * kSym4Lo[m] + d[k] * kSym4Hi[m];
    }
  return x;
}

}  // namespace

WaveletDecomposition dwt(const std::vector<double>& signal, int levels) {
  if (levels < 1) throw std::invalid_argument("dwt: levels must be >= 1");
  if (signal.size() < kSym4Lo.size())
    throw std::invalid_argument("dwt: signal length " +
                                std::to_string(signal.size()) +
                                " shorter than the filter");
  WaveletDecomposition dec;
  dec.levels = levels;
  std::vector<double> cur = signal;
  for (int j = 0; j < levels; ++j) {
    if (cur.size() < kSym4Lo.size())
      throw std::invalid_argument("dwt: signal too short for " +
                                  std::to_string(levels) + " levels");
    dec.level_lengths.push_back(static_cast<int>(cur.size()));
    if (cur.size() % 2 != 0) cur.push_back(0.0);
    std::vector<double> a, d;
    analyze(cur, a, d);
    dec.details.push_back(std::move(d));
    cur = std::move(a);
  }
  dec.approx = std::move(cur);
  return dec;
}

std::vector<double> idwt(const WaveletDecomposition& d) {
  if (d.levels < 1 || static_cast<int>(d.details.size()) != d.levels ||
      static_cast<int>(d.level_lengths.size()) != d.levels)
    throw std::invalid_argument("idwt: inconsistent decomposition");
  std::vector<double> cur = d.approx;
  for (int j = d.levels - 1; j >= 0; --j) {
    cur = synthesize(cur, d.details[j]);
    cur.resize(d.level_lengths[j]);  // drop the pad sample, if any
  }
  return cur;
}

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

std::vector<double> denoise(const std::vector<double>& signal, int levels) {
  WaveletDecomposition dec = dwt(signal, levels);
  std::vector<double> mag(dec.details[0].size());
  for (size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(dec.details[0][i]);
  std::nth_element(mag.begin(), mag.begin() + mag.size() / 2, mag.end());
  double median = mag[mag.size() / 2];
  if (mag.size() % 2 == 0) {
    double lower = *std::max_element(mag.begin(), mag.begin() + mag.size() / 2);
    median = (median + lower) / 2.0;
  }
  const double sigma = median / 0.6745;
  const double t = sigma * std::sqrt(2.0 * std::log(static_cast<double>(signal.size())));
  for (auto& level : dec.details)
    for (auto& c : level) c = soft_threshold(c, t);
  return idwt(dec);
}

std::vector<double> normalize(const std::vector<double>& beat) {
  const double n = static_cast<double>(beat.size());
  double mean = 0;
  for (double x : beat) mean += x;
  mean /= n;
  double var = 0;
  for (double x : beat) var += (x - mean) * (x - mean);
  var /= n;
  std::vector<double> out(beat.size());
  if (var < 1e-12) return out;  // constant beat -> zeros
  const double inv = 1.0 / std::sqrt(var);
  for (size_t i = 0; i < beat.size(); ++i) out[i] = (beat[i] - mean) * inv;
  return out;
}

}  // namespace anet
