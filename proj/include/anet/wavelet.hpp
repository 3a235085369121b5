#pragma once

#include <array>
#include <vector>

namespace anet {

// Symlet-4 analysis low-pass filter (orthogonal, 8 taps).
extern const std::array<double, 8> kSym4Lo;

// Checks sum = sqrt(2), unit energy and even-shift orthogonality of the
// embedded filter. Throws if the constants are corrupted.
void validate_sym4();

struct WaveletDecomposition {
  std::vector<double> approx;                // deepest level
  std::vector<std::vector<double>> details;  // details[0] = level 1 (finest)
  std::vector<int> level_lengths;            // input length at each level, pre-pad
  int levels = 0;
};

// Periodized cascade; odd-length approximations are zero-padded to even
// before the next level and the pre-pad lengths recorded so the inverse
// is exact for every input length.
WaveletDecomposition dwt(const std::vector<double>& signal, int levels);
std::vector<double> idwt(const WaveletDecomposition& d);

double soft_threshold(double x, double t);

// Soft-thresholds every detail level with the universal threshold
// T = sigma*sqrt(2 ln n), sigma = median(|level-1 details|)/0.6745,
// then reconstructs. The approximation band is untouched.
std::vector<double> denoise(const std::vector<double>& signal, int levels = 4);

// Per-beat z-score; a (near-)constant beat maps to all zeros.
std::vector<double> normalize(const std::vector<double>& beat);

}  // namespace anet
