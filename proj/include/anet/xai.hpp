#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "anet/network.hpp"

namespace anet {

struct Attribution {
  int target_class = 0;
  std::string method;  // gradcam | shap-exact | shap-sampled
  std::vector<double> scores;
  std::vector<std::pair<int, int>> segments;  // [begin, end) per score, shap only
  std::string baseline;                       // masking reference descriptor
};

// ReLU(sum_k alpha_k A_k) with alpha_k the temporal mean of the gradient,
// linearly interpolated to out_len points and min-max normalized to [0, 1]
// (an all-zero map stays zero).
std::vector<double> gradcam_map(const std::vector<std::vector<double>>& feature_maps,
                                const std::vector<std::vector<double>>& gradients,
                                int out_len);

// Coalition value function over a feature mask (true = feature present).
using ValueFn = std::function<double(const std::vector<bool>&)>;

// Exact Shapley values by enumeration of all 2^m coalitions. m > 12 is
// rejected; use the sampled estimator instead.
std::vector<double> shap_exact_values(const ValueFn& f, int m);

// Mean marginal contribution over an explicit permutation list.
std::vector<double> shap_from_permutations(const ValueFn& f, int m,
                                           const std::vector<std::vector<int>>& perms);

// Permutation-sampling estimator, deterministic per seed.
std::vector<double> shap_sampled_values(const ValueFn& f, int m, int draws,
                                        std::uint64_t seed);

// m contiguous segments covering [0, length); the first length%m get the
// extra sample.
std::vector<std::pair<int, int>> make_segments(int length, int m);

enum class ShapBaseline { zeros, mean };

struct XaiOptions {
  int segments = 12;
  ShapBaseline baseline = ShapBaseline::zeros;
  std::vector<float> baseline_beat;  // used when baseline == mean
  int draws = 20000;
  std::uint64_t seed = 7;
};

Attribution grad_cam(Network<float>& net, const std::vector<float>& beat, int target_class);
Attribution shap_exact(Network<float>& net, const std::vector<float>& beat,
                       int target_class, const XaiOptions& opts = {});
Attribution shap_sampled(Network<float>& net, const std::vector<float>& beat,
                         int target_class, const XaiOptions& opts = {});

// CSV: (t, beat value, score) rows. JSON: full attribution. SVG: beat trace
// with the attribution as a color band.
void export_attribution(const Attribution& a, const std::vector<float>& beat,
                        const std::string& format,
                        const std::filesystem::path& path);

Attribution attribution_from_json(const std::string& json_text);
std::string attribution_to_json(const Attribution& a, const std::vector<float>& beat);

}  // namespace anet
