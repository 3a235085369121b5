#include "anet/xai.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "anet/dataset.hpp"

namespace anet {

std::vector<double> gradcam_map(const std::vector<std::vector<double>>& feature_maps,
                                const std::vector<std::vector<double>>& gradients,
                                int out_len) {
  if (feature_maps.empty() || feature_maps.size() != gradients.size())
    throw std::invalid_argument("gradcam_map: feature map / gradient count mismatch");
  const size_t L = feature_maps[0].size();
  std::vector<double> raw(L, 0.0);
  for (size_t k = 0; k < feature_maps.size(); ++k) {
    if (feature_maps[k].size() != L || gradients[k].size() != L)
      throw std::invalid_argument("gradcam_map: map length mismatch");
    double alpha = 0;
    for (double g : gradients[k]) alpha += g;
    alpha /= static_cast<double>(L);
    for (size_t l = 0; l < L; ++l) raw[l] += alpha * feature_maps[k][l];
  }
  for (double& x : raw) x = std::max(0.0, x);

  std::vector<double> up(out_len, 0.0);
  if (L == 1) {
    std::fill(up.begin(), up.end(), raw[0]);
  } else {
    for (int t = 0; t < out_len; ++t) {
      const double pos = static_cast<double>(t) * (L - 1) / (out_len - 1);
      const int i = std::min(static_cast<int>(pos), static_cast<int>(L) - 2);
      const double frac = pos - i;
      up[t] = raw[i] * (1.0 - frac) + raw[i + 1] * frac;
    }
  }
  const double mx = *std::max_element(up.begin(), up.end());
  const double mn = *std::min_element(up.begin(), up.end());
  if (mx > mn)
    for (double& x : up) x = (x - mn) / (mx - mn);
  // all-equal map: zero stays zero, a flat positive map normalizes to zero too
  else if (mx == mn && mx != 0.0)
    std::fill(up.begin(), up.end(), 0.0);
  return up;
}

namespace {

struct MemoFn {
  const ValueFn& f;
  std::unordered_map<std::string, double> cache;
  double operator()(const std::vector<bool>& mask) {
    std::string key(mask.size(), '0');
    for (size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) key[i] = '1';
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const double v = f(mask);
    cache.emplace(std::move(key), v);
    return v;
  }
};

}  // namespace

std::vector<double> shap_exact_values(const ValueFn& f, int m) {
  if (m < 1) throw std::invalid_argument("shap_exact: need at least one feature");
  if (m > 12)
    throw std::invalid_argument(
        "shap_exact: " + std::to_string(m) +
        " segments exceeds the 2^12 coalition cost guard; use the sampled mode");
  // w[s] = s! (m-s-1)! / m!
  std::vector<double> w(m);
  for (int s = 0; s < m; ++s) {
    double num = 1.0;
    for (int i = 2; i <= s; ++i) num *= i;
    for (int i = 2; i <= m - s - 1; ++i) num *= i;
    double den = 1.0;
    for (int i = 2; i <= m; ++i) den *= i;
    w[s] = num / den;
  }
  MemoFn mf{f, {}};
  std::vector<double> phi(m, 0.0);
  const std::uint32_t n_masks = 1u << m;
  std::vector<bool> mask(m), mask_i(m);
  for (std::uint32_t bits = 0; bits < n_masks; ++bits) {
    int s = 0;
    for (int i = 0; i < m; ++i) {
      mask[i] = (bits >> i) & 1u;
      if (mask[i]) ++s;
    }
    const double fs = mf(mask);
    for (int i = 0; i < m; ++i) {
      if (mask[i]) continue;
      mask_i = mask;
      mask_i[i] = true;
      phi[i] += w[s] * (mf(mask_i) - fs);
    }
  }
  return phi;
}

std::vector<double> shap_from_permutations(const ValueFn& f, int m,
                                           const std::vector<std::vector<int>>& perms) {
  if (perms.empty()) throw std::invalid_argument("shap: need at least one permutation");
  MemoFn mf{f, {}};
  std::vector<double> phi(m, 0.0);
  std::vector<bool> mask(m);
  for (const auto& perm : perms) {
    std::fill(mask.begin(), mask.end(), false);
    double prev = mf(mask);
    for (int i : perm) {
      mask[i] = true;
      const double cur = mf(mask);
      phi[i] += cur - prev;
      prev = cur;
    }
  }
  for (double& p : phi) p /= static_cast<double>(perms.size());
  return phi;
}

std::vector<double> shap_sampled_values(const ValueFn& f, int m, int draws,
                                        std::uint64_t seed) {
  if (draws < 1) throw std::invalid_argument("shap_sampled: draws must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<int> base(m);
  for (int i = 0; i < m; ++i) base[i] = i;
  std::vector<std::vector<int>> perms;
  perms.reserve(draws);
  for (int d = 0; d < draws; ++d) {
    std::shuffle(base.begin(), base.end(), rng);
    perms.push_back(base);
  }
  return shap_from_permutations(f, m, perms);
}

std::vector<std::pair<int, int>> make_segments(int length, int m) {
  if (m < 1 || m > length)
    throw std::invalid_argument("make_segments: bad segment count");
  std::vector<std::pair<int, int>> out;
  const int base = length / m, extra = length % m;
  int pos = 0;
  for (int i = 0; i < m; ++i) {
    const int len = base + (i < extra ? 1 : 0);
    out.emplace_back(pos, pos + len);
    pos += len;
  }
  return out;
}

Attribution grad_cam(Network<float>& net, const std::vector<float>& beat,
                     int target_class) {
  Tensor<float> x(1, 1, static_cast<int>(beat.size()));
  std::copy(beat.begin(), beat.end(), x.v.begin());
  net.forward(x, false);
  Tensor<float> dA = net.feature_grad_for_class(target_class);
  const auto& A = net.features;
  std::vector<std::vector<double>> maps(A.channels), grads(A.channels);
  for (int c = 0; c < A.channels; ++c) {
    maps[c].resize(A.length);
    grads[c].resize(A.length);
    for (int l = 0; l < A.length; ++l) {
      maps[c][l] = A.at(0, c, l);
      grads[c][l] = dA.at(0, c, l);
    }
  }
  Attribution a;
  a.target_class = target_class;
  a.method = "gradcam";
  a.scores = gradcam_map(maps, grads, static_cast<int>(beat.size()));
  return a;
}

namespace {

ValueFn model_value_fn(Network<float>& net, const std::vector<float>& beat,
                       int target_class,
                       const std::vector<std::pair<int, int>>& segs,
                       const std::vector<float>& baseline) {
  if (target_class < 0 || target_class >= net.dense.cout)
    throw std::invalid_argument("shap: class index out of range");
  return [&net, beat, target_class, segs, baseline](const std::vector<bool>& mask) {
    Tensor<float> x(1, 1, static_cast<int>(beat.size()));
    std::copy(beat.begin(), beat.end(), x.v.begin());
    for (size_t s = 0; s < mask.size(); ++s)
      if (!mask[s])
        for (int t = segs[s].first; t < segs[s].second; ++t)
          x.v[t] = baseline[t];
    Tensor<float> p = net.predict(x);
    return static_cast<double>(p.at(0, target_class, 0));
  };
}

std::vector<float> resolve_baseline(const XaiOptions& opts, size_t n) {
  if (opts.baseline == ShapBaseline::zeros) return std::vector<float>(n, 0.0f);
  if (opts.baseline_beat.size() != n)
    throw std::invalid_argument("shap: mean baseline requires a baseline beat of length " +
                                std::to_string(n));
  return opts.baseline_beat;
}

}  // namespace

Attribution shap_exact(Network<float>& net, const std::vector<float>& beat,
                       int target_class, const XaiOptions& opts) {
  auto segs = make_segments(static_cast<int>(beat.size()), opts.segments);
  auto baseline = resolve_baseline(opts, beat.size());
  auto f = model_value_fn(net, beat, target_class, segs, baseline);
  Attribution a;
  a.target_class = target_class;
  a.method = "shap-exact";
  a.scores = shap_exact_values(f, opts.segments);
  a.segments = segs;
  a.baseline = opts.baseline == ShapBaseline::zeros ? "zeros" : "mean";
  return a;
}

Attribution shap_sampled(Network<float>& net, const std::vector<float>& beat,
                         int target_class, const XaiOptions& opts) {
  auto segs = make_segments(static_cast<int>(beat.size()), opts.segments);
  auto baseline = resolve_baseline(opts, beat.size());
  auto f = model_value_fn(net, beat, target_class, segs, baseline);
  Attribution a;
  a.target_class = target_class;
  a.method = "shap-sampled";
  a.scores = shap_sampled_values(f, opts.segments, opts.draws, opts.seed);
  a.segments = segs;
  a.baseline = opts.baseline == ShapBaseline::zeros ? "zeros" : "mean";
  return a;
}

namespace {

// per-time-step score: direct for gradcam, segment value for shap
std::vector<double> per_timestep_scores(const Attribution& a, size_t n) {
  if (a.segments.empty()) {
    if (a.scores.size() != n)
      throw std::invalid_argument("export: score length mismatch");
    return a.scores;
  }
  std::vector<double> out(n, 0.0);
  for (size_t s = 0; s < a.segments.size(); ++s)
    for (int t = a.segments[s].first; t < a.segments[s].second; ++t)
      out[t] = a.scores[s];
  return out;
}

}  // namespace

std::string attribution_to_json(const Attribution& a, const std::vector<float>& beat) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["target_class"] = a.target_class;
  j["method"] = a.method;
  j["scores"] = a.scores;
  if (!a.segments.empty()) {
    nlohmann::json segs = nlohmann::json::array();
    for (auto [b, e] : a.segments) segs.push_back({b, e});
    j["segments"] = segs;
    j["baseline"] = a.baseline;
  }
  j["beat"] = beat;
  return j.dump(2);
}

Attribution attribution_from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  Attribution a;
  a.target_class = j.at("target_class").get<int>();
  a.method = j.at("method").get<std::string>();
  a.scores = j.at("scores").get<std::vector<double>>();
  if (j.contains("segments")) {
    for (const auto& s : j.at("segments"))
      a.segments.emplace_back(s[0].get<int>(), s[1].get<int>());
    a.baseline = j.value("baseline", "");
  }
  return a;
}

void export_attribution(const Attribution& a, const std::vector<float>& beat,
                        const std::string& format,
                        const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("export_attribution: cannot write " + path.string());
  if (format == "csv") {
    auto scores = per_timestep_scores(a, beat.size());
    f << "t,beat,score\n";
    char buf[80];
    for (size_t t = 0; t < beat.size(); ++t) {
      std::snprintf(buf, sizeof buf, "%zu,%.6f,%.8f\n", t,
                    static_cast<double>(beat[t]), scores[t]);
      f << buf;
    }
  } else if (format == "json") {
    f << attribution_to_json(a, beat);
  } else if (format == "svg") {
    auto scores = per_timestep_scores(a, beat.size());
    const int W = 720, H = 240;
    double mn = beat[0], mx = beat[0];
    for (float v : beat) {
      mn = std::min(mn, static_cast<double>(v));
      mx = std::max(mx, static_cast<double>(v));
    }
    if (mx == mn) mx = mn + 1;
    double smx = *std::max_element(scores.begin(), scores.end());
    double smn = *std::min_element(scores.begin(), scores.end());
    if (smx == smn) smx = smn + 1;
    f << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\">\n";
    char buf[160];
    const double dx = static_cast<double>(W) / beat.size();
    for (size_t t = 0; t < beat.size(); ++t) {
      const double norm = (scores[t] - smn) / (smx - smn);
      std::snprintf(buf, sizeof buf,
                    "<rect x=\"%.2f\" y=\"0\" width=\"%.2f\" height=\"%d\" "
                    "fill=\"rgb(255,%d,%d)\" fill-opacity=\"0.6\"/>\n",
                    t * dx, dx + 0.01, H, static_cast<int>(255 * (1 - norm)),
                    static_cast<int>(255 * (1 - norm)));
      f << buf;
    }
    f << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1\" points=\"";
    for (size_t t = 0; t < beat.size(); ++t) {
      const double y = H - 10 - (beat[t] - mn) / (mx - mn) * (H - 20);
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", t * dx, y);
      f << buf;
    }
    f << "\"/>\n</svg>\n";
  } else {
    throw std::invalid_argument("export_attribution: unknown format '" + format + "'");
  }
  if (!f) throw std::runtime_error("export_attribution: write failed for " + path.string());
}

}  // namespace anet
