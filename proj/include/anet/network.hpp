#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "anet/layers.hpp"
#include "anet/optim.hpp"
#include "anet/tensor.hpp"

namespace anet {

enum class Variant { v1, v2 };

inline const char* variant_name(Variant v) { return v == Variant::v1 ? "v1" : "v2"; }

inline Variant variant_from_name(const std::string& s) {
  if (s == "v1") return Variant::v1;
  if (s == "v2") return Variant::v2;
  throw std::invalid_argument("unknown variant '" + s + "' (expected v1 or v2)");
}

// Channel plan and strides for both architectures. The defaults hit the
// required final feature-map shapes and the serialized-size budgets.
struct ModelConfig {
  std::vector<int> v1_channels = {32, 64, 96, 80, 10};
  std::vector<int> v1_strides = {1, 1, 3, 1, 1};
  int v2_stem_channels = 16;
  std::vector<int> v2_channels = {24, 24, 32, 32, 16, 16, 3};
  std::vector<int> v2_strides = {1, 1, 2, 1, 1, 1, 1};
  int v2_expansion = 4;
  int input_length = 360;
  int num_classes = 5;
  std::uint64_t seed = 1234;
};

// Flat per-layer description used by the cost model and the file header.
struct LayerDesc {
  enum class Kind { conv, batchnorm, dense };
  Kind kind = Kind::conv;
  ConvMode mode = ConvMode::standard;
  std::string name;
  int k = 1, cin = 0, cout = 0, stride = 1, padding = 0;  // conv / dense
  int channels = 0;                                       // batchnorm
};

struct ModelSpec {
  Variant variant = Variant::v1;
  ModelConfig config;
  std::vector<LayerDesc> layers;
  int feature_channels = 0;  // final pre-pooling map
  int feature_length = 0;
  int skip_count = 0;  // v2 identity skips
};

namespace detail {

inline void push_conv(ModelSpec& s, const std::string& name, ConvMode mode,
                      int k, int cin, int cout, int stride, int padding) {
  LayerDesc d;
  d.kind = LayerDesc::Kind::conv;
  d.mode = mode;
  d.name = name;
  d.k = k;
  d.cin = cin;
  d.cout = cout;
  d.stride = stride;
  d.padding = padding;
  s.layers.push_back(d);
}

inline void push_bn(ModelSpec& s, const std::string& name, int channels) {
  LayerDesc d;
  d.kind = LayerDesc::Kind::batchnorm;
  d.name = name;
  d.channels = channels;
  s.layers.push_back(d);
}

inline void push_dense(ModelSpec& s, const std::string& name, int cin, int cout) {
  LayerDesc d;
  d.kind = LayerDesc::Kind::dense;
  d.name = name;
  d.cin = cin;
  d.cout = cout;
  s.layers.push_back(d);
}

}  // namespace detail

// Builds the layer list for a variant and checks the final-shape contract:
// V1 must end in a (10, 120) map, V2 in <=4 channels with length in [160, 200]
// and at least one identity skip.
inline ModelSpec build_spec(Variant variant, const ModelConfig& cfg = {}) {
  ModelSpec s;
  s.variant = variant;
  s.config = cfg;
  int L = cfg.input_length;
  if (variant == Variant::v1) {
    if (cfg.v1_channels.size() != 5 || cfg.v1_strides.size() != 5)
      throw std::invalid_argument("build_spec: v1 needs 5 block channels and strides");
    int cin = 1;
    for (int i = 0; i < 5; ++i) {
      const int c = cfg.v1_channels[i];
      const std::string b = "block" + std::to_string(i + 1);
      detail::push_conv(s, b + ".conv", ConvMode::standard, 3, cin, c,
                        cfg.v1_strides[i], 1);
      L = conv_out_length(L, 3, cfg.v1_strides[i], 1);
      detail::push_bn(s, b + ".bn1", c);
      detail::push_conv(s, b + ".dw", ConvMode::depthwise, 3, c, c, 1, 1);
      detail::push_conv(s, b + ".pw", ConvMode::pointwise, 1, c, c, 1, 0);
      detail::push_bn(s, b + ".bn2", c);
      cin = c;
    }
    s.feature_channels = cin;
    s.feature_length = L;
    if (s.feature_channels != 10 || s.feature_length != 120)
      throw std::invalid_argument(
          "build_spec: v1 channel plan yields final map (" +
          std::to_string(s.feature_channels) + ", " +
          std::to_string(s.feature_length) + "), required (10, 120)");
  } else {
    if (cfg.v2_channels.size() != 7 || cfg.v2_strides.size() != 7)
      throw std::invalid_argument("build_spec: v2 needs 7 bottleneck channels and strides");
    int cin = cfg.v2_stem_channels;
    detail::push_conv(s, "stem.conv", ConvMode::standard, 3, 1, cin, 1, 1);
    detail::push_bn(s, "stem.bn", cin);
    for (int i = 0; i < 7; ++i) {
      const int cout = cfg.v2_channels[i];
      const int stride = cfg.v2_strides[i];
      const int e = cin * cfg.v2_expansion;
      const std::string b = "bottleneck" + std::to_string(i + 1);
      detail::push_conv(s, b + ".expand", ConvMode::pointwise, 1, cin, e, 1, 0);
      detail::push_bn(s, b + ".bn1", e);
      detail::push_conv(s, b + ".dw", ConvMode::depthwise, 3, e, e, stride, 1);
      L = conv_out_length(L, 3, stride, 1);
      detail::push_bn(s, b + ".bn2", e);
      detail::push_conv(s, b + ".project", ConvMode::pointwise, 1, e, cout, 1, 0);
      detail::push_bn(s, b + ".bn3", cout);
      if (cin == cout && stride == 1) ++s.skip_count;
      cin = cout;
    }
    s.feature_channels = cin;
    s.feature_length = L;
    if (s.feature_channels > 4 || s.feature_length < 160 || s.feature_length > 200)
      throw std::invalid_argument(
          "build_spec: v2 plan yields final map (" +
          std::to_string(s.feature_channels) + ", " +
          std::to_string(s.feature_length) +
          "), required <=4 channels and length in [160, 200]");
    if (s.skip_count < 1)
      throw std::invalid_argument("build_spec: v2 plan has no identity skip");
  }
  detail::push_dense(s, "classifier", s.feature_channels, cfg.num_classes);
  return s;
}

// ---- runtime layers with caches and gradient buffers ----

template <typename S>
struct ConvLayer {
  ConvParams<S> p;
  std::vector<S> dw, db;
  Tensor<S> x_cache;

  void init(ConvMode mode, int k, int cin, int cout, int stride, int padding,
            std::mt19937& rng) {
    p.mode = mode;
    p.k = k;
    p.cin = cin;
    p.cout = mode == ConvMode::depthwise ? cin : cout;
    p.stride = stride;
    p.padding = padding;
    p.weights.resize(p.weight_count());
    p.bias.assign(p.out_channels(), S(0));
    int fan_in = cin * k;
    if (mode == ConvMode::depthwise) fan_in = k;
    he_uniform_init(p.weights, fan_in, rng);
    dw.assign(p.weights.size(), S(0));
    db.assign(p.bias.size(), S(0));
  }

  Tensor<S> forward(const Tensor<S>& x, bool training) {
    if (training) x_cache = x;
    return conv1d_forward(x, p);
  }
  Tensor<S> backward(const Tensor<S>& dy) {
    Tensor<S> dx;
    auto gr = conv1d_backward(dy, x_cache, p, dx);
    for (size_t i = 0; i < dw.size(); ++i) dw[i] += gr.dweights[i];
    for (size_t i = 0; i < db.size(); ++i) db[i] += gr.dbias[i];
    dx.v.swap(dx.g);
    dx.g.clear();
    return dx;
  }
  void zero_grads() {
    std::fill(dw.begin(), dw.end(), S(0));
    std::fill(db.begin(), db.end(), S(0));
  }
};

template <typename S>
struct BNLayer {
  BatchNormParams<S> p;
  std::vector<S> dgamma, dbeta;
  Tensor<S> x_cache;
  BatchNormCache<S> stats;

  void init(int channels) {
    p = BatchNormParams<S>(channels);
    dgamma.assign(channels, S(0));
    dbeta.assign(channels, S(0));
  }
  Tensor<S> forward(const Tensor<S>& x, bool training) {
    if (training) {
      x_cache = x;
      return batchnorm1d_forward(x, p, true, &stats);
    }
    return batchnorm1d_forward(x, p, false);
  }
  Tensor<S> backward(const Tensor<S>& dy) {
    Tensor<S> dx;
    auto gr = batchnorm1d_backward(dy, x_cache, p, stats, dx);
    for (size_t i = 0; i < dgamma.size(); ++i) {
      dgamma[i] += gr.dgamma[i];
      dbeta[i] += gr.dbeta[i];
    }
    dx.v.swap(dx.g);
    dx.g.clear();
    return dx;
  }
  void zero_grads() {
    std::fill(dgamma.begin(), dgamma.end(), S(0));
    std::fill(dbeta.begin(), dbeta.end(), S(0));
  }
};

template <typename S>
struct ReluLayer {
  Tensor<S> x_cache;
  Tensor<S> forward(const Tensor<S>& x, bool training) {
    if (training) x_cache = x;
    return relu(x);
  }
  Tensor<S> backward(const Tensor<S>& dy) {
    Tensor<S> dx = relu_backward(dy, x_cache);
    dx.v.swap(dx.g);
    dx.g.clear();
    return dx;
  }
};

// standard conv -> BN -> ReLU -> depthwise -> pointwise -> BN -> ReLU
template <typename S>
struct V1Block {
  ConvLayer<S> conv;
  BNLayer<S> bn1;
  ReluLayer<S> r1;
  ConvLayer<S> dwc;
  ConvLayer<S> pwc;
  BNLayer<S> bn2;
  ReluLayer<S> r2;

  Tensor<S> forward(const Tensor<S>& x, bool training) {
    auto h = conv.forward(x, training);
    h = bn1.forward(h, training);
    h = r1.forward(h, training);
    h = dwc.forward(h, training);
    h = pwc.forward(h, training);
    h = bn2.forward(h, training);
    return r2.forward(h, training);
  }
  Tensor<S> backward(const Tensor<S>& dy) {
    auto d = r2.backward(dy);
    d = bn2.backward(d);
    d = pwc.backward(d);
    d = dwc.backward(d);
    d = r1.backward(d);
    d = bn1.backward(d);
    return conv.backward(d);
  }
  void zero_grads() {
    conv.zero_grads();
    bn1.zero_grads();
    dwc.zero_grads();
    pwc.zero_grads();
    bn2.zero_grads();
  }
};

// pointwise expansion -> depthwise -> pointwise projection, linear output,
// identity skip when shapes match
template <typename S>
struct V2Bottleneck {
  ConvLayer<S> expand;
  BNLayer<S> bn1;
  ReluLayer<S> r1;
  ConvLayer<S> dwc;
  BNLayer<S> bn2;
  ReluLayer<S> r2;
  ConvLayer<S> project;
  BNLayer<S> bn3;
  bool skip = false;

  Tensor<S> forward(const Tensor<S>& x, bool training) {
    auto h = expand.forward(x, training);
    h = bn1.forward(h, training);
    h = r1.forward(h, training);
    h = dwc.forward(h, training);
    h = bn2.forward(h, training);
    h = r2.forward(h, training);
    h = project.forward(h, training);
    h = bn3.forward(h, training);
    if (skip)
      for (size_t i = 0; i < h.v.size(); ++i) h.v[i] += x.v[i];
    return h;
  }
  Tensor<S> backward(const Tensor<S>& dy) {
    auto d = bn3.backward(dy);
    d = project.backward(d);
    d = r2.backward(d);
    d = bn2.backward(d);
    d = dwc.backward(d);
    d = r1.backward(d);
    d = bn1.backward(d);
    d = expand.backward(d);
    if (skip)
      for (size_t i = 0; i < d.v.size(); ++i) d.v[i] += dy.v[i];
    return d;
  }
  void zero_grads() {
    expand.zero_grads();
    bn1.zero_grads();
    dwc.zero_grads();
    bn2.zero_grads();
    project.zero_grads();
    bn3.zero_grads();
  }
};

// A built model: layer graph plus weights. Forward produces logits (n, K, 1);
// backward accumulates parameter gradients from dlogits.
template <typename S>
class Network {
 public:
  ModelSpec spec;
  std::vector<V1Block<S>> v1_blocks;
  ConvLayer<S> stem;
  BNLayer<S> stem_bn;
  ReluLayer<S> stem_relu;
  std::vector<V2Bottleneck<S>> v2_blocks;
  DenseParams<S> dense;
  std::vector<S> dense_dw, dense_db;

  Tensor<S> features;  // last pre-pooling feature map
  Tensor<S> pooled;

  Tensor<S> forward(const Tensor<S>& x, bool training) {
    if (x.channels != 1 || x.length != spec.config.input_length)
      throw std::invalid_argument("forward: expected shape (n, 1, " +
                                  std::to_string(spec.config.input_length) +
                                  "), got " + x.shape_str());
    Tensor<S> h = x;
    if (spec.variant == Variant::v1) {
      for (auto& b : v1_blocks) h = b.forward(h, training);
    } else {
      h = stem.forward(h, training);
      h = stem_bn.forward(h, training);
      h = stem_relu.forward(h, training);
      for (auto& b : v2_blocks) h = b.forward(h, training);
    }
    features = h;
    pooled = global_avg_pool(h);
    return dense_forward(pooled, dense);
  }

  void backward(const Tensor<S>& dlogits) {
    Tensor<S> dpooled;
    auto gr = dense_backward(dlogits, pooled, dense, dpooled);
    for (size_t i = 0; i < dense_dw.size(); ++i) dense_dw[i] += gr.dweights[i];
    for (size_t i = 0; i < dense_db.size(); ++i) dense_db[i] += gr.dbias[i];
    dpooled.v.swap(dpooled.g);
    dpooled.g.clear();
    Tensor<S> d = global_avg_pool_backward(dpooled, features.length);
    d.v.swap(d.g);
    d.g.clear();
    if (spec.variant == Variant::v1) {
      for (auto it = v1_blocks.rbegin(); it != v1_blocks.rend(); ++it)
        d = it->backward(d);
    } else {
      for (auto it = v2_blocks.rbegin(); it != v2_blocks.rend(); ++it)
        d = it->backward(d);
      d = stem_relu.backward(d);
      d = stem_bn.backward(d);
      d = stem.backward(d);
    }
  }

  void zero_grads() {
    for (auto& b : v1_blocks) b.zero_grads();
    for (auto& b : v2_blocks) b.zero_grads();
    if (spec.variant == Variant::v2) {
      stem.zero_grads();
      stem_bn.zero_grads();
    }
    std::fill(dense_dw.begin(), dense_dw.end(), S(0));
    std::fill(dense_db.begin(), dense_db.end(), S(0));
  }

  // Inference-mode class probabilities, shape (n, K, 1).
  Tensor<S> predict(const Tensor<S>& beats) {
    return softmax(forward(beats, false));
  }

  // d(logit c)/d(feature map) for the last forward pass; the tail is
  // global average pooling followed by the linear classifier.
  Tensor<S> feature_grad_for_class(int c) const {
    if (c < 0 || c >= dense.cout)
      throw std::invalid_argument("feature_grad_for_class: class " +
                                  std::to_string(c) + " out of range");
    Tensor<S> g(features.batch, features.channels, features.length);
    const S inv_len = S(1) / static_cast<S>(features.length);
    for (int b = 0; b < features.batch; ++b)
      for (int j = 0; j < features.channels; ++j) {
        const S val = dense.weights[static_cast<size_t>(c) * dense.cin + j] * inv_len;
        for (int l = 0; l < features.length; ++l) g.at(b, j, l) = val;
      }
    return g;
  }

  std::vector<ParamView<S>> param_views() {
    std::vector<ParamView<S>> out;
    auto add = [&out](std::vector<S>& w, std::vector<S>& g) {
      out.push_back({std::span<S>(w), std::span<const S>(g)});
    };
    for_each_conv_bn([&](ConvLayer<S>& c) {
      add(c.p.weights, c.dw);
      add(c.p.bias, c.db);
    }, [&](BNLayer<S>& b) {
      add(b.p.gamma, b.dgamma);
      add(b.p.beta, b.dbeta);
    });
    add(dense.weights, dense_dw);
    add(dense.bias, dense_db);
    return out;
  }

  // Every stored array in serialization order (running stats included).
  std::vector<std::pair<std::string, std::vector<S>*>> state_entries() {
    std::vector<std::pair<std::string, std::vector<S>*>> out;
    size_t li = 0;
    auto conv_entry = [&](ConvLayer<S>& c) {
      const std::string n = spec.layers[li++].name;
      out.emplace_back(n + ".weight", &c.p.weights);
      out.emplace_back(n + ".bias", &c.p.bias);
    };
    auto bn_entry = [&](BNLayer<S>& b) {
      const std::string n = spec.layers[li++].name;
      out.emplace_back(n + ".gamma", &b.p.gamma);
      out.emplace_back(n + ".beta", &b.p.beta);
      out.emplace_back(n + ".running_mean", &b.p.running_mean);
      out.emplace_back(n + ".running_var", &b.p.running_var);
    };
    for_each_conv_bn(conv_entry, bn_entry);
    out.emplace_back("classifier.weight", &dense.weights);
    out.emplace_back("classifier.bias", &dense.bias);
    return out;
  }

 private:
  // Visits conv and BN layers in the same order as spec.layers.
  template <typename FC, typename FB>
  void for_each_conv_bn(FC&& fc, FB&& fb) {
    if (spec.variant == Variant::v1) {
      for (auto& b : v1_blocks) {
        fc(b.conv);
        fb(b.bn1);
        fc(b.dwc);
        fc(b.pwc);
        fb(b.bn2);
      }
    } else {
      fc(stem);
      fb(stem_bn);
      for (auto& b : v2_blocks) {
        fc(b.expand);
        fb(b.bn1);
        fc(b.dwc);
        fb(b.bn2);
        fc(b.project);
        fb(b.bn3);
      }
    }
  }
};

template <typename S>
Network<S> build_network(Variant variant, const ModelConfig& cfg = {}) {
  Network<S> net;
  net.spec = build_spec(variant, cfg);
  std::mt19937 rng(static_cast<std::uint32_t>(cfg.seed));
  if (variant == Variant::v1) {
    net.v1_blocks.resize(5);
    int cin = 1;
    for (int i = 0; i < 5; ++i) {
      const int c = cfg.v1_channels[i];
      auto& b = net.v1_blocks[i];
      b.conv.init(ConvMode::standard, 3, cin, c, cfg.v1_strides[i], 1, rng);
      b.bn1.init(c);
      b.dwc.init(ConvMode::depthwise, 3, c, c, 1, 1, rng);
      b.pwc.init(ConvMode::pointwise, 1, c, c, 1, 0, rng);
      b.bn2.init(c);
      cin = c;
    }
  } else {
    int cin = cfg.v2_stem_channels;
    net.stem.init(ConvMode::standard, 3, 1, cin, 1, 1, rng);
    net.stem_bn.init(cin);
    net.v2_blocks.resize(7);
    for (int i = 0; i < 7; ++i) {
      const int cout = cfg.v2_channels[i];
      const int stride = cfg.v2_strides[i];
      const int e = cin * cfg.v2_expansion;
      auto& b = net.v2_blocks[i];
      b.expand.init(ConvMode::pointwise, 1, cin, e, 1, 0, rng);
      b.bn1.init(e);
      b.dwc.init(ConvMode::depthwise, 3, e, e, stride, 1, rng);
      b.bn2.init(e);
      b.project.init(ConvMode::pointwise, 1, e, cout, 1, 0, rng);
      b.bn3.init(cout);
      b.skip = (cin == cout && stride == 1);
      cin = cout;
    }
  }
  net.dense.cin = net.spec.feature_channels;
  net.dense.cout = cfg.num_classes;
  net.dense.weights.resize(static_cast<size_t>(net.dense.cout) * net.dense.cin);
  net.dense.bias.assign(net.dense.cout, S(0));
  he_uniform_init(net.dense.weights, net.dense.cin, rng);
  net.dense_dw.assign(net.dense.weights.size(), S(0));
  net.dense_db.assign(net.dense.bias.size(), S(0));
  return net;
}

}  // namespace anet
