#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "anet/tensor.hpp"

namespace anet {

enum class ConvMode { standard, depthwise, pointwise };

inline const char* conv_mode_name(ConvMode m) {
  switch (m) {
    case ConvMode::standard: return "standard";
    case ConvMode::depthwise: return "depthwise";
    case ConvMode::pointwise: return "pointwise";
  }
  return "?";
}

inline int conv_out_length(int L, int k, int stride, int padding) {
  return (L + 2 * padding - k) / stride + 1;
}

// Weight layout: standard [cout][cin][k], depthwise [c][k], pointwise [cout][cin].
template <typename S>
struct ConvParams {
  ConvMode mode = ConvMode::standard;
  int k = 1;
  int cin = 1;
  int cout = 1;
  int stride = 1;
  int padding = 0;
  std::vector<S> weights;
  std::vector<S> bias;

  size_t weight_count() const {
    switch (mode) {
      case ConvMode::standard: return static_cast<size_t>(k) * cin * cout;
      case ConvMode::depthwise: return static_cast<size_t>(k) * cin;
      case ConvMode::pointwise: return static_cast<size_t>(cin) * cout;
    }
    return 0;
  }
  int out_channels() const { return mode == ConvMode::depthwise ? cin : cout; }

  void validate() const {
    if (k < 1 || cin < 1 || stride < 1 || padding < 0)
      throw std::invalid_argument("ConvParams: bad geometry");
    if (mode == ConvMode::pointwise && k != 1)
      throw std::invalid_argument("ConvParams: pointwise requires k=1");
    if (weights.size() != weight_count())
      throw std::invalid_argument("ConvParams: weight count mismatch");
    if (bias.size() != static_cast<size_t>(out_channels()))
      throw std::invalid_argument("ConvParams: bias count mismatch");
  }
};

namespace detail {

// im2col for one batch item: rows index (cin, tap), cols index output position.
template <typename S>
void im2col(const Tensor<S>& x, int b, const ConvParams<S>& p,
            typename Tensor<S>::Mat& cols) {
  const int Lout = conv_out_length(x.length, p.k, p.stride, p.padding);
  cols.setZero(p.cin * p.k, Lout);
  auto xm = x.mat(b);
  for (int c = 0; c < p.cin; ++c)
    for (int t = 0; t < p.k; ++t) {
      const int row = c * p.k + t;
      for (int j = 0; j < Lout; ++j) {
        const int src = j * p.stride + t - p.padding;
        if (src >= 0 && src < x.length) cols(row, j) = xm(c, src);
      }
    }
}

template <typename S>
void col2im_add(const typename Tensor<S>::Mat& cols, Tensor<S>& dx, int b,
                const ConvParams<S>& p) {
  const int Lout = static_cast<int>(cols.cols());
  auto dm = dx.grad_mat(b);
  for (int c = 0; c < p.cin; ++c)
    for (int t = 0; t < p.k; ++t) {
      const int row = c * p.k + t;
      for (int j = 0; j < Lout; ++j) {
        const int src = j * p.stride + t - p.padding;
        if (src >= 0 && src < dx.length) dm(c, src) += cols(row, j);
      }
    }
}

}  // namespace detail

template <typename S>
Tensor<S> conv1d_forward(const Tensor<S>& x, const ConvParams<S>& p) {
  p.validate();
  if (x.channels != p.cin)
    throw std::invalid_argument(
        std::string("conv1d_forward: input channels ") +
        std::to_string(x.channels) + " != cin " + std::to_string(p.cin) +
        " (" + conv_mode_name(p.mode) + ")");
  if (x.length + 2 * p.padding < p.k)
    throw std::invalid_argument("conv1d_forward: length " +
                                std::to_string(x.length) +
                                " too short for kernel " + std::to_string(p.k));
  const int Lout = conv_out_length(x.length, p.k, p.stride, p.padding);
  const int Cout = p.out_channels();
  Tensor<S> y(x.batch, Cout, Lout);

  using Mat = typename Tensor<S>::Mat;
  if (p.mode == ConvMode::pointwise) {
    Eigen::Map<const Mat> W(p.weights.data(), p.cout, p.cin);
    for (int b = 0; b < x.batch; ++b) {
      y.mat(b).noalias() = W * x.mat(b);
      y.mat(b).colwise() +=
          Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>(p.bias.data(),
                                                                p.cout);
    }
  } else if (p.mode == ConvMode::standard) {
    Eigen::Map<const Mat> W(p.weights.data(), p.cout, p.cin * p.k);
    Mat cols;
    for (int b = 0; b < x.batch; ++b) {
      detail::im2col(x, b, p, cols);
      y.mat(b).noalias() = W * cols;
      y.mat(b).colwise() +=
          Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>(p.bias.data(),
                                                                p.cout);
    }
  } else {  // depthwise
    for (int b = 0; b < x.batch; ++b) {
      auto xm = x.mat(b);
      auto ym = y.mat(b);
      for (int c = 0; c < p.cin; ++c) {
        const S* w = p.weights.data() + static_cast<size_t>(c) * p.k;
        for (int j = 0; j < Lout; ++j) {
          S acc = p.bias[c];
          const int base = j * p.stride - p.padding;
          for (int t = 0; t < p.k; ++t) {
            const int src = base + t;
            if (src >= 0 && src < x.length) acc += w[t] * xm(c, src);
          }
          ym(c, j) = acc;
        }
      }
    }
  }
  return y;
}

// Gradients w.r.t. input, weights and bias. dy carries the upstream gradient
// in its value buffer; the input gradient lands in x_grad.g.
template <typename S>
struct ConvGrads {
  std::vector<S> dweights;
  std::vector<S> dbias;
};

template <typename S>
ConvGrads<S> conv1d_backward(const Tensor<S>& dy, const Tensor<S>& x,
                             const ConvParams<S>& p, Tensor<S>& x_grad) {
  p.validate();
  if (x.size() == 0) throw std::invalid_argument("conv1d_backward: missing saved forward input");
  const int Lout = conv_out_length(x.length, p.k, p.stride, p.padding);
  if (dy.batch != x.batch || dy.channels != p.out_channels() || dy.length != Lout)
    throw std::invalid_argument("conv1d_backward: output grad shape " +
                                dy.shape_str() + " does not match forward output");
  x_grad = Tensor<S>(x.batch, x.channels, x.length);
  x_grad.ensure_grad();
  ConvGrads<S> gr;
  gr.dweights.assign(p.weights.size(), S(0));
  gr.dbias.assign(p.bias.size(), S(0));

  using Mat = typename Tensor<S>::Mat;
  if (p.mode == ConvMode::pointwise) {
    Eigen::Map<const Mat> W(p.weights.data(), p.cout, p.cin);
    Eigen::Map<Mat> dW(gr.dweights.data(), p.cout, p.cin);
    for (int b = 0; b < x.batch; ++b) {
      dW.noalias() += dy.mat(b) * x.mat(b).transpose();
      x_grad.grad_mat(b).noalias() = W.transpose() * dy.mat(b);
      for (int c = 0; c < p.cout; ++c) gr.dbias[c] += dy.mat(b).row(c).sum();
    }
  } else if (p.mode == ConvMode::standard) {
    Eigen::Map<const Mat> W(p.weights.data(), p.cout, p.cin * p.k);
    Eigen::Map<Mat> dW(gr.dweights.data(), p.cout, p.cin * p.k);
    Mat cols, dcols;
    for (int b = 0; b < x.batch; ++b) {
      detail::im2col(x, b, p, cols);
      dW.noalias() += dy.mat(b) * cols.transpose();
      dcols.noalias() = W.transpose() * dy.mat(b);
      detail::col2im_add<S>(dcols, x_grad, b, p);
      for (int c = 0; c < p.cout; ++c) gr.dbias[c] += dy.mat(b).row(c).sum();
    }
  } else {  // depthwise
    for (int b = 0; b < x.batch; ++b) {
      auto xm = x.mat(b);
      auto dym = dy.mat(b);
      auto dxm = x_grad.grad_mat(b);
      for (int c = 0; c < p.cin; ++c) {
        const S* w = p.weights.data() + static_cast<size_t>(c) * p.k;
        S* dw = gr.dweights.data() + static_cast<size_t>(c) * p.k;
        for (int j = 0; j < Lout; ++j) {
          const S gout = dym(c, j);
          gr.dbias[c] += gout;
          const int base = j * p.stride - p.padding;
          for (int t = 0; t < p.k; ++t) {
            const int src = base + t;
            if (src >= 0 && src < x.length) {
              dw[t] += gout * xm(c, src);
              dxm(c, src) += gout * w[t];
            }
          }
        }
      }
    }
  }
  return gr;
}

template <typename S>
struct BatchNormParams {
  std::vector<S> gamma, beta;
  std::vector<S> running_mean, running_var;
  S epsilon = S(1e-5);
  S momentum = S(0.1);

  explicit BatchNormParams(int channels = 0)
      : gamma(channels, S(1)), beta(channels, S(0)),
        running_mean(channels, S(0)), running_var(channels, S(1)) {}

  int channels() const { return static_cast<int>(gamma.size()); }
  void validate() const {
    const size_t c = gamma.size();
    if (beta.size() != c || running_mean.size() != c || running_var.size() != c)
      throw std::invalid_argument("BatchNormParams: per-channel arrays disagree");
    if (!(epsilon > S(0)))
      throw std::invalid_argument("BatchNormParams: epsilon must be positive");
  }
};

template <typename S>
struct BatchNormCache {
  std::vector<S> mean, inv_std;  // per channel, training-mode statistics
};

template <typename S>
Tensor<S> batchnorm1d_forward(const Tensor<S>& x, BatchNormParams<S>& p,
                              bool training, BatchNormCache<S>* cache = nullptr) {
  p.validate();
  if (x.channels != p.channels())
    throw std::invalid_argument("batchnorm1d: input channels " +
                                std::to_string(x.channels) + " != params " +
                                std::to_string(p.channels()));
  Tensor<S> y(x.batch, x.channels, x.length);
  const S m = static_cast<S>(x.batch) * static_cast<S>(x.length);
  std::vector<S> mean(x.channels), var(x.channels);
  if (training) {
    for (int c = 0; c < x.channels; ++c) {
      S s = 0, s2 = 0;
      for (int b = 0; b < x.batch; ++b)
        for (int l = 0; l < x.length; ++l) {
          const S xv = x.at(b, c, l);
          s += xv;
          s2 += xv * xv;
        }
      mean[c] = s / m;
      var[c] = s2 / m - mean[c] * mean[c];
      if (var[c] < S(0)) var[c] = S(0);
      p.running_mean[c] = (S(1) - p.momentum) * p.running_mean[c] + p.momentum * mean[c];
      p.running_var[c] = (S(1) - p.momentum) * p.running_var[c] + p.momentum * var[c];
    }
  } else {
    mean = p.running_mean;
    var = p.running_var;
  }
  if (cache) {
    cache->mean = mean;
    cache->inv_std.resize(x.channels);
  }
  for (int c = 0; c < x.channels; ++c) {
    const S inv = S(1) / std::sqrt(var[c] + p.epsilon);
    if (cache) cache->inv_std[c] = inv;
    for (int b = 0; b < x.batch; ++b)
      for (int l = 0; l < x.length; ++l)
        y.at(b, c, l) = p.gamma[c] * (x.at(b, c, l) - mean[c]) * inv + p.beta[c];
  }
  return y;
}

template <typename S>
struct BatchNormGrads {
  std::vector<S> dgamma, dbeta;
};

template <typename S>
BatchNormGrads<S> batchnorm1d_backward(const Tensor<S>& dy, const Tensor<S>& x,
                                       const BatchNormParams<S>& p,
                                       const BatchNormCache<S>& cache,
                                       Tensor<S>& x_grad) {
  const int C = x.channels;
  const S m = static_cast<S>(x.batch) * static_cast<S>(x.length);
  x_grad = Tensor<S>(x.batch, x.channels, x.length);
  x_grad.ensure_grad();
  BatchNormGrads<S> gr;
  gr.dgamma.assign(C, S(0));
  gr.dbeta.assign(C, S(0));
  for (int c = 0; c < C; ++c) {
    const S mu = cache.mean[c], inv = cache.inv_std[c];
    S sum_dy = 0, sum_dy_xhat = 0;
    for (int b = 0; b < x.batch; ++b)
      for (int l = 0; l < x.length; ++l) {
        const S xhat = (x.at(b, c, l) - mu) * inv;
        sum_dy += dy.at(b, c, l);
        sum_dy_xhat += dy.at(b, c, l) * xhat;
      }
    gr.dbeta[c] = sum_dy;
    gr.dgamma[c] = sum_dy_xhat;
    for (int b = 0; b < x.batch; ++b)
      for (int l = 0; l < x.length; ++l) {
        const S xhat = (x.at(b, c, l) - mu) * inv;
        x_grad.g[(static_cast<size_t>(b) * C + c) * x.length + l] =
            p.gamma[c] * inv / m *
            (m * dy.at(b, c, l) - sum_dy - xhat * sum_dy_xhat);
      }
  }
  return gr;
}

// max(0, x); subgradient at 0 is 0
template <typename S>
Tensor<S> relu(const Tensor<S>& x) {
  Tensor<S> y(x.batch, x.channels, x.length);
  for (size_t i = 0; i < x.v.size(); ++i) y.v[i] = x.v[i] > S(0) ? x.v[i] : S(0);
  return y;
}

template <typename S>
Tensor<S> relu_backward(const Tensor<S>& dy, const Tensor<S>& x) {
  Tensor<S> dx(x.batch, x.channels, x.length);
  dx.ensure_grad();
  for (size_t i = 0; i < x.v.size(); ++i)
    dx.g[i] = x.v[i] > S(0) ? dy.v[i] : S(0);
  return dx;
}

template <typename S>
Tensor<S> global_avg_pool(const Tensor<S>& x) {
  if (x.length < 1)
    throw std::invalid_argument("global_avg_pool: zero-length input");
  Tensor<S> y(x.batch, x.channels, 1);
  for (int b = 0; b < x.batch; ++b)
    for (int c = 0; c < x.channels; ++c) {
      S s = 0;
      for (int l = 0; l < x.length; ++l) s += x.at(b, c, l);
      y.at(b, c, 0) = s / static_cast<S>(x.length);
    }
  return y;
}

template <typename S>
Tensor<S> global_avg_pool_backward(const Tensor<S>& dy, int length) {
  Tensor<S> dx(dy.batch, dy.channels, length);
  dx.ensure_grad();
  const S inv = S(1) / static_cast<S>(length);
  for (int b = 0; b < dy.batch; ++b)
    for (int c = 0; c < dy.channels; ++c)
      for (int l = 0; l < length; ++l)
        dx.g[(static_cast<size_t>(b) * dy.channels + c) * length + l] =
            dy.at(b, c, 0) * inv;
  return dx;
}

template <typename S>
struct DenseParams {
  int cin = 0, cout = 0;
  std::vector<S> weights;  // [cout][cin]
  std::vector<S> bias;     // [cout]
};

// logits[b][o] = sum_i W[o][i] x[b][i][0] + b[o]
template <typename S>
Tensor<S> dense_forward(const Tensor<S>& x, const DenseParams<S>& p) {
  if (x.channels != p.cin || x.length != 1)
    throw std::invalid_argument("dense_forward: expected shape (n, " +
                                std::to_string(p.cin) + ", 1), got " +
                                x.shape_str());
  Tensor<S> y(x.batch, p.cout, 1);
  using Mat = typename Tensor<S>::Mat;
  Eigen::Map<const Mat> W(p.weights.data(), p.cout, p.cin);
  for (int b = 0; b < x.batch; ++b) y.mat(b).noalias() = W * x.mat(b);
  for (int b = 0; b < x.batch; ++b)
    for (int o = 0; o < p.cout; ++o) y.at(b, o, 0) += p.bias[o];
  return y;
}

template <typename S>
struct DenseGrads {
  std::vector<S> dweights, dbias;
};

template <typename S>
DenseGrads<S> dense_backward(const Tensor<S>& dy, const Tensor<S>& x,
                             const DenseParams<S>& p, Tensor<S>& x_grad) {
  x_grad = Tensor<S>(x.batch, x.channels, 1);
  x_grad.ensure_grad();
  DenseGrads<S> gr;
  gr.dweights.assign(p.weights.size(), S(0));
  gr.dbias.assign(p.bias.size(), S(0));
  for (int b = 0; b < x.batch; ++b)
    for (int o = 0; o < p.cout; ++o) {
      const S go = dy.at(b, o, 0);
      gr.dbias[o] += go;
      for (int i = 0; i < p.cin; ++i) {
        gr.dweights[static_cast<size_t>(o) * p.cin + i] += go * x.at(b, i, 0);
        x_grad.g[static_cast<size_t>(b) * p.cin + i] +=
            go * p.weights[static_cast<size_t>(o) * p.cin + i];
      }
    }
  return gr;
}

// Stable softmax over channels of an (n, K, 1) logit tensor.
template <typename S>
Tensor<S> softmax(const Tensor<S>& logits) {
  Tensor<S> p(logits.batch, logits.channels, 1);
  for (int b = 0; b < logits.batch; ++b) {
    S mx = logits.at(b, 0, 0);
    for (int c = 1; c < logits.channels; ++c) mx = std::max(mx, logits.at(b, c, 0));
    S z = 0;
    for (int c = 0; c < logits.channels; ++c) {
      const S e = std::exp(logits.at(b, c, 0) - mx);
      p.at(b, c, 0) = e;
      z += e;
    }
    for (int c = 0; c < logits.channels; ++c) p.at(b, c, 0) /= z;
  }
  return p;
}

// Mean negative log-likelihood with the softmax gradient folded in:
// dlogits = (p - onehot) / n.
template <typename S>
struct SoftmaxCEResult {
  S loss;
  Tensor<S> probabilities;
  Tensor<S> dlogits;
};

template <typename S>
SoftmaxCEResult<S> softmax_cross_entropy(const Tensor<S>& logits,
                                         const std::vector<int>& labels) {
  if (static_cast<int>(labels.size()) != logits.batch)
    throw std::invalid_argument("softmax_cross_entropy: label count mismatch");
  for (int y : labels)
    if (y < 0 || y >= logits.channels)
      throw std::invalid_argument("softmax_cross_entropy: label " +
                                  std::to_string(y) + " outside [0, " +
                                  std::to_string(logits.channels) + ")");
  SoftmaxCEResult<S> r;
  r.probabilities = softmax(logits);
  r.dlogits = Tensor<S>(logits.batch, logits.channels, 1);
  const S invn = S(1) / static_cast<S>(logits.batch);
  S loss = 0;
  for (int b = 0; b < logits.batch; ++b) {
    const S py = r.probabilities.at(b, labels[b], 0);
    loss -= std::log(std::max(py, std::numeric_limits<S>::min()));
    for (int c = 0; c < logits.channels; ++c)
      r.dlogits.at(b, c, 0) =
          (r.probabilities.at(b, c, 0) - (c == labels[b] ? S(1) : S(0))) * invn;
  }
  r.loss = loss * invn;
  return r;
}

// He-uniform fan-in initialization
template <typename S>
void he_uniform_init(std::vector<S>& w, int fan_in, std::mt19937& rng) {
  const double limit = std::sqrt(6.0 / std::max(1, fan_in));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& x : w) x = static_cast<S>(dist(rng));
}

}  // namespace anet
