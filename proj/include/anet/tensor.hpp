#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace anet {

// Rank-3 array laid out as (batch, channels, length), row-major, with an
// optional same-shape gradient buffer. Scalar is float for training and
// double for the numeric test oracles.
template <typename S>
struct Tensor {
  int batch = 0;
  int channels = 0;
  int length = 0;
  std::vector<S> v;
  std::vector<S> g;

  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatMap = Eigen::Map<Mat>;
  using ConstMatMap = Eigen::Map<const Mat>;

  Tensor() = default;
  Tensor(int b, int c, int l) : batch(b), channels(c), length(l) {
    if (b < 0 || c < 0 || l < 0)
      throw std::invalid_argument("Tensor: negative dimension");
    v.assign(static_cast<size_t>(b) * c * l, S(0));
  }

  size_t size() const { return v.size(); }

  S& at(int b, int c, int l) {
    return v[(static_cast<size_t>(b) * channels + c) * length + l];
  }
  S at(int b, int c, int l) const {
    return v[(static_cast<size_t>(b) * channels + c) * length + l];
  }

  void ensure_grad() {
    if (g.size() != v.size()) g.assign(v.size(), S(0));
  }
  void zero_grad() { g.assign(v.size(), S(0)); }

  bool same_shape(const Tensor& o) const {
    return batch == o.batch && channels == o.channels && length == o.length;
  }

  // (channels x length) view of one batch item
  MatMap mat(int b) {
    return MatMap(v.data() + static_cast<size_t>(b) * channels * length,
                  channels, length);
  }
  ConstMatMap mat(int b) const {
    return ConstMatMap(v.data() + static_cast<size_t>(b) * channels * length,
                       channels, length);
  }
  MatMap grad_mat(int b) {
    return MatMap(g.data() + static_cast<size_t>(b) * channels * length,
                  channels, length);
  }
  ConstMatMap grad_mat(int b) const {
    return ConstMatMap(g.data() + static_cast<size_t>(b) * channels * length,
                       channels, length);
  }

  std::string shape_str() const {
    return "(" + std::to_string(batch) + ", " + std::to_string(channels) +
           ", " + std::to_string(length) + ")";
  }
};

template <typename S>
Tensor<S> make_tensor(int b, int c, int l, const std::vector<S>& values) {
  Tensor<S> t(b, c, l);
  if (values.size() != t.size())
    throw std::invalid_argument("make_tensor: value count " +
                                std::to_string(values.size()) +
                                " does not match shape " + t.shape_str());
  t.v = values;
  return t;
}

}  // namespace anet
