#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace anet {

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One parameter group: weights and their gradient, same length.
template <typename S>
struct ParamView {
  std::span<S> w;
  std::span<const S> g;
};

template <typename S>
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

  // Applies one update over all groups. Rejects the whole step if any
  // gradient entry is non-finite.
  void step(const std::vector<ParamView<S>>& groups) {
    for (size_t gi = 0; gi < groups.size(); ++gi)
      for (S g : groups[gi].g)
        if (!std::isfinite(static_cast<double>(g)))
          throw std::runtime_error("optimizer: non-finite gradient in group " +
                                   std::to_string(gi) + ", step rejected");
    if (cfg_.kind == OptimizerKind::sgd) {
      for (const auto& pv : groups)
        for (size_t i = 0; i < pv.w.size(); ++i)
          pv.w[i] -= static_cast<S>(cfg_.lr) * pv.g[i];
      ++t_;
      return;
    }
    if (m_.empty()) {
      m_.resize(groups.size());
      v_.resize(groups.size());
      for (size_t gi = 0; gi < groups.size(); ++gi) {
        m_[gi].assign(groups[gi].w.size(), 0.0);
        v_[gi].assign(groups[gi].w.size(), 0.0);
      }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (size_t gi = 0; gi < groups.size(); ++gi) {
      const auto& pv = groups[gi];
      if (pv.w.size() != m_[gi].size())
        throw std::runtime_error("optimizer: parameter group size changed");
      for (size_t i = 0; i < pv.w.size(); ++i) {
        const double g = static_cast<double>(pv.g[i]);
        m_[gi][i] = cfg_.beta1 * m_[gi][i] + (1.0 - cfg_.beta1) * g;
        v_[gi][i] = cfg_.beta2 * v_[gi][i] + (1.0 - cfg_.beta2) * g * g;
        const double mhat = m_[gi][i] / bc1;
        const double vhat = v_[gi][i] / bc2;
        pv.w[i] -= static_cast<S>(cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.epsilon));
      }
    }
  }

  long steps_taken() const { return t_; }

 private:
  OptimizerConfig cfg_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;  // Adam moments, double for stability
};

}  // namespace anet
