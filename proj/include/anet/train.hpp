#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <thread>

#include "anet/dataset.hpp"
#include "anet/metrics.hpp"
#include "anet/model_io.hpp"
#include "anet/network.hpp"
#include "anet/optim.hpp"

namespace anet {

struct TrainConfig {
  int epochs = 30;
  int batches_per_epoch = 500;
  int batch_size = 48;
  OptimizerConfig optimizer;
  std::uint64_t seed = 1234;
  bool log_progress = false;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0;
  double accuracy = 0;
  double seconds = 0;
};

using TrainHistory = std::vector<EpochStats>;

inline Tensor<float> beats_to_tensor(const BeatDataset& ds,
                                     const std::vector<size_t>& idx) {
  Tensor<float> t(static_cast<int>(idx.size()), 1, kBeatLength);
  for (size_t i = 0; i < idx.size(); ++i)
    std::copy(ds.beats[idx[i]].begin(), ds.beats[idx[i]].end(),
              t.v.begin() + static_cast<long>(i) * kBeatLength);
  return t;
}

// Mini-batch training: each epoch draws batches_per_epoch seeded-shuffled
// batches, reshuffling whenever the index pool is exhausted. Deterministic
// for a fixed seed in single-threaded execution.
inline TrainHistory train(Network<float>& net, const BeatDataset& train_set,
                          const TrainConfig& cfg) {
  if (train_set.size() == 0)
    throw std::invalid_argument("train: empty training set");
  std::mt19937_64 rng(cfg.seed);
  Optimizer<float> opt(cfg.optimizer);
  std::vector<size_t> pool(train_set.size());
  std::iota(pool.begin(), pool.end(), 0);
  std::shuffle(pool.begin(), pool.end(), rng);
  size_t cursor = 0;
  TrainHistory history;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    double loss_sum = 0;
    long correct = 0, seen = 0;
    for (int batch = 0; batch < cfg.batches_per_epoch; ++batch) {
      std::vector<size_t> idx;
      idx.reserve(cfg.batch_size);
      for (int i = 0; i < cfg.batch_size; ++i) {
        if (cursor >= pool.size()) {
          std::shuffle(pool.begin(), pool.end(), rng);
          cursor = 0;
        }
        idx.push_back(pool[cursor++]);
      }
      Tensor<float> x = beats_to_tensor(train_set, idx);
      std::vector<int> labels(idx.size());
      for (size_t i = 0; i < idx.size(); ++i)
        labels[i] = static_cast<int>(train_set.labels[idx[i]]);
      net.zero_grads();
      Tensor<float> logits = net.forward(x, true);
      auto ce = softmax_cross_entropy(logits, labels);
      if (!std::isfinite(static_cast<double>(ce.loss)))
        throw std::runtime_error("train: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(batch));
      net.backward(ce.dlogits);
      auto views = net.param_views();
      opt.step(views);
      loss_sum += ce.loss;
      for (size_t i = 0; i < idx.size(); ++i) {
        int arg = 0;
        for (int c = 1; c < logits.channels; ++c)
          if (ce.probabilities.at(static_cast<int>(i), c, 0) >
              ce.probabilities.at(static_cast<int>(i), arg, 0))
            arg = c;
        if (arg == labels[i]) ++correct;
        ++seen;
      }
    }
    EpochStats st;
    st.epoch = epoch + 1;
    st.loss = loss_sum / cfg.batches_per_epoch;
    st.accuracy = static_cast<double>(correct) / seen;
    st.seconds = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - t0).count();
    if (cfg.log_progress)
      std::fprintf(stderr, "epoch %d/%d  loss %.4f  acc %.4f  %.1fs\n", st.epoch,
                   cfg.epochs, st.loss, st.accuracy, st.seconds);
    history.push_back(st);
  }
  return history;
}

// Inference over the whole set; parallel over beat chunks when threads > 1.
inline std::vector<BeatClass> predict_classes(Network<float>& net,
                                              const BeatDataset& ds,
                                              int threads = 1,
                                              int chunk = 256) {
  std::vector<BeatClass> out(ds.size());
  auto run_chunk = [&](Network<float>& model, size_t begin, size_t end) {
    for (size_t s = begin; s < end; s += chunk) {
      const size_t e = std::min(end, s + chunk);
      std::vector<size_t> idx(e - s);
      std::iota(idx.begin(), idx.end(), s);
      Tensor<float> x = beats_to_tensor(ds, idx);
      Tensor<float> p = model.predict(x);
      for (size_t i = 0; i < idx.size(); ++i) {
        int arg = 0;
        for (int c = 1; c < p.channels; ++c)
          if (p.at(static_cast<int>(i), c, 0) > p.at(static_cast<int>(i), arg, 0))
            arg = c;
        out[idx[i]] = static_cast<BeatClass>(arg);
      }
    }
  };
  if (threads <= 1 || ds.size() < static_cast<size_t>(2 * chunk)) {
    run_chunk(net, 0, ds.size());
    return out;
  }
  std::vector<std::thread> workers;
  std::vector<Network<float>> copies(threads, net);  // inference-only copies
  const size_t per = (ds.size() + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const size_t b = t * per, e = std::min(ds.size(), b + per);
    if (b >= e) break;
    workers.emplace_back([&, t, b, e] { run_chunk(copies[t], b, e); });
  }
  for (auto& w : workers) w.join();
  return out;
}

inline EvalReport evaluate(Network<float>& net, const BeatDataset& test_set,
                           int threads = 1) {
  if (test_set.size() == 0) throw std::invalid_argument("evaluate: empty test set");
  auto pred = predict_classes(net, test_set, threads);
  return evaluate_predictions(test_set.labels, pred);
}

inline std::string history_to_csv(const TrainHistory& h) {
  std::string s = "epoch,loss,accuracy,seconds\n";
  char buf[96];
  for (const auto& e : h) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.3f\n", e.epoch, e.loss,
                  e.accuracy, e.seconds);
    s += buf;
  }
  return s;
}

}  // namespace anet
