#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "anet/network.hpp"

namespace anet {

struct LayerCost {
  std::string name;
  std::string kind;            // standard | depthwise | pointwise | batchnorm | dense
  std::int64_t weight_params = 0;   // kernel weights only, bias excluded
  std::int64_t bias_params = 0;
  std::int64_t bn_learnable = 0;    // gamma + beta
  std::int64_t bn_running = 0;      // running mean + var
  std::int64_t macs = 0;
  int out_channels = 0;
  int out_length = 0;
};

struct CostReport {
  std::vector<LayerCost> layers;
  std::int64_t total_weight_params = 0;
  std::int64_t total_bias_params = 0;
  std::int64_t total_bn_learnable = 0;
  std::int64_t total_bn_running = 0;
  std::int64_t total_macs = 0;

  // everything stored in the model file
  std::int64_t stored_params() const {
    return total_weight_params + total_bias_params + total_bn_learnable +
           total_bn_running;
  }
  std::int64_t trainable_params() const {
    return total_weight_params + total_bias_params + total_bn_learnable;
  }
  double weight_kb(std::int64_t header_bytes = 0) const {
    return (static_cast<double>(stored_params()) * 4.0 + header_bytes) / 1024.0;
  }
};

// Parameter counts per layer: standard k*Cin*Cout, depthwise k*Cin,
// pointwise Cin*Cout; biases and BN arrays itemized separately.
inline CostReport count_params(const ModelSpec& spec) {
  CostReport r;
  for (const auto& d : spec.layers) {
    LayerCost lc;
    lc.name = d.name;
    if (d.kind == LayerDesc::Kind::conv) {
      lc.kind = conv_mode_name(d.mode);
      switch (d.mode) {
        case ConvMode::standard:
          lc.weight_params = static_cast<std::int64_t>(d.k) * d.cin * d.cout;
          lc.bias_params = d.cout;
          break;
        case ConvMode::depthwise:
          lc.weight_params = static_cast<std::int64_t>(d.k) * d.cin;
          lc.bias_params = d.cin;
          break;
        case ConvMode::pointwise:
          lc.weight_params = static_cast<std::int64_t>(d.cin) * d.cout;
          lc.bias_params = d.cout;
          break;
      }
    } else if (d.kind == LayerDesc::Kind::batchnorm) {
      lc.kind = "batchnorm";
      lc.bn_learnable = 2LL * d.channels;
      lc.bn_running = 2LL * d.channels;
    } else {
      lc.kind = "dense";
      lc.weight_params = static_cast<std::int64_t>(d.cin) * d.cout;
      lc.bias_params = d.cout;
    }
    r.total_weight_params += lc.weight_params;
    r.total_bias_params += lc.bias_params;
    r.total_bn_learnable += lc.bn_learnable;
    r.total_bn_running += lc.bn_running;
    r.layers.push_back(std::move(lc));
  }
  return r;
}

// MAC counts with the output length propagated layer to layer:
// standard L'*Cout*k*Cin, depthwise L'*Cin*k, pointwise L'*Cin*Cout.
// The dense head counts as Cin*Cout. BN and activations count zero.
inline CostReport count_macs(const ModelSpec& spec, int input_length = 360) {
  CostReport r = count_params(spec);
  int L = input_length;
  size_t i = 0;
  for (const auto& d : spec.layers) {
    LayerCost& lc = r.layers[i++];
    if (d.kind == LayerDesc::Kind::conv) {
      const int Lout = conv_out_length(L, d.k, d.stride, d.padding);
      switch (d.mode) {
        case ConvMode::standard:
          lc.macs = static_cast<std::int64_t>(Lout) * d.cout * d.k * d.cin;
          lc.out_channels = d.cout;
          break;
        case ConvMode::depthwise:
          lc.macs = static_cast<std::int64_t>(Lout) * d.cin * d.k;
          lc.out_channels = d.cin;
          break;
        case ConvMode::pointwise:
          lc.macs = static_cast<std::int64_t>(Lout) * d.cin * d.cout;
          lc.out_channels = d.cout;
          break;
      }
      L = Lout;
      lc.out_length = Lout;
    } else if (d.kind == LayerDesc::Kind::batchnorm) {
      lc.out_channels = d.channels;
      lc.out_length = L;
    } else {
      lc.macs = static_cast<std::int64_t>(d.cin) * d.cout;
      lc.out_channels = d.cout;
      lc.out_length = 1;
    }
    r.total_macs += lc.macs;
  }
  return r;
}

}  // namespace anet
