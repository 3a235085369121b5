#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "anet/cost.hpp"
#include "anet/model_io.hpp"
#include "anet/network.hpp"
#include "support/oracles.hpp"

using namespace anet;
using namespace anet::testing;

namespace fs = std::filesystem;

namespace {

fs::path tmp_file(const char* name) {
  auto p = fs::temp_directory_path() / name;
  fs::remove(p);
  return p;
}

}  // namespace

TEST_CASE("v1 spec ends in a (10, 120) feature map") {
  auto s = build_spec(Variant::v1);
  CHECK(s.feature_channels == 10);
  CHECK(s.feature_length == 120);
  // 5 blocks x (conv, bn, dw, pw, bn) + classifier
  CHECK(s.layers.size() == 26);
  CHECK(s.layers.back().kind == LayerDesc::Kind::dense);
  CHECK(s.layers.back().cout == 5);
}

TEST_CASE("v2 spec ends in a narrow map with identity skips") {
  auto s = build_spec(Variant::v2);
  CHECK(s.feature_channels == 3);
  CHECK(s.feature_length == 180);
  CHECK(s.skip_count == 3);
  // stem conv+bn, 7 x (expand, bn, dw, bn, project, bn), classifier
  CHECK(s.layers.size() == 2 + 7 * 6 + 1);
}

TEST_CASE("build_spec rejects plans that miss the shape contract") {
  ModelConfig bad;
  bad.v1_channels = {32, 64, 96, 80, 12};  // final channels != 10
  CHECK_THROWS_WITH_AS(build_spec(Variant::v1, bad),
                       doctest::Contains("required (10, 120)"),
                       std::invalid_argument);
  ModelConfig wide;
  wide.v2_channels = {24, 24, 32, 32, 16, 16, 8};  // 8 > 4 channels
  CHECK_THROWS_WITH_AS(build_spec(Variant::v2, wide),
                       doctest::Contains("<=4 channels"), std::invalid_argument);
  ModelConfig noskip;
  noskip.v2_channels = {24, 25, 26, 27, 28, 29, 3};
  CHECK_THROWS_WITH_AS(build_spec(Variant::v2, noskip),
                       doctest::Contains("no identity skip"),
                       std::invalid_argument);
  ModelConfig shortplan;
  shortplan.v1_channels = {32, 64};
  CHECK_THROWS_AS(build_spec(Variant::v1, shortplan), std::invalid_argument);
}

TEST_CASE("separable/standard parameter ratio is 1/Cout + 1/k exactly") {
  for (int k : {3, 5, 7})
    for (int cin : {1, 4, 16, 64})
      for (int cout : {2, 10, 32, 128}) {
        const double dw = static_cast<double>(k) * cin;
        const double pw = static_cast<double>(cin) * cout;
        const double std_p = static_cast<double>(k) * cin * cout;
        CHECK((dw + pw) / std_p ==
              doctest::Approx(1.0 / cout + 1.0 / k).epsilon(1e-12));
      }
}

TEST_CASE("layer parameter counting examples") {
  ModelSpec s;
  detail::push_conv(s, "c", ConvMode::standard, 3, 16, 32, 1, 1);
  detail::push_conv(s, "d", ConvMode::depthwise, 3, 16, 16, 1, 1);
  detail::push_conv(s, "p", ConvMode::pointwise, 1, 16, 32, 1, 0);
  detail::push_bn(s, "b", 32);
  detail::push_dense(s, "fc", 10, 5);
  auto r = count_params(s);
  CHECK(r.layers[0].weight_params == 1536);  // 3*16*32
  CHECK(r.layers[0].bias_params == 32);
  CHECK(r.layers[1].weight_params == 48);    // 3*16
  CHECK(r.layers[2].weight_params == 512);   // 16*32
  CHECK(r.layers[3].bn_learnable == 64);
  CHECK(r.layers[3].bn_running == 64);
  CHECK(r.layers[4].weight_params == 50);
  CHECK(r.layers[4].bias_params == 5);
}

TEST_CASE("layer MAC counting examples with length propagation") {
  ModelSpec s;
  detail::push_conv(s, "c", ConvMode::standard, 3, 1, 16, 1, 1);   // L stays 360
  detail::push_conv(s, "d", ConvMode::depthwise, 3, 16, 16, 2, 1); // L -> 180
  detail::push_conv(s, "p", ConvMode::pointwise, 1, 16, 32, 1, 0);
  detail::push_dense(s, "fc", 32, 5);
  auto r = count_macs(s, 360);
  CHECK(r.layers[0].macs == 360LL * 16 * 3 * 1);
  CHECK(r.layers[0].out_length == 360);
  CHECK(r.layers[1].macs == 180LL * 16 * 3);
  CHECK(r.layers[1].out_length == 180);
  CHECK(r.layers[2].macs == 180LL * 16 * 32);
  CHECK(r.layers[3].macs == 32LL * 5);
  CHECK(r.total_macs == r.layers[0].macs + r.layers[1].macs +
                            r.layers[2].macs + r.layers[3].macs);
}

TEST_CASE("depthwise MACs at full length: 360*16*3 = 17280") {
  ModelSpec s;
  detail::push_conv(s, "d", ConvMode::depthwise, 3, 16, 16, 1, 1);
  CHECK(count_macs(s, 360).total_macs == 17280);
}

TEST_CASE("MAC formulas agree with an instrumented nested-loop convolution") {
  std::mt19937 rng(21);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (auto mode : {ConvMode::standard, ConvMode::depthwise, ConvMode::pointwise}) {
    for (int stride : {1, 2, 3}) {
      if (mode == ConvMode::pointwise && stride != 1) continue;
      ConvParams<double> p;
      p.mode = mode;
      p.k = mode == ConvMode::pointwise ? 1 : 3;
      p.cin = 6;
      p.cout = mode == ConvMode::depthwise ? 6 : 9;
      p.stride = stride;
      p.padding = mode == ConvMode::pointwise ? 0 : 1;
      p.weights.assign(p.weight_count(), 0.0);
      p.bias.assign(p.out_channels(), 0.0);
      for (auto& w : p.weights) w = nd(rng);
      Tensor<double> x(1, 6, 47);
      for (auto& v : x.v) v = nd(rng);
      std::int64_t counted = 0;
      conv1d_reference(x, p, &counted);

      ModelSpec s;
      LayerDesc d;
      d.kind = LayerDesc::Kind::conv;
      d.mode = mode;
      d.k = p.k;
      d.cin = p.cin;
      d.cout = p.cout;
      d.stride = stride;
      d.padding = p.padding;
      s.layers.push_back(d);
      CHECK(count_macs(s, 47).total_macs == counted);
    }
  }
}

TEST_CASE("stored parameter totals and serialized sizes stay in budget") {
  auto rv1 = count_params(build_spec(Variant::v1));
  auto rv2 = count_params(build_spec(Variant::v2));
  CHECK(rv1.stored_params() == 74951);
  CHECK(rv2.stored_params() == 39347);
  CHECK(rv1.weight_kb() > 272.0);
  CHECK(rv1.weight_kb() < 332.0);
  CHECK(rv2.weight_kb() > 142.0);
  CHECK(rv2.weight_kb() < 174.0);
  CHECK(rv2.stored_params() < rv1.stored_params());
  CHECK(count_macs(build_spec(Variant::v2)).total_macs <
        count_macs(build_spec(Variant::v1)).total_macs);
}

TEST_CASE("serialized files land in the size budgets and v2 < v1") {
  auto p1 = tmp_file("anet_v1_size.bin");
  auto p2 = tmp_file("anet_v2_size.bin");
  auto n1 = build_network<float>(Variant::v1);
  auto n2 = build_network<float>(Variant::v2);
  serialize_model(n1, p1);
  serialize_model(n2, p2);
  const double kb1 = static_cast<double>(fs::file_size(p1)) / 1024.0;
  const double kb2 = static_cast<double>(fs::file_size(p2)) / 1024.0;
  CHECK(kb1 > 272.0);
  CHECK(kb1 < 332.0);
  CHECK(kb2 > 142.0);
  CHECK(kb2 < 174.0);
  CHECK(kb2 < kb1);
  fs::remove(p1);
  fs::remove(p2);
}

TEST_CASE("serialization round-trips bit-exactly, including running stats") {
  auto net = build_network<float>(Variant::v2);
  // run a training-mode pass so running stats move off their defaults
  std::mt19937 rng(31);
  auto x = random_tensor<float>(4, 1, 360, rng);
  net.forward(x, true);

  auto path = tmp_file("anet_roundtrip.bin");
  serialize_model(net, path);
  auto back = deserialize_model(path);
  auto a = net.state_entries();
  auto b = back.state_entries();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first == b[i].first);
    REQUIRE(a[i].second->size() == b[i].second->size());
    for (size_t j = 0; j < a[i].second->size(); ++j)
      CHECK((*a[i].second)[j] == (*b[i].second)[j]);
  }
  // serialize the loaded model again: files must be byte-identical
  auto path2 = tmp_file("anet_roundtrip2.bin");
  serialize_model(back, path2);
  std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
  std::string s1((std::istreambuf_iterator<char>(f1)), {});
  std::string s2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(s1 == s2);
  fs::remove(path);
  fs::remove(path2);
}

TEST_CASE("deserialization failure modes are distinguishable") {
  auto net = build_network<float>(Variant::v2);
  auto path = tmp_file("anet_corrupt.bin");
  serialize_model(net, path);
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  in.close();

  auto write = [&](const std::string& s) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(s.data(), static_cast<std::streamsize>(s.size()));
  };

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  write(bad_magic);
  CHECK_THROWS_WITH_AS(deserialize_model(path), doctest::Contains("bad magic"),
                       std::runtime_error);

  std::string bad_version = bytes;
  bad_version[5] = 9;
  write(bad_version);
  CHECK_THROWS_WITH_AS(deserialize_model(path),
                       doctest::Contains("unsupported version"),
                       std::runtime_error);

  write(bytes.substr(0, bytes.size() - 64));
  CHECK_THROWS_WITH_AS(deserialize_model(path),
                       doctest::Contains("truncated weight blob"),
                       std::runtime_error);

  write(bytes.substr(0, 8));
  CHECK_THROWS_AS(deserialize_model(path), std::runtime_error);
  fs::remove(path);
  CHECK_THROWS_WITH_AS(deserialize_model(path), doctest::Contains("cannot open"),
                       std::runtime_error);
}

TEST_CASE("predict returns per-beat probability rows summing to one") {
  for (auto variant : {Variant::v1, Variant::v2}) {
    auto net = build_network<float>(variant);
    std::mt19937 rng(41);
    auto x = random_tensor<float>(3, 1, 360, rng);
    auto p = net.predict(x);
    CHECK(p.batch == 3);
    CHECK(p.channels == 5);
    for (int b = 0; b < 3; ++b) {
      double s = 0;
      for (int c = 0; c < 5; ++c) {
        CHECK(p.at(b, c, 0) >= 0.0f);
        s += p.at(b, c, 0);
      }
      CHECK(std::abs(s - 1.0) < 1e-5);
    }
  }
}

TEST_CASE("same seed gives identical builds and identical predictions") {
  auto a = build_network<float>(Variant::v1);
  auto b = build_network<float>(Variant::v1);
  std::mt19937 rng(51);
  auto x = random_tensor<float>(2, 1, 360, rng);
  auto pa = a.predict(x);
  auto pb = b.predict(x);
  for (size_t i = 0; i < pa.v.size(); ++i) CHECK(pa.v[i] == pb.v[i]);
  auto pa2 = a.predict(x);  // repeat call, inference must be side-effect free
  for (size_t i = 0; i < pa.v.size(); ++i) CHECK(pa.v[i] == pa2.v[i]);
}

TEST_CASE("a zeroed residual branch makes the bottleneck an identity") {
  auto net = build_network<float>(Variant::v2);
  auto& blk = net.v2_blocks[1];  // 24 -> 24, stride 1
  REQUIRE(blk.skip);
  std::fill(blk.project.p.weights.begin(), blk.project.p.weights.end(), 0.0f);
  std::fill(blk.project.p.bias.begin(), blk.project.p.bias.end(), 0.0f);
  std::fill(blk.bn3.p.gamma.begin(), blk.bn3.p.gamma.end(), 0.0f);
  std::fill(blk.bn3.p.beta.begin(), blk.bn3.p.beta.end(), 0.0f);
  std::mt19937 rng(61);
  auto x = random_tensor<float>(2, 24, 360, rng);
  auto y = blk.forward(x, false);
  REQUIRE(y.v.size() == x.v.size());
  for (size_t i = 0; i < x.v.size(); ++i)
    CHECK(y.v[i] == doctest::Approx(x.v[i]).epsilon(1e-6));
}

TEST_CASE("gradients reach the earliest layers of both variants") {
  for (auto variant : {Variant::v1, Variant::v2}) {
    auto net = build_network<float>(variant);
    std::mt19937 rng(71);
    auto x = random_tensor<float>(4, 1, 360, rng);
    auto logits = net.forward(x, true);
    auto ce = softmax_cross_entropy(logits, {0, 1, 2, 3});
    net.zero_grads();
    net.backward(ce.dlogits);
    double first_norm = 0;
    const auto& dw = variant == Variant::v1 ? net.v1_blocks[0].conv.dw : net.stem.dw;
    for (float g : dw) first_norm += static_cast<double>(g) * g;
    CHECK(first_norm > 0.0);
    for (float g : dw) CHECK(std::isfinite(g));
  }
}

TEST_CASE("feature_grad_for_class is the classifier row over the map length") {
  auto net = build_network<float>(Variant::v1);
  std::mt19937 rng(81);
  auto x = random_tensor<float>(1, 1, 360, rng);
  net.forward(x, false);
  const int c = 3;
  auto g = net.feature_grad_for_class(c);
  CHECK(g.channels == 10);
  CHECK(g.length == 120);
  for (int j = 0; j < 10; ++j)
    for (int l = 0; l < 120; ++l)
      CHECK(g.at(0, j, l) ==
            doctest::Approx(net.dense.weights[c * 10 + j] / 120.0f));
  CHECK_THROWS_AS(net.feature_grad_for_class(5), std::invalid_argument);
}

TEST_CASE("v1 and v2 forward shapes are (n, 5, 1)") {
  for (auto variant : {Variant::v1, Variant::v2}) {
    auto net = build_network<float>(variant);
    Tensor<float> x(2, 1, 360);
    auto y = net.forward(x, false);
    CHECK(y.batch == 2);
    CHECK(y.channels == 5);
    CHECK(y.length == 1);
    Tensor<float> bad(1, 1, 300);
    CHECK_THROWS_AS(net.forward(bad, false), std::invalid_argument);
  }
}
