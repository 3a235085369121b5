#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "anet/network.hpp"

namespace anet {

// Model file layout: magic "ANET1", version byte, u32 little-endian JSON
// length, UTF-8 spec JSON, then the weight blob as little-endian 32-bit
// floats in declared layer order (running statistics included).

inline constexpr char kModelMagic[5] = {'A', 'N', 'E', 'T', '1'};
inline constexpr std::uint8_t kModelVersion = 1;

inline nlohmann::json model_config_json(const ModelSpec& spec) {
  const ModelConfig& c = spec.config;
  return nlohmann::json{{"variant", variant_name(spec.variant)},
                        {"input_length", c.input_length},
                        {"num_classes", c.num_classes},
                        {"v1_channels", c.v1_channels},
                        {"v1_strides", c.v1_strides},
                        {"v2_stem_channels", c.v2_stem_channels},
                        {"v2_channels", c.v2_channels},
                        {"v2_strides", c.v2_strides},
                        {"v2_expansion", c.v2_expansion}};
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t spec_hash(const ModelSpec& spec) {
  return fnv1a64(model_config_json(spec).dump());
}

inline void serialize_model(Network<float>& net, const std::filesystem::path& path) {
  nlohmann::json j = model_config_json(net.spec);
  char hex[19];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(spec_hash(net.spec)));
  j["spec_hash"] = std::string(hex);
  const std::string js = j.dump();

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("serialize: cannot open " + path.string());
  f.write(kModelMagic, 5);
  f.put(static_cast<char>(kModelVersion));
  const std::uint32_t len = static_cast<std::uint32_t>(js.size());
  std::uint8_t lenb[4] = {static_cast<std::uint8_t>(len & 0xFF),
                          static_cast<std::uint8_t>((len >> 8) & 0xFF),
                          static_cast<std::uint8_t>((len >> 16) & 0xFF),
                          static_cast<std::uint8_t>((len >> 24) & 0xFF)};
  f.write(reinterpret_cast<const char*>(lenb), 4);
  f.write(js.data(), static_cast<std::streamsize>(js.size()));
  static_assert(sizeof(float) == 4);
  for (auto& [name, vec] : net.state_entries())
    f.write(reinterpret_cast<const char*>(vec->data()),
            static_cast<std::streamsize>(vec->size() * 4));
  if (!f) throw std::runtime_error("serialize: write failed for " + path.string());
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.input_length = j.at("input_length").get<int>();
  c.num_classes = j.at("num_classes").get<int>();
  c.v1_channels = j.at("v1_channels").get<std::vector<int>>();
  c.v1_strides = j.at("v1_strides").get<std::vector<int>>();
  c.v2_stem_channels = j.at("v2_stem_channels").get<int>();
  c.v2_channels = j.at("v2_channels").get<std::vector<int>>();
  c.v2_strides = j.at("v2_strides").get<std::vector<int>>();
  c.v2_expansion = j.at("v2_expansion").get<int>();
  return c;
}

inline Network<float> deserialize_model(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("deserialize: cannot open " + path.string());
  char magic[5];
  f.read(magic, 5);
  if (f.gcount() != 5 || std::memcmp(magic, kModelMagic, 5) != 0)
    throw std::runtime_error("deserialize: bad magic bytes in " + path.string());
  const int version = f.get();
  if (version != kModelVersion)
    throw std::runtime_error("deserialize: unsupported version " +
                             std::to_string(version));
  std::uint8_t lenb[4];
  f.read(reinterpret_cast<char*>(lenb), 4);
  if (f.gcount() != 4) throw std::runtime_error("deserialize: truncated header");
  const std::uint32_t len = lenb[0] | (lenb[1] << 8) | (lenb[2] << 16) |
                            (static_cast<std::uint32_t>(lenb[3]) << 24);
  std::string js(len, '\0');
  f.read(js.data(), len);
  if (static_cast<std::uint32_t>(f.gcount()) != len)
    throw std::runtime_error("deserialize: truncated spec block");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("deserialize: bad spec JSON: ") + e.what());
  }
  const Variant variant = variant_from_name(j.at("variant").get<std::string>());
  Network<float> net = build_network<float>(variant, model_config_from_json(j));
  char hex[19];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(spec_hash(net.spec)));
  if (j.at("spec_hash").get<std::string>() != hex)
    throw std::runtime_error("deserialize: spec hash mismatch in " + path.string());
  for (auto& [name, vec] : net.state_entries()) {
    f.read(reinterpret_cast<char*>(vec->data()),
           static_cast<std::streamsize>(vec->size() * 4));
    if (static_cast<size_t>(f.gcount()) != vec->size() * 4)
      throw std::runtime_error("deserialize: truncated weight blob at " + name);
  }
  return net;
}

}  // namespace anet
