#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace anet {

struct SignalInfo {
  std::string file_name;
  int format = 212;
  double gain = 200.0;
  int baseline = 0;
  std::string description;
};

struct HeaderInfo {
  std::string record_name;
  int n_signals = 0;
  double sampling_rate = 360.0;
  long n_samples = 0;
  bool sampling_rate_defaulted = false;  // missing in header, WFDB default 250
  std::vector<SignalInfo> signals;
};

// WFDB text header. Only format 212 signal lines are accepted.
HeaderInfo parse_header(const std::string& text);

struct Annotation {
  long sample = 0;
  int code = 0;  // MIT annotation code
};

// MIT-BIH beat annotation codes for the five target classes.
inline constexpr int kAnnNormal = 1;  // N
inline constexpr int kAnnLBBB = 2;    // L
inline constexpr int kAnnRBBB = 3;    // R
inline constexpr int kAnnPVC = 5;     // V
inline constexpr int kAnnAPC = 8;     // A

// Format 212: two 12-bit two's-complement samples per 3 bytes,
// channel-interleaved.
std::vector<int> decode_212(const std::vector<std::uint8_t>& bytes,
                            long n_samples, int n_channels);
std::vector<std::uint8_t> encode_212(const std::vector<int>& samples);

// MIT annotation (.atr) format: 2-byte words, code in the high 6 bits,
// interval in the low 10, with SKIP/NUM/SUB/CHN/AUX pseudo-codes handled.
std::vector<Annotation> parse_annotations(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_annotations(const std::vector<Annotation>& anns);

struct Record {
  HeaderInfo header;
  std::vector<std::vector<int>> samples;  // per channel
  std::vector<Annotation> annotations;
};

// Reads <record>.hea, .dat and .atr from a directory.
Record read_record(const std::filesystem::path& dir, const std::string& name);

}  // namespace anet
