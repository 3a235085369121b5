#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "anet/wfdb.hpp"

namespace anet {

inline constexpr int kBeatLength = 360;
inline constexpr int kNumClasses = 5;

enum class BeatClass : std::uint8_t { NSR = 0, LBBB, RBBB, APC, PVC };

inline const char* beat_class_name(BeatClass c) {
  static const char* names[] = {"NSR", "LBBB", "RBBB", "APC", "PVC"};
  return names[static_cast<int>(c)];
}

// MIT annotation code -> target class; codes outside the map are skipped.
const std::map<int, BeatClass>& default_class_map();

struct Provenance {
  std::string record_id;
  long annotation_index = 0;  // sample index of the annotation
};

struct BeatDataset {
  std::vector<std::array<float, kBeatLength>> beats;
  std::vector<BeatClass> labels;
  std::vector<Provenance> provenance;
  long boundary_skips = 0;

  size_t size() const { return beats.size(); }
  std::array<long, kNumClasses> class_counts() const;
  void append(const BeatDataset& other);
};

struct SegmentOptions {
  int channel = 0;  // MLII
  bool denoise = true;
  bool normalize = true;
  int wavelet_levels = 4;
};

// Extracts [t-179, t+180] around each mapped annotation of one record,
// physical units, optional denoise + z-score per beat. Beats whose window
// crosses a record boundary are skipped and counted.
BeatDataset segment_beats(const Record& record,
                          const std::map<int, BeatClass>& class_map,
                          const SegmentOptions& opts = {});

enum class SplitMode { paper_faithful, leakage_safe };

inline const char* split_mode_name(SplitMode m) {
  return m == SplitMode::paper_faithful ? "paper-faithful" : "leakage-safe";
}

struct SplitResult {
  BeatDataset train, test;
  std::array<long, kNumClasses> train_counts{}, test_counts{};
};

// Equalizes per-class counts (undersample above target, duplicate-oversample
// below) and splits 80/20 stratified. paper-faithful balances before the
// split; leakage-safe splits the original beats first and balances only the
// training fold, so no duplicated beat can cross the split.
SplitResult balance_and_split(const BeatDataset& ds, SplitMode mode,
                              std::uint64_t seed, long target_per_class = 6000,
                              double train_fraction = 0.8);

// Packed beats file: magic "BEAT1", u32 count, u32 beat length, float32
// little-endian beats, then one label byte per beat.
void write_beats_file(const std::filesystem::path& path, const BeatDataset& ds);
BeatDataset read_beats_file(const std::filesystem::path& path);

}  // namespace anet
