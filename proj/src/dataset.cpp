#include "anet/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "anet/wavelet.hpp"

namespace anet {

const std::map<int, BeatClass>& default_class_map() {
  static const std::map<int, BeatClass> m = {
      {kAnnNormal, BeatClass::NSR}, {kAnnLBBB, BeatClass::LBBB},
      {kAnnRBBB, BeatClass::RBBB},  {kAnnAPC, BeatClass::APC},
      {kAnnPVC, BeatClass::PVC}};
  return m;
}

std::array<long, kNumClasses> BeatDataset::class_counts() const {
  std::array<long, kNumClasses> c{};
  for (BeatClass l : labels) ++c[static_cast<int>(l)];
  return c;
}

void BeatDataset::append(const BeatDataset& other) {
  beats.insert(beats.end(), other.beats.begin(), other.beats.end());
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
  provenance.insert(provenance.end(), other.provenance.begin(),
                    other.provenance.end());
  boundary_skips += other.boundary_skips;
}

BeatDataset segment_beats(const Record& record,
                          const std::map<int, BeatClass>& class_map,
                          const SegmentOptions& opts) {
  BeatDataset ds;
  if (opts.channel < 0 || opts.channel >= record.header.n_signals)
    throw std::invalid_argument("segment_beats: channel " +
                                std::to_string(opts.channel) + " not in record");
  const auto& sig = record.samples[opts.channel];
  const auto& si = record.header.signals[opts.channel];
  const long n = static_cast<long>(sig.size());
  // physical units, denoised record-wide before segmentation
  std::vector<double> phys(n);
  for (long i = 0; i < n; ++i) phys[i] = (sig[i] - si.baseline) / si.gain;
  if (opts.denoise) phys = denoise(phys, opts.wavelet_levels);
  for (const auto& ann : record.annotations) {
    auto it = class_map.find(ann.code);
    if (it == class_map.end()) continue;
    const long start = ann.sample - 179;
    const long end = ann.sample + 180;  // inclusive
    if (start < 0 || end >= n) {
      ++ds.boundary_skips;
      continue;
    }
    std::vector<double> beat(phys.begin() + start,
                             phys.begin() + start + kBeatLength);
    if (opts.normalize) beat = normalize(beat);
    std::array<float, kBeatLength> out;
    for (int i = 0; i < kBeatLength; ++i) out[i] = static_cast<float>(beat[i]);
    ds.beats.push_back(out);
    ds.labels.push_back(it->second);
    ds.provenance.push_back({record.header.record_name, ann.sample});
  }
  return ds;
}

namespace {

// Resamples index list to exactly `target` entries: a seeded shuffle-truncate
// when above, duplication by seeded draws when below.
std::vector<size_t> balance_indices(std::vector<size_t> idx, long target,
                                    std::mt19937_64& rng) {
  std::shuffle(idx.begin(), idx.end(), rng);
  if (static_cast<long>(idx.size()) >= target) {
    idx.resize(target);
    return idx;
  }
  std::vector<size_t> out = idx;
  std::uniform_int_distribution<size_t> pick(0, idx.size() - 1);
  while (static_cast<long>(out.size()) < target) out.push_back(idx[pick(rng)]);
  return out;
}

BeatDataset subset(const BeatDataset& ds, const std::vector<size_t>& idx) {
  BeatDataset out;
  out.beats.reserve(idx.size());
  for (size_t i : idx) {
    out.beats.push_back(ds.beats[i]);
    out.labels.push_back(ds.labels[i]);
    out.provenance.push_back(ds.provenance[i]);
  }
  return out;
}

std::array<std::vector<size_t>, kNumClasses> per_class_indices(const BeatDataset& ds) {
  std::array<std::vector<size_t>, kNumClasses> by_class;
  for (size_t i = 0; i < ds.size(); ++i)
    by_class[static_cast<int>(ds.labels[i])].push_back(i);
  return by_class;
}

}  // namespace

SplitResult balance_and_split(const BeatDataset& ds, SplitMode mode,
                              std::uint64_t seed, long target_per_class,
                              double train_fraction) {
  auto by_class = per_class_indices(ds);
  for (int c = 0; c < kNumClasses; ++c)
    if (by_class[c].empty())
      throw std::invalid_argument(std::string("balance_and_split: class ") +
                                  beat_class_name(static_cast<BeatClass>(c)) +
                                  " has zero beats");
  std::mt19937_64 rng(seed);
  SplitResult res;
  if (mode == SplitMode::paper_faithful) {
    // balance the whole pool, then split 80/20 stratified
    for (int c = 0; c < kNumClasses; ++c) {
      auto idx = balance_indices(by_class[c], target_per_class, rng);
      std::shuffle(idx.begin(), idx.end(), rng);
      const long n_train = static_cast<long>(idx.size() * train_fraction + 0.5);
      res.train.append(subset(ds, {idx.begin(), idx.begin() + n_train}));
      res.test.append(subset(ds, {idx.begin() + n_train, idx.end()}));
    }
  } else {
    // split originals first, then balance only the training fold
    for (int c = 0; c < kNumClasses; ++c) {
      auto idx = by_class[c];
      std::shuffle(idx.begin(), idx.end(), rng);
      const long n_train = static_cast<long>(idx.size() * train_fraction + 0.5);
      std::vector<size_t> train_idx(idx.begin(), idx.begin() + n_train);
      std::vector<size_t> test_idx(idx.begin() + n_train, idx.end());
      const long train_target =
          static_cast<long>(target_per_class * train_fraction + 0.5);
      train_idx = balance_indices(std::move(train_idx), train_target, rng);
      res.train.append(subset(ds, train_idx));
      res.test.append(subset(ds, test_idx));
    }
  }
  res.train_counts = res.train.class_counts();
  res.test_counts = res.test.class_counts();
  res.train.boundary_skips = res.test.boundary_skips = ds.boundary_skips;
  return res;
}

void write_beats_file(const std::filesystem::path& path, const BeatDataset& ds) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  f.write("BEAT1", 5);
  const std::uint32_t n = static_cast<std::uint32_t>(ds.size());
  const std::uint32_t len = kBeatLength;
  f.write(reinterpret_cast<const char*>(&n), 4);
  f.write(reinterpret_cast<const char*>(&len), 4);
  for (const auto& b : ds.beats)
    f.write(reinterpret_cast<const char*>(b.data()), kBeatLength * 4);
  for (BeatClass l : ds.labels) f.put(static_cast<char>(l));
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

BeatDataset read_beats_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  char magic[5];
  f.read(magic, 5);
  if (f.gcount() != 5 || std::string(magic, 5) != "BEAT1")
    throw std::runtime_error("bad magic in beats file " + path.string());
  std::uint32_t n = 0, len = 0;
  f.read(reinterpret_cast<char*>(&n), 4);
  f.read(reinterpret_cast<char*>(&len), 4);
  if (len != kBeatLength)
    throw std::runtime_error("beats file " + path.string() + " has beat length " +
                             std::to_string(len) + ", expected 360");
  BeatDataset ds;
  ds.beats.resize(n);
  for (auto& b : ds.beats) {
    f.read(reinterpret_cast<char*>(b.data()), kBeatLength * 4);
    if (f.gcount() != kBeatLength * 4)
      throw std::runtime_error("truncated beats file " + path.string());
  }
  ds.labels.resize(n);
  for (auto& l : ds.labels) {
    const int c = f.get();
    if (c < 0 || c >= kNumClasses)
      throw std::runtime_error("bad label byte in " + path.string());
    l = static_cast<BeatClass>(c);
  }
  ds.provenance.assign(n, {});
  return ds;
}

}  // namespace anet
