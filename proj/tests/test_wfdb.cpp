#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>

#include "anet/dataset.hpp"
#include "anet/wfdb.hpp"

using namespace anet;
namespace fs = std::filesystem;

TEST_CASE("header parsing: canonical two-signal record line") {
  const std::string text =
      "100 2 360 650000\n"
      "100.dat 212 200 11 1024 995 -22131 0 MLII\n"
      "100.dat 212 200 11 1024 1011 20052 0 V5\n"
      "# comment line\n";
  auto h = parse_header(text);
  CHECK(h.record_name == "100");
  CHECK(h.n_signals == 2);
  CHECK(h.sampling_rate == 360.0);
  CHECK(h.n_samples == 650000);
  CHECK_FALSE(h.sampling_rate_defaulted);
  REQUIRE(h.signals.size() == 2);
  CHECK(h.signals[0].file_name == "100.dat");
  CHECK(h.signals[0].format == 212);
  CHECK(h.signals[0].gain == 200.0);
  CHECK(h.signals[0].baseline == 1024);  // ADC zero field
  CHECK(h.signals[0].description == "MLII");
  CHECK(h.signals[1].description == "V5");
}

TEST_CASE("header parsing: parenthesized baseline and unit suffix") {
  auto h = parse_header("rec 1 360 1000\nrec.dat 212 200(512)/mV 12 0 900 0 0 V5\n");
  CHECK(h.signals[0].gain == 200.0);
  CHECK(h.signals[0].baseline == 512);
}

TEST_CASE("header parsing: missing sampling rate falls back to the WFDB default") {
  auto h = parse_header("rec 1\nrec.dat 212\n");
  CHECK(h.sampling_rate == 250.0);
  CHECK(h.sampling_rate_defaulted);
  CHECK(h.signals[0].gain == 200.0);  // unspecified gain convention
}

TEST_CASE("header parsing failures carry line numbers") {
  CHECK_THROWS_WITH_AS(parse_header("onlyname\n"), doctest::Contains("line 1"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_header("rec nonnumeric\n"),
                       doctest::Contains("line 1"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_header("rec 1 360 100\nbadline\n"),
                       doctest::Contains("line 2"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_header("rec 1 360 100\nrec.dat 16 200\n"),
                       doctest::Contains("unsupported signal format 16"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(parse_header("rec 2 360 100\nrec.dat 212\n"),
                       doctest::Contains("expected 2 signal lines"),
                       std::runtime_error);
  CHECK_THROWS_AS(parse_header("# nothing here\n"), std::runtime_error);
}

TEST_CASE("format 212: worked example 564 / -230") {
  // 564 = 0x234, -230 -> 0xF1A in 12-bit two's complement
  const std::vector<std::uint8_t> bytes = {0x34, 0xF2, 0x1A};
  auto s = decode_212(bytes, 1, 2);  // one frame, two channels
  REQUIRE(s.size() == 2);
  CHECK(s[0] == 564);
  CHECK(s[1] == -230);
  CHECK(encode_212({564, -230}) == bytes);
}

TEST_CASE("format 212: sign extension boundaries") {
  auto enc = encode_212({2047, -2048, 0, -1});
  auto dec = decode_212(enc, 4, 1);
  CHECK(dec == std::vector<int>{2047, -2048, 0, -1});
}

TEST_CASE("format 212 round-trips 1000 random pairs per seed") {
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937 rng(seed);
    std::uniform_int_distribution<int> d(-2048, 2047);
    std::vector<int> samples(1000);
    for (auto& s : samples) s = d(rng);
    auto back = decode_212(encode_212(samples),
                           static_cast<long>(samples.size()), 1);
    CHECK(back == samples);
  }
}

TEST_CASE("format 212 handles an odd sample count") {
  std::vector<int> samples = {5, -7, 9};
  auto back = decode_212(encode_212(samples), 3, 1);
  CHECK(back == samples);
}

TEST_CASE("format 212 rejects a truncated stream") {
  auto enc = encode_212({1, 2, 3, 4});
  enc.pop_back();
  CHECK_THROWS_WITH_AS(decode_212(enc, 4, 1), doctest::Contains("truncated"),
                       std::runtime_error);
}

TEST_CASE("annotation round-trip with long gaps and mixed codes") {
  std::vector<Annotation> anns = {{10, kAnnNormal}, {500, kAnnPVC},
                                  {1500, kAnnLBBB},  // delta > 1023 forces SKIP
                                  {100000, kAnnRBBB}, {100360, kAnnAPC}};
  auto back = parse_annotations(encode_annotations(anns));
  REQUIRE(back.size() == anns.size());
  for (size_t i = 0; i < anns.size(); ++i) {
    CHECK(back[i].sample == anns[i].sample);
    CHECK(back[i].code == anns[i].code);
  }
}

TEST_CASE("annotation parser skips AUX / NUM / SUB / CHN words") {
  std::vector<std::uint8_t> bytes;
  auto word = [&bytes](int code, int interval) {
    bytes.push_back(static_cast<std::uint8_t>(interval & 0xFF));
    bytes.push_back(static_cast<std::uint8_t>(((interval >> 8) & 0x03) | (code << 2)));
  };
  word(kAnnNormal, 100);
  word(63, 3);  // AUX, 3 payload bytes padded to 4
  bytes.insert(bytes.end(), {'a', 'b', 'c', 0});
  word(60, 1);  // NUM
  word(61, 2);  // SUB
  word(62, 0);  // CHN
  word(kAnnPVC, 50);
  word(0, 0);  // EOF
  auto anns = parse_annotations(bytes);
  REQUIRE(anns.size() == 2);
  CHECK(anns[0].sample == 100);
  CHECK(anns[0].code == kAnnNormal);
  CHECK(anns[1].sample == 150);
  CHECK(anns[1].code == kAnnPVC);
}

TEST_CASE("annotation encoder rejects non-increasing times") {
  CHECK_THROWS_AS(encode_annotations({{100, 1}, {50, 1}}), std::invalid_argument);
}

TEST_CASE("read_record names the missing file") {
  auto dir = fs::temp_directory_path() / "anet_wfdb_missing";
  fs::create_directories(dir);
  CHECK_THROWS_WITH_AS(read_record(dir, "nope"),
                       doctest::Contains("missing header file"),
                       std::runtime_error);
  std::ofstream(dir / "part.hea") << "part 1 360 100\npart.dat 212 200\n";
  CHECK_THROWS_WITH_AS(read_record(dir, "part"),
                       doctest::Contains("missing signal file"),
                       std::runtime_error);
  fs::remove_all(dir);
}

namespace {

// Builds a two-channel record on disk via the codec and reads it back.
Record synthetic_disk_record(const fs::path& dir, long n_samples,
                             const std::vector<Annotation>& anns) {
  fs::create_directories(dir);
  std::ofstream(dir / "synt.hea")
      << "synt 2 360 " << n_samples << "\n"
      << "synt.dat 212 200 11 0 0 0 0 MLII\n"
      << "synt.dat 212 200 11 0 0 0 0 V5\n";
  std::vector<int> flat;
  std::mt19937 rng(9);
  std::uniform_int_distribution<int> d(-300, 300);
  for (long i = 0; i < n_samples; ++i) {
    flat.push_back(d(rng));       // MLII
    flat.push_back(d(rng) / 2);   // V5
  }
  auto bytes = encode_212(flat);
  std::ofstream(dir / "synt.dat", std::ios::binary)
      .write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  auto abytes = encode_annotations(anns);
  std::ofstream(dir / "synt.atr", std::ios::binary)
      .write(reinterpret_cast<const char*>(abytes.data()),
             static_cast<std::streamsize>(abytes.size()));
  return read_record(dir, "synt");
}

}  // namespace

TEST_CASE("a full record written through the codecs reads back intact") {
  auto dir = fs::temp_directory_path() / "anet_wfdb_synt";
  std::vector<Annotation> anns = {{100, kAnnNormal}, {500, kAnnPVC},
                                  {900, kAnnNormal}, {1900, kAnnAPC}};
  auto rec = synthetic_disk_record(dir, 2000, anns);
  CHECK(rec.header.record_name == "synt");
  CHECK(rec.header.sampling_rate == 360.0);
  REQUIRE(rec.samples.size() == 2);
  CHECK(rec.samples[0].size() == 2000);
  CHECK(rec.samples[1].size() == 2000);
  REQUIRE(rec.annotations.size() == 4);
  CHECK(rec.annotations[1].sample == 500);
  CHECK(rec.annotations[1].code == kAnnPVC);
  fs::remove_all(dir);
}

TEST_CASE("segmentation takes the [t-179, t+180] window in physical units") {
  Record rec;
  rec.header.record_name = "ramp";
  rec.header.n_signals = 1;
  rec.header.n_samples = 1200;
  SignalInfo si;
  si.gain = 100.0;
  si.baseline = 50;
  rec.header.signals.push_back(si);
  std::vector<int> sig(1200);
  for (int i = 0; i < 1200; ++i) sig[i] = i % 397;
  rec.samples.push_back(sig);
  rec.annotations = {{100, kAnnNormal},   // window starts at -79: skipped
                     {600, kAnnPVC},
                     {1100, kAnnNormal}}; // window ends at 1280: skipped
  SegmentOptions opts;
  opts.denoise = false;
  opts.normalize = false;
  auto ds = segment_beats(rec, default_class_map(), opts);
  REQUIRE(ds.size() == 1);
  CHECK(ds.boundary_skips == 2);
  CHECK(ds.labels[0] == BeatClass::PVC);
  CHECK(ds.provenance[0].record_id == "ramp");
  CHECK(ds.provenance[0].annotation_index == 600);
  for (int i = 0; i < kBeatLength; ++i) {
    const int src = 600 - 179 + i;
    CHECK(ds.beats[0][i] ==
          doctest::Approx((sig[src] - 50) / 100.0).epsilon(1e-6));
  }
  CHECK_THROWS_AS(segment_beats(rec, default_class_map(), {.channel = 1}),
                  std::invalid_argument);
}

TEST_CASE("unmapped annotation codes are ignored, not counted as skips") {
  Record rec;
  rec.header.record_name = "r";
  rec.header.n_signals = 1;
  rec.header.n_samples = 800;
  rec.header.signals.push_back({});
  rec.samples.push_back(std::vector<int>(800, 0));
  rec.annotations = {{400, 28}};  // rhythm-change code, not a beat
  SegmentOptions opts;
  opts.denoise = false;
  auto ds = segment_beats(rec, default_class_map(), opts);
  CHECK(ds.size() == 0);
  CHECK(ds.boundary_skips == 0);
}

namespace {

BeatDataset toy_dataset(const std::array<long, kNumClasses>& counts) {
  BeatDataset ds;
  long id = 0;
  for (int c = 0; c < kNumClasses; ++c)
    for (long i = 0; i < counts[c]; ++i) {
      std::array<float, kBeatLength> b{};
      b[0] = static_cast<float>(id);
      ds.beats.push_back(b);
      ds.labels.push_back(static_cast<BeatClass>(c));
      ds.provenance.push_back({"toy", id});
      ++id;
    }
  return ds;
}

}  // namespace

TEST_CASE("paper-faithful split balances every class to the target, 80/20") {
  auto ds = toy_dataset({50, 10, 30, 20, 40});
  auto sp = balance_and_split(ds, SplitMode::paper_faithful, 7, 20);
  for (int c = 0; c < kNumClasses; ++c) {
    CHECK(sp.train_counts[c] == 16);
    CHECK(sp.test_counts[c] == 4);
  }
}

TEST_CASE("leakage-safe split keeps train and test provenance disjoint") {
  auto ds = toy_dataset({50, 10, 30, 20, 40});
  auto sp = balance_and_split(ds, SplitMode::leakage_safe, 7, 20);
  std::set<long> train_ids, test_ids;
  for (const auto& p : sp.train.provenance) train_ids.insert(p.annotation_index);
  for (const auto& p : sp.test.provenance) test_ids.insert(p.annotation_index);
  for (long id : test_ids) CHECK(train_ids.count(id) == 0);
  for (int c = 0; c < kNumClasses; ++c) CHECK(sp.train_counts[c] == 16);
  // test fold keeps the natural 20% per class, no duplication
  CHECK(sp.test_counts[0] == 10);
  CHECK(sp.test_counts[1] == 2);
  CHECK(sp.test_counts[4] == 8);
}

TEST_CASE("splits are deterministic in the seed") {
  auto ds = toy_dataset({40, 25, 30, 20, 35});
  for (auto mode : {SplitMode::paper_faithful, SplitMode::leakage_safe}) {
    auto a = balance_and_split(ds, mode, 123, 24);
    auto b = balance_and_split(ds, mode, 123, 24);
    REQUIRE(a.train.size() == b.train.size());
    for (size_t i = 0; i < a.train.size(); ++i)
      CHECK(a.train.provenance[i].annotation_index ==
            b.train.provenance[i].annotation_index);
    auto c = balance_and_split(ds, mode, 124, 24);
    bool same = a.train.size() == c.train.size();
    if (same)
      for (size_t i = 0; i < a.train.size(); ++i)
        if (a.train.provenance[i].annotation_index !=
            c.train.provenance[i].annotation_index) {
          same = false;
          break;
        }
    CHECK_FALSE(same);
  }
}

TEST_CASE("split rejects a dataset with an empty class") {
  auto ds = toy_dataset({10, 10, 0, 10, 10});
  CHECK_THROWS_WITH_AS(balance_and_split(ds, SplitMode::paper_faithful, 1, 8),
                       doctest::Contains("class RBBB"), std::invalid_argument);
}

TEST_CASE("oversampling duplicates only within a class") {
  auto ds = toy_dataset({3, 30, 30, 30, 30});
  auto sp = balance_and_split(ds, SplitMode::paper_faithful, 5, 20);
  CHECK(sp.train_counts[0] == 16);
  for (const auto& p : sp.train.provenance)
    if (p.annotation_index < 3)
      CHECK(ds.labels[p.annotation_index] == BeatClass::NSR);
}

TEST_CASE("beats file round-trip preserves beats and labels") {
  auto ds = toy_dataset({4, 3, 2, 5, 1});
  std::mt19937 rng(33);
  std::normal_distribution<float> d(0.0f, 1.0f);
  for (auto& b : ds.beats)
    for (auto& v : b) v = d(rng);
  auto path = fs::temp_directory_path() / "anet_beats_rt.bin";
  write_beats_file(path, ds);
  auto back = read_beats_file(path);
  REQUIRE(back.size() == ds.size());
  for (size_t i = 0; i < ds.size(); ++i) {
    CHECK(back.labels[i] == ds.labels[i]);
    for (int t = 0; t < kBeatLength; ++t) CHECK(back.beats[i][t] == ds.beats[i][t]);
  }
  fs::remove(path);
}

TEST_CASE("beats file reader rejects a wrong magic") {
  auto path = fs::temp_directory_path() / "anet_beats_bad.bin";
  std::ofstream(path, std::ios::binary) << "NOPE!overwritten";
  CHECK_THROWS_WITH_AS(read_beats_file(path), doctest::Contains("bad magic"),
                       std::runtime_error);
  fs::remove(path);
}

TEST_CASE("pinned oracle: record 100 has 2239 normal beats") {
  const char* env = std::getenv("ANET_MITBIH_DIR");
  if (!env) return;  // real data not present in this environment
  auto rec = read_record(env, "100");
  long n = 0;
  for (const auto& a : rec.annotations)
    if (a.code == kAnnNormal) ++n;
  CHECK(n == 2239);
}
