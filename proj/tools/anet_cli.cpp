#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "anet/cost.hpp"
#include "anet/dataset.hpp"
#include "anet/metrics.hpp"
#include "anet/model_io.hpp"
#include "anet/train.hpp"
#include "anet/wavelet.hpp"
#include "anet/xai.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitDataError = 3;
constexpr int kExitNumericError = 4;

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << body;
}

void write_manifest(const fs::path& out_dir, const std::string& subcommand,
                    json effective_config, json extra = {}) {
  json m;
  m["subcommand"] = subcommand;
  m["config"] = std::move(effective_config);
  for (auto& [k, v] : extra.items()) m[k] = v;
  write_text(out_dir / "run-manifest.json", m.dump(2));
}

json cost_report_json(const anet::CostReport& r, int header_bytes) {
  json layers = json::array();
  for (const auto& l : r.layers)
    layers.push_back({{"name", l.name},
                      {"kind", l.kind},
                      {"weight_params", l.weight_params},
                      {"bias_params", l.bias_params},
                      {"bn_learnable", l.bn_learnable},
                      {"bn_running", l.bn_running},
                      {"macs", l.macs},
                      {"out_channels", l.out_channels},
                      {"out_length", l.out_length}});
  return json{{"layers", layers},
              {"total_weight_params", r.total_weight_params},
              {"total_bias_params", r.total_bias_params},
              {"total_bn_learnable", r.total_bn_learnable},
              {"total_bn_running", r.total_bn_running},
              {"total_macs", r.total_macs},
              {"stored_params", r.stored_params()},
              {"trainable_params", r.trainable_params()},
              {"size_kb", r.weight_kb(header_bytes)}};
}

std::string cost_report_text(const anet::CostReport& r) {
  std::ostringstream os;
  char buf[160];
  os << "Layer                 Kind        Params    Bias  BN(learn)  BN(run)"
        "        MACs   Out\n";
  for (const auto& l : r.layers) {
    std::snprintf(buf, sizeof buf, "%-21s %-10s %7lld %7lld %10lld %8lld %11lld  (%d,%d)\n",
                  l.name.c_str(), l.kind.c_str(),
                  static_cast<long long>(l.weight_params),
                  static_cast<long long>(l.bias_params),
                  static_cast<long long>(l.bn_learnable),
                  static_cast<long long>(l.bn_running),
                  static_cast<long long>(l.macs), l.out_channels, l.out_length);
    os << buf;
  }
  std::snprintf(buf, sizeof buf,
                "Totals: weights %lld, biases %lld, BN learnable %lld, BN running %lld\n"
                "Stored parameters: %lld  MACs: %lld  Size: %.2f KB\n",
                static_cast<long long>(r.total_weight_params),
                static_cast<long long>(r.total_bias_params),
                static_cast<long long>(r.total_bn_learnable),
                static_cast<long long>(r.total_bn_running),
                static_cast<long long>(r.stored_params()),
                static_cast<long long>(r.total_macs), r.weight_kb());
  os << buf;
  return os.str();
}

std::vector<std::string> discover_records(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".hea") names.push_back(e.path().stem().string());
  std::sort(names.begin(), names.end());
  return names;
}

fs::path data_dir_or_env(std::string flag_value) {
  if (!flag_value.empty()) return flag_value;
  if (const char* env = std::getenv("ANET_DATA_DIR")) return env;
  throw CLI::ValidationError("--data-dir", "no data directory given (flag or ANET_DATA_DIR)");
}

// config file values act as defaults; CLI flags override
json load_config_file(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config") {
      std::ifstream f(argv[i + 1]);
      if (!f) throw CLI::ValidationError("--config", std::string("cannot read ") + argv[i + 1]);
      json j;
      f >> j;
      return j;
    }
  return json::object();
}

int run(int argc, char** argv) {
  CLI::App app{"ArrhythmiNet: lightweight 1D CNN ECG beat classification with XAI"};
  app.require_subcommand(1);
  json cfg_file = load_config_file(argc, argv);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file (defaults, overridden by flags)");

  auto getd = [&cfg_file](const char* key, auto defval) {
    using T = decltype(defval);
    return cfg_file.value(key, T(defval));
  };

  // ---- preprocess ----
  auto* pre = app.add_subcommand("preprocess", "denoise, segment, balance and split WFDB records");
  std::string pre_data = getd("data_dir", std::string());
  std::string pre_out = getd("out_dir", std::string("out"));
  std::vector<std::string> pre_records = getd("records", std::vector<std::string>{});
  std::string pre_mode = getd("split_mode", std::string("leakage-safe"));
  std::uint64_t pre_seed = getd("seed", std::uint64_t{1234});
  long pre_target = getd("target_per_class", 6000L);
  int pre_levels = getd("wavelet_levels", 4);
  bool pre_no_denoise = false;
  pre->add_option("--data-dir", pre_data, "directory with .hea/.dat/.atr files");
  pre->add_option("--out", pre_out, "output directory");
  pre->add_option("--records", pre_records, "record names (default: all in data dir)");
  pre->add_option("--mode", pre_mode, "leakage-safe | paper-faithful");
  pre->add_option("--seed", pre_seed, "RNG seed");
  pre->add_option("--target-per-class", pre_target, "balanced beats per class");
  pre->add_option("--wavelet-levels", pre_levels, "decomposition depth");
  pre->add_flag("--no-denoise", pre_no_denoise, "skip wavelet denoising");

  // ---- train ----
  auto* tr = app.add_subcommand("train", "train a model on a preprocessed dataset");
  std::string tr_data = getd("dataset_dir", std::string("out"));
  std::string tr_out = getd("out_dir", std::string("out"));
  std::string tr_variant = getd("variant", std::string("v1"));
  int tr_epochs = getd("epochs", 30);
  int tr_batches = getd("batches_per_epoch", 500);
  int tr_batch_size = getd("batch_size", 48);
  double tr_lr = getd("lr", 1e-3);
  std::string tr_opt = getd("optimizer", std::string("adam"));
  std::uint64_t tr_seed = getd("seed", std::uint64_t{1234});
  tr->add_option("--data", tr_data, "preprocessed dataset directory");
  tr->add_option("--out", tr_out, "output directory");
  tr->add_option("--variant", tr_variant, "v1 | v2");
  tr->add_option("--epochs", tr_epochs);
  tr->add_option("--batches", tr_batches, "mini-batches per epoch");
  tr->add_option("--batch-size", tr_batch_size);
  tr->add_option("--lr", tr_lr, "learning rate");
  tr->add_option("--optimizer", tr_opt, "adam | sgd");
  tr->add_option("--seed", tr_seed);

  // ---- evaluate ----
  auto* ev = app.add_subcommand("evaluate", "classification report on the test fold");
  std::string ev_model = getd("model", std::string());
  std::string ev_data = getd("dataset_dir", std::string("out"));
  std::string ev_out = getd("out_dir", std::string("out"));
  int ev_threads = getd("threads", 1);
  ev->add_option("--model", ev_model, "model file")->required();
  ev->add_option("--data", ev_data, "preprocessed dataset directory");
  ev->add_option("--out", ev_out, "output directory");
  ev->add_option("--threads", ev_threads, "1 = bit-reproducible");

  // ---- explain ----
  auto* ex = app.add_subcommand("explain", "Grad-CAM / SHAP attribution for a beat");
  std::string ex_model = getd("model", std::string());
  std::string ex_data = getd("dataset_dir", std::string("out"));
  std::string ex_out = getd("out_dir", std::string("out"));
  std::string ex_method = getd("method", std::string("gradcam"));
  std::string ex_mode = getd("shap_mode", std::string("exact"));
  std::string ex_baseline = getd("baseline", std::string("zeros"));
  int ex_beat = getd("beat", 0);
  std::string ex_class = getd("class_sample", std::string());
  int ex_segments = getd("segments", 12);
  int ex_draws = getd("draws", 20000);
  std::uint64_t ex_seed = getd("seed", std::uint64_t{7});
  ex->add_option("--model", ex_model, "model file")->required();
  ex->add_option("--data", ex_data, "preprocessed dataset directory");
  ex->add_option("--out", ex_out, "output directory");
  ex->add_option("--method", ex_method, "gradcam | shap");
  ex->add_option("--mode", ex_mode, "shap mode: exact | sampled");
  ex->add_option("--baseline", ex_baseline, "shap masking baseline: zeros | mean");
  ex->add_option("--beat", ex_beat, "test-fold beat index");
  ex->add_option("--class", ex_class, "explain the first test beat of this class instead");
  ex->add_option("--segments", ex_segments, "shap segment count");
  ex->add_option("--draws", ex_draws, "sampled-mode permutation draws");
  ex->add_option("--seed", ex_seed);

  // ---- inspect ----
  auto* in = app.add_subcommand("inspect", "print the cost report for a variant");
  std::string in_variant = getd("variant", std::string("v1"));
  in->add_option("--variant", in_variant, "v1 | v2");

  int threads = getd("threads", 1);
  app.add_option("--threads", threads, "internal parallelism (1 = bit-reproducible)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfigError;
  }

  if (pre->parsed()) {
    const fs::path data_dir = data_dir_or_env(pre_data);
    const fs::path out_dir = pre_out;
    fs::create_directories(out_dir);
    auto records = pre_records.empty() ? discover_records(data_dir) : pre_records;
    if (records.empty())
      throw std::runtime_error("no records found in " + data_dir.string());
    std::vector<std::string> missing;
    for (const auto& r : records)
      for (const char* ext : {".hea", ".dat", ".atr"})
        if (!fs::exists(data_dir / (r + ext)))
          missing.push_back((data_dir / (r + ext)).string());
    if (!missing.empty()) {
      std::string msg = "missing data files:";
      for (const auto& m : missing) msg += "\n  " + m;
      throw std::runtime_error(msg);
    }
    std::sort(records.begin(), records.end());
    anet::SegmentOptions sopts;
    sopts.denoise = !pre_no_denoise;
    sopts.wavelet_levels = pre_levels;
    anet::BeatDataset all;
    for (const auto& r : records) {
      auto rec = anet::read_record(data_dir, r);
      all.append(anet::segment_beats(rec, anet::default_class_map(), sopts));
    }
    const auto mode = pre_mode == "paper-faithful" ? anet::SplitMode::paper_faithful
                                                   : anet::SplitMode::leakage_safe;
    if (pre_mode != "paper-faithful" && pre_mode != "leakage-safe")
      throw CLI::ValidationError("--mode", "expected leakage-safe or paper-faithful");
    auto split = anet::balance_and_split(all, mode, pre_seed, pre_target);
    anet::write_beats_file(out_dir / "train.beat", split.train);
    anet::write_beats_file(out_dir / "test.beat", split.test);
    json counts_train, counts_test;
    for (int c = 0; c < anet::kNumClasses; ++c) {
      const char* n = anet::beat_class_name(static_cast<anet::BeatClass>(c));
      counts_train[n] = split.train_counts[c];
      counts_test[n] = split.test_counts[c];
    }
    json cfg = {{"data_dir", data_dir.string()}, {"records", records},
                {"split_mode", pre_mode}, {"seed", pre_seed},
                {"target_per_class", pre_target},
                {"denoise", !pre_no_denoise}, {"wavelet_levels", pre_levels}};
    write_manifest(out_dir, "preprocess", cfg,
                   json{{"train_counts", counts_train},
                        {"test_counts", counts_test},
                        {"boundary_skips", all.boundary_skips},
                        {"total_segmented", all.size()}});
    std::cout << "preprocess: " << all.size() << " beats segmented, "
              << split.train.size() << " train / " << split.test.size()
              << " test written to " << out_dir.string() << "\n";
    if (mode == anet::SplitMode::paper_faithful)
      std::cout << "note: paper-faithful mode balances before splitting; "
                   "duplicated beats may appear in both folds\n";
    return 0;
  }

  if (tr->parsed()) {
    const fs::path out_dir = tr_out;
    fs::create_directories(out_dir);
    auto train_set = anet::read_beats_file(fs::path(tr_data) / "train.beat");
    const auto variant = anet::variant_from_name(tr_variant);
    anet::ModelConfig mcfg;
    mcfg.seed = tr_seed;
    auto net = anet::build_network<float>(variant, mcfg);
    anet::TrainConfig tcfg;
    tcfg.epochs = tr_epochs;
    tcfg.batches_per_epoch = tr_batches;
    tcfg.batch_size = tr_batch_size;
    tcfg.seed = tr_seed;
    tcfg.optimizer.lr = tr_lr;
    tcfg.optimizer.kind = tr_opt == "sgd" ? anet::OptimizerKind::sgd
                                          : anet::OptimizerKind::adam;
    if (tr_opt != "sgd" && tr_opt != "adam")
      throw CLI::ValidationError("--optimizer", "expected adam or sgd");
    tcfg.log_progress = true;
    anet::TrainHistory history;
    try {
      history = anet::train(net, train_set, tcfg);
    } catch (const std::runtime_error& e) {
      throw NumericError(e.what());
    }
    const fs::path model_path = out_dir / ("model_" + tr_variant + ".anet");
    anet::serialize_model(net, model_path);
    write_text(out_dir / ("history_" + tr_variant + ".csv"),
               anet::history_to_csv(history));
    auto cost = anet::count_macs(net.spec, mcfg.input_length);
    write_text(out_dir / ("cost_report_" + tr_variant + ".json"),
               cost_report_json(cost, 0).dump(2));
    json cfg = {{"dataset_dir", tr_data}, {"variant", tr_variant},
                {"epochs", tr_epochs}, {"batches_per_epoch", tr_batches},
                {"batch_size", tr_batch_size}, {"lr", tr_lr},
                {"optimizer", tr_opt}, {"seed", tr_seed}};
    write_manifest(out_dir, "train", cfg,
                   json{{"model_file", model_path.string()},
                        {"model_size_bytes", fs::file_size(model_path)},
                        {"final_loss", history.empty() ? 0.0 : history.back().loss},
                        {"final_train_accuracy",
                         history.empty() ? 0.0 : history.back().accuracy}});
    std::cout << "train: wrote " << model_path.string() << " ("
              << fs::file_size(model_path) / 1024.0 << " KB)\n";
    return 0;
  }

  if (ev->parsed()) {
    const fs::path out_dir = ev_out;
    fs::create_directories(out_dir);
    auto net = anet::deserialize_model(ev_model);
    auto test_set = anet::read_beats_file(fs::path(ev_data) / "test.beat");
    auto report = anet::evaluate(net, test_set, ev_threads);
    anet::emit_report(report, "json", out_dir / "report.json");
    anet::emit_report(report, "csv", out_dir / "report.csv");
    anet::emit_report(report, "text-table", out_dir / "report.txt");
    json cfg = {{"model", ev_model}, {"dataset_dir", ev_data}, {"threads", ev_threads}};
    write_manifest(out_dir, "evaluate", cfg,
                   json{{"accuracy", report.accuracy}, {"macro_f1", report.macro_f1}});
    std::cout << anet::report_to_text(report);
    return 0;
  }

  if (ex->parsed()) {
    const fs::path out_dir = ex_out;
    fs::create_directories(out_dir);
    auto net = anet::deserialize_model(ex_model);
    auto test_set = anet::read_beats_file(fs::path(ex_data) / "test.beat");
    size_t beat_idx = static_cast<size_t>(ex_beat);
    int target = 0;
    if (!ex_class.empty()) {
      bool found = false;
      for (size_t i = 0; i < test_set.size() && !found; ++i)
        for (int c = 0; c < anet::kNumClasses; ++c)
          if (ex_class == anet::beat_class_name(static_cast<anet::BeatClass>(c)) &&
              test_set.labels[i] == static_cast<anet::BeatClass>(c)) {
            beat_idx = i;
            target = c;
            found = true;
            break;
          }
      if (!found)
        throw std::runtime_error("no test beat with class " + ex_class);
    } else {
      if (beat_idx >= test_set.size())
        throw std::runtime_error("beat index " + std::to_string(beat_idx) +
                                 " out of range (test fold has " +
                                 std::to_string(test_set.size()) + " beats)");
      target = static_cast<int>(test_set.labels[beat_idx]);
    }
    std::vector<float> beat(test_set.beats[beat_idx].begin(),
                            test_set.beats[beat_idx].end());
    anet::Attribution attr;
    if (ex_method == "gradcam") {
      attr = anet::grad_cam(net, beat, target);
    } else if (ex_method == "shap") {
      anet::XaiOptions xopts;
      xopts.segments = ex_segments;
      xopts.draws = ex_draws;
      xopts.seed = ex_seed;
      if (ex_baseline == "mean") {
        xopts.baseline = anet::ShapBaseline::mean;
        std::vector<float> mean(anet::kBeatLength, 0.0f);
        auto train_set = anet::read_beats_file(fs::path(ex_data) / "train.beat");
        for (const auto& b : train_set.beats)
          for (int t = 0; t < anet::kBeatLength; ++t) mean[t] += b[t];
        for (auto& v : mean) v /= static_cast<float>(train_set.size());
        xopts.baseline_beat = mean;
      }
      attr = ex_mode == "sampled" ? anet::shap_sampled(net, beat, target, xopts)
                                  : anet::shap_exact(net, beat, target, xopts);
    } else {
      throw CLI::ValidationError("--method", "expected gradcam or shap");
    }
    const std::string stem = ex_method + "_beat" + std::to_string(beat_idx);
    anet::export_attribution(attr, beat, "csv", out_dir / (stem + ".csv"));
    anet::export_attribution(attr, beat, "json", out_dir / (stem + ".json"));
    anet::export_attribution(attr, beat, "svg", out_dir / (stem + ".svg"));
    json cfg = {{"model", ex_model}, {"dataset_dir", ex_data},
                {"method", ex_method}, {"mode", ex_mode},
                {"beat", beat_idx}, {"target_class", target},
                {"segments", ex_segments}, {"draws", ex_draws},
                {"baseline", ex_baseline}, {"seed", ex_seed}};
    write_manifest(out_dir, "explain", cfg, json{{"files", stem + ".{csv,json,svg}"}});
    std::cout << "explain: wrote " << (out_dir / stem).string() << ".{csv,json,svg}\n";
    return 0;
  }

  if (in->parsed()) {
    auto spec = anet::build_spec(anet::variant_from_name(in_variant));
    auto cost = anet::count_macs(spec, spec.config.input_length);
    std::cout << "ArrhythmiNet " << in_variant << " (final map "
              << spec.feature_channels << " x " << spec.feature_length << ")\n"
              << cost_report_text(cost);
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    anet::validate_sym4();
    return run(argc, argv);
  } catch (const CLI::Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumericError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitDataError;
  }
}
