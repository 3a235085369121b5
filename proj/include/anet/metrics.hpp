#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "anet/dataset.hpp"

namespace anet {

struct ClassMetrics {
  std::string name;
  long support = 0;
  double precision = 0, recall = 0, f1 = 0;
  long fp = 0, fn = 0;
  double fp_pct = 0;  // FP / total test size
  double fn_pct = 0;  // FN / class support
  std::map<std::string, long> fp_breakdown;  // by true class
  std::map<std::string, long> fn_breakdown;  // by predicted class
};

struct EvalReport {
  std::array<std::array<long, kNumClasses>, kNumClasses> confusion{};  // [true][pred]
  std::vector<ClassMetrics> per_class;
  long total = 0;
  double accuracy = 0, macro_precision = 0, macro_recall = 0, macro_f1 = 0;
  double weighted_precision = 0, weighted_recall = 0, weighted_f1 = 0;
};

// Metrics from a confusion matrix. precision = TP/(TP+FP), recall =
// TP/(TP+FN); the two percentage conventions are applied as noted
// on the fields above.
EvalReport report_from_confusion(
    const std::array<std::array<long, kNumClasses>, kNumClasses>& confusion);

EvalReport evaluate_predictions(const std::vector<BeatClass>& truth,
                                const std::vector<BeatClass>& predicted);

std::string report_to_text(const EvalReport& r);
std::string report_to_csv(const EvalReport& r);
std::string report_to_json(const EvalReport& r);
EvalReport report_from_json(const std::string& json_text);

void emit_report(const EvalReport& r, const std::string& format,
                 const std::filesystem::path& path);

}  // namespace anet
