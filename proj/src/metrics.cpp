#include "anet/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace anet {

EvalReport report_from_confusion(
    const std::array<std::array<long, kNumClasses>, kNumClasses>& confusion) {
  EvalReport r;
  r.confusion = confusion;
  long correct = 0;
  for (int c = 0; c < kNumClasses; ++c)
    for (int p = 0; p < kNumClasses; ++p) {
      r.total += confusion[c][p];
      if (c == p) correct += confusion[c][p];
    }
  if (r.total == 0) throw std::invalid_argument("evaluate: empty test set");
  r.accuracy = static_cast<double>(correct) / r.total;
  for (int c = 0; c < kNumClasses; ++c) {
    ClassMetrics m;
    m.name = beat_class_name(static_cast<BeatClass>(c));
    const long tp = confusion[c][c];
    for (int t = 0; t < kNumClasses; ++t) {
      m.support += confusion[c][t];
      if (t == c) continue;
      if (confusion[t][c] > 0)
        m.fp_breakdown[beat_class_name(static_cast<BeatClass>(t))] = confusion[t][c];
      if (confusion[c][t] > 0)
        m.fn_breakdown[beat_class_name(static_cast<BeatClass>(t))] = confusion[c][t];
      m.fp += confusion[t][c];
      m.fn += confusion[c][t];
    }
    m.precision = tp + m.fp > 0 ? static_cast<double>(tp) / (tp + m.fp) : 0.0;
    m.recall = tp + m.fn > 0 ? static_cast<double>(tp) / (tp + m.fn) : 0.0;
    m.f1 = m.precision + m.recall > 0
               ? 2 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    m.fp_pct = 100.0 * m.fp / r.total;
    m.fn_pct = m.support > 0 ? 100.0 * m.fn / m.support : 0.0;
    r.macro_precision += m.precision / kNumClasses;
    r.macro_recall += m.recall / kNumClasses;
    r.macro_f1 += m.f1 / kNumClasses;
    r.weighted_precision += m.precision * m.support;
    r.weighted_recall += m.recall * m.support;
    r.weighted_f1 += m.f1 * m.support;
    r.per_class.push_back(std::move(m));
  }
  r.weighted_precision /= r.total;
  r.weighted_recall /= r.total;
  r.weighted_f1 /= r.total;
  return r;
}

EvalReport evaluate_predictions(const std::vector<BeatClass>& truth,
                                const std::vector<BeatClass>& predicted) {
  if (truth.size() != predicted.size())
    throw std::invalid_argument("evaluate: truth/prediction size mismatch");
  if (truth.empty()) throw std::invalid_argument("evaluate: empty test set");
  std::array<std::array<long, kNumClasses>, kNumClasses> conf{};
  for (size_t i = 0; i < truth.size(); ++i)
    ++conf[static_cast<int>(truth[i])][static_cast<int>(predicted[i])];
  return report_from_confusion(conf);
}

namespace {

std::string breakdown_str(const std::map<std::string, long>& b) {
  std::string s = "{";
  bool first = true;
  for (const auto& [k, v] : b) {
    if (!first) s += ", ";
    s += "'" + k + "': " + std::to_string(v);
    first = false;
  }
  return s + "}";
}

}  // namespace

std::string report_to_text(const EvalReport& r) {
  char buf[256];
  std::ostringstream os;
  os << "Class        Precision  Recall  F1-Score  Support\n";
  for (const auto& m : r.per_class) {
    std::snprintf(buf, sizeof buf, "%-12s %9.2f %7.2f %9.2f %8ld\n",
                  m.name.c_str(), m.precision, m.recall, m.f1, m.support);
    os << buf;
  }
  std::snprintf(buf, sizeof buf,
                "Accuracy     %38.2f\nMacro Avg    %38.2f\nWeighted Avg %38.2f\n"
                "Total Support: %ld\n\n",
                r.accuracy, r.macro_f1, r.weighted_f1, r.total);
  os << buf;
  os << "Confusion matrix (rows = true, cols = predicted)\n        ";
  for (const auto& m : r.per_class) {
    std::snprintf(buf, sizeof buf, "%7s", m.name.c_str());
    os << buf;
  }
  os << "\n";
  for (int c = 0; c < kNumClasses; ++c) {
    std::snprintf(buf, sizeof buf, "%-8s",
                  beat_class_name(static_cast<BeatClass>(c)));
    os << buf;
    for (int p = 0; p < kNumClasses; ++p) {
      std::snprintf(buf, sizeof buf, "%7ld", r.confusion[c][p]);
      os << buf;
    }
    os << "\n";
  }
  os << "\nFalse classifications (FP% of total test size, FN% of class support)\n";
  os << "Class  Support  FP   FP(%)  FP breakdown                                  "
        "FN   FN(%)  FN breakdown\n";
  for (const auto& m : r.per_class) {
    std::snprintf(buf, sizeof buf, "%-6s %7ld %4ld %6.2f  %-45s %4ld %6.2f  %s\n",
                  m.name.c_str(), m.support, m.fp, m.fp_pct,
                  breakdown_str(m.fp_breakdown).c_str(), m.fn, m.fn_pct,
                  breakdown_str(m.fn_breakdown).c_str());
    os << buf;
  }
  return os.str();
}

std::string report_to_csv(const EvalReport& r) {
  std::ostringstream os;
  os << "class,precision,recall,f1,support,fp,fp_pct,fn,fn_pct\n";
  char buf[160];
  for (const auto& m : r.per_class) {
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f,%.6f,%ld,%ld,%.2f,%ld,%.2f\n",
                  m.name.c_str(), m.precision, m.recall, m.f1, m.support, m.fp,
                  m.fp_pct, m.fn, m.fn_pct);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "accuracy,%.6f,,,%ld,,,,\n", r.accuracy, r.total);
  os << buf;
  std::snprintf(buf, sizeof buf, "macro_avg,%.6f,%.6f,%.6f,%ld,,,,\n",
                r.macro_precision, r.macro_recall, r.macro_f1, r.total);
  os << buf;
  std::snprintf(buf, sizeof buf, "weighted_avg,%.6f,%.6f,%.6f,%ld,,,,\n",
                r.weighted_precision, r.weighted_recall, r.weighted_f1, r.total);
  os << buf;
  return os.str();
}

std::string report_to_json(const EvalReport& r) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["total"] = r.total;
  j["accuracy"] = r.accuracy;
  j["macro"] = {{"precision", r.macro_precision},
                {"recall", r.macro_recall},
                {"f1", r.macro_f1}};
  j["weighted"] = {{"precision", r.weighted_precision},
                   {"recall", r.weighted_recall},
                   {"f1", r.weighted_f1}};
  nlohmann::json conf = nlohmann::json::array();
  for (int c = 0; c < kNumClasses; ++c)
    conf.push_back(std::vector<long>(r.confusion[c].begin(), r.confusion[c].end()));
  j["confusion"] = conf;
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& m : r.per_class)
    classes.push_back({{"class", m.name},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1},
                       {"support", m.support},
                       {"fp", m.fp},
                       {"fp_pct", m.fp_pct},
                       {"fp_breakdown", m.fp_breakdown},
                       {"fn", m.fn},
                       {"fn_pct", m.fn_pct},
                       {"fn_breakdown", m.fn_breakdown}});
  j["classes"] = classes;
  return j.dump(2);
}

EvalReport report_from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  if (j.at("schema_version").get<int>() != 1)
    throw std::runtime_error("report JSON: unsupported schema version");
  std::array<std::array<long, kNumClasses>, kNumClasses> conf{};
  const auto& cj = j.at("confusion");
  for (int c = 0; c < kNumClasses; ++c)
    for (int p = 0; p < kNumClasses; ++p) conf[c][p] = cj[c][p].get<long>();
  return report_from_confusion(conf);
}

void emit_report(const EvalReport& r, const std::string& format,
                 const std::filesystem::path& path) {
  std::string body;
  if (format == "json")
    body = report_to_json(r);
  else if (format == "csv")
    body = report_to_csv(r);
  else if (format == "text-table" || format == "text")
    body = report_to_text(r);
  else
    throw std::invalid_argument("emit_report: unknown format '" + format + "'");
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("emit_report: cannot write " + path.string());
  f << body;
  if (!f) throw std::runtime_error("emit_report: write failed for " + path.string());
}

}  // namespace anet
