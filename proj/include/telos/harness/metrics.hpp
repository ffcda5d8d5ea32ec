#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace telos::harness {

using ordered_json = nlohmann::ordered_json;

struct ReportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One evaluation: per-class SR in evaluation order, global SR as their mean.
struct MetricsRecord {
  std::size_t epoch = 0;
  std::vector<std::pair<std::string, double>> sr;
  double global_sr = 0;
  std::optional<double> test_sr;  // mean over a transfer scenario's test classes
  std::size_t discovered = 0;
  std::uint64_t episodes = 0;
  std::uint64_t updates = 0;
  double wall_clock = 0;  // seconds of training and evaluation so far

  void set_global() {
    double s = 0;
    for (const auto& [c, v] : sr) s += v;
    global_sr = sr.empty() ? 0.0 : s / static_cast<double>(sr.size());
  }

  ordered_json to_json() const {
    ordered_json j;
    j["epoch"] = epoch;
    ordered_json per = ordered_json::object();
    for (const auto& [c, v] : sr) per[c] = v;
    j["sr"] = per;
    j["global_sr"] = global_sr;
    if (test_sr) j["test_sr"] = *test_sr;
    j["discovered"] = discovered;
    j["episodes"] = episodes;
    j["updates"] = updates;
    j["wall_clock"] = wall_clock;
    return j;
  }

  static MetricsRecord from_json(const ordered_json& j) {
    MetricsRecord r;
    r.epoch = j.at("epoch").get<std::size_t>();
    for (const auto& [c, v] : j.at("sr").items()) r.sr.emplace_back(c, v.get<double>());
    r.global_sr = j.at("global_sr").get<double>();
    if (j.contains("test_sr")) r.test_sr = j.at("test_sr").get<double>();
    r.discovered = j.value("discovered", std::size_t{0});
    r.episodes = j.value("episodes", std::uint64_t{0});
    r.updates = j.value("updates", std::uint64_t{0});
    r.wall_clock = j.value("wall_clock", 0.0);
    return r;
  }
};

// Records of one metrics file; diagnostic lines (with an "error" key) are skipped.
inline std::vector<MetricsRecord> read_metrics(std::istream& in, const std::string& source) {
  std::vector<MetricsRecord> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = source + ":" + std::to_string(n) + ": ";
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw ReportError(where + "malformed JSON (" + e.what() + ")");
    }
    if (j.is_object() && j.contains("error")) continue;
    try {
      out.push_back(MetricsRecord::from_json(j));
    } catch (const std::exception& e) {
      throw ReportError(where + "not a metrics record (" + e.what() + ")");
    }
    if (out.back().sr.empty()) throw ReportError(where + "record has no classes");
  }
  if (out.empty()) throw ReportError(source + ": no metrics records");
  return out;
}

inline std::vector<MetricsRecord> read_metrics_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ReportError("cannot open " + path);
  return read_metrics(in, path);
}

struct SummaryRow {
  std::size_t epoch = 0;
  std::string cls;  // class name, or "global"
  double mean = 0;
  double std = 0;  // sample standard deviation across runs; 0 for one run
  std::vector<double> values;
};

inline SummaryRow make_row(std::size_t epoch, std::string cls, std::vector<double> values) {
  SummaryRow r{epoch, std::move(cls), 0, 0, std::move(values)};
  for (double v : r.values) r.mean += v;
  r.mean /= static_cast<double>(r.values.size());
  if (r.values.size() > 1) {
    double ss = 0;
    for (double v : r.values) ss += (v - r.mean) * (v - r.mean);
    r.std = std::sqrt(ss / static_cast<double>(r.values.size() - 1));
  }
  return r;
}

// Per epoch: one row per class (first-seen order) and a "global" row, each
// aggregated over the runs that reached that epoch.
inline std::vector<SummaryRow> summarize(const std::vector<std::vector<MetricsRecord>>& runs) {
  std::map<std::size_t, std::vector<const MetricsRecord*>> by_epoch;
  for (const auto& run : runs) {
    for (const auto& r : run) by_epoch[r.epoch].push_back(&r);
  }
  std::vector<SummaryRow> rows;
  for (const auto& [epoch, recs] : by_epoch) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<double>> values;
    for (const auto* r : recs) {
      for (const auto& [c, v] : r->sr) {
        if (!values.count(c)) order.push_back(c);
        values[c].push_back(v);
      }
    }
    for (const auto& c : order) rows.push_back(make_row(epoch, c, values[c]));
    std::vector<double> global;
    for (const auto* r : recs) global.push_back(r->global_sr);
    rows.push_back(make_row(epoch, "global", global));
  }
  return rows;
}

inline std::string format_number(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out = "epoch,class,sr\n";
  for (const auto& r : rows) out += std::to_string(r.epoch) + "," + r.cls + "," + format_number(r.mean) + "\n";
  return out;
}

inline ordered_json summary_json(const std::vector<SummaryRow>& rows) {
  ordered_json j = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json e;
    e["epoch"] = r.epoch;
    e["class"] = r.cls;
    e["sr"] = r.mean;
    e["sr_std"] = r.std;
    e["n"] = r.values.size();
    e["values"] = r.values;
    j.push_back(e);
  }
  return j;
}

}  // namespace telos::harness
