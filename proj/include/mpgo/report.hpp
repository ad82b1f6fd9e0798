#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mpgo {

struct SeriesPoint {
  double lambda = 0;
  double value = 0;
};

struct Series {
  std::string kind, word, slot;
  std::vector<SeriesPoint> points;
  bool fitted = false;  // order and r2 are meaningful
  double order = 0, r2 = 0;
  bool pass = true;
};

struct ScanReport {
  int schema = 1;
  std::string config_hash;
  std::uint64_t rng_seed = 0;
  std::string commit;
  std::vector<std::string> notes;
  std::vector<Series> series;

  Series* find(const std::string& kind, const std::string& word, const std::string& slot);
  const Series* find(const std::string& kind, const std::string& word, const std::string& slot) const;
  Series& add(const std::string& kind, const std::string& word, const std::string& slot);
  bool pass() const;
  void merge(const ScanReport& o);
};

std::string report_to_json(const ScanReport& r, int indent = 2);
ScanReport report_from_json(const std::string& text);  // ConfigError on schema mismatch
std::string report_to_csv(const ScanReport& r);        // kind,word,slot,lambda,value
// writes report.json, report.csv and one <kind>_<word>_<slot>.dat per series; ConfigError when unwritable
std::vector<std::string> emit_report(const ScanReport& r, const std::string& dir, const std::string& stem = "report");

// fits order for every series with at least 3 points and positive values
void fit_series(Series& s);

}  // namespace mpgo
