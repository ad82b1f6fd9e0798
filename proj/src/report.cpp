#include "mpgo/report.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mpgo/errors.hpp"
#include "mpgo/modefit.hpp"

namespace mpgo {

using nlohmann::json;

Series* ScanReport::find(const std::string& kind, const std::string& word, const std::string& slot) {
  for (auto& s : series)
    if (s.kind == kind && s.word == word && s.slot == slot) return &s;
  return nullptr;
}

const Series* ScanReport::find(const std::string& kind, const std::string& word, const std::string& slot) const {
  for (const auto& s : series)
    if (s.kind == kind && s.word == word && s.slot == slot) return &s;
  return nullptr;
}

Series& ScanReport::add(const std::string& kind, const std::string& word, const std::string& slot) {
  if (Series* s = find(kind, word, slot)) return *s;
  series.push_back({kind, word, slot, {}, false, 0, 0, true});
  return series.back();
}

bool ScanReport::pass() const {
  for (const auto& s : series)
    if (!s.pass) return false;
  return true;
}

void ScanReport::merge(const ScanReport& o) {
  if (config_hash.empty()) config_hash = o.config_hash;
  else if (!o.config_hash.empty() && o.config_hash != config_hash && config_hash.find(o.config_hash) == std::string::npos)
    config_hash += "+" + o.config_hash;
  if (!rng_seed) rng_seed = o.rng_seed;
  if (commit.empty()) commit = o.commit;
  notes.insert(notes.end(), o.notes.begin(), o.notes.end());
  series.insert(series.end(), o.series.begin(), o.series.end());
}

void fit_series(Series& s) {
  s.fitted = false;
  if (s.points.size() < 3) return;
  std::vector<double> l, v;
  for (const auto& p : s.points) {
    l.push_back(p.lambda);
    v.push_back(p.value);
  }
  OrderFit f = order_fit(l, v);
  s.fitted = true;
  s.order = f.order;
  s.r2 = f.r2;
}

std::string report_to_json(const ScanReport& r, int indent) {
  json j;
  j["meta"] = {{"schema", r.schema}, {"config_hash", r.config_hash}, {"rng_seed", r.rng_seed}};
  if (!r.commit.empty()) j["meta"]["commit"] = r.commit;
  if (!r.notes.empty()) j["meta"]["notes"] = r.notes;
  json arr = json::array();
  for (const auto& s : r.series) {
    json pts = json::array();
    for (const auto& p : s.points) pts.push_back({{"lambda", p.lambda}, {"value", p.value}});
    json fit = s.fitted ? json{{"order", s.order}, {"r2", s.r2}} : json{{"order", nullptr}, {"r2", nullptr}};
    arr.push_back({{"kind", s.kind}, {"word", s.word}, {"slot", s.slot}, {"points", pts}, {"fit", fit}, {"pass", s.pass}});
  }
  j["series"] = arr;
  return j.dump(indent);
}

ScanReport report_from_json(const std::string& text) {
  ScanReport r;
  try {
    json j = json::parse(text);
    const json& m = j.at("meta");
    r.schema = m.at("schema").get<int>();
    if (r.schema != 1) throw ConfigError("report schema must be 1");
    r.config_hash = m.at("config_hash").get<std::string>();
    r.rng_seed = m.at("rng_seed").get<std::uint64_t>();
    if (m.contains("commit")) r.commit = m["commit"].get<std::string>();
    if (m.contains("notes")) r.notes = m["notes"].get<std::vector<std::string>>();
    for (const auto& s : j.at("series")) {
      Series x;
      x.kind = s.at("kind").get<std::string>();
      x.word = s.at("word").get<std::string>();
      x.slot = s.at("slot").get<std::string>();
      for (const auto& p : s.at("points")) x.points.push_back({p.at("lambda").get<double>(), p.at("value").get<double>()});
      const json& f = s.at("fit");
      x.fitted = !f.at("order").is_null();
      if (x.fitted) {
        x.order = f.at("order").get<double>();
        x.r2 = f.at("r2").get<double>();
      }
      x.pass = s.at("pass").get<bool>();
      r.series.push_back(x);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed report: ") + e.what());
  }
  return r;
}

std::string report_to_csv(const ScanReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "kind,word,slot,lambda,value\n";
  for (const auto& s : r.series)
    for (const auto& p : s.points) os << s.kind << ',' << s.word << ',' << s.slot << ',' << p.lambda << ',' << p.value << '\n';
  return os.str();
}

std::vector<std::string> emit_report(const ScanReport& r, const std::string& dir, const std::string& stem) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::vector<std::string> out;
  auto write = [&](const std::string& name, const std::string& body) {
    std::string path = (fs::path(dir) / name).string();
    std::ofstream f(path);
    if (!f || !(f << body)) throw ConfigError("cannot write " + path);
    out.push_back(path);
  };
  write(stem + ".json", report_to_json(r));
  write(stem + ".csv", report_to_csv(r));
  for (const auto& s : r.series) {
    if (!s.fitted) continue;
    std::string name = s.kind + "_" + s.word + "_" + s.slot;
    for (char& c : name)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') c = c == '+' ? 'p' : '_';
    std::ostringstream os;
    os.precision(17);
    os << "# lambda value  (fitted order " << s.order << ", r2 " << s.r2 << ")\n";
    for (const auto& p : s.points) os << p.lambda << ' ' << p.value << '\n';
    write(stem + "_" + name + ".dat", os.str());
  }
  return out;
}

}  // namespace mpgo
