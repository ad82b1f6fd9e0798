#include "mpgo/config.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "json.hpp"

namespace mpgo {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <class T> void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "' in " + where);
  }
}

Vec3 read_vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(where + " must be a 3-array");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw ConfigError(where + " must hold numbers");
    v(i) = j[i].get<double>();
  }
  return v;
}

json vec3_json(const Vec3& v) { return json::array({v(0), v(1), v(2)}); }

}  // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, {"schema", "name", "background", "phases", "envelope", "lambdas", "eta", "eta_fd", "line",
                 "truncation", "conformal", "thresholds", "rng_seed", "output_dir", "threads"},
             "config");
  if (!j.contains("schema") || !j["schema"].is_number_integer() || j["schema"].get<int>() != 1)
    throw ConfigError("config schema must be 1");
  RunConfig c;
  Scenario& s = c.scenario;
  read(j, "name", s.name, "config");
  if (j.contains("background")) {
    const json& b = j["background"];
    check_keys(b, {"kind", "perturbation"}, "background");
    read(b, "kind", s.background, "background");
    read(b, "perturbation", s.perturbation, "background");
  }
  if (j.contains("phases")) {
    const json& ps = j["phases"];
    if (!ps.is_array()) throw ConfigError("phases must be an array");
    s.directions.clear();
    s.thp.clear();
    s.thx.clear();
    s.amplitude.clear();
    for (const auto& p : ps) {
      check_keys(p, {"direction", "thp", "thx", "amplitude"}, "phase");
      const json& d = p.contains("direction") ? p["direction"] : json();
      if (!d.is_array() || d.size() != 3) throw ConfigError("phase direction must be an integer triple");
      std::array<int, 3> dir{};
      for (int i = 0; i < 3; ++i) {
        if (!d[i].is_number_integer()) throw ConfigError("phase direction must be an integer triple");
        dir[i] = d[i].get<int>();
      }
      double thp = 2, thx = 0, a = 0.5;
      read(p, "thp", thp, "phase");
      read(p, "thx", thx, "phase");
      read(p, "amplitude", a, "phase");
      s.directions.push_back(dir);
      s.thp.push_back(thp);
      s.thx.push_back(thx);
      s.amplitude.push_back(a);
    }
  }
  if (j.contains("envelope")) {
    const json& e = j["envelope"];
    check_keys(e, {"kind", "width", "z0", "R"}, "envelope");
    read(e, "kind", s.envelope, "envelope");
    read(e, "width", s.width, "envelope");
    read(e, "z0", s.z0, "envelope");
    read(e, "R", s.R, "envelope");
  }
  read(j, "lambdas", s.lambdas, "config");
  read(j, "eta", s.eta, "config");
  read(j, "eta_fd", s.eta_fd, "config");
  if (j.contains("line")) {
    const json& l = j["line"];
    check_keys(l, {"origin", "direction", "beats"}, "line");
    if (l.contains("origin")) s.line_origin = read_vec3(l["origin"], "line.origin");
    if (l.contains("direction")) s.line_direction = read_vec3(l["direction"], "line.direction");
    read(l, "beats", s.line_beats, "line");
  }
  if (j.contains("truncation")) {
    const json& t = j["truncation"];
    check_keys(t, {"F1", "F21", "F22", "F2pm", "Frak", "g3h", "g3e", "h"}, "truncation");
    Truncation& u = s.use;
    read(t, "F1", u.F1, "truncation");
    read(t, "F21", u.F21, "truncation");
    read(t, "F22", u.F22, "truncation");
    read(t, "F2pm", u.F2pm, "truncation");
    read(t, "Frak", u.Frak, "truncation");
    read(t, "g3h", u.g3h, "truncation");
    read(t, "g3e", u.g3e, "truncation");
    read(t, "h", u.h, "truncation");
  }
  if (j.contains("conformal")) {
    const json& t = j["conformal"];
    check_keys(t, {"phi2", "X2", "kappa1", "gamma2"}, "conformal");
    read(t, "phi2", s.conformal.phi2, "conformal");
    read(t, "X2", s.conformal.X2, "conformal");
    read(t, "kappa1", s.conformal.kappa1, "conformal");
    read(t, "gamma2", s.conformal.gamma2, "conformal");
  }
  if (j.contains("thresholds")) {
    const json& t = j["thresholds"];
    check_keys(t, {"order_min", "ablation_tol", "burnett_tol", "leakage_max", "stationary_max"}, "thresholds");
    Thresholds& h = s.thresholds;
    read(t, "order_min", h.order_min, "thresholds");
    read(t, "ablation_tol", h.ablation_tol, "thresholds");
    read(t, "burnett_tol", h.burnett_tol, "thresholds");
    read(t, "leakage_max", h.leakage_max, "thresholds");
    read(t, "stationary_max", h.stationary_max, "thresholds");
  }
  read(j, "rng_seed", s.rng_seed, "config");
  read(j, "output_dir", s.output_dir, "config");
  read(j, "threads", c.threads, "config");
  if (c.threads < 1) throw ConfigError("threads must be at least 1");
  s.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& c) {
  const Scenario& s = c.scenario;
  json j;
  j["schema"] = 1;
  j["name"] = s.name;
  j["background"] = {{"kind", s.background}, {"perturbation", s.perturbation}};
  json ps = json::array();
  for (size_t A = 0; A < s.directions.size(); ++A)
    ps.push_back({{"direction", s.directions[A]}, {"thp", s.thp[A]}, {"thx", s.thx[A]}, {"amplitude", s.amplitude[A]}});
  j["phases"] = ps;
  j["envelope"] = {{"kind", s.envelope}, {"width", s.width}, {"z0", s.z0}, {"R", s.R}};
  j["lambdas"] = s.lambdas;
  j["eta"] = s.eta;
  j["eta_fd"] = s.eta_fd;
  j["line"] = {{"origin", vec3_json(s.line_origin)}, {"direction", vec3_json(s.line_direction)},
               {"beats", s.line_beats}};
  const Truncation& u = s.use;
  j["truncation"] = {{"F1", u.F1}, {"F21", u.F21}, {"F22", u.F22}, {"F2pm", u.F2pm},
                     {"Frak", u.Frak}, {"g3h", u.g3h}, {"g3e", u.g3e}, {"h", u.h}};
  j["conformal"] = {{"phi2", s.conformal.phi2}, {"X2", s.conformal.X2}, {"kappa1", s.conformal.kappa1},
                    {"gamma2", s.conformal.gamma2}};
  const Thresholds& h = s.thresholds;
  j["thresholds"] = {{"order_min", h.order_min}, {"ablation_tol", h.ablation_tol}, {"burnett_tol", h.burnett_tol},
                     {"leakage_max", h.leakage_max}, {"stationary_max", h.stationary_max}};
  j["rng_seed"] = s.rng_seed;
  j["output_dir"] = s.output_dir;
  j["threads"] = c.threads;
  return j.dump(2);
}

void apply_env_overrides(RunConfig& c) {
  if (const char* d = std::getenv("MPGO_OUTPUT_DIR"); d && *d) c.scenario.output_dir = d;
}

std::string scenario_hash(const Scenario& sc) {
  RunConfig c;
  c.scenario = sc;
  c.scenario.output_dir.clear();  // where results go does not change them
  std::string text = config_to_json(c);
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace mpgo
