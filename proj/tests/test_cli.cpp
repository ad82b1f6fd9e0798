#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mpgo/cli.hpp"
#include "mpgo/config.hpp"
#include "mpgo/report.hpp"

using namespace mpgo;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "mpgo_lab");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream o, e;
  int code = cli_main(int(argv.size()), argv.data(), o, e);
  return {code, o.str(), e.str()};
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("mpgo_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ScanReport sample_report() {
  ScanReport r;
  r.config_hash = "abc";
  r.rng_seed = 42;
  r.commit = "deadbeef";
  r.notes = {"note"};
  Series& s = r.add("ricci", "2uA", "tt");
  s.points = {{0.1, 1e-2}, {0.05, 5e-3}, {0.025, 2.5e-3}};
  fit_series(s);
  return r;
}

}  // namespace

TEST_SUITE("cli-lab") {
  TEST_CASE("config parse and serialize are idempotent") {
    RunConfig a;
    std::string t1 = config_to_json(a);
    RunConfig b = parse_config(t1);
    CHECK(config_to_json(b) == t1);

    auto j = nlohmann::json::parse(t1);
    j["phases"] = nlohmann::json::array({{{"direction", {1, 0, 0}}, {"amplitude", 0.3}},
                                         {{"direction", {0, 2, 0}}, {"thp", 1.2}, {"thx", 1.6}}});
    j["lambdas"] = {0.2, 0.1, 0.05};
    std::string t2 = config_to_json(parse_config(j.dump()));
    CHECK(config_to_json(parse_config(t2)) == t2);
    CHECK(parse_config(t2).scenario.directions.size() == 2);
  }

  TEST_CASE("config rejects unknown keys, bad types and schemas") {
    auto j = nlohmann::json::parse(config_to_json(RunConfig{}));
    auto bad = j;
    bad["colour"] = "red";
    CHECK_THROWS_AS(parse_config(bad.dump()), ConfigError);
    bad = j;
    bad["truncation"]["F3"] = true;
    CHECK_THROWS_AS(parse_config(bad.dump()), ConfigError);
    bad = j;
    bad["schema"] = 2;
    CHECK_THROWS_AS(parse_config(bad.dump()), ConfigError);
    bad = j;
    bad["eta"] = "fine";
    CHECK_THROWS_AS(parse_config(bad.dump()), ConfigError);
    bad = j;
    bad["phases"][0]["direction"] = {1.5, 0, 0};
    CHECK_THROWS_AS(parse_config(bad.dump()), ConfigError);
    CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
  }

  TEST_CASE("report JSON round trip") {
    ScanReport r = sample_report();
    ScanReport back = report_from_json(report_to_json(r));
    CHECK(report_to_json(back) == report_to_json(r));
    REQUIRE(back.series.size() == 1);
    CHECK(back.series[0].order == doctest::Approx(1.0));
    CHECK(back.rng_seed == 42);
    CHECK_THROWS_AS(report_from_json("{\"meta\":{\"schema\":3},\"series\":[]}"), ConfigError);
  }

  TEST_CASE("empty and single-series reports") {
    ScanReport empty;
    auto j = nlohmann::json::parse(report_to_json(empty));
    CHECK(j["meta"]["schema"] == 1);
    CHECK(j["series"].empty());

    std::string csv = report_to_csv(sample_report());
    std::istringstream is(csv);
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(is, line))
      if (!line.empty()) lines.push_back(line);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "kind,word,slot,lambda,value");
    CHECK(lines[1].rfind("ricci,2uA,tt,", 0) == 0);
  }

  TEST_CASE("emit_report writes json, csv and decay files") {
    fs::path d = scratch("emit");
    auto files = emit_report(sample_report(), d.string());
    CHECK(files.size() == 3);
    CHECK(fs::exists(d / "report.json"));
    CHECK(fs::exists(d / "report.csv"));
    CHECK(report_to_json(report_from_json(slurp(d / "report.json"))) == report_to_json(sample_report()));
    fs::path blocker = d / "file";
    std::ofstream(blocker) << "x";
    CHECK_THROWS_AS(emit_report(sample_report(), (blocker / "sub").string()), ConfigError);
  }

  TEST_CASE("exit codes") {
    fs::path d = scratch("codes");
    CHECK(run({}).code == 2);
    CHECK(run({"no-such-command"}).code == 2);
    CHECK(run({"verify-identities", "--bogus"}).code == 2);
    CHECK(run({"verify-identities", "--config", (d / "missing.json").string()}).code == 2);

    Run ok = run({"verify-identities", "--samples", "50", "--rng", "7", "--out", d.string()});
    CHECK(ok.code == 0);
    CHECK(ok.out.find("transparency") != std::string::npos);
    CHECK(ok.out.find("PASS verify-identities") != std::string::npos);
    CHECK(fs::exists(d / "identities.json"));

    CHECK(run({"verify-identities", "--samples", "0", "--out", d.string()}).code == 2);

    fs::path blocker = d / "file";
    std::ofstream(blocker) << "x";
    CHECK(run({"verify-identities", "--samples", "5", "--out", (blocker / "sub").string()}).code == 2);

    std::ofstream(d / "bad.json") << "{\"schema\": 1, \"unknown\": 3}";
    Run bad = run({"ricci-scan", "--config", (d / "bad.json").string()});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("unknown") != std::string::npos);
  }

  TEST_CASE("output directory from the environment") {
    fs::path d = scratch("env");
    ::setenv("MPGO_OUTPUT_DIR", d.string().c_str(), 1);
    Run r = run({"verify-identities", "--samples", "5"});
    ::unsetenv("MPGO_OUTPUT_DIR");
    CHECK(r.code == 0);
    CHECK(fs::exists(d / "identities.json"));
  }

  TEST_CASE("weak-limit subcommand prints the order") {
    fs::path d = scratch("weak");
    Run r = run({"weak-limit", "--word", "uA-uB", "--lambda", "0.1,0.05,0.025", "--out", d.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("fitted order") != std::string::npos);
    Run s = run({"weak-limit", "--word", "stationary", "--lambda", "0.1,0.05,0.025", "--out", d.string()});
    CHECK(s.code == 0);
    CHECK(s.out.find("stationary") != std::string::npos);
    CHECK(run({"weak-limit", "--word", "uA", "--lambda", "0.1,x", "--out", d.string()}).code == 2);
  }

  TEST_CASE("report subcommand merges") {
    fs::path d = scratch("merge");
    emit_report(sample_report(), d.string(), "a");
    ScanReport other;
    other.add("constraint", "uA+uB", "H").points = {{0.1, 1.0}};
    emit_report(other, d.string(), "b");
    Run r = run({"report", (d / "a.json").string(), (d / "b.json").string(), "--out", (d / "m").string()});
    CHECK(r.code == 0);
    auto merged = report_from_json(slurp(d / "m" / "merged.json"));
    CHECK(merged.series.size() == 2);
  }
}
