#include "mpgo/cli.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "mpgo/config.hpp"
#include "mpgo/experiments.hpp"
#include "mpgo/report.hpp"

#ifndef MPGO_COMMIT
#define MPGO_COMMIT "unknown"
#endif

namespace mpgo {

namespace {

struct Common {
  std::string config;
  std::string out;
  int threads = 0;
  std::uint64_t rng = 0;
  bool rng_set = false;
};

RunConfig resolve(const Common& c) {
  RunConfig rc = c.config.empty() ? RunConfig{} : load_config(c.config);
  apply_env_overrides(rc);
  if (!c.out.empty()) rc.scenario.output_dir = c.out;
  if (c.threads > 0) rc.threads = c.threads;
  if (c.rng_set) rc.scenario.rng_seed = c.rng;
  rc.scenario.validate();
#ifdef _OPENMP
  omp_set_num_threads(rc.threads);
#endif
  return rc;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t pos = 0;
      v.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad number in list: '" + item + "'");
    }
  }
  return v;
}

void apply_ablations(Scenario& sc, const std::vector<std::string>& ab) {
  for (const auto& a : ab) {
    if (a == "f1") sc.use.F1 = false;
    else if (a == "f21") sc.use.F21 = false;
    else if (a == "f22") sc.use.F22 = false;
    else if (a == "f2pm") sc.use.F2pm = false;
    else if (a == "frak") sc.use.Frak = false;
    else if (a == "phi2") sc.conformal.phi2 = false;
    else if (a == "X2" || a == "x2") sc.conformal.X2 = false;
    else if (a == "kappa1") sc.conformal.kappa1 = false;
    else if (a == "gamma2") sc.conformal.gamma2 = false;
    else throw ConfigError("unknown ablation '" + a + "'");
  }
}

void print_series(const ScanReport& r, std::ostream& out) {
  for (const auto& s : r.series) {
    out << std::left << std::setw(20) << s.kind << std::setw(12) << s.word << std::setw(6) << s.slot;
    for (const auto& p : s.points) out << ' ' << std::scientific << std::setprecision(3) << p.value;
    if (s.fitted) out << "  order " << std::fixed << std::setprecision(3) << s.order;
    out << (s.pass ? "" : "  FAIL") << '\n' << std::defaultfloat;
  }
}

int finish(ScanReport& r, const RunConfig& rc, const std::string& stem, std::ostream& out, std::ostream& err,
           const std::string& criterion, bool informational) {
  r.commit = MPGO_COMMIT;
  print_series(r, out);
  auto files = emit_report(r, rc.scenario.output_dir, stem);
  out << "wrote " << files.size() << " files to " << rc.scenario.output_dir << '\n';
  if (informational) {
    out << criterion << ": ablation run (informational)\n";
    return 0;
  }
  if (!r.pass()) {
    err << "FAIL " << criterion << '\n';
    return 1;
  }
  out << "PASS " << criterion << '\n';
  return 0;
}

}  // namespace

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"oscillatory metric lab"};
  app.require_subcommand(1);
  Common com;
  auto add_common = [&](CLI::App* s) {
    s->add_option("--config", com.config, "scenario JSON");
    s->add_option("--out", com.out, "output directory");
    s->add_option("--threads", com.threads, "worker threads");
    s->add_option_function<std::uint64_t>("--rng", [&](std::uint64_t v) { com.rng = v, com.rng_set = true; }, "RNG seed");
  };

  auto* vi = app.add_subcommand("verify-identities", "pointwise property suites");
  int samples = 1000;
  vi->add_option("--samples", samples);
  add_common(vi);

  auto* tp = app.add_subcommand("transport", "propagation audit along characteristics");
  double dt = 0.05, t_end = 1.0;
  int per_axis = 3;
  tp->add_option("--dt", dt);
  tp->add_option("--t-end", t_end);
  tp->add_option("--footpoints", per_axis, "footpoints per axis");
  add_common(tp);

  auto* bi = app.add_subcommand("build-initial-data", "slice data and corrector fixed-point audit");
  int points = 20;
  bi->add_option("--points", points);
  add_common(bi);

  std::vector<std::string> ablate;
  std::string lambdas;
  auto* rs = app.add_subcommand("ricci-scan", "order-0 Ricci cancellation scan");
  rs->add_option("--ablate", ablate)->delimiter(',');
  rs->add_option("--lambda", lambdas);
  add_common(rs);
  auto* cs = app.add_subcommand("constraint-scan", "constraint cancellation scan");
  cs->add_option("--ablate", ablate)->delimiter(',');
  cs->add_option("--lambda", lambdas);
  add_common(cs);
  auto* bs = app.add_subcommand("burnett", "weak-convergence surrogate");
  bs->add_option("--lambda", lambdas);
  add_common(bs);

  auto* wl = app.add_subcommand("weak-limit", "oscillatory integral decay");
  std::string word = "A";
  bool use_cos = false, no_cut = false;
  wl->add_option("--word", word, "word such as A-B, or 'stationary' for z = (x^1)^2");
  wl->add_flag("--cos", use_cos);
  wl->add_flag("--no-cut", no_cut, "smooth test function without the half-space cut");
  wl->add_option("--lambda", lambdas);
  add_common(wl);

  auto* rp = app.add_subcommand("report", "merge scan reports");
  std::vector<std::string> inputs;
  rp->add_option("inputs", inputs)->required();
  add_common(rp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    RunConfig rc = resolve(com);
    if (!lambdas.empty()) rc.scenario.lambdas = parse_list(lambdas);
    apply_ablations(rc.scenario, ablate);
    rc.scenario.validate();
    const bool informational = !ablate.empty();
    ScanReport rep;
    rep.config_hash = scenario_hash(rc.scenario);
    rep.rng_seed = rc.scenario.rng_seed;

    if (*vi) {
      if (samples < 1) throw ConfigError("--samples must be positive");
      auto checks = verify_identities(samples, rc.scenario.rng_seed);
      for (const auto& c : checks) {
        Series& s = rep.add("identity", c.name, "max");
        s.points.push_back({0.0, c.max_residual});
        s.pass = c.pass();
        out << std::left << std::setw(24) << c.name << " samples " << std::setw(6) << c.samples << " max residual "
            << std::scientific << std::setprecision(3) << c.max_residual << " (tol " << c.tol << ")"
            << (c.pass() ? "" : "  FAIL") << '\n'
            << std::defaultfloat;
      }
      return finish(rep, rc, "identities", out, err, "verify-identities", false);
    }
    if (*tp) {
      auto a = transport_audit(rc.scenario, dt, t_end, per_axis, rc.scenario.rng_seed);
      auto put = [&](const std::string& name, double v, double tol) {
        Series& s = rep.add("transport", name, "max");
        s.points.push_back({0.0, v});
        s.pass = v <= tol;
      };
      put("seed-energy", a.seed_defect, 1e-12);
      put("pol", a.max_pol, 1e-12);
      put("lLbar", a.max_lLbar, 1e-12);
      put("energy", a.max_energy, 1e-11);
      put("geodesic", a.geodesic, 1e-8);
      out << a.curves << " characteristics, " << a.steps << " steps\n";
      return finish(rep, rc, "transport", out, err, "transport", false);
    }
    if (*bi) {
      Seed sd = scenario_seed(rc.scenario);
      SliceBackground bg = slice_background(rc.scenario);
      SampleLine L = sample_line(rc.scenario, rc.scenario.lambdas.front());
      FixedPointResiduals worst;
      double vdef = 0;
      int n = std::max(1, std::min(points, int(L.x.size())));
      for (int i = 0; i < n; ++i) {
        const Vec3& x = L.x[size_t(i) * (L.x.size() - 1) / std::max(1, n - 1)];
        auto r = fixed_point_residuals(correctors(sd, bg, x));
        worst.ka11 = std::max(worst.ka11, r.ka11);
        worst.ka12 = std::max(worst.ka12, r.ka12);
        worst.ka1pm = std::max(worst.ka1pm, r.ka1pm);
        worst.ga2pm = std::max(worst.ga2pm, r.ga2pm);
        for (size_t A = 0; A < sd.size(); ++A) vdef = std::max(vdef, initial_polarization_defect(sd, bg, int(A), x));
      }
      const bool flat = rc.scenario.background == "minkowski";
      const double tol = flat ? 1e-10 : 1e-6;
      auto put = [&](const std::string& name, double v, double t) {
        Series& s = rep.add("initial-data", name, "max");
        s.points.push_back({0.0, v});
        s.pass = v <= t;
      };
      put("ka11", worst.ka11, tol);
      put("ka12", worst.ka12, tol);
      put("ka1pm", worst.ka1pm, tol);
      put("ga2pm", worst.ga2pm, tol);
      put("V2", vdef, flat ? 1e-11 : 1e-6);
      return finish(rep, rc, "initial_data", out, err, "build-initial-data", false);
    }
    if (*rs) {
      rep = ricci_scan(rc.scenario);
      return finish(rep, rc, "ricci_scan", out, err, "ricci-scan", informational);
    }
    if (*cs) {
      rep = constraint_scan(rc.scenario);
      return finish(rep, rc, "constraint_scan", out, err, "constraint-scan", informational);
    }
    if (*bs) {
      rep = burnett_scan(rc.scenario);
      return finish(rep, rc, "burnett", out, err, "burnett", false);
    }
    if (*wl) {
      WeakLimitSpec spec;
      spec.use_sin = !use_cos;
      spec.cut_axis = no_cut ? -1 : 0;
      bool expect_stationary = word == "stationary";
      if (expect_stationary) {
        spec.z = [](const Vec3& x) { return x(0) * x(0); };
      } else {
        auto ph = rc.scenario.phases();
        if (ph.size() < 2 && word.find_first_of("B") != std::string::npos) {
          rc.scenario.directions = {{1, 0, 0}, {0, 1, 0}};
          ph = rc.scenario.phases();
        }
        auto c = parse_word(word, rc.scenario.labels());
        spec.z = [c, ph](const Vec3& x) { return word_value(c, ph, on_slice(x)); };
      }
      auto res = weak_limit_decay(spec, rc.scenario.lambdas);
      Series& s = rep.add("weak-limit", word, spec.use_sin ? "sin" : "cos");
      for (size_t i = 0; i < res.lambda.size(); ++i) s.points.push_back({res.lambda[i], std::abs(res.value[i])});
      s.fitted = true;
      s.order = res.fit.order;
      s.r2 = res.fit.r2;
      const auto& th = rc.scenario.thresholds;
      s.pass = res.stationary ? res.fit.order <= th.stationary_max : res.fit.order >= th.order_min;
      if (res.stationary) rep.notes.push_back("stationary point of the word inside the test-function support");
      if (res.fit.clipped) rep.notes.push_back("integral values below 1e-16 were clipped");
      out << "fitted order " << res.fit.order << (res.stationary ? " (stationary phase, flagged)" : "") << '\n';
      return finish(rep, rc, "weak_limit", out, err, "weak-limit", false);
    }
    if (*rp) {
      ScanReport merged;
      for (const auto& path : inputs) {
        std::ifstream f(path);
        if (!f) throw ConfigError("cannot read report " + path);
        std::stringstream ss;
        ss << f.rdbuf();
        merged.merge(report_from_json(ss.str()));
      }
      return finish(merged, rc, "merged", out, err, "report", false);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidSeed& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidDirection& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidScale& e) {
    err << "config error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "numeric failure: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace mpgo
