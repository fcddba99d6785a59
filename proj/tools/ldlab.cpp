#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "ldlab/config.hpp"
#include "ldlab/error.hpp"
#include "ldlab/io.hpp"
#include "ldlab/parallel.hpp"
#include "ldlab/runs.hpp"

namespace fs = std::filesystem;
using namespace ldlab;

namespace {

struct Options {
  std::string config;
  std::string out = ".";
  int threads = 0;
  bool deterministic = false;
};

struct Context {
  const Options& opt;
  Config cfg;
  Provenance prov;
  fs::path out;

  void write(const std::string& name, const std::string& content) const { write_file((out / name).string(), content); }
};

int cmd_a0(const Context& c) {
  const auto r = run_a0(c.cfg);
  std::printf("a0 = %s\nenergy per site = %s\n", format_double(r.a0).c_str(), format_double(r.energy_per_site).c_str());
  c.write("a0.json", a0_json(r, c.prov));
  return 0;
}

void print_phonon(const PhononCheck& p) {
  std::printf("phonon %s: c0 estimate %s, min eigenvalue %s (%d^d grid)\n", p.stable ? "stable" : "UNSTABLE",
              format_double(p.c0_estimate).c_str(), format_double(p.min_eigenvalue).c_str(), p.grid);
}

void print_spectrum(const StabilityReport& s) {
  std::printf("spectrum: index %d, inf-sup %s, %s\n", s.index, format_double(s.inf_sup).c_str(),
              s.converged ? "converged" : s.message.c_str());
}

void write_relaxed(const Context& c, const RelaxRun& r, const std::string& name) {
  std::ofstream os(c.out / name);
  if (!os) throw ConfigError("cannot write " + (c.out / name).string());
  write_xyz(os, *r.cell, r.result.u.values, c.cfg.symbol);
}

int cmd_stability(const Context& c) {
  const auto r = run_stability(c.cfg);
  print_phonon(r.phonon);
  if (r.relaxed && r.relaxed->stability) print_spectrum(*r.relaxed->stability);
  c.write("stability.json", stability_json(r, c.prov));
  return 0;
}

int cmd_relax(const Context& c) {
  const auto r = run_relax(c.cfg);
  std::printf("relaxed N = %d (%zu sites): %d CG + %d Newton iterations, |grad|_inf = %s, E = %s\n",
              r.cell->half_period(), r.cell->size(), r.result.iterations, r.result.newton_iterations,
              format_double(r.result.grad_inf).c_str(), format_double(r.result.energy).c_str());
  if (r.stability) print_spectrum(*r.stability);
  c.write("relax.json", relax_json(r, c.prov));
  c.write("history.csv", history_csv(r.result));
  if (c.cfg.relax->write_xyz) write_relaxed(c, r, "relaxed.xyz");
  return 0;
}

int cmd_greens(const Context& c) {
  const auto r = run_greens(c.cfg);
  for (std::size_t k = 0; k < r.study.orders.size(); ++k) {
    std::printf("j = %d: slope %s\n", r.study.orders[k], format_double(r.study.fits[k].slope).c_str());
  }
  if (r.decay) std::printf("second-difference decay slope %s\n", format_double(r.decay->fit.slope).c_str());
  c.write("greens.json", greens_json(r, c.prov));
  const int nmax = c.cfg.greens->half_periods.back();
  c.write("greens_table.csv",
          greens_table_csv(periodic_greens(*c.cfg.potential, c.cfg.homogeneous, c.cfg.multiplier, nmax)));
  return 0;
}

void print_fits(const StudyResult& r) {
  for (std::size_t k = 0; k < r.norms.size(); ++k) {
    const std::string p = std::isinf(r.norms[k]) ? "inf" : format_double(r.norms[k]);
    if (r.fits[k]) {
      std::printf("p = %s: slope %s (residual %s)\n", p.c_str(), format_double(r.fits[k]->slope).c_str(),
                  format_double(r.fits[k]->residual).c_str());
    } else {
      std::printf("p = %s: no slope\n", p.c_str());
    }
  }
  for (const auto& n : r.notices) std::printf("notice: %s\n", n.c_str());
}

void write_study(const Context& c, const StudyResult& r) {
  c.write("results.json", study_json(r, c.prov));
  c.write("errors.csv", study_errors_csv(r));
  c.write("slopes.csv", study_slopes_csv(r));
  if (c.cfg.study->planted.enabled) return;
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    std::ofstream os(c.out / ("relaxed_N" + std::to_string(r.rows[i].half_period) + ".xyz"));
    write_xyz(os, *r.cells[i], r.solutions[i].values, c.cfg.symbol);
  }
}

int cmd_study(const Context& c) {
  if (!c.cfg.study) throw ConfigError("study: the config has no study section");
  const auto r = run_convergence(*c.cfg.study);
  print_fits(r);
  write_study(c, r);
  return 0;
}

int cmd_checks(const Context& c) {
  if (!c.cfg.checks) throw ConfigError("checks: the config has no checks section");
  std::optional<StudyResult> study;
  if (c.cfg.checks->decay || c.cfg.checks->caccioppoli) study = run_convergence(*c.cfg.study);
  const auto r = run_checks(c.cfg, study ? &*study : nullptr);
  if (r.decay && r.decay->first) std::printf("decay slope |Du|: %s\n", format_double(r.decay->first->fit.slope).c_str());
  if (r.decay && r.decay->second) std::printf("decay slope |D2u|: %s\n", format_double(r.decay->second->fit.slope).c_str());
  for (const auto& [n, k] : r.caccioppoli) {
    std::printf("Caccioppoli N = %d: max ratio %s\n", n, k.max_ratio ? format_double(*k.max_ratio).c_str() : "n/a");
  }
  for (const auto& [r1, r2, k] : r.poincare) {
    std::printf("Poincare [%g, %g]: max ratio %s\n", r1, r2, format_double(k.max_ratio).c_str());
  }
  for (const auto& [rad, k] : r.truncation) {
    std::printf("truncation R = %g: global %s, err1 %s\n", rad, format_double(k.max_global).c_str(),
                format_double(k.max_err1).c_str());
  }
  c.write("checks.json", checks_json(r, c.prov));
  return 0;
}

int dispatch(const std::string& name, const Options& opt, const std::function<int(const Context&)>& body) {
  const fs::path out(opt.out);
  std::optional<Provenance> prov;
  try {
    if (opt.config.empty()) throw ConfigError("no config given (use --config PATH or LDLAB_CONFIG)");
    if (!fs::exists(opt.config)) throw ConfigError("config file not found: " + opt.config);
    int threads = opt.threads > 0 ? opt.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (opt.deterministic) threads = 1;
    set_num_threads(threads);
    fs::create_directories(out);
    Config cfg = load_config(opt.config);
    prov = make_provenance(cfg, threads, opt.deterministic);
    Context ctx{opt, std::move(cfg), *prov, out};
    return body(ctx);
  } catch (const ConfigError& e) {
    std::cerr << "ldlab " << name << ": invalid input: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "ldlab " << name << ": numerical failure: " << e.what() << "\n";
    try {
      fs::create_directories(out);
      write_file((out / "diagnostic.json").string(),
                 diagnostic_json(name, "numerical", e.what(), prov ? &*prov : nullptr));
    } catch (const std::exception&) {
    }
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ldlab: supercell approximation of point defects"};
  app.set_version_flag("--version", ldlab::version());
  app.require_subcommand(1);

  Options opt;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "JSON config")->envname("LDLAB_CONFIG");
    sub->add_option("--out", opt.out, "output directory")->envname("LDLAB_OUT");
    sub->add_option("--threads", opt.threads, "worker threads (default: hardware)")
        ->envname("LDLAB_THREADS")
        ->check(CLI::NonNegativeNumber);
    sub->add_flag("--deterministic", opt.deterministic, "single-threaded, bitwise reproducible")
        ->envname("LDLAB_DETERMINISTIC");
  };

  const std::vector<std::tuple<std::string, std::string, std::function<int(const Context&)>>> commands = {
      {"a0", "equilibrium lattice parameter", cmd_a0},
      {"stability", "phonon check and spectrum of the relaxed defect", cmd_stability},
      {"relax", "relax one supercell", cmd_relax},
      {"greens", "periodic Green's function study", cmd_greens},
      {"study", "supercell convergence study", cmd_study},
      {"checks", "decay, Caccioppoli, Poincare and truncation checks", cmd_checks},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help, fn] : commands) {
    auto* s = app.add_subcommand(name, help);
    common(s);
    subs.push_back(s);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (subs[i]->parsed()) return dispatch(std::get<0>(commands[i]), opt, std::get<2>(commands[i]));
  }
  return 1;
}
