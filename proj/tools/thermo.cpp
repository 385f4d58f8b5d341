// thermo: sweep, collapse, report and DoS-grid front end.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "thermo/bath/greens.hpp"
#include "thermo/cli/sweep.hpp"

namespace {

using namespace thermo;
using namespace thermo::cli;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPartial = 3;

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-")
    std::cout << text;
  else
    atomic_write(out, text);
}

// "<file>.json" or "family[:key=value,...]", e.g. "graphene:r=1,D=1".
DosSpec dos_from_arg(const std::string& arg) {
  namespace fs = std::filesystem;
  if (fs::exists(arg)) {
    json j;
    try {
      j = json::parse(read_file(arg), nullptr, true, true);
    } catch (const json::exception& e) {
      throw ConfigError("dos spec '" + arg + "': " + e.what());
    }
    return parse_dos(j.contains("dos") ? j["dos"] : j, fs::path(arg).parent_path()).first;
  }
  json j;
  const auto colon = arg.find(':');
  j["family"] = arg.substr(0, colon);
  if (colon != std::string::npos) {
    std::stringstream ss(arg.substr(colon + 1));
    std::string kv;
    while (std::getline(ss, kv, ',')) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("dos spec: expected key=value, got '" + kv + "'");
      const auto k = kv.substr(0, eq), v = kv.substr(eq + 1);
      if (k == "table")
        j[k] = v;
      else
        j[k] = parse_number(v);
    }
  }
  return parse_dos(j).first;
}

int cmd_sweep_main(const std::string& cfg_path, int workers) {
  const auto cfg = load_config(cfg_path);
  SweepOptions o;
  o.cache = RunCache::from_env();
  o.workers = workers;
  const auto m = run_sweep(cfg, o);
  int failed = 0;
  for (const auto& r : m.records)
    if (!r.ok) {
      ++failed;
      std::cerr << "point " << r.id << " failed: " << r.error << "\n";
    }
  std::cout << (cfg.output_dir / "manifest.json").string() << "\n";
  std::cerr << m.records.size() - failed << "/" << m.records.size() << " points ok\n";
  return failed ? kExitPartial : kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-impurity thermometry toolkit"};
  app.require_subcommand(1);

  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep from a config file");
  std::string cfg;
  int workers = 0;
  sweep->add_option("config", cfg, "Run config (JSON)")->required();
  sweep->add_option("--workers", workers, "Worker threads (0: config or machine default)");

  auto* collapse = app.add_subcommand("collapse", "Scaling-collapse table from sweep manifests");
  std::vector<std::string> manifests;
  std::string tk = "entropy", out;
  bool allow_mixed = false;
  double lo = 0.0, hi = INFINITY;
  collapse->add_option("manifest", manifests, "Sweep manifest(s)")->required();
  collapse->add_option("--tk", tk, "T_K method: entropy or perturbative");
  collapse->add_flag("--allow-mixed", allow_mixed, "Allow manifests from different DoS families");
  collapse->add_option("--lo", lo, "Lower bound of the T/T_K comparison window");
  collapse->add_option("--hi", hi, "Upper bound of the T/T_K comparison window");
  collapse->add_option("--out", out, "Output CSV (default stdout)");

  auto* report = app.add_subcommand("report", "Summary JSON for a sweep manifest");
  std::string manifest, rep_out;
  report->add_option("manifest", manifest, "Sweep manifest")->required();
  report->add_option("--out", rep_out, "Output JSON (default stdout)");

  auto* dos = app.add_subcommand("dos", "Inspect a bath density of states");
  std::string dos_spec, dos_out;
  bool emit_grid = false;
  int points = 4000;
  double eta = 1e-6;
  dos->add_option("spec", dos_spec, "DoS JSON file or family[:key=value,...]")->required();
  dos->add_flag("--emit-grid", emit_grid, "Write w, rho, Re G, Im G on the default grid");
  dos->add_option("--points", points, "Grid points");
  dos->add_option("--eta", eta, "Broadening");
  dos->add_option("--out", dos_out, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sweep) return cmd_sweep_main(cfg, workers);
    if (*collapse) {
      std::vector<Manifest> ms;
      for (const auto& p : manifests) ms.push_back(Manifest::load(p));
      CollapseOptions o;
      o.method = tk_method_from_string(tk);
      o.allow_mixed = allow_mixed;
      o.lo = lo;
      o.hi = hi;
      const auto t = cmd_collapse(ms, o);
      emit(collapse_to_csv(t), out);
      std::cerr << json{{"deviation", t.deviation},
                        {"overlap", {t.overlap_lo, t.overlap_hi}},
                        {"warnings", t.warnings}}
                       .dump()
                << "\n";
      return kExitOk;
    }
    if (*report) {
      const auto rep = cmd_report(Manifest::load(manifest));
      emit(rep.body.dump(2) + "\n", rep_out);
      return rep.partial ? kExitPartial : kExitOk;
    }
    if (*dos) {
      const auto spec = dos_from_arg(dos_spec);
      if (!emit_grid) {
        std::cout << json{{"id", spec.id()},
                          {"family", to_string(spec.family())},
                          {"D", spec.D()},
                          {"rho0", spec.rho0()},
                          {"band", {spec.lo(), spec.hi()}}}
                         .dump(2)
                  << "\n";
        return kExitOk;
      }
      const auto G = greens_from_dos(spec, default_grid(spec.D(), points), eta);
      std::string text = "# schema=1\nw,rho,re_g,im_g\n";
      for (std::size_t i = 0; i < G.grid.size(); ++i)
        text += fmt(G.grid[i]) + ',' + fmt(spec.rho(G.grid[i])) + ',' + fmt(G.values[i].real()) + ',' +
                fmt(G.values[i].imag()) + '\n';
      emit(text, dos_out);
      return kExitOk;
    }
  } catch (const ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitPartial;
  }
  return kExitOk;
}
