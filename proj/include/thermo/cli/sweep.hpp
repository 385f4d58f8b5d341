#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "thermo/cli/cache.hpp"
#include "thermo/cli/config.hpp"
#include "thermo/cli/csv.hpp"
#include "thermo/core/free_spin.hpp"
#include "thermo/ising/ising_exact.hpp"
#include "thermo/meanfield/meanfield.hpp"
#include "thermo/metrology/metrology.hpp"
#include "thermo/nbl/nbl.hpp"
#include "thermo/nrg/nrg.hpp"

namespace thermo::cli {

struct PointSpec {
  double J = 0.0;
  double B = 0.0;
};

inline json point_canonical(const RunConfig& c, const PointSpec& p) {
  json j = c.canonical();
  j.erase("couplings");
  j.erase("fields");
  j["J"] = p.J;
  j["B"] = p.B;
  return j;
}

inline std::string point_hash(const RunConfig& c, const PointSpec& p) {
  return sha256_hex(point_canonical(c, p).dump() + "|" + std::string(kVersion));
}

inline std::string point_id(const RunConfig& c, const PointSpec& p) {
  return to_string(c.model) + "_J" + fmt(p.J) + "_B" + fmt(p.B);
}

namespace sweep_detail {

inline void fill_two_level(ThermoRecord& r) {
  r.qfi = std::abs(r.m_imp) >= 0.5 - 1e-12 ? 0.0 : qfi_two_level(r.m_imp, r.dm_dT);
  r.qsnr = qsnr(r.T, r.qfi);
}

// Entropy of a free spin-1/2 in field B: ln(2 cosh x) - x tanh x, x = B/2T.
inline double free_spin_entropy(double B, double T) {
  const double x = std::abs(B) / (2.0 * T);
  return x + std::log1p(std::exp(-2.0 * x)) - x * std::tanh(x);
}

} // namespace sweep_detail

// Curve for one (J, B) point of a sweep.
inline ThermoCurve compute_point(const RunConfig& c, const PointSpec& pt) {
  using namespace sweep_detail;
  ThermoCurve out;
  out.provenance = point_hash(c, pt);
  std::vector<double> Ts = c.temperatures ? c.temperatures->values() : std::vector<double>{};
  switch (c.model) {
    case Model::FreeSpin:
      for (double T : Ts) {
        ThermoRecord r;
        r.T = T;
        r.m_imp = free_spin_magnetization(pt.B, T);
        r.dm_dT = free_spin_dm_dT(pt.B, T);
        r.s_imp = free_spin_entropy(pt.B, T);
        fill_two_level(r);
        out.rows.push_back(r);
      }
      return out;
    case Model::Ising: {
      IsingSolver s(c.dos);
      for (double T : Ts) {
        IsingParams p{pt.J, pt.B, c.solver.B_0.value_or(pt.B), T, c.dos};
        ThermoRecord r;
        r.T = T;
        r.m_imp = s.magnetization(p);
        r.dm_dT = s.dm_dT(p);
        fill_two_level(r);
        out.rows.push_back(r);
      }
      return out;
    }
    case Model::MeanField: {
      MeanFieldSolver s(c.dos);
      for (double T : Ts) {
        IsingParams p{pt.J, pt.B, c.solver.B_0.value_or(pt.B), T, c.dos};
        ThermoRecord r;
        r.T = T;
        r.m_imp = s.solve(p, c.solver.tolerance, c.solver.max_iter).m_imp;
        out.rows.push_back(r);
      }
      auto d = with_sensitivity(temperature_derivative(out));
      d.provenance = out.provenance;
      return d;
    }
    case Model::Nbl:
      for (double T : Ts) {
        NblParams p{pt.J, pt.B, T};
        ThermoRecord r;
        r.T = T;
        r.m_imp = nbl_magnetization(p);
        r.dm_dT = nbl_entropy_and_maxwell(p, 1e-6 * std::max(1.0, std::abs(pt.B))).dm_dT;
        r.neg_local = nbl_negativity(p);
        fill_two_level(r);
        out.rows.push_back(r);
      }
      return out;
    case Model::Nrg: {
      const auto& o = c.solver;
      int n = o.n_sites;
      if (n < 0) {
        double target = c.temperatures ? 0.5 * c.temperatures->min : (pt.B > 0 ? 1e-2 * pt.B : 1e-10 * c.dos.D());
        n = nrg::sites_for_temperature(target, o.lambda, o.beta_bar, c.dos.D());
      }
      nrg::NrgParams p;
      p.J = pt.J;
      p.B = pt.B;
      p.chain = nrg::chain_for(c.dos, o.lambda, n);
      p.N_s = o.N_s;
      p.beta_bar = o.beta_bar;
      p.interleave = o.interleave;
      p.track_rdm = o.track_rdm;
      auto curve = nrg::thermodynamics(nrg::run_nrg(p));
      ThermoCurve res = c.temperatures ? static_cast<ThermoCurve>(nrg::resample(curve, Ts)) : curve;
      res.provenance = out.provenance;
      return res;
    }
  }
  throw ValidationError("unsupported model");
}

struct RunRecord {
  std::string id;
  std::string hash;
  double J = 0.0;
  double B = 0.0;
  std::string csv;  // file name relative to the manifest
  bool ok = false;
  bool cached = false;
  std::string error;
  std::vector<std::string> warnings;
  double wall_time = 0.0;
};

struct Manifest {
  std::string config_hash;
  std::string version = kVersion;
  std::string model;
  json dos;
  std::vector<RunRecord> records;
  std::filesystem::path dir;  // directory holding the manifest and CSVs

  json to_json() const {
    json j;
    j["schema"] = 1;
    j["config_hash"] = config_hash;
    j["version"] = version;
    j["model"] = model;
    j["dos"] = dos;
    j["records"] = json::array();
    for (const auto& r : records)
      j["records"].push_back({{"id", r.id},
                              {"hash", r.hash},
                              {"J", r.J},
                              {"B", r.B},
                              {"csv", r.csv},
                              {"ok", r.ok},
                              {"cached", r.cached},
                              {"error", r.error},
                              {"warnings", r.warnings},
                              {"wall_time", r.wall_time}});
    return j;
  }

  static Manifest load(const std::filesystem::path& path) {
    json j;
    try {
      j = json::parse(read_file(path.string()));
    } catch (const json::exception& e) {
      throw ConfigError("manifest '" + path.string() + "': " + e.what());
    }
    Manifest m;
    m.dir = path.parent_path();
    try {
      m.config_hash = j.value("config_hash", "");
      m.version = j.value("version", "");
      m.model = j.at("model").get<std::string>();
      m.dos = j.value("dos", json::object());
      for (const auto& r : j.at("records")) {
        RunRecord rr;
        rr.id = r.at("id").get<std::string>();
        rr.hash = r.value("hash", "");
        rr.J = r.at("J").get<double>();
        rr.B = r.at("B").get<double>();
        rr.csv = r.value("csv", "");
        rr.ok = r.value("ok", false);
        rr.cached = r.value("cached", false);
        rr.error = r.value("error", "");
        rr.warnings = r.value("warnings", std::vector<std::string>{});
        rr.wall_time = r.value("wall_time", 0.0);
        m.records.push_back(rr);
      }
    } catch (const json::exception& e) {
      throw ConfigError("manifest '" + path.string() + "': " + e.what());
    }
    return m;
  }

  ThermoCurve curve(const RunRecord& r) const { return curve_from_csv(read_file((dir / r.csv).string())); }
};

struct SweepOptions {
  std::optional<RunCache> cache;
  int workers = 0;  // 0: config value, then machine parallelism
};

// Runs every (J, B) point on a bounded worker pool. Failures are recorded per
// point and do not stop the sweep.
inline Manifest run_sweep(const RunConfig& c, SweepOptions o = {}) {
  namespace fs = std::filesystem;
  fs::create_directories(c.output_dir);
  std::vector<PointSpec> pts;
  for (double J : c.couplings)
    for (double B : c.fields) pts.push_back({J, B});
  Manifest m;
  m.config_hash = c.hash();
  m.model = to_string(c.model);
  m.dos = c.dos_json;
  m.dir = c.output_dir;
  m.records.resize(pts.size());

  int nw = o.workers > 0 ? o.workers : c.workers;
  if (nw <= 0) nw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  nw = std::min<int>(nw, static_cast<int>(pts.size()));
  RunCache* cache = (o.cache && c.cache != CachePolicy::Off) ? &*o.cache : nullptr;

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < pts.size(); i = next++) {
      const auto& pt = pts[i];
      RunRecord& r = m.records[i];
      r.id = point_id(c, pt);
      r.hash = point_hash(c, pt);
      r.J = pt.J;
      r.B = pt.B;
      r.csv = "curve_" + r.hash.substr(0, 16) + ".csv";
      const auto t0 = std::chrono::steady_clock::now();
      try {
        std::optional<std::string> text;
        if (cache && c.cache == CachePolicy::Use) text = cache->get(r.hash);
        if (text) {
          r.cached = true;
        } else {
          const auto curve = compute_point(c, pt);
          r.warnings = curve.warnings;
          text = curve_to_csv(curve);
          if (cache) cache->put(r.hash, *text);
        }
        atomic_write(c.output_dir / r.csv, *text);
        r.ok = true;
      } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
      }
      r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  std::vector<std::thread> pool;
  for (int k = 0; k < nw; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  atomic_write(c.output_dir / "manifest.json", m.to_json().dump(2) + "\n");
  return m;
}

// T_K per curve: entropy criterion on the zero-field curve with the same J in
// any of the manifests (falling back to the curve itself), or perturbative.
inline TkEstimate tk_for(const std::vector<Manifest>& ms, const Manifest& m, const RunRecord& r, TkMethod method) {
  if (method == TkMethod::Perturbative || method == TkMethod::TbgPower) {
    auto [dos, dj] = parse_dos(m.dos);
    return tk_perturbative(dos.rho0(), r.J, dos.D(), dos.family());
  }
  if (method != TkMethod::EntropyHalfLn2)
    throw ConfigError("--tk: only 'entropy' and 'perturbative' are supported for collapse");
  for (const auto& mm : ms) {
    if (mm.dos != m.dos) continue;
    for (const auto& z : mm.records)
      if (z.ok && z.B == 0.0 && z.J == r.J) return tk_entropy(mm.curve(z));
  }
  return tk_entropy(m.curve(r));
}

struct CollapseOptions {
  TkMethod method = TkMethod::EntropyHalfLn2;
  bool allow_mixed = false;
  double lo = 0.0;
  double hi = INFINITY;
};

inline CollapseTable cmd_collapse(const std::vector<Manifest>& ms, const CollapseOptions& o) {
  if (ms.empty()) throw ConfigError("no manifests given");
  if (!o.allow_mixed)
    for (const auto& m : ms)
      if (m.dos.value("family", "") != ms.front().dos.value("family", ""))
        throw ConfigError("manifests mix DoS families; pass --allow-mixed to collapse them together");
  std::vector<CollapseInput> in;
  for (const auto& m : ms)
    for (const auto& r : m.records) {
      if (!r.ok || !(r.B > 0.0)) continue;
      in.push_back({m.curve(r), tk_for(ms, m, r, o.method), r.B, r.id});
    }
  return collapse_dataset(in, o.lo, o.hi);
}

inline std::string collapse_to_csv(const CollapseTable& t) {
  std::string out = "# schema=1\nt_over_tk,q_rescaled,curve_id\n";
  for (const auto& r : t.rows) out += fmt(r.t_over_tk) + ',' + fmt(r.q_rescaled) + ',' + r.curve_id + '\n';
  return out;
}

struct Report {
  json body;
  bool partial = false;  // some artifacts missing
};

inline Report cmd_report(const Manifest& m) {
  Report rep;
  json curves = json::array(), missing = json::array();
  for (const auto& r : m.records) {
    json e = {{"id", r.id}, {"J", r.J}, {"B", r.B}, {"ok", r.ok}};
    if (!r.ok) {
      e["error"] = r.error;
      curves.push_back(e);
      continue;
    }
    ThermoCurve c;
    try {
      c = m.curve(r);
    } catch (const std::exception&) {
      missing.push_back(r.csv);
      rep.partial = true;
      continue;
    }
    try {
      const auto pk = peak_summary(c);
      e["peak"] = {{"T_max", pk.T_max}, {"Q_max", pk.Q_max}, {"order", pk.order}, {"boundary", pk.boundary}};
      if (m.model == "free_spin" && r.B > 0.0) {
        const bool pass = std::abs(pk.Q_max - 0.6627) <= 1e-3 && std::abs(r.B / pk.T_max - 2.399) <= 1e-2;
        e["checks"]["free_spin_peak"] = pass;
      }
    } catch (const std::exception& ex) {
      e["peak"] = nullptr;
    }
    if (r.B == 0.0) {
      try {
        const auto tk = tk_entropy(c);
        e["tk"] = {{"value", tk.value}, {"method", to_string(tk.method)}};
      } catch (const std::exception&) {
        e["tk"] = nullptr;
      }
    }
    curves.push_back(e);
  }
  json checks = json::object();
  // Negativity step of the two-site model at T/J = 1e-3: the field where the
  // negativity falls through 1/4 should sit at B = J within 2%.
  if (m.model == "nbl") {
    std::map<double, std::vector<std::pair<double, double>>> byJ;
    for (const auto& r : m.records) {
      if (!r.ok) continue;
      try {
        const auto c = m.curve(r);
        double best = INFINITY, neg = NAN;
        for (const auto& row : c.rows) {
          const double d = std::abs(std::log(row.T / (1e-3 * r.J)));
          if (d < best) {
            best = d;
            neg = row.neg_local;
          }
        }
        if (best < 0.05) byJ[r.J].push_back({r.B, neg});
      } catch (const std::exception&) {
      }
    }
    for (auto& [J, v] : byJ) {
      std::sort(v.begin(), v.end());
      std::optional<double> step;
      for (std::size_t i = 0; i + 1 < v.size(); ++i)
        if (v[i].second >= 0.25 && v[i + 1].second < 0.25) {
          const double w = (v[i].second - 0.25) / (v[i].second - v[i + 1].second);
          step = v[i].first + w * (v[i + 1].first - v[i].first);
          break;
        }
      const std::string key = "nbl_negativity_step_J" + fmt(J);
      checks[key] = step ? json{{"B_step", *step}, {"pass", std::abs(*step - J) / J < 0.02}}
                         : json{{"B_step", nullptr}, {"pass", false}};
    }
  }
  if (m.model == "free_spin") {
    bool all = true, any = false;
    for (const auto& e : curves)
      if (e.contains("checks")) {
        any = true;
        all = all && e["checks"]["free_spin_peak"].get<bool>();
      }
    if (any) checks["free_spin_peak"] = all;
  }
  rep.body = {{"schema", 1},
              {"model", m.model},
              {"config_hash", m.config_hash},
              {"curves", curves},
              {"checks", checks},
              {"missing", missing}};
  return rep;
}

} // namespace thermo::cli
