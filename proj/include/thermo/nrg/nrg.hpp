#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thermo/bath/discretize.hpp"
#include "thermo/core/curve.hpp"
#include "thermo/core/errors.hpp"
#include "thermo/core/interp.hpp"
#include "thermo/core/negativity.hpp"
#include "thermo/metrology/metrology.hpp"
#include "thermo/nrg/shell.hpp"

namespace thermo::nrg {

struct NrgParams {
  double J = 0.3;
  double B = 0.0;
  WilsonChain chain;
  int N_s = 600;            // <= 0 means no truncation (small test chains only)
  int N_max = -1;           // number of chain sites used; -1: the whole chain
  double beta_bar = 0.7;
  bool interleave = false;  // second output point per shell at T_N Lambda^{-1/4}
  bool track_rdm = false;
  bool store_bases = false;
  bool reference = true;    // free-chain reference run for S_imp
  int max_sector_dim = 20000;

  int sites() const { return N_max < 0 ? static_cast<int>(chain.sites()) : N_max; }

  void validate() const {
    if (!(chain.lambda > 1.0)) throw ValidationError("Lambda must exceed 1");
    if (N_s > 0 && N_s < 100) throw ValidationError("N_s must be at least 100 (or <= 0 for no truncation)");
    if (!(beta_bar >= 0.4 && beta_bar <= 1.5)) throw ValidationError("beta_bar must lie in [0.4, 1.5]");
    if (sites() < 1 || sites() > static_cast<int>(chain.sites()))
      throw ValidationError("N_max exceeds the Wilson chain length");
    if (!std::isfinite(J) || !std::isfinite(B)) throw ValidationError("J and B must be finite");
  }

  StepOptions step_options() const {
    StepOptions o;
    o.N_s = N_s;
    o.max_sector_dim = max_sector_dim;
    o.store_bases = store_bases;
    return o;
  }
};

// Number of chain sites whose last shell temperature lies below T.
inline int sites_for_temperature(double T, double lambda, double beta_bar = 0.7, double D = 1.0) {
  if (!(T > 0.0)) throw ValidationError("temperature must be positive");
  int N = 0;
  while (shell_scale(N, lambda, D) / beta_bar >= T) ++N;
  return N + 1;
}

// Wilson chain of `n_sites` sites from a logarithmic discretization deep
// enough to supply that many poles.
template <class Real = wide_float>
WilsonChain chain_for(const DosSpec& dos, double lambda, int n_sites) {
  const auto bath = discretize_log(dos, lambda, n_sites / 2 + 12);
  return wilson_chain<Real>(bath, static_cast<std::size_t>(n_sites));
}

struct NrgRun {
  NrgParams params;
  std::vector<ShellSpectrum> shells;
  std::vector<ShellSpectrum> reference;  // J = 0, no impurity, B on site 0 only
  std::vector<std::string> warnings;
};

// Iterate the chain; only the last shell keeps its kept-state blocks unless
// bases are stored.
inline std::vector<ShellSpectrum> iterate_chain(const NrgParams& p, bool impurity) {
  const auto o = p.step_options();
  std::vector<ShellSpectrum> out;
  out.push_back(build_h0(impurity ? p.J : 0.0, p.B, p.chain, impurity, impurity && p.track_rdm, o));
  for (int n = 1; n < p.sites(); ++n) {
    out.push_back(nrg_step(out.back(), p.chain.t[n - 1], p.chain.eps[n], p.chain.lambda, o));
    if (!p.store_bases) {
      auto& prev = out[out.size() - 2];
      prev.ops.clear();
      prev.fdag = {};
    }
  }
  return out;
}

inline NrgRun run_nrg(const NrgParams& p) {
  p.validate();
  NrgRun run;
  run.params = p;
  run.shells = iterate_chain(p, true);
  if (p.reference) run.reference = iterate_chain(p, false);
  return run;
}

struct ShellThermo {
  double T = 0.0;
  double lnZ = 0.0;  // physical, including the energy offset
  double E = 0.0;    // physical <H>
  double S = 0.0;
  double m = 0.0;
  double dm_dT = 0.0;  // d/dT of this shell's m at fixed shell (thermal covariance)
  std::vector<double> ops;  // thermal averages of all tracked operators
};

// Thermal averages over every state (kept and discarded) of one shell.
inline ShellThermo shell_thermo(const ShellSpectrum& sh, double T) {
  if (!(T > 0.0)) throw ValidationError("temperature must be positive");
  const double b = sh.scale / T;
  ShellThermo r;
  r.T = T;
  r.ops.assign(sh.n_ops, 0.0);
  double Z = 0, Eb = 0, sE = 0;
  for (const auto& [k, blk] : sh.sectors)
    for (int i = 0; i < blk.E.size(); ++i) {
      const double w = std::exp(-b * blk.E[i]);
      Z += w;
      Eb += w * blk.E[i];
      for (int x = 0; x < sh.n_ops; ++x) r.ops[x] += w * blk.op_diag[x][i];
      if (sh.n_ops > 0) sE += w * blk.op_diag[kSz][i] * blk.E[i];
    }
  for (auto& v : r.ops) v /= Z;
  Eb /= Z;
  sE /= Z;
  r.lnZ = std::log(Z) - sh.offset / T;
  r.E = sh.scale * Eb + sh.offset;
  r.S = std::log(Z) + b * Eb;
  if (sh.n_ops > 0) {
    r.m = r.ops[kSz];
    r.dm_dT = sh.scale * (sE - r.m * Eb) / (T * T);
  }
  return r;
}

// Shell temperatures: T_N = scale_N / beta_bar, optionally interleaved.
inline std::vector<std::pair<int, double>> shell_temperatures(const NrgRun& run) {
  std::vector<std::pair<int, double>> out;
  const double q = std::pow(run.params.chain.lambda, -0.25);
  for (const auto& sh : run.shells) {
    const double T = sh.scale / run.params.beta_bar;
    out.push_back({sh.N, T});
    if (run.params.interleave) out.push_back({sh.N, T * q});
  }
  return out;
}

// Local density matrix of impurity (x) site 0 from the tracked operators,
// basis index 4 i + s.
inline Eigen::MatrixXd local_rdm_from_ops(const std::vector<double>& ops) {
  if (static_cast<int>(ops.size()) < kRdmFirst + kRdmCount)
    throw ValidationError("local density matrix was not tracked in this run");
  Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(8, 8);
  for (int a = 0; a < 8; ++a) rho(a, a) = ops[kRdmFirst + a];
  rho(2, 5) = rho(5, 2) = ops[kRdmFirst + 8];
  return rho;
}

inline double local_negativity_at(const ShellThermo& th) { return negativity(local_rdm_from_ops(th.ops), 2, 4); }

inline ThermoCurve thermodynamics(const NrgRun& run) {
  const auto& p = run.params;
  ThermoCurve c;
  std::ostringstream prov;
  prov << "nrg J=" << p.J << " B=" << p.B << " lambda=" << p.chain.lambda << " N_s=" << p.N_s
       << " N_max=" << p.sites() << " beta_bar=" << p.beta_bar << " dos=" << p.chain.dos_ref;
  c.provenance = prov.str();
  c.warnings = run.warnings;
  for (const auto& [N, T] : shell_temperatures(run)) {
    const auto th = shell_thermo(run.shells[N], T);
    ThermoRecord r;
    r.T = T;
    r.m_imp = th.m;
    r.dm_dT = th.dm_dT;
    if (!run.reference.empty()) r.s_imp = th.S - shell_thermo(run.reference[N], T).S;
    if (p.track_rdm) r.neg_local = local_negativity_at(th);
    c.rows.push_back(r);
  }
  // The fixed-shell covariance is not the derivative of the physical curve
  // (each shell only resolves energies near its own scale), so dm/dT is taken
  // along the shell sequence.
  if (c.rows.size() >= 5) {
    auto prov = c.provenance;
    c = with_sensitivity(temperature_derivative(std::move(c)));
    c.provenance = prov;
  } else {
    c = with_sensitivity(std::move(c));
  }
  // Truncation discontinuity: m at T_{N+1} from shell N versus shell N+1.
  for (std::size_t n = 0; n + 1 < run.shells.size(); ++n) {
    if (!run.shells[n].truncated) continue;
    const double T = run.shells[n + 1].scale / p.beta_bar;
    const double a = shell_thermo(run.shells[n], T).m;
    const double b = shell_thermo(run.shells[n + 1], T).m;
    if (std::abs(a - b) > 1e-6 && std::abs(a - b) > 0.05 * std::abs(b)) {
      std::ostringstream w;
      w << "truncation discontinuity of " << std::abs(a - b) << " in m between shells " << n << " and " << n + 1
        << "; increase N_s";
      c.warnings.push_back(w.str());
      break;
    }
  }
  return c;
}

struct InterpolatedCurve : ThermoCurve {
  std::vector<double> interp_error;  // |cubic - linear| estimate for m per row
};

// Resample a shell curve to requested temperatures by cubic interpolation in
// ln T (all columns present on the source curve).
inline InterpolatedCurve resample(const ThermoCurve& src, std::vector<double> T_list) {
  if (T_list.empty()) throw ValidationError("empty temperature list");
  std::sort(T_list.begin(), T_list.end(), std::greater<>());
  const auto T = src.T();
  const double tmin = *std::min_element(T.begin(), T.end()), tmax = *std::max_element(T.begin(), T.end());
  for (double t : T_list)
    if (t < tmin * (1 - 1e-12) || t > tmax * (1 + 1e-12)) {
      std::ostringstream m;
      m << "requested T=" << t << " outside the reached range [" << tmin << ", " << tmax << "]";
      throw RangeError(m.str());
    }
  auto col = [&](auto f) -> std::optional<LogInterp> {
    auto v = src.column(f);
    for (double x : v)
      if (!std::isfinite(x)) return std::nullopt;
    return LogInterp(T, v);
  };
  const auto im = col([](const ThermoRecord& r) { return r.m_imp; });
  const auto is = col([](const ThermoRecord& r) { return r.s_imp; });
  const auto id = col([](const ThermoRecord& r) { return r.dm_dT; });
  const auto in = col([](const ThermoRecord& r) { return r.neg_local; });
  InterpolatedCurve out;
  out.provenance = src.provenance + " resampled";
  out.warnings = src.warnings;
  for (double t : T_list) {
    ThermoRecord r;
    r.T = t;
    r.m_imp = std::clamp((*im)(t), -0.5, 0.5);
    if (is) r.s_imp = (*is)(t);
    if (id) r.dm_dT = (*id)(t);
    if (in) r.neg_local = (*in)(t);
    if (std::isfinite(r.dm_dT)) {
      r.qfi = std::abs(r.m_imp) >= 0.5 - 1e-12 ? 0.0 : qfi_two_level(r.m_imp, r.dm_dT);
      r.qsnr = qsnr(t, r.qfi);
    }
    out.rows.push_back(r);
    out.interp_error.push_back(im->error_estimate(t));
  }
  return out;
}

inline InterpolatedCurve magnetization_curve(const NrgParams& p, const std::vector<double>& T_list) {
  return resample(thermodynamics(run_nrg(p)), T_list);
}

// Shell whose natural temperature scale_N / beta_bar is closest to T in log
// space; below the lowest shell temperature the last shell is used (its
// low-lying spectrum governs the T -> 0 limit).
inline int shell_for_temperature(const NrgRun& run, double T) {
  int best = 0;
  double d = INFINITY;
  for (const auto& sh : run.shells) {
    const double x = std::abs(std::log(sh.scale / run.params.beta_bar / T));
    if (x < d) {
      d = x;
      best = sh.N;
    }
  }
  return best;
}

inline Eigen::MatrixXd local_rdm(const NrgRun& run, double T) {
  if (!run.params.track_rdm) throw ValidationError("run did not track the local density matrix");
  return local_rdm_from_ops(shell_thermo(run.shells[shell_for_temperature(run, T)], T).ops);
}

// Impurity / site-0 negativity from the thermal state of the shell matching T.
inline double rdm_negativity_local(const NrgRun& run, double T) {
  return std::clamp(negativity(local_rdm(run, T), 2, 4), 0.0, 0.5);
}

// Same density matrix by explicit backward propagation of the thermal state
// of `shell` through the stored bases (requires store_bases).
inline Eigen::MatrixXd local_rdm_backward(const NrgRun& run, int shell, double T) {
  if (!run.params.store_bases) throw ValidationError("backward propagation needs stored bases");
  const auto& last = run.shells.at(shell);
  const double b = last.scale / T;
  // rho per sector in the eigenbasis of the current shell.
  std::map<Sector, Eigen::MatrixXd> rho;
  double Z = 0;
  for (const auto& [k, blk] : last.sectors) Z += (-b * blk.E.array()).exp().sum();
  for (const auto& [k, blk] : last.sectors)
    rho[k] = ((-b * blk.E.array()).exp() / Z).matrix().asDiagonal();
  for (int n = shell; n >= 0; --n) {
    const auto& sh = run.shells[n];
    std::map<Sector, Eigen::MatrixXd> prod;  // product basis of shell n
    for (auto& [k, r] : rho) {
      const auto& blk = sh.sectors.at(k);
      const int c = static_cast<int>(r.cols());
      prod[k] = blk.U.leftCols(c) * r * blk.U.leftCols(c).transpose();
    }
    if (n == 0) {
      Eigen::MatrixXd out = Eigen::MatrixXd::Zero(8, 8);
      for (auto& [k, r] : prod) {
        const auto& segs = sh.sectors.at(k).segments;
        for (const auto& a : segs)
          for (const auto& c : segs) {
            const int ia = 4 * (a.prev.Sz2 > 0 ? 0 : 1) + a.s, ic = 4 * (c.prev.Sz2 > 0 ? 0 : 1) + c.s;
            out(ia, ic) = r(a.offset, c.offset);
          }
      }
      return out;
    }
    // Trace out site n: sum the diagonal site-state blocks.
    std::map<Sector, Eigen::MatrixXd> next;
    for (auto& [k, r] : prod)
      for (const auto& seg : sh.sectors.at(k).segments) {
        auto blk = r.block(seg.offset, seg.offset, seg.size, seg.size);
        auto it = next.find(seg.prev);
        if (it == next.end())
          next[seg.prev] = blk;
        else
          it->second += blk;
      }
    rho = std::move(next);
  }
  return {};
}

} // namespace thermo::nrg
