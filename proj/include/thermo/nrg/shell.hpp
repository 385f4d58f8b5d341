#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thermo/bath/wilson_chain.hpp"
#include "thermo/core/errors.hpp"

namespace thermo::nrg {

// Abelian quantum numbers: charge relative to half filling and 2 S^z.
struct Sector {
  int Q = 0;
  int Sz2 = 0;
  auto operator<=>(const Sector&) const = default;
};

namespace site {
// Local states 0 = empty, 1 = up, 2 = down, 3 = up+down (= f_up^+ f_dn^+ |0>).
constexpr int q[4] = {-1, 0, 0, 1};
constexpr int sz2[4] = {0, 1, -1, 0};
constexpr int n[4] = {0, 1, 1, 2};
constexpr int spin_sz2[2] = {1, -1};  // sigma = 0 (up), 1 (down)

// f_sigma^+ |s> = sign |out>; returns -1 when the state is annihilated.
inline int raise(int s, int sigma, int& sign) {
  sign = 1;
  if (sigma == 0) {
    if (s == 0) return 1;
    if (s == 2) return 3;
    return -1;
  }
  if (s == 0) return 2;
  if (s == 1) {
    sign = -1;
    return 3;
  }
  return -1;
}
} // namespace site

using BlockOp = std::map<Sector, Eigen::MatrixXd>;

// Product-basis layout of a sector: rows [offset, offset + size) hold the
// kept states of `prev` with site state `s` added as the leftmost operator.
struct Segment {
  Sector prev;
  int s = 0;
  int offset = 0;
  int size = 0;
};

struct SectorBlock {
  Eigen::VectorXd E;  // ascending, rescaled, shell ground state at 0
  int kept = 0;
  std::vector<Segment> segments;
  Eigen::MatrixXd U;               // eigenvectors in the product basis (stored on request)
  std::vector<Eigen::VectorXd> op_diag;  // <k|X|k> for every tracked operator, all states
};

// Tracked operators: index 0 is S_I^z; when the local density matrix is
// tracked, indices 1..8 are the projectors |a><a| on impurity (x) site 0 in
// the basis a = 4 i + s (i = 0 up, 1 down) and index 9 is |dn,up><up,dn|.
inline constexpr int kSz = 0;
inline constexpr int kRdmFirst = 1;
inline constexpr int kRdmCount = 9;

struct ShellSpectrum {
  int N = 0;
  double scale = 1.0;   // physical energy = scale * E + offset
  double offset = 0.0;
  std::map<Sector, SectorBlock> sectors;
  std::array<BlockOp, 2> fdag;  // keyed by source sector, kept x kept
  std::vector<BlockOp> ops;     // kept x kept blocks of tracked operators
  bool truncated = false;
  int n_ops = 1;

  std::size_t total_states() const {
    std::size_t n = 0;
    for (auto& [k, b] : sectors) n += b.E.size();
    return n;
  }
  std::size_t kept_states() const {
    std::size_t n = 0;
    for (auto& [k, b] : sectors) n += b.kept;
    return n;
  }
  // Sorted physical energies of all states, for spectrum comparisons.
  std::vector<double> physical_energies() const {
    std::vector<double> e;
    for (auto& [k, b] : sectors)
      for (int i = 0; i < b.E.size(); ++i) e.push_back(scale * b.E[i] + offset);
    std::sort(e.begin(), e.end());
    return e;
  }
};

struct StepOptions {
  int N_s = 600;                 // <= 0: keep everything
  double degeneracy_tol = 1e-10;
  double gap_window = 0.1;       // cut in the widest gap among states N_s .. (1 + gap_window) N_s
  int max_sector_dim = 20000;
  bool store_bases = false;
};

// Rescaling factor of shell N for band half-width D.
inline double shell_scale(int N, double lambda, double D = 1.0) {
  return D * 0.5 * (1.0 + 1.0 / lambda) * std::pow(lambda, -0.5 * (N - 1));
}

namespace detail {

inline void truncate(ShellSpectrum& sh, const StepOptions& o) {
  std::vector<double> all;
  for (auto& [k, b] : sh.sectors)
    for (int i = 0; i < b.E.size(); ++i) all.push_back(b.E[i]);
  std::sort(all.begin(), all.end());
  if (o.N_s <= 0 || static_cast<int>(all.size()) <= o.N_s) {
    for (auto& [k, b] : sh.sectors) b.kept = static_cast<int>(b.E.size());
    sh.truncated = false;
    return;
  }
  // A field splits multiplets by far more than the degeneracy tolerance, so
  // cutting right after state N_s can separate Zeeman partners and leave a
  // spurious polarization. The cut goes into the widest gap just above N_s.
  const std::size_t first = o.N_s - 1;
  const std::size_t last =
      std::min(all.size() - 2, static_cast<std::size_t>(std::ceil((1.0 + o.gap_window) * o.N_s)) - 1);
  std::size_t at = first;
  for (std::size_t i = first; i <= last; ++i)
    if (all[i + 1] - all[i] > all[at + 1] - all[at]) at = i;
  const double gap = all[at + 1] - all[at];
  const double cut = gap > o.degeneracy_tol ? all[at] + 0.5 * gap : all[at] + o.degeneracy_tol;
  std::size_t kept = 0;
  for (auto& [k, b] : sh.sectors) {
    int c = 0;
    while (c < b.E.size() && b.E[c] <= cut) ++c;
    b.kept = c;
    kept += c;
  }
  sh.truncated = kept < all.size();
}

// Diagonalize H per sector, rezero, truncate, then project tracked operators
// (given per sector in the product basis as a callback) and new-site f^+.
template <class ProductOp>
void finish_shell(ShellSpectrum& sh, std::map<Sector, Eigen::MatrixXd>& H, const StepOptions& o, int n_ops,
                  ProductOp&& product_op) {
  std::map<Sector, Eigen::MatrixXd> U;
  double emin = INFINITY;
  for (auto& [k, h] : H) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    if (es.info() != Eigen::Success) throw Error("sector diagonalization failed");
    sh.sectors[k].E = es.eigenvalues();
    U[k] = es.eigenvectors();
    emin = std::min(emin, es.eigenvalues()[0]);
  }
  for (auto& [k, b] : sh.sectors) b.E.array() -= emin;
  sh.offset += sh.scale * emin;
  truncate(sh, o);

  sh.n_ops = n_ops;
  sh.ops.assign(n_ops, {});
  for (auto& [k, b] : sh.sectors) {
    const Eigen::MatrixXd& u = U[k];
    const int kk = b.kept;
    b.op_diag.assign(n_ops, {});
    for (int x = 0; x < n_ops; ++x) {
      const Eigen::MatrixXd XU = product_op(x, k, b, u);
      b.op_diag[x] = u.cwiseProduct(XU).colwise().sum().transpose();
      if (kk > 0) sh.ops[x][k] = u.leftCols(kk).transpose() * XU.leftCols(kk);
    }
  }
  // New-site creation operators between kept states.
  for (int sigma = 0; sigma < 2; ++sigma)
    for (auto& [src, bs] : sh.sectors) {
      if (bs.kept == 0) continue;
      const Sector dst{src.Q + 1, src.Sz2 + site::spin_sz2[sigma]};
      auto it = sh.sectors.find(dst);
      if (it == sh.sectors.end() || it->second.kept == 0) continue;
      const auto& bd = it->second;
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(bd.kept, bs.kept);
      for (const auto& seg : bs.segments) {
        int sign;
        const int s2 = site::raise(seg.s, sigma, sign);
        if (s2 < 0) continue;
        for (const auto& tseg : bd.segments)
          if (tseg.prev == seg.prev && tseg.s == s2) {
            A += sign * U[dst].block(tseg.offset, 0, tseg.size, bd.kept).transpose() *
                 U[src].block(seg.offset, 0, seg.size, bs.kept);
            break;
          }
      }
      sh.fdag[sigma][src] = std::move(A);
    }
  if (o.store_bases)
    for (auto& [k, b] : sh.sectors) b.U = std::move(U[k]);
}

} // namespace detail

// Impurity spin (or none) coupled to site 0:
//   J S_I.S_0 + B (S_I^z + S_0^z) + eps_0 n_0, rescaled by the shell-0 scale.
inline ShellSpectrum build_h0(double J, double B, const WilsonChain& chain, bool impurity = true,
                              bool track_rdm = false, const StepOptions& o = {}) {
  if (chain.sites() < 1) throw ValidationError("empty Wilson chain");
  ShellSpectrum sh;
  sh.N = 0;
  sh.scale = shell_scale(0, chain.lambda, chain.D);
  const double eps0 = chain.eps[0];
  const int ni = impurity ? 2 : 1;
  const int n_ops = impurity ? (track_rdm ? 1 + kRdmCount : 1) : 0;

  // Product states (i, s); pseudo-sector of the impurity is (0, +-1).
  auto imp_sector = [&](int i) { return impurity ? Sector{0, i == 0 ? 1 : -1} : Sector{0, 0}; };
  auto imp_sz = [&](int i) { return impurity ? (i == 0 ? 0.5 : -0.5) : 0.0; };
  std::map<Sector, std::vector<std::pair<int, int>>> members;
  for (int i = 0; i < ni; ++i)
    for (int s = 0; s < 4; ++s) {
      const Sector k{site::q[s], imp_sector(i).Sz2 + site::sz2[s]};
      members[k].push_back({i, s});
    }
  std::map<Sector, Eigen::MatrixXd> H;
  for (auto& [k, mem] : members) {
    const int d = static_cast<int>(mem.size());
    auto& blk = sh.sectors[k];
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
    for (int a = 0; a < d; ++a) {
      const auto [i, s] = mem[a];
      blk.segments.push_back({imp_sector(i), s, a, 1});
      const double s0 = 0.5 * site::sz2[s];
      h(a, a) = J * imp_sz(i) * s0 + B * (imp_sz(i) + s0) + eps0 * site::n[s];
    }
    // Spin flip J/2 (S_I^+ S_0^- + h.c.) between |up, dn> and |dn, up>.
    if (impurity)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          if (mem[a].first == 0 && mem[a].second == 2 && mem[b].first == 1 && mem[b].second == 1)
            h(a, b) = h(b, a) = 0.5 * J;
    H[k] = h / sh.scale;
  }
  detail::finish_shell(sh, H, o, n_ops,
                       [&](int x, const Sector& k, const SectorBlock& b, const Eigen::MatrixXd& u) {
                         const auto& mem = members[k];
                         const int d = static_cast<int>(mem.size());
                         Eigen::MatrixXd X = Eigen::MatrixXd::Zero(d, d);
                         for (int a = 0; a < d; ++a) {
                           const int idx = 4 * mem[a].first + mem[a].second;
                           if (x == kSz) X(a, a) = imp_sz(mem[a].first);
                           else if (x - kRdmFirst < 8 && x - kRdmFirst == idx) X(a, a) = 1.0;
                         }
                         if (x == kRdmFirst + 8)
                           for (int a = 0; a < d; ++a)
                             for (int c = 0; c < d; ++c)
                               if (4 * mem[a].first + mem[a].second == 4 + 1 &&
                                   4 * mem[c].first + mem[c].second == 0 + 2)
                                 X(a, c) = 1.0;
                         (void)b;
                         return Eigen::MatrixXd(X * u);
                       });
  return sh;
}

// One iteration: add site N+1 with hopping t (physical, between sites N and
// N+1) and on-site energy eps (physical), rescale by sqrt(Lambda), diagonalize
// per sector and truncate.
inline ShellSpectrum nrg_step(const ShellSpectrum& prev, double t, double eps, double lambda,
                              const StepOptions& o = {}) {
  ShellSpectrum sh;
  sh.N = prev.N + 1;
  sh.scale = prev.scale / std::sqrt(lambda);
  sh.offset = prev.offset;
  const double sl = std::sqrt(lambda);
  const double tt = t / sh.scale, ee = eps / sh.scale;

  // Layout of the new sectors.
  for (const auto& [r, b] : prev.sectors) {
    if (b.kept == 0) continue;
    for (int s = 0; s < 4; ++s) {
      const Sector k{r.Q + site::q[s], r.Sz2 + site::sz2[s]};
      auto& blk = sh.sectors[k];
      const int off = blk.segments.empty() ? 0 : blk.segments.back().offset + blk.segments.back().size;
      blk.segments.push_back({r, s, off, b.kept});
    }
  }
  std::map<Sector, Eigen::MatrixXd> H;
  for (auto& [k, blk] : sh.sectors) {
    const int d = blk.segments.back().offset + blk.segments.back().size;
    if (d > o.max_sector_dim)
      throw ValidationError("sector dimension " + std::to_string(d) + " exceeds the guard " +
                            std::to_string(o.max_sector_dim));
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
    for (const auto& seg : blk.segments) {
      const auto& pb = prev.sectors.at(seg.prev);
      for (int i = 0; i < seg.size; ++i) h(seg.offset + i, seg.offset + i) = sl * pb.E[i] + ee * site::n[seg.s];
    }
    // <r_hi; s| f_N^+ f_{N+1} |r_lo; s+sigma> = eta(s, sigma) (-1)^{n(s)} A^sigma[r_hi, r_lo].
    for (const auto& a : blk.segments)
      for (int sigma = 0; sigma < 2; ++sigma) {
        int sign;
        const int s2 = site::raise(a.s, sigma, sign);
        if (s2 < 0) continue;
        const Sector lo{a.prev.Q - 1, a.prev.Sz2 - site::spin_sz2[sigma]};
        auto fit = prev.fdag[sigma].find(lo);
        if (fit == prev.fdag[sigma].end()) continue;
        for (const auto& b : blk.segments)
          if (b.prev == lo && b.s == s2) {
            const double c = tt * sign * ((site::n[a.s] % 2) ? -1.0 : 1.0);
            h.block(a.offset, b.offset, a.size, b.size) = c * fit->second;
            h.block(b.offset, a.offset, b.size, a.size) = c * fit->second.transpose();
            break;
          }
      }
    H[k] = std::move(h);
  }
  detail::finish_shell(sh, H, o, prev.n_ops,
                       [&](int x, const Sector& k, const SectorBlock& b, const Eigen::MatrixXd& u) {
                         (void)k;
                         Eigen::MatrixXd XU(u.rows(), u.cols());
                         for (const auto& seg : b.segments) {
                           auto it = prev.ops[x].find(seg.prev);
                           XU.middleRows(seg.offset, seg.size) = it->second * u.middleRows(seg.offset, seg.size);
                         }
                         return XU;
                       });
  return sh;
}

} // namespace thermo::nrg
