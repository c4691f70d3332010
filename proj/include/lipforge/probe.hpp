#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "lipforge/game.hpp"

namespace lipforge {

/// Finite stand-in for r → 0+: strictly decreasing positive radii, a sample
/// budget per radius, and the sampling seed.
struct ScaleLadder {
  std::vector<Real> radii;
  std::size_t budget = 64;
  std::uint64_t seed = 1;

  static ScaleLadder geometric(const Real& r0, const Real& ratio, std::size_t count, std::size_t budget = 64,
                               std::uint64_t seed = 1) {
    if (!(r0 > 0)) throw Error("ladder: starting radius must be positive");
    if (!(ratio > 0 && ratio < 1)) throw Error("ladder: ratio must lie in (0,1)");
    ScaleLadder l{{}, budget, seed};
    Real r = r0;
    for (std::size_t i = 0; i < count; ++i, r *= ratio) l.radii.push_back(r);
    return l;
  }

  /// Adds exact scales (for instance the α_k of a transcript) and restores order.
  ScaleLadder with(const std::vector<Real>& extra) const {
    ScaleLadder l = *this;
    l.radii.insert(l.radii.end(), extra.begin(), extra.end());
    std::sort(l.radii.begin(), l.radii.end(), std::greater<>());
    l.radii.erase(std::unique(l.radii.begin(), l.radii.end()), l.radii.end());
    return l;
  }

  void validate() const {
    if (radii.empty()) throw Error("ladder: no radii");
    for (std::size_t i = 0; i < radii.size(); ++i) {
      if (!(radii[i] > 0)) throw Error("ladder: radii must be positive");
      if (i > 0 && !(radii[i] < radii[i - 1])) throw Error("ladder: radii must be strictly decreasing");
    }
  }
};

/// Geometric ladder from half the boundary margin of x, ratio 1/2, 20 steps.
inline ScaleLadder default_ladder(const Vec& x, const Domain& domain, std::size_t steps = 20, std::size_t budget = 64,
                                  std::uint64_t seed = 1) {
  const Real margin = domain.dist_to_boundary(x);
  if (!(margin > 0)) throw Error("ladder: point lies on the boundary");
  return ScaleLadder::geometric(margin / 2, Real(0.5), steps, budget, seed);
}

/// Sampled sup over u ∈ B̄(0,r) of ‖f(x+u) − f(x) − Lu‖/r. Arithmetic runs at
/// enough precision to resolve offsets of size r around x; the global
/// precision setting is only read.
inline Real dq_error(const LipFun& f, const Vec& x, const LinearMap& L, const Real& r, const Domain& domain,
                     std::size_t budget = 64, std::uint64_t seed = 1) {
  if (x.size() != f.in_dim() || L.cols() != f.in_dim() || L.rows() != f.out_dim()) throw Error("dimension mismatch");
  if (!(r > 0)) throw Error("dq_error: radius must be positive");
  if (!domain.contains(x) || domain.dist_to_boundary(x) < r) throw Error("ball escapes domain");
  const long bits = bits_for_scale(r, max_abs(x));
  const Real rp = with_bits(r, std::max(precision_of(r), bits));
  const Vec xp = at_least_bits(x, bits);
  const Vec fx = f(xp);
  Real worst(0);
  for (const auto& w : ball_offsets(x.size(), Real(1), domain.norm_kind(), budget, seed)) {
    const Vec z = xp + rp * w;
    const Vec u = z - xp;
    worst = std::max(worst, Real(norm(f(z) - fx - L.apply(u), L.out_norm()) / rp));
  }
  return worst;
}

struct DqProfile {
  std::vector<Real> scales;
  std::vector<Real> values;
  /// min over the ladder: evidence for L ∈ 𝒟_f(x) at these scales only.
  Real score;
};

inline DqProfile dq_profile(const LipFun& f, const Vec& x, const LinearMap& L, const ScaleLadder& ladder,
                            const Domain& domain) {
  ladder.validate();
  DqProfile out{ladder.radii, {}, infinity()};
  for (std::size_t i = 0; i < ladder.radii.size(); ++i) {
    out.values.push_back(dq_error(f, x, L, ladder.radii[i], domain, ladder.budget, mix_seed(ladder.seed, i)));
    out.score = std::min(out.score, out.values.back());
  }
  return out;
}

struct DiniValue {
  std::vector<Real> scales;
  std::vector<Real> quotients;
  /// min over the ladder of (f(x+tv) − f(x))/t.
  Real value;
};

/// Ladder surrogate for the lower Dini derivative f₊(x; v) of a scalar f.
inline DiniValue dini_lower(const LipFun& f, const Vec& x, const Vec& v, const ScaleLadder& ladder,
                            const Domain& domain) {
  if (f.out_dim() != 1) throw Error("codomain not scalar");
  if (x.size() != f.in_dim() || v.size() != f.in_dim()) throw Error("dimension mismatch");
  ladder.validate();
  DiniValue out{ladder.radii, {}, infinity()};
  const Real vn = norm(v, domain.norm_kind());
  for (const auto& t : ladder.radii) {
    const long bits = bits_for_scale(vn > 0 ? Real(t * vn) : t, max_abs(x));
    const Real tp = with_bits(t, std::max(precision_of(t), bits));
    const Vec xp = at_least_bits(x, bits);
    const Vec z = xp + tp * v;
    if (!domain.contains(z)) throw Error("ladder leaves domain");
    const Real q = (f(z)[0] - f(xp)[0]) / tp;
    out.quotients.push_back(q);
    out.value = std::min(out.value, q);
  }
  return out;
}

inline constexpr double kDiniTolerance = 1e-6;

struct DiniReport {
  bool fires = false;
  DiniValue plus;   // along v
  DiniValue minus;  // along −v
};

/// Fires when f₊(x;v) < −tol and f₊(x;−v) < −tol, which leaves the Dini
/// subgradient at x empty at the ladder's resolution.
inline DiniReport dini_empty_certificate(const LipFun& f, const Vec& x, const Vec& v, const ScaleLadder& ladder,
                                         const Domain& domain, double tol = kDiniTolerance) {
  DiniReport r{false, dini_lower(f, x, v, ladder, domain), dini_lower(f, x, -v, ladder, domain)};
  r.fires = r.plus.value < -tol && r.minus.value < -tol;
  return r;
}

struct LocalLinearFit {
  std::size_t index = 0;
  Real error;
  std::vector<Real> errors;
};

/// argmin over candidates of dq_error(f, x, ·, q); the first candidate wins ties.
inline LocalLinearFit best_local_linear(const LipFun& f, const Vec& x, const Real& q,
                                        const std::vector<LinearMap>& candidates, const Domain& domain,
                                        std::size_t budget = 64, std::uint64_t seed = 1) {
  if (candidates.empty()) throw Error("empty candidates");
  LocalLinearFit fit{0, infinity(), {}};
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    fit.errors.push_back(dq_error(f, x, candidates[i], q, domain, budget, seed));
    if (fit.errors.back() < fit.error) {
      fit.error = fit.errors.back();
      fit.index = i;
    }
  }
  return fit;
}

/// The proof's bound at a witness: dq_error(g_K, x, L_{n(k)}, α_k) ≤ 4/k.
struct WitnessCheck {
  Witness witness;
  Real value;
  Real bound;
  bool passed = false;
};

inline constexpr double kWitnessSlack = 1e-9;

inline WitnessCheck check_witness(const GameTranscript& t, const Witness& w, std::size_t budget = 64,
                                  std::uint64_t seed = 1) {
  const Real value = dq_error(t.final_function(), w.x, t.operators[w.op], w.alpha, t.domain, budget, seed);
  const Real bound = Real(4) / w.k;
  return {w, value, bound, value <= bound + kWitnessSlack};
}

/// All α_k of a transcript, for injection into probe ladders.
inline std::vector<Real> transcript_scales(const GameTranscript& t) {
  std::vector<Real> out;
  for (const auto& rec : t.rounds) out.push_back(rec.alpha);
  return out;
}

struct ProbeRow {
  Vec x;
  std::string op;
  Real scale;
  Real value;
};

/// Columns x1…xd, L, scale, dq, then free-form summary rows prefixed "#".
inline void write_probe_csv(std::ostream& os, const std::vector<ProbeRow>& rows,
                            const std::vector<std::pair<std::string, std::string>>& summary = {}) {
  const std::size_t d = rows.empty() ? 0 : rows.front().x.size();
  for (std::size_t i = 1; i <= d; ++i) os << "x" << i << ",";
  os << "L,scale,dq\n";
  for (const auto& r : rows) {
    for (const auto& c : r.x) os << to_display(c) << ",";
    os << r.op << "," << to_display(r.scale) << "," << to_display(r.value) << "\n";
  }
  for (const auto& [k, v] : summary) os << "# " << k << "," << v << "\n";
}

}  // namespace lipforge
