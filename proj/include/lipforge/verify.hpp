#pragma once

#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lipforge/parallel.hpp"
#include "lipforge/probe.hpp"

namespace lipforge {

// Invariant suites shared by the verify command and the test binaries. A
// suite records every invariant it checks; the first failing one names the
// failure.

struct Check {
  std::string invariant;
  bool passed = true;
  std::string detail;
};

struct SuiteResult {
  std::string name;
  std::vector<Check> checks;

  bool passed() const { return first_failure() == nullptr; }
  const Check* first_failure() const {
    for (const auto& c : checks)
      if (!c.passed) return &c;
    return nullptr;
  }
  /// Records `invariant` once; later calls can only turn it into a failure.
  void check(const std::string& invariant, bool ok, const std::string& detail = {}) {
    for (auto& c : checks)
      if (c.invariant == invariant) {
        if (c.passed && !ok) {
          c.passed = false;
          c.detail = detail;
        }
        return;
      }
    checks.push_back({invariant, ok, ok ? std::string() : detail});
  }
};

struct VerifyReport {
  std::vector<SuiteResult> suites;

  bool passed() const {
    for (const auto& s : suites)
      if (!s.passed()) return false;
    return true;
  }
  /// "suite: invariant (detail)" of the first failure, empty when all pass.
  std::string first_failure() const {
    for (const auto& s : suites)
      if (const Check* c = s.first_failure())
        return s.name + ": " + c->invariant + (c->detail.empty() ? "" : " (" + c->detail + ")");
    return {};
  }
  void print(std::ostream& os) const {
    for (const auto& s : suites) {
      if (const Check* c = s.first_failure())
        os << "FAIL " << s.name << ": " << c->invariant << (c->detail.empty() ? "" : " (" + c->detail + ")") << "\n";
      else
        os << "PASS " << s.name << " (" << s.checks.size() << " invariants)\n";
    }
  }
};

namespace detail {

inline std::string fmt_real(const Real& x) { return to_display(x, 6); }

/// Random f with f(0) = 0 and certified Lipschitz bound ≤ budget.
inline LipFun random_origin_map(UnitRng& rng, std::size_t d, std::size_t l, NormKind norm, double budget) {
  const int kind = static_cast<int>(rng.next() * (l == 1 ? 3 : 1));
  std::vector<Real> e(l * d);
  for (auto& x : e) x = Real(rng.uniform(-1, 1));
  LinearMap A(l, d, e, norm, NormKind::euclidean);
  const Real lin_share = kind == 2 ? Real(rng.uniform(0.2, 0.8) * budget) : Real(budget);
  if (A.op_norm() > 0) A = A.scaled(lin_share / A.op_norm());
  if (kind == 0) return LipFun::linear(A);
  const LipFun n = LipFun::norm_of(d, norm, rng.next() < 0.5 ? 1 : -1);
  if (kind == 1) return LipFun::scale(Real(budget), n);
  return LipFun::sum(LipFun::linear(A), LipFun::scale(Real(budget) - lin_share, n));
}

inline Vec random_direction(UnitRng& rng, std::size_t d, NormKind norm) {
  Vec v(d);
  Real n(0);
  while (!(n > 0)) {
    for (std::size_t i = 0; i < d; ++i) v[i] = Real(rng.uniform(-1, 1));
    n = lipforge::norm(v, norm);
  }
  return v / n;
}

}  // namespace detail

/// Radial-blend properties on randomized (a, b, f1, f2) in d ∈ {1,2,3}:
/// (i) Φ = f1 on B̄(0,a), (ii) Φ = f2 off B(0,b), (iii) sampled quotients
/// within the certified bound, (iv) ‖Φ − f2‖ ≤ a·Lip f2 when f1 = 0,
/// (v) ‖Φ‖ ≤ b·Lip f1 when f2 = 0.
inline SuiteResult blend_suite(std::size_t configs = 20, std::size_t points = 1000, std::size_t pairs = 10000,
                               std::uint64_t seed = 1) {
  SuiteResult out{"blend", {}};
  const NormKind norms[] = {NormKind::euclidean, NormKind::sup, NormKind::one};
  for (std::size_t c = 0; c < configs; ++c) {
    UnitRng rng(mix_seed(seed, c));
    const std::size_t d = 1 + c % 3;
    const std::size_t l = 1 + (c / 3) % 2;
    const NormKind norm = norms[(c / 6) % 3];
    const Real a(rng.uniform(0.1, 1.0));
    const Real b = a * Real(rng.uniform(1.2, 3.0));
    const double share = rng.uniform(0.2, 0.8);
    const int pattern = static_cast<int>(c % 4);  // 0: f1 = 0, 1: f2 = 0, else both nonzero
    const LipFun f1 = pattern == 0 ? LipFun::zero(d, l) : detail::random_origin_map(rng, d, l, norm, share);
    const LipFun f2 = pattern == 1 ? LipFun::zero(d, l) : detail::random_origin_map(rng, d, l, norm, 1 - share);
    const LipFun phi = radial_blend(a, b, f1, f2, norm);
    const std::string tag = "config " + std::to_string(c);
    const Real bound = (f1.lip_cert() + f2.lip_cert()) * (1 + a / (b - a));
    out.check("(iii) certificate matches the blend bound", abs(phi.lip_cert() - bound) <= Real(1e-12) * bound, tag);

    // Radii spread over [0, 2b] with the two spheres hit exactly.
    for (std::size_t i = 0; i < points; ++i) {
      const Vec w = detail::random_direction(rng, d, norm);
      Real rho = i % 10 == 0 ? a : i % 10 == 1 ? b : Real(rng.uniform(0, 2) * b);
      const Vec x = rho * w;
      const Vec px = phi(x), v1 = f1(x), v2 = f2(x);
      const Real nx = lipforge::norm(x, norm);
      if (nx <= a) out.check("(i) Φ = f1 on the inner ball", max_abs(px - v1) <= Real(1e-12), tag);
      if (nx >= b) out.check("(ii) Φ = f2 outside the outer ball", max_abs(px - v2) <= Real(1e-12), tag);
      if (pattern == 0)
        out.check("(iv) ‖Φ − f2‖ ≤ a·Lip f2", lipforge::norm(px - v2, NormKind::euclidean) <= a * f2.lip_cert() + 1e-9, tag);
      if (pattern == 1)
        out.check("(v) ‖Φ‖ ≤ b·Lip f1", lipforge::norm(px, NormKind::euclidean) <= b * f1.lip_cert() + 1e-9, tag);
    }
    const std::size_t per_config = pairs;
    for (std::size_t i = 0; i < per_config; ++i) {
      const Vec x = Real(rng.uniform(0, 2)) * b * detail::random_direction(rng, d, norm);
      // Half the pairs are short, to resolve the kinks at the two spheres.
      const Real len = i % 2 ? Real(rng.uniform(0, 2)) * b : Real(rng.uniform(0, 0.05)) * (b - a);
      const Vec y = x + len * detail::random_direction(rng, d, norm);
      const Real dxy = lipforge::norm(x - y, norm);
      if (!(dxy > 0)) continue;
      const Real q = lipforge::norm(phi(x) - phi(y), NormKind::euclidean) / dxy;
      out.check("(iii) quotients ≤ (Lip f1 + Lip f2)(1 + a/(b−a))", q <= bound + 1e-9,
                tag + ": " + detail::fmt_real(q) + " > " + detail::fmt_real(bound));
    }
  }
  return out;
}

/// Pairs for Lipschitz sampling: half spread over the domain, half packed
/// around patch spheres at the patch's own scale.
inline std::vector<std::pair<Vec, Vec>> lipschitz_pairs(const LipFun& f, const Domain& domain, std::size_t count,
                                                        std::uint64_t seed) {
  std::vector<std::pair<Vec, Vec>> out;
  const auto pts = sample_domain(domain, count / 2 + 1, seed);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) out.emplace_back(pts[i], pts[i + 1]);
  struct Site {
    Vec c;
    Real r;
  };
  std::vector<Site> sites;
  for (const auto& p : patched_nodes(f)) {
    const auto& node = std::get<node::Patched>(p.node().payload);
    for (std::size_t i = 0; i < node.centers.size(); ++i) sites.push_back({node.centers[i], node.radii[i]});
  }
  if (sites.empty()) return out;
  UnitRng rng(mix_seed(seed, 77));
  const NormKind norm = domain.norm_kind();
  const std::size_t local = count - out.size();
  for (std::size_t i = 0; i < local; ++i) {
    const Site& s = sites[(i * 7919) % sites.size()];
    const long bits = bits_for_scale(s.r / 64, max_abs(s.c));
    const Real rho = with_bits(s.r, bits) * Real(rng.uniform(0.25, 1.5));
    const Real len = with_bits(s.r, bits) * Real(rng.uniform(0.001, 0.5));
    Vec x = s.c + rho * detail::random_direction(rng, s.c.size(), norm);
    Vec y = x + len * detail::random_direction(rng, s.c.size(), norm);
    if (domain.contains(x) && domain.contains(y)) out.emplace_back(std::move(x), std::move(y));
  }
  return out;
}

/// Sampled difference quotients never exceed lip_cert(f), and lip_cert ≤ 1
/// when the function is meant to be 1-Lipschitz.
inline SuiteResult lipschitz_suite(const LipFun& f, const Domain& domain, NormKind out_norm, bool one_lipschitz,
                                   std::size_t pairs = 4096, std::uint64_t seed = 1, unsigned jobs = 1) {
  SuiteResult out{"lipschitz", {}};
  if (one_lipschitz)
    out.check("lip_cert ≤ 1", certified_one_lipschitz(f), "lip_cert = " + detail::fmt_real(f.lip_cert()));
  const auto ps = lipschitz_pairs(f, domain, pairs, seed);
  const auto qs = ordered_map(ps.size(), jobs, [&](std::size_t i) {
    const auto& [x, y] = ps[i];
    return Real(norm(f(x) - f(y), out_norm) / norm(x - y, domain.norm_kind()));
  });
  Real worst(0);
  for (const auto& q : qs) worst = std::max(worst, q);
  out.check("sampled quotients ≤ lip_cert", worst <= f.lip_cert() + 1e-9,
            detail::fmt_real(worst) + " > " + detail::fmt_real(f.lip_cert()));
  return out;
}

/// The continuity contract of every patched node: inner = outer on each
/// patch sphere to `tolerance`.
inline SuiteResult continuity_suite(const LipFun& f, const PatchOptions& opts = {}) {
  SuiteResult out{"continuity", {}};
  const auto nodes = patched_nodes(f);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::size_t samples = opts.sphere_samples ? opts.sphere_samples : 64 * f.in_dim();
    const Real gap = seam_gap(nodes[i], samples, opts.seed);
    out.check("patch seams agree with the outer function", gap <= opts.tolerance,
              "patched node " + std::to_string(i) + ": gap " + detail::fmt_real(gap));
  }
  out.check("patch seams agree with the outer function", true);
  return out;
}

/// The four NetFamily invariants, greedy maximality by brute force, and the
/// density surrogate at 2^{-k_max}.
inline SuiteResult net_suite(const TargetSet& g, const Domain& domain, int k_max) {
  SuiteResult out{"net", {}};
  const NetFamily fam = nested_nets(g, domain, k_max);
  const NormKind norm = domain.norm_kind();
  auto in_g = [&](const Vec& p) { return std::find(g.points.begin(), g.points.end(), p) != g.points.end(); };
  for (int k = 1; k <= k_max; ++k) {
    const auto& lvl = fam.level(k);
    const Real delta = pow2(-k);
    const std::string tag = "k=" + std::to_string(k);
    if (k > 1)
      for (const auto& p : fam.level(k - 1))
        out.check("nesting Γ_{k−1} ⊆ Γ_k", std::find(lvl.begin(), lvl.end(), p) != lvl.end(), tag);
    out.check("separation ≥ 2^{-k}", separation(lvl, norm) >= delta, tag);
    for (const auto& p : lvl) {
      out.check("margin ≥ 2^{-k}", domain.contains(p) && domain.dist_to_boundary(p) >= delta, tag);
      out.check("points lie in G", in_g(p), tag);
    }
    for (const auto& q : restrict(g, domain, k)) {
      bool near = false;
      for (const auto& p : lvl) near = near || distance(p, q, norm) < delta;
      out.check("maximality: no point of G_k can be added", near, tag);
    }
  }
  const Real delta = pow2(-k_max);
  for (const auto& q : restrict(g, domain, k_max)) {
    bool near = false;
    for (const auto& p : fam.level(k_max)) near = near || distance(p, q, norm) <= delta;
    out.check("density at 2^{-k_max}", near);
  }
  return out;
}

/// Per-round contracts of a transcript: the s_k and r_k constraints, ball
/// nesting on sampled and certified gaps, and decreasing radii.
inline SuiteResult nesting_suite(const GameTranscript& t, std::size_t budget = 64, std::uint64_t seed = 1) {
  SuiteResult out{"nesting", {}};
  const NormKind out_norm = t.operators.front().out_norm();
  for (std::size_t i = 0; i < t.rounds.size(); ++i) {
    const RoundRecord& rec = t.rounds[i];
    const std::string tag = "round " + std::to_string(rec.k);
    const Real kk(rec.k);
    const Real& L = t.operators[rec.op].op_norm();
    out.check("0 < s_k < α_k/k", rec.s > 0 && rec.s < rec.alpha / kk, tag);
    out.check("r_k ≤ 2^{-k}(1 − ‖L_{n(k)}‖)", rec.r <= pow2(-rec.k) * (1 - L), tag);
    out.check("α_k < r_k", rec.alpha < rec.r, tag);
    out.check("lip_cert(g_k) ≤ 1", certified_one_lipschitz(rec.g), tag);
    out.check("certified gap + s_k ≤ r_k", rec.gap_bound + rec.s <= rec.r, tag);
    const Real fresh = sup_dist(rec.g, rec.f, t.domain, out_norm, budget, mix_seed(seed, i));
    out.check("sampled gap + s_k ≤ r_k", std::max(fresh, rec.gap_sampled) + rec.s <= rec.r,
              tag + ": ρ̂ = " + detail::fmt_real(std::max(fresh, rec.gap_sampled)));
    if (i > 0) {
      const RoundRecord& prev = t.rounds[i - 1];
      const Real gap = move_gap(rec.f, prev.g, t.domain, out_norm);
      out.check("move nested: ρ(f_k, g_{k−1}) + r_k ≤ s_{k−1}", gap + rec.r <= prev.s, tag);
      out.check("radii strictly decreasing", rec.r < prev.r && rec.s < prev.s, tag);
    }
  }
  if (!t.rounds.empty()) out.check("tail bound s_K ≤ 2^{-K}", t.tail_bound() <= pow2(-t.rounds.back().k));
  return out;
}

/// g_k(x+u) = g_k(x) + L_{n(k)}u for x ∈ Γ_k and ‖u‖ ≤ α_k, with residual
/// ≤ 1e-9·(1+‖g_k(x)‖)·α_k.
inline SuiteResult linearity_suite(const GameTranscript& t, std::size_t samples = 16, std::uint64_t seed = 1,
                                   unsigned jobs = 1) {
  SuiteResult out{"linearity", {}};
  struct Task {
    const RoundRecord* rec;
    std::size_t i;
  };
  std::vector<Task> tasks;
  for (const auto& rec : t.rounds)
    if (rec.params)
      for (std::size_t i = 0; i < rec.gamma.size(); ++i) tasks.push_back({&rec, i});
  const NormKind norm = t.domain.norm_kind();
  const auto worst = ordered_map(tasks.size(), jobs, [&](std::size_t j) {
    const RoundRecord& rec = *tasks[j].rec;
    const LinearMap& L = t.operators[rec.op];
    const long bits = bits_for_scale(rec.alpha, max_abs(rec.gamma[tasks[j].i]));
    const Vec x = at_least_bits(rec.gamma[tasks[j].i], bits);
    const Real alpha = with_bits(rec.alpha, std::max(precision_of(rec.alpha), bits));
    const Vec gx = rec.g(x);
    const Real scale = (1 + lipforge::norm(gx, L.out_norm())) * alpha;
    Real w(0);
    for (const auto& u : ball_offsets(x.size(), Real(1), norm, std::max<std::size_t>(samples, 2 * x.size() + 1),
                                      mix_seed(seed, j))) {
      const Vec au = alpha * u;
      w = std::max(w, Real(lipforge::norm(rec.g(x + au) - gx - L.apply(au), L.out_norm()) / scale));
    }
    return w;
  });
  for (std::size_t j = 0; j < tasks.size(); ++j)
    out.check("exact linearity on α-balls", worst[j] <= Real(1e-9),
              "round " + std::to_string(tasks[j].rec->k) + ": relative residual " + detail::fmt_real(worst[j]));
  out.check("exact linearity on α-balls", true);
  return out;
}

struct WitnessSummary {
  std::size_t total = 0;
  std::size_t passed = 0;
  std::vector<WitnessCheck> checks;
};

inline WitnessSummary check_witnesses(const GameTranscript& t, std::size_t per_round, std::size_t budget,
                                      std::uint64_t seed, unsigned jobs) {
  WitnessSummary s;
  const auto ws = witnesses(t, per_round, seed);
  s.checks = ordered_map(ws.size(), jobs, [&](std::size_t i) { return check_witness(t, ws[i], budget, seed); });
  s.total = ws.size();
  for (const auto& c : s.checks) s.passed += c.passed;
  return s;
}

/// dq_error(g_K, x, L_{n(k)}, α_k) ≤ 4/k + 1e-9 at every witness.
inline SuiteResult witness_suite(const GameTranscript& t, std::size_t per_round = 1, std::size_t budget = 64,
                                 std::uint64_t seed = 1, unsigned jobs = 1) {
  SuiteResult out{"witness", {}};
  const WitnessSummary s = check_witnesses(t, per_round, budget, seed, jobs);
  for (const auto& c : s.checks)
    out.check("dq_error(g_K, x, L, α_k) ≤ 4/k", c.passed,
              "round " + std::to_string(c.witness.k) + ": " + detail::fmt_real(c.value) + " > " + detail::fmt_real(c.bound));
  out.check("dq_error(g_K, x, L, α_k) ≤ 4/k", true);
  return out;
}

/// The stock run used by the self-test: the unit square, a 0.1 grid, two
/// opposite operators and five rounds.
inline GameSetup stock_setup() {
  const auto eu = NormKind::euclidean;
  GameSetup s{Domain::box(Vec{0.0, 0.0}, Vec{1.0, 1.0}, eu),
              TargetSet::open_grid({0, 0}, {1, 1}, Rational(1, 10)),
              {LinearMap::from_rows({{0.5, 0}}, eu, eu), LinearMap::from_rows({{-0.5, 0}}, eu, eu)}};
  s.rounds = 5;
  return s;
}

/// Suites over a finished game.
inline VerifyReport verify_transcript(const GameTranscript& t, unsigned jobs = 1, std::uint64_t seed = 1) {
  VerifyReport r;
  r.suites.push_back(nesting_suite(t, 64, seed));
  r.suites.push_back(linearity_suite(t, 16, seed, jobs));
  r.suites.push_back(witness_suite(t, 1, 64, seed, jobs));
  r.suites.push_back(continuity_suite(t.final_function()));
  r.suites.push_back(lipschitz_suite(t.final_function(), t.domain, t.operators.front().out_norm(), true, 4096, seed, jobs));
  return r;
}

/// Suites over a single function artifact.
inline VerifyReport verify_function(const LipFun& f, const Domain& domain, unsigned jobs = 1, std::uint64_t seed = 1) {
  VerifyReport r;
  r.suites.push_back(continuity_suite(f));
  r.suites.push_back(lipschitz_suite(f, domain, NormKind::euclidean, false, 4096, seed, jobs));
  return r;
}

/// The stock self-test: blend, net, and every transcript suite on the stock run.
inline VerifyReport self_test(unsigned jobs = 1, std::uint64_t seed = 1) {
  VerifyReport r;
  r.suites.push_back(blend_suite(20, 1000, 2000, seed));
  const GameSetup setup = stock_setup();
  r.suites.push_back(net_suite(TargetSet::open_grid({0, 0}, {1, 1}, Rational(1, 20)), setup.domain, 6));
  const GameTranscript t = run_game(setup);
  for (auto& s : verify_transcript(t, jobs, seed).suites) r.suites.push_back(std::move(s));
  return r;
}

}  // namespace lipforge
