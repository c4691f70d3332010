#pragma once

#include <algorithm>
#include <vector>

#include "lipforge/lipfun.hpp"
#include "lipforge/metric.hpp"
#include "lipforge/nets.hpp"

namespace lipforge {

/// s = min(0.99, sep(Γ)/4, margin(Γ)/4), so Γ is 4s-separated with margin ≥ 4s.
inline Real choose_s(const std::vector<Vec>& gamma, const Domain& domain) {
  if (gamma.empty()) throw Error("choose_s: Γ empty");
  const Real sep = separation(gamma, domain.norm_kind());
  if (!(sep > 0)) throw Error("choose_s: zero separation");
  Real margin = infinity();
  for (const auto& x : gamma) {
    if (!domain.contains(x)) throw Error("choose_s: zero margin");
    margin = std::min(margin, domain.dist_to_boundary(x));
  }
  if (!(margin > 0)) throw Error("choose_s: zero margin");
  return std::min({Real(0.99), Real(sep / 4), Real(margin / 4)});
}

struct PerturbParams {
  Real r;
  Real s;
  Real beta;
  Real alpha;
  Real blow_up;  // s/(s−β)
  Real diam;
};

/// β = rs/(4(1+diam)), α = β²/s = r²s/(16(1+diam)²). Values are carried at
/// enough precision to resolve offsets of size α around points of size
/// `magnitude`.
inline PerturbParams blend_params(const Real& r, const Real& s, const Real& diam, const Real& magnitude = Real(1)) {
  if (!(r > 0 && r < 1)) throw Error("blend_params: r must lie in (0,1)");
  if (!(s > 0 && s < 1)) throw Error("blend_params: s must lie in (0,1)");
  if (!(diam > 0) || !is_finite(diam)) throw Error("blend_params: diam must be positive");
  const Real rough_alpha = r * r * s / (16 * (1 + diam) * (1 + diam));
  PrecisionScope scope(bits_for_scale(rough_alpha, magnitude));
  PerturbParams p;
  p.r = promote(r);
  p.s = promote(s);
  p.diam = promote(diam);
  p.beta = p.r * p.s / (4 * (1 + p.diam));
  p.alpha = p.beta * p.beta / p.s;
  p.blow_up = p.s / (p.s - p.beta);
  if (!(p.beta > 0 && p.beta < p.s / 2)) throw Error("blend_params: β outside (0, s/2)");
  if (!(p.alpha > 0 && p.alpha <= p.beta * p.beta / p.s)) throw Error("blend_params: α > β²/s");
  if (!(p.alpha < p.r)) throw Error("blend_params: α ≥ r");
  return p;
}

struct PerturbOptions {
  PatchOptions patch;
  /// Domain samples for the measured gap ρ̂(g, f); 0 skips the measurement.
  std::size_t gap_budget = 256;
  std::uint64_t seed = 1;
};

struct PerturbResult {
  LipFun g;
  Real alpha;
  PerturbParams params;
  Vec x0;
  Vec shift;  // p = f(x0)
  LinearMap T;
  LipFun g0;
  LipFun g1;
  LipFun g2;
  /// Certified ‖g − f‖∞ ≤ β(Lip f + ‖T‖) + (β/s)·Lip(g1)·diam, strictly below r.
  Real gap_bound;
  /// 4β(1+diam)/s; equals r up to rounding under the chosen β.
  Real coarse_gap_bound;
  /// Sampled lower estimate of ‖g − f‖∞ (zero when not measured).
  Real gap_sampled;
};

/// Modifies f into g with Lip(g) ≤ 1, ‖g − f‖∞ < r and g(x+u) = g(x) + Lu for
/// every x ∈ Γ and ‖u‖ ≤ α.
inline PerturbResult linearize_near(const LipFun& f, const std::vector<Vec>& gamma, const LinearMap& L, const Real& r,
                                    const Domain& domain, const PerturbOptions& opts = {}) {
  if (f.in_dim() != domain.dim() || L.cols() != f.in_dim() || L.rows() != f.out_dim())
    throw Error("dimension mismatch");
  if (!certified_one_lipschitz(f)) throw Error("f not 1-Lipschitz-certified");
  if (!(r > 0 && r < 1)) throw Error("linearize_near: r must lie in (0,1)");
  if (L.op_norm() > 1 - r) throw Error("operator too large");
  const std::size_t d = f.in_dim();
  const NormKind norm = domain.norm_kind();

  const Real s = choose_s(gamma, domain);
  PerturbParams params = blend_params(r, s, domain.diam(), magnitude(domain));
  PrecisionScope scope(bits_for_scale(params.alpha, magnitude(domain)));
  const Real& beta = params.beta;
  const Real& alpha = params.alpha;
  const Real& sp = params.s;

  // Normalize so that f'(x0) = 0.
  const Vec x0 = *std::min_element(gamma.begin(), gamma.end(), lex_less);
  const Vec shift = f(x0);
  const LipFun f_shifted = LipFun::add_const(f, -shift);

  // g0 = f' ∘ P_x on B(x,s), P_x(z) = x + Φ(β,s,0,id)(z−x): constant f'(x) on B̄(x,β).
  const LipFun phi = radial_blend(beta, sp, LipFun::zero(d, d), LipFun::identity(d, norm), norm);
  std::vector<PatchSpec> outer_patches;
  for (const auto& x : gamma) {
    const LipFun to_local = LipFun::affine(Vec(d), LinearMap::identity(d, norm), x);
    const LipFun p_x = LipFun::add_const(LipFun::precompose(phi, to_local), x);
    outer_patches.push_back({x, sp, LipFun::precompose(f_shifted, p_x)});
  }
  const LipFun g0 = patch(f_shifted, std::move(outer_patches), domain, opts.patch);

  // g1 = h_x(x + Ψ(z−x)) on B(x,β), h_x(z) = g0(x) + T(z−x), Ψ = Φ(α,β,id,0).
  LinearMap T = L.scaled(params.blow_up);
  const LipFun psi = radial_blend(alpha, beta, LipFun::identity(d, norm), LipFun::zero(d, d), norm);
  std::vector<PatchSpec> inner_patches;
  for (const auto& x : gamma) {
    const LipFun to_local = LipFun::affine(Vec(d), LinearMap::identity(d, norm), x);
    const LipFun q_x = LipFun::add_const(LipFun::precompose(psi, to_local), x);
    const LipFun h_x = LipFun::affine(g0(x), T, x);
    inner_patches.push_back({x, beta, LipFun::precompose(h_x, q_x)});
  }
  const LipFun g1 = patch(g0, std::move(inner_patches), domain, opts.patch);

  const LipFun g2 = LipFun::scale((sp - beta) / sp, g1);
  const LipFun g = LipFun::add_const(g2, shift);
  if (!certified_one_lipschitz(g)) throw Error("linearize_near: certificate of g exceeds 1");

  const Real diam = domain.diam();
  PerturbResult out{g,
                    alpha,
                    params,
                    x0,
                    shift,
                    T,
                    g0,
                    g1,
                    g2,
                    beta * (f.lip_cert() + T.op_norm()) + beta / sp * g1.lip_cert() * diam,
                    4 * beta * (1 + diam) / sp,
                    Real(0)};
  if (!(out.gap_bound < r)) throw Error("linearize_near: certified gap not below r");
  if (opts.gap_budget > 0)
    out.gap_sampled = sup_dist(g, f, domain, L.out_norm(), opts.gap_budget, opts.seed);
  return out;
}

}  // namespace lipforge
