#pragma once

#include <cstdint>
#include <map>
#include <unordered_map>
#include <unordered_set>
#include <memory>
#include <string_view>
#include <variant>
#include <vector>

#include "lipforge/patch_index.hpp"
#include "lipforge/sampling.hpp"
#include "lipforge/space.hpp"

namespace lipforge {

struct Node;

/// Immutable handle to a Lipschitz mapping R^d ⊇ Q → R^l stored as a shared
/// expression DAG. Every node carries its dimensions and a certified
/// Lipschitz upper bound computed once at construction.
class LipFun {
 public:
  LipFun() = default;
  explicit LipFun(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  static LipFun constant(Vec value, std::size_t in_dim);
  static LipFun zero(std::size_t in_dim, std::size_t out_dim) { return constant(Vec(out_dim), in_dim); }
  static LipFun linear(LinearMap map);
  static LipFun identity(std::size_t dim, NormKind norm) { return linear(LinearMap::identity(dim, norm)); }
  /// z ↦ base + A(z − anchor)
  static LipFun affine(Vec base, LinearMap map, Vec anchor);
  /// z ↦ sign·‖z‖ (scalar codomain)
  static LipFun norm_of(std::size_t in_dim, NormKind norm, int sign = 1);
  static LipFun sum(LipFun f, LipFun g);
  static LipFun scale(Real c, LipFun f);
  static LipFun add_const(LipFun f, Vec p);
  /// z ↦ f(inner(z))
  static LipFun precompose(LipFun f, LipFun inner);

  Vec operator()(const Vec& z) const;
  Vec eval(const Vec& z) const { return (*this)(z); }

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  const Real& lip_cert() const;
  std::string_view kind() const;

  const Node& node() const { return *node_; }
  const std::shared_ptr<const Node>& node_ptr() const { return node_; }
  bool same_as(const LipFun& o) const { return node_ == o.node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<const Node> node_;
};

namespace node {

struct Const {
  Vec value;
};
struct Linear {
  LinearMap map;
};
struct Affine {
  Vec base;
  LinearMap map;
  Vec anchor;
};
struct NormOf {
  int sign;
  NormKind norm;
};
struct Sum {
  LipFun lhs;
  LipFun rhs;
};
struct Scale {
  Real factor;
  LipFun f;
};
struct AddConst {
  LipFun f;
  Vec offset;
};
/// The radial blend Φ(a,b,f1,f2): f1 on B̄(0,a), f2 outside B(0,b), radially
/// interpolated in between.
struct RadialBlend {
  Real a;
  Real b;
  LipFun f1;
  LipFun f2;
  NormKind norm;
};
/// outer, except on the open balls B(center_i, radius_i) where inner_i applies.
struct Patched {
  LipFun outer;
  std::vector<Vec> centers;
  std::vector<Real> radii;
  std::vector<LipFun> inners;
  NormKind norm;
  PatchIndex index;
};
struct Precompose {
  LipFun f;
  LipFun inner;
};

}  // namespace node

struct Node {
  using Payload = std::variant<node::Const, node::Linear, node::Affine, node::NormOf, node::Sum, node::Scale,
                               node::AddConst, node::RadialBlend, node::Patched, node::Precompose>;
  Payload payload;
  std::size_t in_dim;
  std::size_t out_dim;
  Real cert;
};

inline std::size_t LipFun::in_dim() const { return node_->in_dim; }
inline std::size_t LipFun::out_dim() const { return node_->out_dim; }
inline const Real& LipFun::lip_cert() const { return node_->cert; }
inline const Real& lip_cert(const LipFun& f) { return f.lip_cert(); }

inline std::string_view LipFun::kind() const {
  static constexpr std::string_view names[] = {"const",    "linear", "affine",       "norm_of", "sum",
                                               "scale",    "add_const", "radial_blend", "patched", "precompose"};
  return names[node_->payload.index()];
}

namespace detail {

inline LipFun make_node(Node::Payload payload, std::size_t in_dim, std::size_t out_dim, Real cert) {
  auto n = std::make_shared<Node>(Node{std::move(payload), in_dim, out_dim, std::move(cert)});
  if (auto* p = std::get_if<node::Patched>(&n->payload)) p->index = PatchIndex(p->centers, p->radii, p->norm);
  return LipFun(std::move(n));
}

inline void require(bool ok, const char* message) {
  if (!ok) throw Error(message);
}

inline Vec eval_node(const Node& n, const Vec& z);

struct Evaluator {
  const Vec& z;

  Vec operator()(const node::Const& c) const { return c.value; }
  Vec operator()(const node::Linear& l) const { return l.map.apply(z); }
  Vec operator()(const node::Affine& a) const { return a.base + a.map.apply(z - a.anchor); }
  Vec operator()(const node::NormOf& n) const {
    Vec out(1);
    out[0] = norm(z, n.norm);
    if (n.sign < 0) out[0] = -out[0];
    return out;
  }
  Vec operator()(const node::Sum& s) const { return eval_node(s.lhs.node(), z) + eval_node(s.rhs.node(), z); }
  Vec operator()(const node::Scale& s) const { return s.factor * eval_node(s.f.node(), z); }
  Vec operator()(const node::AddConst& a) const { return eval_node(a.f.node(), z) + a.offset; }
  Vec operator()(const node::RadialBlend& rb) const {
    const Real n = norm(z, rb.norm);
    if (n <= rb.a) return eval_node(rb.f1.node(), z);
    if (n >= rb.b) return eval_node(rb.f2.node(), z);
    const Real width = rb.b - rb.a;
    const Real w1 = (rb.b - n) / width;
    const Real w2 = rb.b * (n - rb.a) / (n * width);
    return w1 * eval_node(rb.f1.node(), z) + w2 * eval_node(rb.f2.node(), z);
  }
  Vec operator()(const node::Patched& p) const {
    if (auto k = p.index.find(z)) return eval_node(p.inners[*k].node(), z);
    return eval_node(p.outer.node(), z);
  }
  Vec operator()(const node::Precompose& pc) const { return eval_node(pc.f.node(), eval_node(pc.inner.node(), z)); }
};

inline Vec eval_node(const Node& n, const Vec& z) { return std::visit(Evaluator{z}, n.payload); }

}  // namespace detail

inline Vec LipFun::operator()(const Vec& z) const {
  if (z.size() != node_->in_dim) throw Error("dimension mismatch");
  return detail::eval_node(*node_, z);
}

inline Vec eval(const LipFun& f, const Vec& z) { return f(z); }

inline LipFun LipFun::constant(Vec value, std::size_t in_dim) {
  detail::require(in_dim > 0 && value.size() > 0, "const: dimensions must be positive");
  const std::size_t out = value.size();
  return detail::make_node(node::Const{std::move(value)}, in_dim, out, Real(0));
}

inline LipFun LipFun::linear(LinearMap map) {
  const std::size_t in = map.cols(), out = map.rows();
  Real cert = map.op_norm();
  return detail::make_node(node::Linear{std::move(map)}, in, out, std::move(cert));
}

inline LipFun LipFun::affine(Vec base, LinearMap map, Vec anchor) {
  detail::require(base.size() == map.rows() && anchor.size() == map.cols(), "dimension mismatch");
  const std::size_t in = map.cols(), out = map.rows();
  Real cert = map.op_norm();
  return detail::make_node(node::Affine{std::move(base), std::move(map), std::move(anchor)}, in, out,
                           std::move(cert));
}

inline LipFun LipFun::norm_of(std::size_t in_dim, NormKind norm, int sign) {
  detail::require(in_dim > 0, "norm_of: dimension must be positive");
  detail::require(sign == 1 || sign == -1, "norm_of: sign must be +1 or -1");
  return detail::make_node(node::NormOf{sign, norm}, in_dim, 1, Real(1));
}

inline LipFun LipFun::sum(LipFun f, LipFun g) {
  detail::require(f.in_dim() == g.in_dim() && f.out_dim() == g.out_dim(), "dimension mismatch");
  const std::size_t in = f.in_dim(), out = f.out_dim();
  Real cert = f.lip_cert() + g.lip_cert();
  return detail::make_node(node::Sum{std::move(f), std::move(g)}, in, out, std::move(cert));
}

inline LipFun LipFun::scale(Real c, LipFun f) {
  detail::require(is_finite(c), "scale: non-finite factor");
  const std::size_t in = f.in_dim(), out = f.out_dim();
  Real cert = abs(c) * f.lip_cert();
  return detail::make_node(node::Scale{std::move(c), std::move(f)}, in, out, std::move(cert));
}

inline LipFun LipFun::add_const(LipFun f, Vec p) {
  detail::require(p.size() == f.out_dim(), "dimension mismatch");
  const std::size_t in = f.in_dim(), out = f.out_dim();
  Real cert = f.lip_cert();
  return detail::make_node(node::AddConst{std::move(f), std::move(p)}, in, out, std::move(cert));
}

inline LipFun LipFun::precompose(LipFun f, LipFun inner) {
  detail::require(inner.out_dim() == f.in_dim(), "dimension mismatch");
  const std::size_t in = inner.in_dim(), out = f.out_dim();
  Real cert = f.lip_cert() * inner.lip_cert();
  return detail::make_node(node::Precompose{std::move(f), std::move(inner)}, in, out, std::move(cert));
}

/// Certificates may exceed an exact bound of 1 by accumulated rounding.
inline constexpr double kCertSlack = 1e-12;

inline bool certified_one_lipschitz(const LipFun& f) { return f.lip_cert() <= 1 + kCertSlack; }

/// Values at the origin below this count as zero for the blend precondition.
inline constexpr double kOriginTolerance = 1e-12;

/// Raw blend node; checks only the structural invariants (used by readers).
inline LipFun make_radial_blend(Real a, Real b, LipFun f1, LipFun f2, NormKind norm) {
  detail::require(a > 0 && a < b, "radial blend: need 0 < a < b");
  detail::require(f1.in_dim() == f2.in_dim() && f1.out_dim() == f2.out_dim(), "dimension mismatch");
  const std::size_t in = f1.in_dim(), out = f1.out_dim();
  Real cert = (f1.lip_cert() + f2.lip_cert()) * (1 + a / (b - a));
  return detail::make_node(node::RadialBlend{std::move(a), std::move(b), std::move(f1), std::move(f2), norm}, in,
                           out, std::move(cert));
}

/// The blend Φ(a,b,f1,f2). Requires f1(0) = f2(0) = 0. The certificate is
/// (Lip f1 + Lip f2)·(1 + a/(b−a)), which reduces to 1 + a/(b−a) when the
/// Lipschitz constants sum to one.
inline LipFun radial_blend(Real a, Real b, LipFun f1, LipFun f2, NormKind norm) {
  detail::require(a > 0 && a < b, "radial blend: need 0 < a < b");
  const Vec origin(f1.in_dim());
  if (max_abs(f1(origin)) > kOriginTolerance || max_abs(f2(origin)) > kOriginTolerance)
    throw Error("radial blend: nonzero at origin");
  return make_radial_blend(std::move(a), std::move(b), std::move(f1), std::move(f2), norm);
}

struct PatchSpec {
  Vec center;
  Real radius;
  LipFun inner;
};

/// Raw patched node; checks dimensions, radii and pairwise disjointness.
inline LipFun make_patched(LipFun outer, std::vector<PatchSpec> patches, NormKind norm) {
  node::Patched p{std::move(outer), {}, {}, {}, norm, {}};
  Real cert = p.outer.lip_cert();
  for (auto& spec : patches) {
    detail::require(spec.center.size() == p.outer.in_dim(), "dimension mismatch");
    detail::require(spec.inner.in_dim() == p.outer.in_dim() && spec.inner.out_dim() == p.outer.out_dim(),
                    "dimension mismatch");
    detail::require(spec.radius > 0, "patch radius must be positive");
    cert = std::max(cert, spec.inner.lip_cert());
    p.centers.push_back(std::move(spec.center));
    p.radii.push_back(std::move(spec.radius));
    p.inners.push_back(std::move(spec.inner));
  }
  const std::size_t in = p.outer.in_dim(), out = p.outer.out_dim();
  LipFun f = detail::make_node(std::move(p), in, out, std::move(cert));
  const auto& built = std::get<node::Patched>(f.node().payload);
  for (std::size_t i = 0; i < built.centers.size(); ++i) {
    built.index.for_each_candidate(built.centers[i], [&](std::size_t j) {
      if (j != i && distance(built.centers[i], built.centers[j], norm) < built.radii[i] + built.radii[j])
        throw Error("patch overlap");
    });
  }
  return f;
}

namespace detail {

inline Real round_to(const Real& x, long bits) {
  if (precision_of(x) <= bits) return x;
  Real y;
  mpfr_set_prec(y.backend().data(), static_cast<mpfr_prec_t>(bits));
  mpfr_set(y.backend().data(), x.backend().data(), MPFR_RNDN);
  return y;
}

inline Vec round_to(const Vec& v, long bits) {
  std::vector<Real> c;
  c.reserve(v.size());
  for (const auto& x : v) c.push_back(round_to(x, bits));
  return Vec(std::move(c));
}

inline LinearMap round_to(const LinearMap& m, long bits) {
  std::vector<Real> e;
  e.reserve(m.entries().size());
  for (const auto& x : m.entries()) e.push_back(round_to(x, bits));
  return LinearMap(m.rows(), m.cols(), std::move(e), m.in_norm(), m.out_norm());
}

template <typename F>
void for_each_child(const Node& n, F&& visit) {
  std::visit([&](const auto& p) {
    using T = std::decay_t<decltype(p)>;
    if constexpr (std::is_same_v<T, node::Sum>) {
      visit(p.lhs);
      visit(p.rhs);
    } else if constexpr (std::is_same_v<T, node::Scale> || std::is_same_v<T, node::AddConst>) {
      visit(p.f);
    } else if constexpr (std::is_same_v<T, node::RadialBlend>) {
      visit(p.f1);
      visit(p.f2);
    } else if constexpr (std::is_same_v<T, node::Patched>) {
      visit(p.outer);
      for (const auto& g : p.inners) visit(g);
    } else if constexpr (std::is_same_v<T, node::Precompose>) {
      visit(p.f);
      visit(p.inner);
    }
  }, n.payload);
}

}  // namespace detail

/// Largest precision of any constant stored in f.
inline long max_precision(const LipFun& f) {
  long best = 0;
  std::unordered_set<const Node*> seen;
  std::vector<const Node*> stack{&f.node()};
  auto take = [&](const Real& x) { best = std::max(best, precision_of(x)); };
  auto take_vec = [&](const Vec& v) {
    for (const auto& x : v) take(x);
  };
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    std::visit([&](const auto& p) {
      using T = std::decay_t<decltype(p)>;
      if constexpr (std::is_same_v<T, node::Const>) take_vec(p.value);
      else if constexpr (std::is_same_v<T, node::Linear>) for (const auto& x : p.map.entries()) take(x);
      else if constexpr (std::is_same_v<T, node::Affine>) {
        take_vec(p.base);
        take_vec(p.anchor);
        for (const auto& x : p.map.entries()) take(x);
      } else if constexpr (std::is_same_v<T, node::Scale>) take(p.factor);
      else if constexpr (std::is_same_v<T, node::AddConst>) take_vec(p.offset);
      else if constexpr (std::is_same_v<T, node::RadialBlend>) {
        take(p.a);
        take(p.b);
      } else if constexpr (std::is_same_v<T, node::Patched>) {
        for (const auto& c : p.centers) take_vec(c);
        for (const auto& r : p.radii) take(r);
      }
    }, n->payload);
    detail::for_each_child(*n, [&](const LipFun& c) { stack.push_back(&c.node()); });
  }
  return best;
}

/// Copy of f with every stored constant rounded to at most `bits` bits. The
/// copy differs from f by rounding of relative size 2^-bits in each constant,
/// which keeps difference quotients at scales above 2^-(bits − kGuardBits)
/// meaningful while making evaluation cheaper.
inline LipFun rounded(const LipFun& f, long bits) {
  std::unordered_map<const Node*, LipFun> done;
  std::vector<std::pair<const Node*, bool>> stack{{&f.node(), false}};
  auto get = [&](const LipFun& c) -> const LipFun& { return done.at(&c.node()); };
  while (!stack.empty()) {
    auto [n, expanded] = stack.back();
    stack.pop_back();
    if (done.count(n)) continue;
    if (!expanded) {
      stack.push_back({n, true});
      detail::for_each_child(*n, [&](const LipFun& c) {
        if (!done.count(&c.node())) stack.push_back({&c.node(), false});
      });
      continue;
    }
    LipFun copy = std::visit([&](const auto& p) -> LipFun {
      using T = std::decay_t<decltype(p)>;
      using detail::round_to;
      if constexpr (std::is_same_v<T, node::Const>) return LipFun::constant(round_to(p.value, bits), n->in_dim);
      else if constexpr (std::is_same_v<T, node::Linear>) return LipFun::linear(round_to(p.map, bits));
      else if constexpr (std::is_same_v<T, node::Affine>)
        return LipFun::affine(round_to(p.base, bits), round_to(p.map, bits), round_to(p.anchor, bits));
      else if constexpr (std::is_same_v<T, node::NormOf>) return LipFun::norm_of(n->in_dim, p.norm, p.sign);
      else if constexpr (std::is_same_v<T, node::Sum>) return LipFun::sum(get(p.lhs), get(p.rhs));
      else if constexpr (std::is_same_v<T, node::Scale>) return LipFun::scale(round_to(p.factor, bits), get(p.f));
      else if constexpr (std::is_same_v<T, node::AddConst>) return LipFun::add_const(get(p.f), round_to(p.offset, bits));
      else if constexpr (std::is_same_v<T, node::RadialBlend>)
        return make_radial_blend(round_to(p.a, bits), round_to(p.b, bits), get(p.f1), get(p.f2), p.norm);
      else if constexpr (std::is_same_v<T, node::Patched>) {
        std::vector<PatchSpec> specs;
        specs.reserve(p.centers.size());
        for (std::size_t i = 0; i < p.centers.size(); ++i)
          specs.push_back({round_to(p.centers[i], bits), round_to(p.radii[i], bits), get(p.inners[i])});
        return make_patched(get(p.outer), std::move(specs), p.norm);
      } else return LipFun::precompose(get(p.f), get(p.inner));
    }, n->payload);
    done.emplace(n, std::move(copy));
  }
  return done.at(&f.node());
}

/// Rounded copies of one function, bucketed by precision.
class PrecisionLadder {
 public:
  explicit PrecisionLadder(LipFun f) : f_(std::move(f)), full_(max_precision(f_)) {}

  /// f itself when `bits` reaches its stored precision, else a rounded copy.
  const LipFun& at(long bits) {
    const long bucket = (bits + 63) / 64 * 64;
    if (bucket >= full_) return f_;
    auto it = copies_.find(bucket);
    if (it == copies_.end()) it = copies_.emplace(bucket, rounded(f_, bucket)).first;
    return it->second;
  }
  const LipFun& full() const { return f_; }

 private:
  LipFun f_;
  long full_;
  std::map<long, LipFun> copies_;
};

struct PatchOptions {
  /// Sphere samples per patch for the continuity contract; 0 means 64·d.
  std::size_t sphere_samples = 0;
  /// Bound on the seam gap, relative to min(1, radius).
  double tolerance = 1e-9;
  std::uint64_t seed = 0x5eed;
};

/// Largest |inner − outer| over the sampled sphere of patch i, relative to
/// min(1, radius): a 1-Lipschitz function moves at most r across B(c,r), so
/// seam errors are measured at the patch's own scale.
inline Real patch_seam_gap(const LipFun& patched, std::size_t i, std::size_t samples, std::uint64_t seed) {
  const auto& p = std::get<node::Patched>(patched.node().payload);
  const Vec& c = p.centers[i];
  const Real& r = p.radii[i];
  PrecisionScope scope(bits_for_scale(r, max_abs(c)));
  Real worst(0);
  for (const auto& w : unit_sphere_points(c.size(), p.norm, samples, mix_seed(seed, i))) {
    const Vec z = c + r * w;
    worst = std::max(worst, max_abs(p.inners[i](z) - p.outer(z)));
  }
  return worst / std::min(Real(1), r);
}

/// Largest relative seam gap over every patch of a Patched function. Seams are
/// sampled at the resolution of the smallest sphere; a copy rounded to that
/// precision gives the same verdict at a fraction of the cost.
inline Real seam_gap(const LipFun& patched, std::size_t samples, std::uint64_t seed) {
  const auto& p = std::get<node::Patched>(patched.node().payload);
  if (p.centers.empty()) return Real(0);
  Real smallest = p.radii.front();
  Real reach(1);
  for (std::size_t i = 0; i < p.centers.size(); ++i) {
    smallest = std::min(smallest, p.radii[i]);
    reach = std::max(reach, max_abs(p.centers[i]));
  }
  PrecisionLadder ladder(patched);
  const LipFun& probe = ladder.at(bits_for_scale(smallest, reach));
  Real worst(0);
  for (std::size_t i = 0; i < p.centers.size(); ++i) worst = std::max(worst, patch_seam_gap(probe, i, samples, seed));
  return worst;
}

/// Every Patched node reachable from f, children before parents.
inline std::vector<LipFun> patched_nodes(const LipFun& f) {
  std::vector<LipFun> out;
  std::unordered_set<const Node*> seen;
  std::vector<std::pair<LipFun, bool>> stack{{f, false}};
  while (!stack.empty()) {
    auto [g, expanded] = stack.back();
    stack.pop_back();
    if (expanded) {
      if (std::holds_alternative<node::Patched>(g.node().payload)) out.push_back(g);
      continue;
    }
    if (!seen.insert(&g.node()).second) continue;
    stack.push_back({g, true});
    detail::for_each_child(g.node(), [&](const LipFun& c) {
      if (!seen.count(&c.node())) stack.push_back({c, false});
    });
  }
  return out;
}

/// Replaces `outer` on disjoint open balls inside the domain interior. The
/// seam inner_i = outer on each sphere is sampled and enforced.
inline LipFun patch(LipFun outer, std::vector<PatchSpec> patches, const Domain& domain, PatchOptions opts = {}) {
  detail::require(outer.in_dim() == domain.dim(), "dimension mismatch");
  for (const auto& spec : patches) {
    if (spec.center.size() != domain.dim() || !domain.contains(spec.center) ||
        !(domain.dist_to_boundary(spec.center) > spec.radius))
      throw Error("patch escapes domain");
  }
  LipFun f = make_patched(std::move(outer), std::move(patches), domain.norm_kind());
  const std::size_t samples = opts.sphere_samples ? opts.sphere_samples : 64 * domain.dim();
  if (seam_gap(f, samples, opts.seed) > opts.tolerance) throw Error("patch boundary mismatch");
  return f;
}

}  // namespace lipforge
